#include <gtest/gtest.h>

#include <set>

#include "gusnet/corpus_forge.hpp"
#include "gusnet/error.hpp"
#include "gusnet/offline_backend.hpp"
#include "gusnet/text.hpp"

using namespace gusnet;
using nlohmann::json;

namespace {

const std::string kData = GUSNET_DATA_DIR;

ArgumentGrid default_grid() { return load_grid(kData + "/grid_v1.json"); }

std::string biased_template() { return load_text_file(kData + "/templates/biased.txt"); }

const std::string kMinimalTemplate =
    "Write about {target_group} ({bias_type}), {statement_type}, {sentiment}, {fairness_mode}.";

}  // namespace

TEST(Grid, DefaultGridSatisfiesInvariants) {
  const ArgumentGrid grid = default_grid();
  EXPECT_NO_THROW(grid.validate());
  EXPECT_EQ(grid.bias_types.size(), 11u);
  EXPECT_EQ(grid.statement_types.size(), 5u);
  EXPECT_EQ(grid.sentiments, (std::vector<std::string>{"Positive", "Negative"}));
  EXPECT_EQ(grid.fair_sentiments, (std::vector<std::string>{"slightly positive yet fair",
                                                            "slightly negative yet fair"}));
  std::set<std::string> seen;
  for (const auto& [b, targets] : grid.targets_by_bias_type) {
    for (const auto& t : targets) {
      EXPECT_TRUE(seen.insert(t).second) << t;
      EXPECT_EQ(grid.bias_type_of(t), b);
    }
  }
}

TEST(Grid, ProductSizeIsTargetsTimesTwenty) {
  const ArgumentGrid grid = default_grid();
  std::size_t targets = 0;
  for (const auto& [b, ts] : grid.targets_by_bias_type) targets += ts.size();
  EXPECT_EQ(product_size(grid, FairnessMode::kBiased), targets * 5 * 2 * 2);
  EXPECT_EQ(product_size(grid, FairnessMode::kFair), targets * 5 * 2 * 2);
}

TEST(Grid, ValidationNamesTheComponent) {
  ArgumentGrid grid = default_grid();
  grid.statement_types.clear();
  try {
    grid.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("statement_types"), std::string::npos) << e.what();
  }
  grid = default_grid();
  grid.sentiments.push_back("Neutral");
  EXPECT_THROW(grid.validate(), ConfigError);
  grid = default_grid();
  grid.targets_by_bias_type["Age"].push_back(grid.targets_by_bias_type["Racial"].front());
  EXPECT_THROW(grid.validate(), ConfigError);
  grid = default_grid();
  grid.bias_types[1] = grid.bias_types[0];
  EXPECT_THROW(grid.validate(), ConfigError);
}

TEST(Grid, JsonRoundTrip) {
  const ArgumentGrid grid = default_grid();
  const ArgumentGrid again = grid_from_json(grid_to_json(grid));
  EXPECT_EQ(again.bias_types, grid.bias_types);
  EXPECT_EQ(again.targets_by_bias_type, grid.targets_by_bias_type);
  EXPECT_EQ(again.extension_targets, grid.extension_targets);
}

TEST(Enumerate, CountZeroIsAConfigError) {
  EXPECT_THROW(enumerate_prompt_specs(default_grid(), FairnessMode::kBiased, 0, 1), ConfigError);
}

TEST(Enumerate, DeterministicAndClosed) {
  const ArgumentGrid grid = default_grid();
  for (FairnessMode mode : {FairnessMode::kBiased, FairnessMode::kFair}) {
    const auto a = enumerate_prompt_specs(grid, mode, 10, 123);
    const auto b = enumerate_prompt_specs(grid, mode, 10, 123);
    ASSERT_EQ(a.size(), 10u);
    EXPECT_EQ(a, b);
    json ja = json::array(), jb = json::array();
    for (std::size_t i = 0; i < a.size(); ++i) {
      ja.push_back(spec_to_json(a[i]));
      jb.push_back(spec_to_json(b[i]));
      EXPECT_NO_THROW(validate_spec(a[i], grid));
      EXPECT_EQ(a[i].fairness_mode, mode);
    }
    EXPECT_EQ(ja.dump(), jb.dump());
  }
  EXPECT_NE(enumerate_prompt_specs(grid, FairnessMode::kBiased, 10, 1),
            enumerate_prompt_specs(grid, FairnessMode::kBiased, 10, 2));
}

TEST(Enumerate, NoRepeatsUntilProductExhausted) {
  const ArgumentGrid grid = default_grid();
  const auto n = product_size(grid, FairnessMode::kBiased);
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kBiased,
                                            static_cast<std::int64_t>(n), 9);
  std::set<std::string> keys;
  std::size_t questions = 0;
  for (const auto& s : specs) {
    keys.insert(spec_to_json(s).dump());
    questions += s.want_question;
  }
  EXPECT_EQ(keys.size(), n);
  EXPECT_EQ(questions * 2, n);
}

TEST(Enumerate, SpecAtCoversProduct) {
  const ArgumentGrid grid = default_grid();
  const auto first = spec_at(grid, FairnessMode::kFair, 0);
  const auto second = spec_at(grid, FairnessMode::kFair, 1);
  EXPECT_FALSE(first.want_question);
  EXPECT_TRUE(second.want_question);
  EXPECT_EQ(first.target_group, second.target_group);
}

TEST(Validate, SpecSentimentMustMatchMode) {
  const ArgumentGrid grid = default_grid();
  PromptSpec s = spec_at(grid, FairnessMode::kBiased, 0);
  s.fairness_mode = FairnessMode::kFair;
  EXPECT_THROW(validate_spec(s, grid), ValidationError);
  s = spec_at(grid, FairnessMode::kBiased, 0);
  s.bias_type = "Religious";
  EXPECT_THROW(validate_spec(s, grid), ValidationError);
}

TEST(RenderPrompt, SubstitutesAllFields) {
  const PromptSpec spec{"Religious", "muslims", "Stereotypes", "Negative", FairnessMode::kBiased,
                        false};
  const std::string p = render_prompt(spec, biased_template());
  for (const char* v : {"Religious", "muslims", "Stereotypes", "Negative", "biased"}) {
    EXPECT_NE(p.find(v), std::string::npos) << v;
  }
  EXPECT_EQ(p.find("{target_group}"), std::string::npos);
  EXPECT_NE(to_lower(p).find("json"), std::string::npos);
}

TEST(RenderPrompt, FairModeCarriesFairSentiment) {
  const ArgumentGrid grid = default_grid();
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kFair, 20, 4);
  const std::string tmpl = load_text_file(kData + "/templates/fair.txt");
  for (const auto& s : specs) {
    const std::string p = render_prompt(s, tmpl);
    EXPECT_TRUE(p.find("slightly positive yet fair") != std::string::npos ||
                p.find("slightly negative yet fair") != std::string::npos);
  }
}

TEST(RenderPrompt, MissingPlaceholderIsNamed) {
  const PromptSpec spec{"Religious", "muslims", "Stereotypes", "Negative", FairnessMode::kBiased,
                        false};
  try {
    render_prompt(spec, "About {bias_type}, {statement_type}, {sentiment}, {fairness_mode}.");
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("target_group"), std::string::npos);
  }
  EXPECT_THROW(render_prompt(spec, kMinimalTemplate + " {colour}"), TemplateError);
}

TEST(RenderPrompt, JsonInstructionAppendedWhenAbsent) {
  const PromptSpec spec{"Age", "teenagers", "Stereotypes", "Positive", FairnessMode::kBiased, true};
  const std::string p = render_prompt(spec, kMinimalTemplate);
  EXPECT_NE(to_lower(p).find("json"), std::string::npos);
}

TEST(ParseGenerated, AcceptsCommonReplyShapes) {
  EXPECT_EQ(parse_generated_text("{\"sentence\": \"Hi there.\"}"), "Hi there.");
  EXPECT_EQ(parse_generated_text("```json\n{\"text\": \"A b?\"}\n```"), "A b?");
  EXPECT_EQ(parse_generated_text("Sure! {\"sentence\": \"X y.\"} Hope it helps"), "X y.");
  EXPECT_FALSE(parse_generated_text("not json").has_value());
  EXPECT_FALSE(parse_generated_text("{\"sentence\": \"   \"}").has_value());
}

namespace {

std::shared_ptr<ChatTransport> canned(std::function<std::string(int)> reply) {
  auto n = std::make_shared<int>(0);
  return std::make_shared<CallbackTransport>("canned", [n, reply](const std::string&) {
    return HttpResponse{200, make_chat_response(reply((*n)++)), {}};
  });
}

}  // namespace

TEST(Generate, StubRunIsPureAndValid) {
  const ArgumentGrid grid = default_grid();
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kBiased, 25, 3);
  ChatClient c1(make_offline_backend(grid)), c2(make_offline_backend(grid));
  const auto a = generate_sentences(specs, biased_template(), c1, {});
  const auto b = generate_sentences(specs, biased_template(), c2, {});
  ASSERT_EQ(a.sentences.size(), 25u);
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    EXPECT_EQ(sentence_to_json(a.sentences[i]).dump(), sentence_to_json(b.sentences[i]).dump());
    EXPECT_NO_THROW(validate_sentence(a.sentences[i], &grid));
    EXPECT_EQ(a.sentences[i].spec, specs[i]);
    EXPECT_EQ(a.sentences[i].is_question, specs[i].want_question);
  }
}

TEST(Generate, JsonlRowHasExactlyTheDocumentedFields) {
  const ArgumentGrid grid = default_grid();
  ChatClient client(make_offline_backend(grid));
  const auto r = generate_sentences(enumerate_prompt_specs(grid, FairnessMode::kFair, 1, 1),
                                    load_text_file(kData + "/templates/fair.txt"), client, {});
  const json row = sentence_to_json(r.sentences.front());
  std::set<std::string> keys;
  for (const auto& [k, v] : row.items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"id", "text", "spec", "is_question", "provenance"}));
  for (const char* k : {"model_id", "temperature", "timestamp"}) {
    EXPECT_TRUE(row["provenance"].contains(k)) << k;
  }
  EXPECT_EQ(row["provenance"]["template_hash"],
            template_hash(load_text_file(kData + "/templates/fair.txt")));
  const GeneratedSentence back = sentence_from_json(row);
  EXPECT_EQ(sentence_to_json(back).dump(), row.dump());
}

TEST(Generate, UnparseableRepliesAreSkippedAfterRetries) {
  const ArgumentGrid grid = default_grid();
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kBiased, 3, 3);
  int requests_for_bad = 0;
  // Spec 1 always gets "not json"; the others succeed.
  auto transport = std::make_shared<CallbackTransport>("t", [&](const std::string& body) {
    const std::string target = specs[1].target_group;
    if (body.find(target) != std::string::npos && body.find(specs[1].statement_type) != std::string::npos) {
      ++requests_for_bad;
      return HttpResponse{200, make_chat_response("not json"), {}};
    }
    return HttpResponse{200, make_chat_response("{\"sentence\": \"Fine words.\"}"), {}};
  });
  ChatClient client(transport);
  GenerationOptions opts;
  opts.max_parse_retries = 2;
  const auto r = generate_sentences(specs, biased_template(), client, opts);
  EXPECT_EQ(requests_for_bad, 3);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].index, 1u);
  ASSERT_EQ(r.sentences.size(), 2u);
  EXPECT_EQ(r.sentences[0].id, "gus-000000");
  EXPECT_EQ(r.sentences[1].id, "gus-000002");
}

TEST(Generate, ZeroSuccessesIsAnAggregateError) {
  const ArgumentGrid grid = default_grid();
  ChatClient client(canned([](int) { return std::string("nope"); }));
  EXPECT_THROW(generate_sentences(enumerate_prompt_specs(grid, FairnessMode::kBiased, 2, 1),
                                  biased_template(), client, {}),
               GenerationError);
}

TEST(Generate, RetriesRecordedInProvenance) {
  const ArgumentGrid grid = default_grid();
  auto n = std::make_shared<int>(0);
  auto transport = std::make_shared<CallbackTransport>("t", [n](const std::string&) {
    if ((*n)++ < 2) return HttpResponse{429, "", {}};
    return HttpResponse{200, make_chat_response("{\"sentence\": \"Ok then.\"}"), {}};
  });
  RetryPolicy policy;
  policy.initial_backoff = std::chrono::milliseconds(1);
  ChatClient client(transport, policy);
  const auto r = generate_sentences(enumerate_prompt_specs(grid, FairnessMode::kBiased, 1, 1),
                                    biased_template(), client, {});
  EXPECT_EQ(r.sentences[0].provenance.backoffs, 2);
  EXPECT_EQ(r.sentences[0].provenance.attempts, 3);
}

TEST(Generate, AuthFailureIsFatal) {
  const ArgumentGrid grid = default_grid();
  ChatClient client(std::make_shared<CallbackTransport>(
      "t", [](const std::string&) { return HttpResponse{401, "", {}}; }));
  EXPECT_THROW(generate_sentences(enumerate_prompt_specs(grid, FairnessMode::kBiased, 3, 1),
                                  biased_template(), client, {}),
               AuthError);
}

TEST(Generate, ConcurrentRunKeepsSpecOrder) {
  const ArgumentGrid grid = default_grid();
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kBiased, 40, 11);
  ChatClient serial_client(make_offline_backend(grid)), parallel_client(make_offline_backend(grid));
  GenerationOptions parallel;
  parallel.max_in_flight = 4;
  const auto a = generate_sentences(specs, biased_template(), serial_client, {});
  const auto b = generate_sentences(specs, biased_template(), parallel_client, parallel);
  ASSERT_EQ(a.sentences.size(), b.sentences.size());
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    EXPECT_EQ(a.sentences[i].id, b.sentences[i].id);
    EXPECT_EQ(a.sentences[i].text, b.sentences[i].text);
  }
}

TEST(Generate, SentenceInvariants) {
  GeneratedSentence s;
  s.id = "x";
  s.text = "Is this a question?";
  s.is_question = false;
  EXPECT_THROW(validate_sentence(s), ValidationError);
  s.is_question = true;
  EXPECT_NO_THROW(validate_sentence(s));
  s.text = "  ";
  EXPECT_THROW(validate_sentence(s), ValidationError);
}
