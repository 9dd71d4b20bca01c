#include "gusnet/annotator.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

using nlohmann::json;

std::vector<BioViolation> validate_bio(std::span<const Tag> tags) {
  std::vector<BioViolation> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == Tag::kI && (i == 0 || tags[i - 1] == Tag::kO)) {
      out.push_back({i, BioViolationKind::kOrphanI});
    }
  }
  return out;
}

std::string_view default_definition(EntityClass cls) {
  switch (cls) {
    case EntityClass::kGen:
      return "Any broad generalization of a group or ubiquitous classifiers, including "
             "adjectives/descriptors.";
    case EntityClass::kUnfair:
      return "Any harsh or unjust characterization or offensive language.";
    case EntityClass::kStereo:
      return "Any statement (multiple words) that contains a stereotype targeting a group of "
             "people, both explicitly and unconsciously.";
  }
  return "";
}

namespace {

json tags_json(const std::vector<Tag>& tags, EntityClass cls) {
  json arr = json::array();
  for (Tag t : tags) arr.push_back(tag_name(t, cls));
  return arr;
}

std::string build_system_prompt(EntityClass cls, const std::string& definition,
                                const std::vector<FewShotExample>& examples) {
  const std::string b = tag_name(Tag::kB, cls);
  const std::string i = tag_name(Tag::kI, cls);
  std::ostringstream ss;
  ss << "You are an annotation agent for the entity class " << entity_display_name(cls) << ".\n"
     << "Definition: " << definition << "\n"
     << "Entity labels: " << b << ", " << i << "\n"
     << "For every word of the sentence output exactly one tag: " << b
     << " for the first word of an entity span, " << i
     << " for each following word of the same span, O for words outside any span. "
     << "An " << i << " tag must follow " << b << " or " << i << ".\n"
     << "Reply with JSON only: {\"tags\": [...]} with one tag per word, in order.\n\n"
     << "Examples of correct annotations:\n";
  for (std::size_t k = 0; k < examples.size(); ++k) {
    ss << "\nExample " << (k + 1) << "\n"
       << "Sentence: " << examples[k].sentence << "\n"
       << "Words: " << json(split_words(examples[k].sentence)).dump() << "\n"
       << "Tags: " << json{{"tags", tags_json(examples[k].tags, cls)}}.dump() << "\n";
  }
  return ss.str();
}

}  // namespace

AnnotatorAgent::AnnotatorAgent(EntityClass entity, std::string definition,
                               std::vector<FewShotExample> examples, ChatParams params,
                               int max_retries)
    : entity_(entity),
      definition_(std::move(definition)),
      examples_(std::move(examples)),
      params_(std::move(params)),
      max_retries_(max_retries),
      system_prompt_(build_system_prompt(entity_, definition_, examples_)) {}

std::vector<ChatMessage> AnnotatorAgent::initial_messages(
    const std::vector<std::string>& words) const {
  std::ostringstream user;
  user << "Sentence: " << join(words, " ") << "\n"
       << "Words: " << json(words).dump() << "\n"
       << "Return exactly " << words.size() << " tags.";
  return {{"system", system_prompt_}, {"user", user.str()}};
}

AnnotatorAgent build_agent(EntityClass entity, std::string definition,
                           std::vector<FewShotExample> examples, ChatParams params,
                           int max_retries) {
  if (trim(definition).empty()) throw ValidationError("agent definition is empty");
  if (examples.size() != AnnotatorAgent::kNumExamples) {
    throw ValidationError("annotator agents take exactly 4 examples, got " +
                          std::to_string(examples.size()));
  }
  if (max_retries < 0) throw ValidationError("max_retries must be >= 0");
  for (std::size_t k = 0; k < examples.size(); ++k) {
    const auto words = split_words(examples[k].sentence);
    const auto idx = static_cast<std::ptrdiff_t>(k);
    if (words.empty()) throw ValidationError("example " + std::to_string(k) + " is empty", idx);
    if (words.size() != examples[k].tags.size()) {
      throw ValidationError("example " + std::to_string(k) + " is misaligned: " +
                                std::to_string(words.size()) + " words, " +
                                std::to_string(examples[k].tags.size()) + " tags",
                            idx);
    }
    if (!validate_bio(examples[k].tags).empty()) {
      throw ValidationError("example " + std::to_string(k) + " has an I tag without a B", idx);
    }
  }
  return AnnotatorAgent(entity, std::move(definition), std::move(examples), std::move(params),
                        max_retries);
}

std::optional<Tag> parse_tag(std::string_view text, EntityClass entity) {
  if (text == "O") return Tag::kO;
  if (text == "B" || text == tag_name(Tag::kB, entity)) return Tag::kB;
  if (text == "I" || text == tag_name(Tag::kI, entity)) return Tag::kI;
  return std::nullopt;
}

AnnotatorAgent load_agent(const std::filesystem::path& path, ChatParams params, int max_retries) {
  json doc = json::parse(load_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("agent file is not valid JSON: " + path.string());
  const auto code = doc.at("entity").get<std::string>();
  const auto cls = parse_entity_class(code);
  if (!cls) throw ConfigError("unknown entity class '" + code + "' in " + path.string());
  std::string definition = doc.value("definition", std::string(default_definition(*cls)));
  std::vector<FewShotExample> examples;
  for (const auto& e : doc.at("examples")) {
    FewShotExample ex;
    ex.sentence = e.at("sentence").get<std::string>();
    for (const auto& t : e.at("tags")) {
      auto tag = parse_tag(t.get<std::string>(), *cls);
      if (!tag) {
        throw ValidationError("unknown tag '" + t.get<std::string>() + "' in example " +
                                  std::to_string(examples.size()),
                              static_cast<std::ptrdiff_t>(examples.size()));
      }
      ex.tags.push_back(*tag);
    }
    examples.push_back(std::move(ex));
  }
  return build_agent(*cls, std::move(definition), std::move(examples), std::move(params),
                     max_retries);
}

std::array<AnnotatorAgent, 3> load_agents(const std::filesystem::path& dir, ChatParams params,
                                          int max_retries) {
  return {load_agent(dir / "gen.json", params, max_retries),
          load_agent(dir / "unfair.json", params, max_retries),
          load_agent(dir / "stereo.json", params, max_retries)};
}

namespace {

std::optional<json> extract_json(const std::string& reply) {
  std::string body = trim(reply);
  if (body.rfind("```", 0) == 0) {
    const auto nl = body.find('\n');
    const auto close = body.rfind("```");
    if (nl != std::string::npos && close != std::string::npos && close > nl) {
      body = trim(body.substr(nl + 1, close - nl - 1));
    }
  }
  json doc = json::parse(body, nullptr, false);
  if (!doc.is_discarded()) return doc;
  return std::nullopt;
}

}  // namespace

ReplyCheck check_reply(const std::string& reply, EntityClass entity,
                       const std::vector<std::string>& words) {
  ReplyCheck check;
  const std::string b = tag_name(Tag::kB, entity);
  const std::string i = tag_name(Tag::kI, entity);
  auto doc = extract_json(reply);
  json list;
  if (doc && doc->is_object() && doc->contains("tags") && (*doc)["tags"].is_array()) {
    list = (*doc)["tags"];
  } else if (doc && doc->is_array()) {
    list = *doc;
  } else {
    check.suggestions.push_back(
        "Your reply could not be parsed. Reply with JSON only, in the form {\"tags\": [...]}.");
    return check;
  }
  bool unknown = false;
  for (std::size_t k = 0; k < list.size(); ++k) {
    std::optional<Tag> tag;
    if (list[k].is_string()) tag = parse_tag(list[k].get<std::string>(), entity);
    if (!tag) {
      unknown = true;
      check.suggestions.push_back("Tag " + list[k].dump() + " at position " + std::to_string(k) +
                                  " is not allowed. Use only O, " + b + " and " + i + ".");
      continue;
    }
    check.tags.push_back(*tag);
  }
  if (unknown) return check;
  if (check.tags.size() != words.size()) {
    check.suggestions.push_back("The sentence has " + std::to_string(words.size()) +
                                " words but you returned " + std::to_string(check.tags.size()) +
                                " tags. Return exactly one tag per word, in order: " +
                                json(words).dump() + ".");
    return check;
  }
  for (const auto& v : validate_bio(check.tags)) {
    check.suggestions.push_back("Tag " + i + " at position " + std::to_string(v.index) +
                                " (word \"" + words[v.index] + "\") does not continue a " + b +
                                " or " + i + " span. Start every span with " + b + ".");
  }
  return check;
}

AnnotationOutcome annotate_entity(const AnnotatorAgent& agent, ChatClient& client,
                                  std::string_view sentence_text) {
  const auto words = split_words(sentence_text);
  if (words.empty()) throw AnnotationError("cannot annotate an empty sentence", {});
  auto messages = agent.initial_messages(words);
  AnnotationOutcome outcome;
  for (int attempt = 0; attempt <= agent.max_retries(); ++attempt) {
    ChatResult r = client.complete(messages, agent.params());
    outcome.replies.push_back(r.text);
    ReplyCheck check = check_reply(r.text, agent.entity(), words);
    if (check.ok()) {
      outcome.sequence = EntityTagSequence{agent.entity(), words, std::move(check.tags)};
      outcome.retry_count = attempt;
      return outcome;
    }
    messages.push_back({"assistant", r.text});
    messages.push_back({"user", "Suggestions:\n- " + join(check.suggestions, "\n- ") +
                                    "\nPlease answer again."});
  }
  throw AnnotationError(std::string(entity_code(agent.entity())) +
                            " annotation still invalid after " +
                            std::to_string(agent.max_retries()) + " retries",
                        outcome.replies);
}

EntityTagSequence AnnotatedSentence::stream(EntityClass cls) const {
  return EntityTagSequence{cls, words, per_entity[static_cast<std::size_t>(cls)]};
}

AnnotatedSentence merge_annotations(std::span<const EntityTagSequence> streams) {
  if (streams.size() != 3) {
    throw MergeError("merging needs exactly 3 entity streams, got " +
                         std::to_string(streams.size()),
                     -1);
  }
  std::array<const EntityTagSequence*, 3> by_class{};
  for (const auto& s : streams) {
    auto& slot = by_class[static_cast<std::size_t>(s.entity)];
    if (slot) throw MergeError("duplicate stream for " + std::string(entity_code(s.entity)), -1);
    slot = &s;
  }
  const auto& words = streams[0].words;
  for (const auto& s : streams) {
    if (s.tags.size() != s.words.size()) {
      throw MergeError(std::string(entity_code(s.entity)) + " stream has " +
                           std::to_string(s.tags.size()) + " tags for " +
                           std::to_string(s.words.size()) + " words",
                       static_cast<std::ptrdiff_t>(std::min(s.tags.size(), s.words.size())));
    }
    const std::size_t n = std::min(words.size(), s.words.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (words[k] != s.words[k]) {
        throw MergeError("word lists diverge at index " + std::to_string(k),
                         static_cast<std::ptrdiff_t>(k));
      }
    }
    if (s.words.size() != words.size()) {
      throw MergeError("word lists differ in length (" + std::to_string(words.size()) + " vs " +
                           std::to_string(s.words.size()) + ")",
                       static_cast<std::ptrdiff_t>(n));
    }
  }
  AnnotatedSentence out;
  out.words = words;
  out.merged.resize(words.size());
  for (EntityClass cls : kEntityClasses) {
    const auto* s = by_class[static_cast<std::size_t>(cls)];
    out.per_entity[static_cast<std::size_t>(cls)] = s->tags;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (s->tags[k] == Tag::kB) out.merged[k].insert(begin_label(cls));
      if (s->tags[k] == Tag::kI) out.merged[k].insert(inside_label(cls));
    }
  }
  for (auto& set : out.merged) {
    if (set.empty()) set.insert(Label::kO);
  }
  return out;
}

std::array<EntityTagSequence, 3> decompose(const AnnotatedSentence& sentence) {
  std::array<EntityTagSequence, 3> out;
  for (EntityClass cls : kEntityClasses) {
    auto& s = out[static_cast<std::size_t>(cls)];
    s.entity = cls;
    s.words = sentence.words;
    for (LabelSet set : sentence.merged) {
      s.tags.push_back(set.contains(begin_label(cls))    ? Tag::kB
                       : set.contains(inside_label(cls)) ? Tag::kI
                                                         : Tag::kO);
    }
  }
  return out;
}

void validate_annotated(const AnnotatedSentence& s) {
  if (s.words.empty()) throw ValidationError("sentence " + s.id + " has no words");
  if (s.merged.size() != s.words.size()) {
    throw ValidationError("sentence " + s.id + ": merged labels misaligned with words");
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (s.per_entity[c].size() != s.words.size()) {
      throw ValidationError("sentence " + s.id + ": " +
                            std::string(entity_code(static_cast<EntityClass>(c))) +
                            " stream misaligned");
    }
  }
  for (std::size_t k = 0; k < s.merged.size(); ++k) {
    const LabelSet set = s.merged[k];
    if (!set.well_formed()) {
      throw ValidationError("sentence " + s.id + ": bad label set at word " + std::to_string(k),
                            static_cast<std::ptrdiff_t>(k));
    }
    for (EntityClass cls : kEntityClasses) {
      if (set.contains(begin_label(cls)) && set.contains(inside_label(cls))) {
        throw ValidationError("sentence " + s.id + ": two tags of one class at word " +
                                  std::to_string(k),
                              static_cast<std::ptrdiff_t>(k));
      }
      const Tag expected = set.contains(begin_label(cls))    ? Tag::kB
                           : set.contains(inside_label(cls)) ? Tag::kI
                                                             : Tag::kO;
      if (s.per_entity[static_cast<std::size_t>(cls)][k] != expected) {
        throw ValidationError("sentence " + s.id + ": merged labels disagree with the " +
                                  std::string(entity_code(cls)) + " stream at word " +
                                  std::to_string(k),
                              static_cast<std::ptrdiff_t>(k));
      }
    }
  }
}

json annotated_to_json(const AnnotatedSentence& s) {
  json merged = json::array();
  for (LabelSet set : s.merged) merged.push_back(set.names());
  json retries = json::object();
  for (const auto& [k, v] : s.retry_counts) retries[k] = v;
  return json{{"id", s.id},
              {"text", s.text},
              {"words", s.words},
              {"gen_tags", tags_json(s.per_entity[0], EntityClass::kGen)},
              {"unfair_tags", tags_json(s.per_entity[1], EntityClass::kUnfair)},
              {"stereo_tags", tags_json(s.per_entity[2], EntityClass::kStereo)},
              {"merged", merged},
              {"retry_counts", retries},
              {"bias_type", s.bias_type},
              {"is_question", s.is_question}};
}

AnnotatedSentence annotated_from_json(const json& doc) {
  AnnotatedSentence s;
  s.id = doc.at("id").get<std::string>();
  s.text = doc.value("text", "");
  s.bias_type = doc.value("bias_type", "");
  s.is_question = doc.value("is_question", ends_with_question_mark(s.text));
  s.words = doc.at("words").get<std::vector<std::string>>();
  const char* keys[] = {"gen_tags", "unfair_tags", "stereo_tags"};
  for (EntityClass cls : kEntityClasses) {
    auto& tags = s.per_entity[static_cast<std::size_t>(cls)];
    for (const auto& t : doc.at(keys[static_cast<std::size_t>(cls)])) {
      auto tag = parse_tag(t.get<std::string>(), cls);
      if (!tag) throw ValidationError("sentence " + s.id + ": unknown tag " + t.dump());
      tags.push_back(*tag);
    }
  }
  for (const auto& row : doc.at("merged")) {
    s.merged.push_back(label_set_from_names(row.get<std::vector<std::string>>()));
  }
  if (doc.contains("retry_counts")) {
    for (const auto& [k, v] : doc.at("retry_counts").items()) s.retry_counts[k] = v.get<int>();
  }
  return s;
}

AnnotationBatchResult annotate_corpus(const std::vector<GeneratedSentence>& corpus,
                                      const std::array<AnnotatorAgent, 3>& agents,
                                      ChatClient& client, const AnnotateOptions& options) {
  std::vector<std::optional<AnnotatedSentence>> slots(corpus.size());
  std::vector<std::string> failures(corpus.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto work = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (fatal) return;
      }
      const auto& src = corpus[i];
      try {
        std::vector<EntityTagSequence> streams;
        std::map<std::string, int> retries;
        for (const auto& agent : agents) {
          auto outcome = annotate_entity(agent, client, src.text);
          retries[std::string(entity_code(agent.entity()))] = outcome.retry_count;
          streams.push_back(std::move(outcome.sequence));
        }
        AnnotatedSentence merged = merge_annotations(streams);
        merged.id = src.id;
        merged.text = src.text;
        merged.bias_type = src.spec.bias_type;
        merged.is_question = src.is_question;
        merged.retry_counts = std::move(retries);
        slots[i] = std::move(merged);
      } catch (const AuthError&) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    }
  };

  const int workers =
      std::max(1, std::min<int>(options.max_in_flight, static_cast<int>(corpus.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  AnnotationBatchResult result;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (slots[i]) {
      result.sentences.push_back(std::move(*slots[i]));
    } else {
      spdlog::warn("annotation failed for {}: {}", corpus[i].id, failures[i]);
      result.failed.push_back({i, failures[i]});
    }
  }
  return result;
}

}  // namespace gusnet
