// gusnet: command-line front end for corpus generation, annotation, dataset
// preparation, training, evaluation and the analysis figures.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "gusnet/analysis.hpp"
#include "gusnet/annotator.hpp"
#include "gusnet/babe.hpp"
#include "gusnet/classifier.hpp"
#include "gusnet/corpus_forge.hpp"
#include "gusnet/dataset.hpp"
#include "gusnet/error.hpp"
#include "gusnet/figures.hpp"
#include "gusnet/http_transport.hpp"
#include "gusnet/jsonl.hpp"
#include "gusnet/offline_backend.hpp"
#include "gusnet/text.hpp"
#include "gusnet/trainer.hpp"

#ifndef GUSNET_DATA_DIR
#define GUSNET_DATA_DIR "data"
#endif

using namespace gusnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// GUSNET_DATA_DIR in the environment overrides the source-tree default.
const std::string kDataDir = [] {
  const char* env = std::getenv("GUSNET_DATA_DIR");
  return std::string(env && *env ? env : GUSNET_DATA_DIR);
}();

struct BackendOptions {
  std::string backend = "stub";
  std::string url = HttpEndpoint{}.url;
  std::string api_key_env = HttpEndpoint{}.api_key_env;
  std::string model_id = ChatParams{}.model_id;
  double temperature = ChatParams{}.temperature;
  int max_tokens = ChatParams{}.max_tokens;
  int max_attempts = RetryPolicy{}.max_attempts;
  int max_in_flight = 1;
  int misalign_every = 0;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.backend, "stub or http")->check(CLI::IsMember({"stub", "http"}));
  cmd->add_option("--url", o.url, "chat-completions URL for the http backend");
  cmd->add_option("--api-key-env", o.api_key_env, "environment variable holding the API key");
  cmd->add_option("--model-id", o.model_id, "model name sent to the backend");
  cmd->add_option("--temperature", o.temperature);
  cmd->add_option("--max-tokens", o.max_tokens);
  cmd->add_option("--max-attempts", o.max_attempts, "transport attempts per request");
  cmd->add_option("--max-in-flight", o.max_in_flight, "concurrent requests")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--misalign-every", o.misalign_every,
                  "stub only: corrupt the first reply of every Nth annotation");
}

ChatClient make_client(const BackendOptions& o, const ArgumentGrid& grid) {
  RetryPolicy policy;
  policy.max_attempts = o.max_attempts;
  if (o.backend == "http") {
    HttpEndpoint endpoint;
    endpoint.url = o.url;
    endpoint.api_key_env = o.api_key_env;
    return ChatClient(std::make_shared<HttpTransport>(endpoint), policy);
  }
  return ChatClient(make_offline_backend(grid, OfflineBackendOptions{o.misalign_every}), policy);
}

ChatParams chat_params(const BackendOptions& o) {
  return ChatParams{o.model_id, o.temperature, o.max_tokens};
}

// An annotated corpus given either as a JSONL file or a directory holding
// annotated.jsonl.
fs::path annotated_path(const fs::path& p) {
  return fs::is_directory(p) ? p / "annotated.jsonl" : p;
}

std::vector<double> parse_values(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (trim(tok).empty()) continue;
      out.push_back(std::stod(tok));
    }
  }
  return out;
}

struct TrainSetup {
  EncoderConfig encoder;
  TrainingConfig training;
  FocalLossConfig loss;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t vocab_max_size = 8000;
  int vocab_min_count = 2;
  std::string vocab_file;
};

// {"encoder": {...} or "tiny", "training": {...}, "focal_loss": {...},
//  "max_len": 128, "vocab": {"max_size": 8000, "min_count": 2, "file": ""}}
TrainSetup load_setup(const std::string& path, bool tiny) {
  TrainSetup s;
  json doc = path.empty() ? json::object() : read_json(path);
  if (doc.contains("training")) s.training = training_config_from_json(doc["training"]);
  if (doc.contains("focal_loss")) s.loss = focal_from_json(doc["focal_loss"]);
  s.max_len = doc.value("max_len", s.max_len);
  if (doc.contains("vocab")) {
    s.vocab_max_size = doc["vocab"].value("max_size", s.vocab_max_size);
    s.vocab_min_count = doc["vocab"].value("min_count", s.vocab_min_count);
    s.vocab_file = doc["vocab"].value("file", s.vocab_file);
  }
  json enc = doc.value("encoder", json("tiny"));
  if (enc.is_string()) enc = json{{"encoder_id", enc.get<std::string>()}};
  if (tiny) enc = json{{"encoder_id", "tiny"}};
  enc["max_len"] = s.max_len;
  enc["vocab_size"] = 5;  // replaced once the vocabulary is known
  s.encoder = encoder_config_from_json(enc);
  return s;
}

struct PreparedData {
  WordPieceTokenizer tokenizer{{"[PAD]", "[UNK]", "[CLS]", "[SEP]"}};
  std::vector<EncodedExample> train, validation, test;
};

std::vector<AnnotatedSentence> select(const std::vector<AnnotatedSentence>& all,
                                      const std::vector<std::string>& ids) {
  std::map<std::string, const AnnotatedSentence*> by_id;
  for (const auto& s : all) by_id[s.id] = &s;
  std::vector<AnnotatedSentence> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ConfigError("split manifest names unknown sentence " + id);
    out.push_back(*it->second);
  }
  return out;
}

PreparedData prepare(const std::vector<AnnotatedSentence>& sentences, const DatasetSplit& split,
                     const TrainSetup& setup) {
  PreparedData d;
  const auto train = select(sentences, split.train);
  if (!setup.vocab_file.empty()) {
    d.tokenizer = WordPieceTokenizer::load(setup.vocab_file);
  } else {
    std::vector<std::vector<std::string>> corpus;
    for (const auto& s : train) corpus.push_back(s.words);
    d.tokenizer = WordPieceTokenizer::build(corpus, setup.vocab_max_size, setup.vocab_min_count);
  }
  auto encode = [&](const std::vector<AnnotatedSentence>& xs) {
    std::vector<EncodedExample> out;
    for (const auto& s : xs) out.push_back(tokenize_and_align(s, d.tokenizer, setup.max_len));
    return out;
  };
  d.train = encode(train);
  d.validation = encode(select(sentences, split.validation));
  d.test = encode(select(sentences, split.test));
  return d;
}

// Small self-contained corpus from the offline backend, for --tiny runs.
std::vector<AnnotatedSentence> stub_corpus(std::size_t count, std::uint64_t seed) {
  const ArgumentGrid grid = load_grid(kDataDir + "/grid_v1.json");
  ChatClient client(make_offline_backend(grid));
  const auto specs = enumerate_prompt_specs(grid, FairnessMode::kBiased,
                                            static_cast<std::int64_t>(count), seed);
  const auto generated = generate_sentences(
      specs, load_text_file(kDataDir + "/templates/biased.txt"), client, GenerationOptions{});
  const auto agents = load_agents(kDataDir + "/agents");
  return annotate_corpus(generated.sentences, agents, client).sentences;
}

std::string format_report(const EvalReport& r) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %9s %9s %9s\n", "class", "precision", "recall", "f1");
  out += buf;
  for (const auto& m : r.per_entity) {
    std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %9.4f\n",
                  std::string(scored_class_name(m.entity_class)).c_str(), m.precision, m.recall,
                  m.f1);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %9.4f\nhamming loss %.4f over %zu tokens\n",
                "macro", r.macro_precision, r.macro_recall, r.macro_f1, r.hamming_loss,
                r.token_count);
  return out + buf;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("gusnet"));
  CLI::App app{"Token-level social bias detection toolkit"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate sentences from the argument grid");
  std::string gen_grid = kDataDir + "/grid_v1.json", gen_mode = "biased", gen_out, gen_template;
  std::int64_t gen_count = 0;
  std::uint64_t gen_seed = 0;
  BackendOptions gen_backend;
  gen->add_option("--grid", gen_grid);
  gen->add_option("--mode", gen_mode)->check(CLI::IsMember({"biased", "fair"}));
  gen->add_option("--count", gen_count)->required();
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--template", gen_template, "prompt template (default: data/templates/<mode>.txt)");
  add_backend_options(gen, gen_backend);

  // annotate
  auto* ann = app.add_subcommand("annotate", "Annotate a generated corpus with the three agents");
  std::string ann_in, ann_out, ann_agents = kDataDir + "/agents", ann_grid = kDataDir + "/grid_v1.json";
  int ann_retries = 3;
  BackendOptions ann_backend;
  ann->add_option("--in", ann_in)->required();
  ann->add_option("--out", ann_out)->required();
  ann->add_option("--agents", ann_agents);
  ann->add_option("--max-retries", ann_retries);
  ann->add_option("--grid", ann_grid, "grid used by the stub backend");
  add_backend_options(ann, ann_backend);

  // split
  auto* spl = app.add_subcommand("split", "Stratified train/validation/test split");
  std::string spl_in, spl_out;
  std::uint64_t spl_seed = 42;
  SplitRatios spl_ratios;
  spl->add_option("--in", spl_in)->required();
  spl->add_option("--out", spl_out)->required();
  spl->add_option("--seed", spl_seed);
  spl->add_option("--train", spl_ratios.train);
  spl->add_option("--val", spl_ratios.validation);
  spl->add_option("--test", spl_ratios.test);

  // stats
  auto* sta = app.add_subcommand("stats", "Corpus statistics");
  std::string sta_in;
  sta->add_option("--in", sta_in)->required();

  // encode
  auto* enc = app.add_subcommand("encode", "Encode an annotated corpus for the encoder");
  std::string enc_in, enc_out, enc_vocab, enc_vocab_out;
  std::size_t enc_max_len = kDefaultMaxLen;
  enc->add_option("--in", enc_in)->required();
  enc->add_option("--out", enc_out)->required();
  enc->add_option("--vocab", enc_vocab, "vocab.txt to use (built from the corpus when omitted)");
  enc->add_option("--vocab-out", enc_vocab_out, "where to write the built vocabulary");
  enc->add_option("--max-len", enc_max_len);

  // train
  auto* trn = app.add_subcommand("train", "Train the token classifier");
  std::string trn_data, trn_split, trn_config, trn_out;
  bool trn_tiny = false;
  trn->add_option("--data", trn_data, "annotated JSONL or a directory with annotated.jsonl")
      ->required();
  trn->add_option("--split", trn_split, "split manifest")->required();
  trn->add_option("--config", trn_config, "training config JSON");
  trn->add_option("--out", trn_out, "checkpoint directory (overrides the config)");
  trn->add_flag("--tiny-encoder", trn_tiny, "use the small CPU encoder");

  // predict
  auto* prd = app.add_subcommand("predict", "Word-level predictions for raw text");
  std::string prd_model;
  std::vector<std::string> prd_texts;
  bool prd_json = false;
  double prd_threshold = -1;
  prd->add_option("--model", prd_model)->required();
  prd->add_option("--text", prd_texts)->required();
  prd->add_flag("--json", prd_json);
  prd->add_option("--threshold", prd_threshold, "override the checkpoint threshold");

  // evaluate
  auto* evl = app.add_subcommand("evaluate", "Score a checkpoint on an annotated split");
  std::string evl_model, evl_data, evl_split = "test", evl_manifest, evl_report, evl_errors,
                                   evl_hamming = "bit";
  evl->add_option("--model", evl_model)->required();
  evl->add_option("--data", evl_data)->required();
  evl->add_option("--split", evl_split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  evl->add_option("--manifest", evl_manifest, "split manifest (required unless --split all)");
  evl->add_option("--report", evl_report, "write the report JSON here");
  evl->add_option("--errors", evl_errors, "per-sentence error CSV");
  evl->add_option("--hamming", evl_hamming)->check(CLI::IsMember({"bit", "vector"}));

  // compare-babe
  auto* cmp = app.add_subcommand("compare-babe", "Compare predictions with an external bias corpus");
  std::string cmp_babe, cmp_model, cmp_out, cmp_mode = "class-min";
  std::size_t cmp_bins = 10;
  cmp->add_option("--babe", cmp_babe)->required();
  cmp->add_option("--model", cmp_model)->required();
  cmp->add_option("--bins", cmp_bins);
  cmp->add_option("--out", cmp_out)->required();
  cmp->add_option("--count-mode", cmp_mode)->check(CLI::IsMember({"class-min", "any-entity"}));

  // sweep
  auto* swp = app.add_subcommand("sweep", "Focal-loss alpha/gamma sensitivity sweep");
  std::string swp_param, swp_config, swp_data, swp_manifest, swp_out;
  std::vector<std::string> swp_values;
  bool swp_tiny = false;
  std::size_t swp_tiny_count = 60;
  swp->add_option("--param", swp_param)->required()->check(CLI::IsMember({"alpha", "gamma"}));
  swp->add_option("--values", swp_values, "comma or space separated")->required();
  swp->add_option("--config", swp_config);
  swp->add_option("--data", swp_data);
  swp->add_option("--manifest", swp_manifest);
  swp->add_option("--out", swp_out, "write the table as CSV and markdown with this stem");
  swp->add_flag("--tiny", swp_tiny, "tiny encoder on a stub-generated corpus");
  swp->add_option("--tiny-count", swp_tiny_count, "sentences in the --tiny corpus");

  // case-study
  auto* cas = app.add_subcommand("case-study", "Highlight predicted entities in a sentence");
  std::string cas_model, cas_text, cas_html;
  cas->add_option("--model", cas_model)->required();
  cas->add_option("--text", cas_text)->required();
  cas->add_option("--html", cas_html, "also write a standalone XHTML page");

  // distributions
  auto* dis = app.add_subcommand("distributions", "Bias-type and token-label pie charts");
  std::string dis_in, dis_out = "figures";
  dis->add_option("--in", dis_in)->required();
  dis->add_option("--out", dis_out);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) {
      const ArgumentGrid grid = load_grid(gen_grid);
      const FairnessMode mode = parse_fairness_mode(gen_mode);
      if (gen_template.empty()) gen_template = kDataDir + "/templates/" + gen_mode + ".txt";
      const auto specs = enumerate_prompt_specs(grid, mode, gen_count, gen_seed);
      ChatClient client = make_client(gen_backend, grid);
      GenerationOptions opts;
      opts.params = chat_params(gen_backend);
      opts.max_in_flight = gen_backend.max_in_flight;
      if (gen_backend.backend == "http") opts.clock = utc_timestamp;
      const auto result = generate_sentences(specs, load_text_file(gen_template), client, opts);
      std::vector<json> rows;
      for (const auto& s : result.sentences) rows.push_back(sentence_to_json(s));
      write_jsonl(gen_out, rows);
      spdlog::info("wrote {} sentences to {} ({} skipped)", rows.size(), gen_out,
                   result.skipped.size());
    } else if (*ann) {
      std::vector<GeneratedSentence> corpus;
      for (const auto& row : read_jsonl(ann_in)) corpus.push_back(sentence_from_json(row));
      const ArgumentGrid grid = load_grid(ann_grid);
      ChatClient client = make_client(ann_backend, grid);
      const auto agents = load_agents(ann_agents, chat_params(ann_backend), ann_retries);
      const auto result =
          annotate_corpus(corpus, agents, client, AnnotateOptions{ann_backend.max_in_flight});
      save_annotated(ann_out, result.sentences);
      spdlog::info("annotated {} sentences ({} failed)", result.sentences.size(),
                   result.failed.size());
      if (result.sentences.empty()) return 1;
    } else if (*spl) {
      const auto split = split_dataset(load_annotated(annotated_path(spl_in)), spl_ratios, spl_seed);
      write_json(spl_out, split_to_json(split));
      spdlog::info("train {} / val {} / test {}{}", split.train.size(), split.validation.size(),
                   split.test.size(), split.stratified ? "" : " (unstratified)");
    } else if (*sta) {
      std::cout << stats_to_json(corpus_stats(load_annotated(annotated_path(sta_in)))).dump(2)
                << "\n";
    } else if (*enc) {
      const auto sentences = load_annotated(annotated_path(enc_in));
      std::vector<std::vector<std::string>> corpus;
      for (const auto& s : sentences) corpus.push_back(s.words);
      const WordPieceTokenizer tok = enc_vocab.empty() ? WordPieceTokenizer::build(corpus)
                                                       : WordPieceTokenizer::load(enc_vocab);
      if (!enc_vocab_out.empty()) tok.save(enc_vocab_out);
      std::vector<json> rows;
      for (const auto& s : sentences) {
        rows.push_back(encoded_to_json(tokenize_and_align(s, tok, enc_max_len)));
      }
      write_jsonl(enc_out, rows);
    } else if (*trn) {
      TrainSetup setup = load_setup(trn_config, trn_tiny);
      if (!trn_out.empty()) setup.training.checkpoint_dir = trn_out;
      if (setup.training.checkpoint_dir.empty()) throw ConfigError("no checkpoint directory given");
      const auto sentences = load_annotated(annotated_path(trn_data));
      const DatasetSplit split = split_from_json(read_json(trn_split));
      PreparedData data = prepare(sentences, split, setup);
      setup.encoder.vocab_size = data.tokenizer.size();
      TokenClassifier model(setup.encoder, setup.training.seed);
      spdlog::info("encoder {} with {} parameters, vocab {}", setup.encoder.encoder_id,
                   model.parameter_count(), data.tokenizer.size());
      const fs::path dir = setup.training.checkpoint_dir;
      std::vector<EpochLog> rows;
      auto summary = train(model, data.train, data.validation, setup.training, setup.loss,
                           [&](const EpochLog& row, const TokenClassifier& m, bool improved) {
                             rows.push_back(row);
                             if (improved) {
                               TrainingSummary partial;
                               partial.log = rows;
                               partial.best_epoch = row.epoch;
                               partial.best_val_macro_f1 = row.val_macro_f1;
                               save_checkpoint(dir, m, data.tokenizer, setup.loss,
                                               {{"summary", summary_to_json(partial)},
                                                {"config", training_config_to_json(setup.training)}});
                             }
                           });
      save_checkpoint(dir, model, data.tokenizer, setup.loss,
                      {{"summary", summary_to_json(summary)},
                       {"config", training_config_to_json(setup.training)}});
      write_json(dir / "training_log.json", summary_to_json(summary));
      std::cout << "best epoch " << summary.best_epoch << " val macro F1 "
                << summary.best_val_macro_f1 << "\n";
    } else if (*prd) {
      const LoadedModel m = load_checkpoint(prd_model);
      const double threshold = prd_threshold >= 0 ? prd_threshold : m.loss.threshold;
      const auto preds = predict(prd_texts, m.model, m.tokenizer, threshold);
      for (const auto& p : preds) {
        if (prd_json) {
          std::cout << predictions_to_json(p).dump() << "\n";
        } else {
          for (const auto& w : p.words) std::cout << w.word << "\t" << join(w.labels.names(), ",") << "\n";
          std::cout << "\n";
        }
      }
    } else if (*evl) {
      const LoadedModel m = load_checkpoint(evl_model);
      auto sentences = load_annotated(annotated_path(evl_data));
      if (evl_split != "all") {
        if (evl_manifest.empty()) throw ConfigError("--manifest is required unless --split all");
        const DatasetSplit split = split_from_json(read_json(evl_manifest));
        sentences = select(sentences, evl_split == "train" ? split.train
                                      : evl_split == "val" ? split.validation
                                                           : split.test);
      }
      std::vector<EncodedExample> examples;
      for (const auto& s : sentences) {
        examples.push_back(tokenize_and_align(s, m.tokenizer, m.model.config().max_len));
      }
      const auto eval = evaluate_model(m.model, examples, m.loss,
                                       evl_hamming == "vector" ? HammingMode::kVector : HammingMode::kBit);
      std::cout << format_report(eval.report);
      if (!evl_report.empty()) write_json(evl_report, report_to_json(eval.report));
      if (!evl_errors.empty()) {
        std::string csv = "id,token,gold,pred\n";
        for (std::size_t i = 0; i < eval.sentences.size(); ++i) {
          const auto& sp = eval.sentences[i];
          for (std::size_t t = 0; t < sp.gold.size(); ++t) {
            if (is_ignore_row(sp.gold[t]) || sp.gold[t] == sp.pred[t]) continue;
            csv += sp.id + "," + m.tokenizer.token(examples[i].input_ids[t]) + "," +
                   join(decode_label_row(sp.gold[t]).names(), " ") + "," +
                   join(decode_label_row(sp.pred[t]).names(), " ") + "\n";
          }
        }
        write_text_file(evl_errors, csv);
      }
    } else if (*cmp) {
      const LoadedModel m = load_checkpoint(cmp_model);
      const auto rows = read_babe(cmp_babe);
      const auto result = babe_compare(
          rows,
          [&](const std::vector<std::string>& texts) {
            return predict(texts, m.model, m.tokenizer, m.loss.threshold);
          },
          cmp_bins, parse_entity_count_mode(cmp_mode));
      const fs::path out = cmp_out;
      write_text_file(out / "babe_points.csv", babe_points_csv(result));
      write_text_file(out / "babe_records.csv", babe_records_csv(result));
      write_text_file(out / "babe_scatter.svg", scatter_svg(result, "Entities vs biased words"));
      write_scatter_png(out / "babe_scatter.png", result);
      std::cout << "slope " << result.trend.slope << " intercept " << result.trend.intercept
                << " over " << result.points.size() << " bins\n";
    } else if (*swp) {
      TrainSetup setup = load_setup(swp_config, swp_tiny);
      std::vector<AnnotatedSentence> sentences;
      DatasetSplit split;
      if (!swp_data.empty()) {
        sentences = load_annotated(annotated_path(swp_data));
        split = swp_manifest.empty() ? split_dataset(sentences, {}, setup.training.seed)
                                     : split_from_json(read_json(swp_manifest));
      } else if (swp_tiny) {
        sentences = stub_corpus(swp_tiny_count, setup.training.seed);
        split = split_dataset(sentences, {}, setup.training.seed);
        if (swp_config.empty()) {
          setup.training.epochs = 5;
          setup.training.batch_size = 8;
          setup.training.learning_rate = 3e-3;
          setup.vocab_min_count = 1;
        }
      } else {
        throw ConfigError("sweep needs --data or --tiny");
      }
      PreparedData data = prepare(sentences, split, setup);
      setup.encoder.vocab_size = data.tokenizer.size();
      const auto result = sweep(parse_sweep_parameter(swp_param), parse_values(swp_values),
                                setup.encoder, setup.training, setup.loss,
                                SweepData{data.train, data.validation, data.test});
      std::cout << sweep_table_markdown(result);
      if (!swp_out.empty()) {
        write_text_file(swp_out + ".csv", sweep_table_csv(result));
        write_text_file(swp_out + ".md", sweep_table_markdown(result));
      }
    } else if (*cas) {
      const LoadedModel m = load_checkpoint(cas_model);
      const CaseStudy cs = render_case_study(cas_text, m.model, m.tokenizer, m.loss.threshold);
      std::cout << cs.terminal;
      if (!cas_html.empty()) write_text_file(cas_html, cs.html);
    } else if (*dis) {
      const auto figs = render_distributions(corpus_stats(load_annotated(annotated_path(dis_in))));
      const fs::path out = dis_out;
      for (const auto& [stem, chart] :
           {std::pair{"bias_types", &figs.bias_types}, std::pair{"token_labels", &figs.token_labels}}) {
        write_text_file(out / (std::string(stem) + ".csv"), pie_csv(*chart));
        write_text_file(out / (std::string(stem) + ".svg"), pie_svg(*chart));
        write_pie_png(out / (std::string(stem) + ".png"), *chart);
      }
      std::cout << "wrote figures to " << out.string() << "\n";
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
