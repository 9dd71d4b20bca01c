#include "gusnet/corpus_forge.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"
#include "gusnet/rng.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

using nlohmann::json;

std::string_view fairness_mode_name(FairnessMode mode) {
  return mode == FairnessMode::kFair ? "fair" : "biased";
}

FairnessMode parse_fairness_mode(std::string_view name) {
  if (name == "biased") return FairnessMode::kBiased;
  if (name == "fair") return FairnessMode::kFair;
  throw ConfigError("unknown fairness mode '" + std::string(name) + "'");
}

namespace {

void require_list(const std::vector<std::string>& list, std::string_view component,
                  std::size_t expected) {
  if (list.empty()) throw ConfigError("grid component '" + std::string(component) + "' is empty");
  std::unordered_set<std::string> seen;
  for (const auto& e : list) {
    if (trim(e).empty()) {
      throw ConfigError("grid component '" + std::string(component) + "' has a blank entry");
    }
    if (!seen.insert(e).second) {
      throw ConfigError("grid component '" + std::string(component) + "' repeats '" + e + "'");
    }
  }
  if (list.size() != expected) {
    throw ConfigError("grid component '" + std::string(component) + "' must have " +
                      std::to_string(expected) + " entries, found " +
                      std::to_string(list.size()));
  }
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  if (!doc.contains(key)) return {};
  return doc.at(key).get<std::vector<std::string>>();
}

}  // namespace

void ArgumentGrid::validate() const {
  require_list(bias_types, "bias_types", kNumBiasTypes);
  require_list(statement_types, "statement_types", kNumStatementTypes);
  require_list(sentiments, "sentiments", kNumSentiments);
  require_list(fair_sentiments, "fair_sentiments", kNumSentiments);
  std::map<std::string, std::string> owner;
  for (const auto& b : bias_types) {
    auto it = targets_by_bias_type.find(b);
    if (it == targets_by_bias_type.end() || it->second.empty()) {
      throw ConfigError("grid component 'targets_by_bias_type' is empty for '" + b + "'");
    }
    for (const auto& t : it->second) {
      if (trim(t).empty()) throw ConfigError("blank target group under '" + b + "'");
      auto [pos, inserted] = owner.emplace(t, b);
      if (!inserted) {
        throw ConfigError("target group '" + t + "' maps to both '" + pos->second + "' and '" +
                          b + "'");
      }
    }
  }
  for (const auto& [b, targets] : targets_by_bias_type) {
    if (std::find(bias_types.begin(), bias_types.end(), b) == bias_types.end()) {
      throw ConfigError("targets listed for unknown bias type '" + b + "'");
    }
  }
}

std::optional<std::string> ArgumentGrid::bias_type_of(const std::string& target) const {
  for (const auto& [b, targets] : targets_by_bias_type) {
    if (std::find(targets.begin(), targets.end(), target) != targets.end()) return b;
  }
  return std::nullopt;
}

const std::vector<std::string>& ArgumentGrid::sentiments_for(FairnessMode mode) const {
  return mode == FairnessMode::kFair ? fair_sentiments : sentiments;
}

std::vector<std::pair<std::string, std::string>> ArgumentGrid::target_pairs() const {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& b : bias_types) {
    auto it = targets_by_bias_type.find(b);
    if (it == targets_by_bias_type.end()) continue;
    for (const auto& t : it->second) pairs.emplace_back(b, t);
  }
  return pairs;
}

ArgumentGrid grid_from_json(const json& doc) {
  ArgumentGrid grid;
  grid.version = doc.value("version", "");
  grid.statement_types = string_list(doc, "statement_types");
  grid.sentiments = string_list(doc, "sentiments");
  grid.fair_sentiments = string_list(doc, "fair_sentiments");
  if (!doc.contains("bias_types") || !doc.at("bias_types").is_array()) {
    throw ConfigError("grid component 'bias_types' is empty");
  }
  // Each entry: {"name": ..., "targets": [...], "extensions": [...]}
  for (const auto& entry : doc.at("bias_types")) {
    const auto name = entry.at("name").get<std::string>();
    grid.bias_types.push_back(name);
    auto& targets = grid.targets_by_bias_type[name];
    targets = string_list(entry, "targets");
    for (const auto& ext : string_list(entry, "extensions")) {
      targets.push_back(ext);
      grid.extension_targets.insert(ext);
    }
  }
  return grid;
}

json grid_to_json(const ArgumentGrid& grid) {
  json bias = json::array();
  for (const auto& b : grid.bias_types) {
    json targets = json::array();
    json extensions = json::array();
    auto it = grid.targets_by_bias_type.find(b);
    if (it != grid.targets_by_bias_type.end()) {
      for (const auto& t : it->second) {
        (grid.extension_targets.count(t) ? extensions : targets).push_back(t);
      }
    }
    bias.push_back({{"name", b}, {"targets", targets}, {"extensions", extensions}});
  }
  return json{{"version", grid.version},
              {"bias_types", bias},
              {"statement_types", grid.statement_types},
              {"sentiments", grid.sentiments},
              {"fair_sentiments", grid.fair_sentiments}};
}

std::string load_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ArgumentGrid load_grid(const std::filesystem::path& path) {
  json doc = json::parse(load_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw ConfigError("grid file is not valid JSON: " + path.string());
  ArgumentGrid grid = grid_from_json(doc);
  grid.validate();
  return grid;
}

json spec_to_json(const PromptSpec& spec) {
  return json{{"bias_type", spec.bias_type},
              {"target_group", spec.target_group},
              {"statement_type", spec.statement_type},
              {"sentiment", spec.sentiment},
              {"fairness_mode", std::string(fairness_mode_name(spec.fairness_mode))},
              {"want_question", spec.want_question}};
}

PromptSpec spec_from_json(const json& doc) {
  PromptSpec spec;
  spec.bias_type = doc.at("bias_type").get<std::string>();
  spec.target_group = doc.at("target_group").get<std::string>();
  spec.statement_type = doc.at("statement_type").get<std::string>();
  spec.sentiment = doc.at("sentiment").get<std::string>();
  spec.fairness_mode = parse_fairness_mode(doc.at("fairness_mode").get<std::string>());
  spec.want_question = doc.value("want_question", false);
  return spec;
}

void validate_spec(const PromptSpec& spec, const ArgumentGrid& grid) {
  const auto owner = grid.bias_type_of(spec.target_group);
  if (!owner || *owner != spec.bias_type) {
    throw ValidationError("target group '" + spec.target_group + "' is not listed under '" +
                          spec.bias_type + "'");
  }
  const auto& st = grid.statement_types;
  if (std::find(st.begin(), st.end(), spec.statement_type) == st.end()) {
    throw ValidationError("unknown statement type '" + spec.statement_type + "'");
  }
  const auto& sentiments = grid.sentiments_for(spec.fairness_mode);
  if (std::find(sentiments.begin(), sentiments.end(), spec.sentiment) == sentiments.end()) {
    throw ValidationError("sentiment '" + spec.sentiment + "' is not valid in " +
                          std::string(fairness_mode_name(spec.fairness_mode)) + " mode");
  }
}

std::uint64_t product_size(const ArgumentGrid& grid, FairnessMode mode) {
  return static_cast<std::uint64_t>(grid.target_pairs().size()) * grid.statement_types.size() *
         grid.sentiments_for(mode).size() * 2;
}

PromptSpec spec_at(const ArgumentGrid& grid, FairnessMode mode, std::uint64_t index) {
  const auto pairs = grid.target_pairs();
  const auto& sentiments = grid.sentiments_for(mode);
  PromptSpec spec;
  spec.fairness_mode = mode;
  spec.want_question = (index % 2) == 1;
  index /= 2;
  spec.sentiment = sentiments[index % sentiments.size()];
  index /= sentiments.size();
  spec.statement_type = grid.statement_types[index % grid.statement_types.size()];
  index /= grid.statement_types.size();
  const auto& pair = pairs.at(index);
  spec.bias_type = pair.first;
  spec.target_group = pair.second;
  return spec;
}

std::vector<PromptSpec> enumerate_prompt_specs(const ArgumentGrid& grid, FairnessMode mode,
                                               std::int64_t count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("count must be >= 1, got " + std::to_string(count));
  grid.validate();
  const std::uint64_t total = product_size(grid, mode);
  Rng rng(seed);
  std::vector<PromptSpec> specs;
  specs.reserve(static_cast<std::size_t>(count));
  std::vector<std::uint64_t> order(total);
  while (specs.size() < static_cast<std::size_t>(count)) {
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: only as many positions as still needed.
    const std::uint64_t need =
        std::min<std::uint64_t>(total, static_cast<std::uint64_t>(count) - specs.size());
    for (std::uint64_t i = 0; i < need; ++i) {
      const std::uint64_t j = i + rng.below(total - i);
      std::swap(order[i], order[j]);
      specs.push_back(spec_at(grid, mode, order[i]));
    }
  }
  return specs;
}

namespace {
const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
  return re;
}
constexpr std::array<std::string_view, 5> kRequiredKeys = {
    "bias_type", "target_group", "statement_type", "sentiment", "fairness_mode"};
}  // namespace

std::string render_prompt(const PromptSpec& spec, const std::string& prompt_template) {
  std::vector<std::string> missing;
  for (auto key : kRequiredKeys) {
    if (prompt_template.find("{" + std::string(key) + "}") == std::string::npos) {
      missing.emplace_back(key);
    }
  }
  if (!missing.empty()) {
    throw TemplateError("prompt template is missing placeholders: " + join(missing, ", "),
                        missing);
  }
  const std::map<std::string, std::string> values = {
      {"bias_type", spec.bias_type},
      {"target_group", spec.target_group},
      {"statement_type", spec.statement_type},
      {"sentiment", spec.sentiment},
      {"fairness_mode", std::string(fairness_mode_name(spec.fairness_mode))},
      {"sentence_kind", spec.want_question ? "question" : "statement"},
  };
  std::string out;
  std::vector<std::string> unresolved;
  auto begin = std::sregex_iterator(prompt_template.begin(), prompt_template.end(),
                                     placeholder_re());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(prompt_template, last, static_cast<std::size_t>(m.position()) - last);
    auto v = values.find(m[1].str());
    if (v == values.end()) {
      unresolved.push_back(m[1].str());
      out += m.str();
    } else {
      out += v->second;
    }
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(prompt_template, last, std::string::npos);
  if (!unresolved.empty()) {
    throw TemplateError("prompt template has unresolved placeholders: " + join(unresolved, ", "),
                        unresolved);
  }
  if (to_lower(out).find("json") == std::string::npos) {
    out += "\nReply with JSON only, in the form {\"sentence\": \"...\"}.";
  }
  return out;
}

std::string template_hash(const std::string& prompt_template) {
  return hex64(fnv1a64(prompt_template));
}

json sentence_to_json(const GeneratedSentence& s) {
  return json{{"id", s.id},
              {"text", s.text},
              {"spec", spec_to_json(s.spec)},
              {"is_question", s.is_question},
              {"provenance",
               {{"model_id", s.provenance.model_id},
                {"temperature", s.provenance.temperature},
                {"timestamp", s.provenance.timestamp},
                {"template_hash", s.provenance.template_hash},
                {"backend", s.provenance.backend},
                {"attempts", s.provenance.attempts},
                {"backoffs", s.provenance.backoffs}}}};
}

GeneratedSentence sentence_from_json(const json& doc) {
  GeneratedSentence s;
  s.id = doc.at("id").get<std::string>();
  s.text = doc.at("text").get<std::string>();
  s.spec = spec_from_json(doc.at("spec"));
  s.is_question = doc.at("is_question").get<bool>();
  const json& p = doc.at("provenance");
  s.provenance.model_id = p.value("model_id", "");
  s.provenance.temperature = p.value("temperature", 0.0);
  s.provenance.timestamp = p.value("timestamp", "");
  s.provenance.template_hash = p.value("template_hash", "");
  s.provenance.backend = p.value("backend", "");
  s.provenance.attempts = p.value("attempts", 0);
  s.provenance.backoffs = p.value("backoffs", 0);
  return s;
}

void validate_sentence(const GeneratedSentence& s, const ArgumentGrid* grid) {
  if (s.id.empty()) throw ValidationError("sentence id is empty");
  if (split_words(s.text).empty()) throw ValidationError("sentence " + s.id + " has no words");
  if (s.is_question != ends_with_question_mark(s.text)) {
    throw ValidationError("sentence " + s.id + ": is_question disagrees with its text");
  }
  if (grid) validate_spec(s.spec, *grid);
}

std::optional<std::string> parse_generated_text(const std::string& reply) {
  std::string body = trim(reply);
  if (body.rfind("```", 0) == 0) {
    const auto nl = body.find('\n');
    const auto close = body.rfind("```");
    if (nl != std::string::npos && close != std::string::npos && close > nl) {
      body = trim(body.substr(nl + 1, close - nl - 1));
    }
  }
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    // Tolerate prose around a single JSON object.
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      return std::nullopt;
    }
    doc = json::parse(body.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
  }
  if (!doc.is_object()) return std::nullopt;
  for (const char* key : {"sentence", "text", "statement", "question"}) {
    auto it = doc.find(key);
    if (it != doc.end() && it->is_string()) {
      std::string text = trim(it->get<std::string>());
      if (!split_words(text).empty()) return text;
    }
  }
  return std::nullopt;
}

namespace {

std::string make_id(const std::string& prefix, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return prefix + "-" + buf;
}

}  // namespace

GenerationResult generate_sentences(const std::vector<PromptSpec>& specs,
                                    const std::string& prompt_template, ChatClient& client,
                                    const GenerationOptions& options) {
  if (specs.empty()) throw GenerationError("no prompt specs to generate from");
  const std::string hash = template_hash(prompt_template);
  // Rendering errors are configuration errors; surface them before any request.
  std::vector<std::string> prompts;
  prompts.reserve(specs.size());
  for (const auto& spec : specs) prompts.push_back(render_prompt(spec, prompt_template));

  std::vector<std::optional<GeneratedSentence>> slots(specs.size());
  std::vector<std::string> failures(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto work = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (fatal) return;
      }
      int attempts = 0;
      int backoffs = 0;
      try {
        for (int round = 0; round <= options.max_parse_retries; ++round) {
          ChatResult r = client.complete({{"user", prompts[i]}}, options.params);
          attempts += r.attempts;
          backoffs += r.backoffs;
          auto text = parse_generated_text(r.text);
          if (!text) {
            failures[i] = "unparseable reply: " + r.text.substr(0, 80);
            continue;
          }
          GeneratedSentence s;
          s.id = make_id(options.id_prefix, i);
          s.text = *text;
          s.spec = specs[i];
          s.is_question = ends_with_question_mark(s.text);
          s.provenance = Provenance{options.params.model_id, options.params.temperature,
                                    options.clock(), hash, client.backend_name(), attempts,
                                    backoffs};
          slots[i] = std::move(s);
          break;
        }
      } catch (const AuthError&) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const TransportError& e) {
        failures[i] = e.what();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.max_in_flight,
                                                static_cast<int>(specs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  GenerationResult result;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (slots[i]) {
      result.sentences.push_back(std::move(*slots[i]));
    } else {
      spdlog::warn("skipping spec {}: {}", i, failures[i]);
      result.skipped.push_back({i, failures[i]});
    }
  }
  if (result.sentences.empty()) {
    throw GenerationError("no sentence could be generated (" + std::to_string(specs.size()) +
                          " specs tried)");
  }
  return result;
}

}  // namespace gusnet
