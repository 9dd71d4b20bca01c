#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gusnet/chat_client.hpp"
#include "json.hpp"

namespace gusnet {

enum class FairnessMode { kBiased, kFair };

std::string_view fairness_mode_name(FairnessMode mode);
FairnessMode parse_fairness_mode(std::string_view name);

// Argument lists combined into generation prompts: bias type, target group,
// statement type and sentiment.
struct ArgumentGrid {
  static constexpr std::size_t kNumBiasTypes = 11;
  static constexpr std::size_t kNumStatementTypes = 5;
  static constexpr std::size_t kNumSentiments = 2;

  std::string version;
  std::vector<std::string> bias_types;
  std::map<std::string, std::vector<std::string>> targets_by_bias_type;
  // Targets that were added beyond the documented lists.
  std::set<std::string> extension_targets;
  std::vector<std::string> statement_types;
  std::vector<std::string> sentiments;
  std::vector<std::string> fair_sentiments;

  // Throws ConfigError naming the offending component.
  void validate() const;
  std::optional<std::string> bias_type_of(const std::string& target) const;
  const std::vector<std::string>& sentiments_for(FairnessMode mode) const;
  // (bias_type, target) pairs in bias_types order.
  std::vector<std::pair<std::string, std::string>> target_pairs() const;
};

ArgumentGrid grid_from_json(const nlohmann::json& doc);
nlohmann::json grid_to_json(const ArgumentGrid& grid);
ArgumentGrid load_grid(const std::filesystem::path& path);

struct PromptSpec {
  std::string bias_type;
  std::string target_group;
  std::string statement_type;
  std::string sentiment;
  FairnessMode fairness_mode = FairnessMode::kBiased;
  bool want_question = false;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

nlohmann::json spec_to_json(const PromptSpec& spec);
PromptSpec spec_from_json(const nlohmann::json& doc);
// Throws ValidationError if the spec does not belong to the grid.
void validate_spec(const PromptSpec& spec, const ArgumentGrid& grid);

// Size of the cartesian product (target pairs x statement types x sentiments
// x question flag) for the given mode.
std::uint64_t product_size(const ArgumentGrid& grid, FairnessMode mode);
// Decodes a product index (mixed radix, question flag fastest).
PromptSpec spec_at(const ArgumentGrid& grid, FairnessMode mode, std::uint64_t index);

// Uniform seeded sample of `count` specs. Draws without replacement until the
// product is exhausted, then starts a fresh permutation.
std::vector<PromptSpec> enumerate_prompt_specs(const ArgumentGrid& grid, FairnessMode mode,
                                               std::int64_t count, std::uint64_t seed);

// Substitutes {bias_type} {target_group} {statement_type} {sentiment}
// {fairness_mode} (required) and {sentence_kind} (optional).
std::string render_prompt(const PromptSpec& spec, const std::string& prompt_template);
std::string template_hash(const std::string& prompt_template);
std::string load_text_file(const std::filesystem::path& path);

struct Provenance {
  std::string model_id;
  double temperature = 0.0;
  std::string timestamp;
  std::string template_hash;
  std::string backend;
  int attempts = 0;
  int backoffs = 0;
};

struct GeneratedSentence {
  std::string id;
  std::string text;
  PromptSpec spec;
  bool is_question = false;
  Provenance provenance;
};

nlohmann::json sentence_to_json(const GeneratedSentence& s);
GeneratedSentence sentence_from_json(const nlohmann::json& doc);
// Checks the sentence invariants, and the spec against `grid` when given.
void validate_sentence(const GeneratedSentence& s, const ArgumentGrid* grid = nullptr);

// Pulls the sentence out of a model reply such as {"sentence": "..."}.
// Accepts fenced code blocks; returns nullopt when no usable text is found.
std::optional<std::string> parse_generated_text(const std::string& reply);

struct GenerationOptions {
  ChatParams params;
  // Extra requests for an item whose reply did not parse.
  int max_parse_retries = 2;
  int max_in_flight = 1;
  std::string id_prefix = "gus";
  std::function<std::string()> clock = [] { return std::string("1970-01-01T00:00:00Z"); };
};

struct SkippedItem {
  std::size_t index = 0;
  std::string reason;
};

struct GenerationResult {
  std::vector<GeneratedSentence> sentences;
  std::vector<SkippedItem> skipped;
};

// One request per spec. Throws GenerationError when nothing succeeded and
// rethrows AuthError immediately.
GenerationResult generate_sentences(const std::vector<PromptSpec>& specs,
                                    const std::string& prompt_template, ChatClient& client,
                                    const GenerationOptions& options);

}  // namespace gusnet
