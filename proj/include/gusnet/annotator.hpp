#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gusnet/chat_client.hpp"
#include "gusnet/corpus_forge.hpp"
#include "gusnet/labels.hpp"
#include "json.hpp"

namespace gusnet {

struct EntityTagSequence {
  EntityClass entity = EntityClass::kGen;
  std::vector<std::string> words;
  std::vector<Tag> tags;

  friend bool operator==(const EntityTagSequence&, const EntityTagSequence&) = default;
};

enum class BioViolationKind { kOrphanI };

struct BioViolation {
  std::size_t index = 0;
  BioViolationKind kind = BioViolationKind::kOrphanI;

  friend bool operator==(const BioViolation&, const BioViolation&) = default;
};

// Empty iff well-formed: no I at position 0 and no I directly after O.
std::vector<BioViolation> validate_bio(std::span<const Tag> tags);

// Table wording used by the annotator agents.
std::string_view default_definition(EntityClass cls);

struct FewShotExample {
  std::string sentence;
  std::vector<Tag> tags;  // one per split_words(sentence)
};

class AnnotatorAgent {
 public:
  static constexpr std::size_t kNumExamples = 4;

  AnnotatorAgent(EntityClass entity, std::string definition, std::vector<FewShotExample> examples,
                 ChatParams params, int max_retries);

  EntityClass entity() const { return entity_; }
  const std::string& definition() const { return definition_; }
  const std::vector<FewShotExample>& examples() const { return examples_; }
  const ChatParams& params() const { return params_; }
  int max_retries() const { return max_retries_; }
  void set_max_retries(int n) { max_retries_ = n; }

  const std::string& system_prompt() const { return system_prompt_; }
  std::vector<ChatMessage> initial_messages(const std::vector<std::string>& words) const;

 private:
  EntityClass entity_;
  std::string definition_;
  std::vector<FewShotExample> examples_;
  ChatParams params_;
  int max_retries_;
  std::string system_prompt_;
};

// Throws ValidationError (index = example index) unless exactly four aligned,
// well-formed examples are supplied.
AnnotatorAgent build_agent(EntityClass entity, std::string definition,
                           std::vector<FewShotExample> examples, ChatParams params = {},
                           int max_retries = 3);

// Agent config file: {"entity": "GEN", "definition": "...",
//                     "examples": [{"sentence": "...", "tags": ["O", "B-GEN", ...]}]}
AnnotatorAgent load_agent(const std::filesystem::path& path, ChatParams params = {},
                          int max_retries = 3);
// Loads gen.json, unfair.json and stereo.json from a directory.
std::array<AnnotatorAgent, 3> load_agents(const std::filesystem::path& dir, ChatParams params = {},
                                          int max_retries = 3);

// Parses "O", "B", "I" or the entity-qualified form ("B-GEN").
std::optional<Tag> parse_tag(std::string_view text, EntityClass entity);

struct ReplyCheck {
  std::vector<Tag> tags;
  // Corrective feedback, one line per defect. Empty when the reply is usable.
  std::vector<std::string> suggestions;
  bool ok() const { return suggestions.empty(); }
};

// Parses a model reply ({"tags": [...]} or a bare array) and lists every
// defect: unparseable reply, unknown tag, length mismatch, orphan I.
ReplyCheck check_reply(const std::string& reply, EntityClass entity,
                       const std::vector<std::string>& words);

struct AnnotationOutcome {
  EntityTagSequence sequence;
  int retry_count = 0;
  std::vector<std::string> replies;
};

// Re-prompts with the defect list until the reply validates; throws
// AnnotationError carrying every reply after max_retries re-prompts.
AnnotationOutcome annotate_entity(const AnnotatorAgent& agent, ChatClient& client,
                                  std::string_view sentence_text);

struct AnnotatedSentence {
  std::string id;
  std::string text;
  std::string bias_type;
  bool is_question = false;
  std::vector<std::string> words;
  std::array<std::vector<Tag>, 3> per_entity;  // indexed by EntityClass
  std::vector<LabelSet> merged;
  std::map<std::string, int> retry_counts;

  EntityTagSequence stream(EntityClass cls) const;
};

// Union of the three per-entity streams into word label-sets; {O} where no
// entity applies. Stream order does not matter. Throws MergeError on word
// mismatch (index = first divergent word) or a missing/duplicated class.
AnnotatedSentence merge_annotations(std::span<const EntityTagSequence> streams);
std::array<EntityTagSequence, 3> decompose(const AnnotatedSentence& sentence);
// Throws ValidationError when an invariant of AnnotatedSentence is broken.
void validate_annotated(const AnnotatedSentence& sentence);

nlohmann::json annotated_to_json(const AnnotatedSentence& s);
AnnotatedSentence annotated_from_json(const nlohmann::json& doc);

struct AnnotateOptions {
  int max_in_flight = 1;
};

struct AnnotationBatchResult {
  std::vector<AnnotatedSentence> sentences;
  std::vector<SkippedItem> failed;
};

// Runs all three agents over every sentence; sentences whose annotation fails
// are reported in `failed` and left out.
AnnotationBatchResult annotate_corpus(const std::vector<GeneratedSentence>& corpus,
                                      const std::array<AnnotatorAgent, 3>& agents,
                                      ChatClient& client, const AnnotateOptions& options = {});

}  // namespace gusnet
