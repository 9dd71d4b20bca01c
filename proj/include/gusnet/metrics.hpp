#pragma once

#include <array>
#include <string>
#include <vector>

#include "gusnet/labels.hpp"
#include "json.hpp"

namespace gusnet {

// Scored classes: the three entity classes (B and I merged) plus Neutral (O).
enum class ScoredClass { kGeneralizations = 0, kUnfairness = 1, kStereotypes = 2, kNeutral = 3 };
inline constexpr std::size_t kNumScoredClasses = 4;
std::string_view scored_class_name(ScoredClass c);

bool entity_presence(LabelSet labels, ScoredClass c);
inline bool entity_presence(LabelSet labels, EntityClass c) {
  return entity_presence(labels, static_cast<ScoredClass>(c));
}

struct EntityMetrics {
  ScoredClass entity_class = ScoredClass::kNeutral;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Fills precision/recall/f1 from the counts; 0 wherever a denominator is 0.
void finalize(EntityMetrics& m);

enum class HammingMode {
  kBit,     // mismatched bits / (7 x evaluated tokens)
  kVector,  // tokens whose whole 7-bit vector differs / evaluated tokens
};

// `pred` rows are 0/1; rows where `gold` is IGNORE are skipped. Throws
// MetricError on shape mismatch or when nothing is evaluated.
double hamming_loss(const std::vector<LabelRow>& pred, const std::vector<LabelRow>& gold,
                    HammingMode mode = HammingMode::kBit);

struct SentencePrediction {
  std::string id;
  std::vector<LabelRow> pred;
  std::vector<LabelRow> gold;
};

struct EvalReport {
  double hamming_loss = 0.0;
  std::array<EntityMetrics, kNumScoredClasses> per_entity{};
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  std::size_t token_count = 0;
};

// Token-level presence scoring over all non-IGNORE rows. Throws MetricError
// naming the sentence on a length mismatch.
EvalReport evaluate(const std::vector<SentencePrediction>& sentences,
                    HammingMode mode = HammingMode::kBit);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace gusnet
