#include "gusnet/metrics.hpp"

#include "gusnet/error.hpp"

namespace gusnet {

using nlohmann::json;

std::string_view scored_class_name(ScoredClass c) {
  switch (c) {
    case ScoredClass::kGeneralizations: return "Generalizations";
    case ScoredClass::kUnfairness: return "Unfairness";
    case ScoredClass::kStereotypes: return "Stereotypes";
    case ScoredClass::kNeutral: return "Neutral";
  }
  return "?";
}

bool entity_presence(LabelSet labels, ScoredClass c) {
  if (c == ScoredClass::kNeutral) return labels.contains(Label::kO);
  return labels.has(static_cast<EntityClass>(c));
}

void finalize(EntityMetrics& m) {
  const auto tp = static_cast<double>(m.tp);
  m.precision = (m.tp + m.fp) == 0 ? 0.0 : tp / static_cast<double>(m.tp + m.fp);
  m.recall = (m.tp + m.fn) == 0 ? 0.0 : tp / static_cast<double>(m.tp + m.fn);
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
}

namespace {

struct HammingCounts {
  std::size_t mismatched = 0;
  std::size_t tokens = 0;
};

void accumulate_hamming(const std::vector<LabelRow>& pred, const std::vector<LabelRow>& gold,
                        HammingMode mode, HammingCounts& c) {
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (is_ignore_row(gold[t])) continue;
    ++c.tokens;
    std::size_t diff = 0;
    for (std::size_t k = 0; k < kNumLabels; ++k) diff += (pred[t][k] != gold[t][k]) ? 1 : 0;
    c.mismatched += mode == HammingMode::kBit ? diff : (diff ? 1 : 0);
  }
}

double finish_hamming(const HammingCounts& c, HammingMode mode) {
  if (c.tokens == 0) throw MetricError("no evaluated tokens");
  const double denom =
      static_cast<double>(c.tokens) * (mode == HammingMode::kBit ? kNumLabels : 1);
  return static_cast<double>(c.mismatched) / denom;
}

}  // namespace

double hamming_loss(const std::vector<LabelRow>& pred, const std::vector<LabelRow>& gold,
                    HammingMode mode) {
  if (pred.size() != gold.size()) {
    throw MetricError("prediction has " + std::to_string(pred.size()) + " rows, gold has " +
                      std::to_string(gold.size()));
  }
  HammingCounts c;
  accumulate_hamming(pred, gold, mode, c);
  return finish_hamming(c, mode);
}

EvalReport evaluate(const std::vector<SentencePrediction>& sentences, HammingMode mode) {
  EvalReport report;
  for (std::size_t c = 0; c < kNumScoredClasses; ++c) {
    report.per_entity[c].entity_class = static_cast<ScoredClass>(c);
  }
  HammingCounts hc;
  for (const auto& s : sentences) {
    if (s.pred.size() != s.gold.size()) {
      throw MetricError("sentence " + s.id + ": " + std::to_string(s.pred.size()) +
                        " predicted rows vs " + std::to_string(s.gold.size()) + " gold rows");
    }
    accumulate_hamming(s.pred, s.gold, mode, hc);
    for (std::size_t t = 0; t < s.gold.size(); ++t) {
      if (is_ignore_row(s.gold[t])) continue;
      const LabelSet g = decode_label_row(s.gold[t]);
      const LabelSet p = decode_label_row(s.pred[t]);
      for (std::size_t c = 0; c < kNumScoredClasses; ++c) {
        const bool in_gold = entity_presence(g, static_cast<ScoredClass>(c));
        const bool in_pred = entity_presence(p, static_cast<ScoredClass>(c));
        auto& m = report.per_entity[c];
        if (in_gold && in_pred) ++m.tp;
        if (!in_gold && in_pred) ++m.fp;
        if (in_gold && !in_pred) ++m.fn;
      }
    }
  }
  report.hamming_loss = finish_hamming(hc, mode);
  report.token_count = hc.tokens;
  for (auto& m : report.per_entity) {
    finalize(m);
    report.macro_precision += m.precision;
    report.macro_recall += m.recall;
    report.macro_f1 += m.f1;
  }
  report.macro_precision /= kNumScoredClasses;
  report.macro_recall /= kNumScoredClasses;
  report.macro_f1 /= kNumScoredClasses;
  return report;
}

json report_to_json(const EvalReport& report) {
  json per = json::object();
  for (const auto& m : report.per_entity) {
    per[std::string(scored_class_name(m.entity_class))] = {
        {"tp", m.tp},
        {"fp", m.fp},
        {"fn", m.fn},
        {"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1}};
  }
  return json{{"hamming_loss", report.hamming_loss},
              {"per_entity", per},
              {"macro_precision", report.macro_precision},
              {"macro_recall", report.macro_recall},
              {"macro_f1", report.macro_f1},
              {"token_count", report.token_count}};
}

}  // namespace gusnet
