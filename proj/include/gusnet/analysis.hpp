#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gusnet/babe.hpp"
#include "gusnet/classifier.hpp"
#include "gusnet/dataset.hpp"
#include "gusnet/encoder.hpp"
#include "gusnet/metrics.hpp"
#include "gusnet/trainer.hpp"

namespace gusnet {

// ---- comparison against an external word-level bias corpus ----

// How a sentence's entity count is formed before binning.
enum class EntityCountMode {
  kClassMin,   // min over {GEN, UNFAIR, STEREO} of words carrying that class
  kAnyEntity,  // words carrying any entity label
};
std::string_view entity_count_mode_name(EntityCountMode mode);
EntityCountMode parse_entity_count_mode(std::string_view name);

struct BabeRecord {
  std::string text;
  std::size_t word_count = 0;  // non-punctuation words
  std::size_t biased_word_count = 0;
  double normalized_biased_words = 0.0;
  std::size_t predicted_entity_tokens = 0;
  double normalized_entities = 0.0;
  std::size_t bin_id = 0;
};

// Words of `row.text` (punctuation excluded) whose lower-cased form is in
// the row's biased-word list are the biased words.
BabeRecord make_babe_record(const BabeRow& row, const TokenPredictions& prediction,
                            EntityCountMode mode);

struct BinPoint {
  std::size_t bin = 0;
  double center = 0.0;
  double minimum = 0.0;  // smallest normalized_entities in the bin
  std::size_t count = 0;
};

// Equal-width bins over [0, 1] on normalized_biased_words (1.0 falls in the
// last bin); sets each record's bin_id. Empty bins are dropped.
std::vector<BinPoint> bin_minima(std::vector<BabeRecord>& records, std::size_t num_bins);

struct TrendLine {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope * x + intercept over the bin points.
// Throws FitError for fewer than two points or identical x values.
TrendLine fit_trend(std::span<const BinPoint> points);

struct BabeComparison {
  std::vector<BabeRecord> records;
  std::vector<BinPoint> points;
  std::vector<std::size_t> dropped_bins;
  TrendLine trend;
};

using Predictor = std::function<std::vector<TokenPredictions>(const std::vector<std::string>&)>;

// Keeps only rows labelled biased, predicts them, bins and fits.
BabeComparison babe_compare(const std::vector<BabeRow>& rows, const Predictor& predictor,
                            std::size_t num_bins = 10,
                            EntityCountMode mode = EntityCountMode::kClassMin);

std::string babe_points_csv(const BabeComparison& cmp);
std::string babe_records_csv(const BabeComparison& cmp);

// ---- focal-loss hyper-parameter sweeps ----

enum class SweepParameter { kAlpha, kGamma };
std::string_view sweep_parameter_name(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view name);

struct SweepRow {
  double value = 0.0;
  bool failed = false;
  std::string error;
  std::array<double, kNumScoredClasses> f1{};  // GEN, UNFAIR, STEREO, Neutral
  double macro_f1 = 0.0;
  double hamming = 0.0;
};

struct SweepResult {
  SweepParameter parameter = SweepParameter::kAlpha;
  std::vector<SweepRow> rows;
};

struct SweepData {
  std::span<const EncodedExample> train;
  std::span<const EncodedExample> validation;
  std::span<const EncodedExample> test;
};

// One training run per value, same seed and data each time. alpha sets all
// seven label weights. A diverging run is recorded as failed.
SweepResult sweep(SweepParameter parameter, const std::vector<double>& values,
                  const EncoderConfig& encoder, const TrainingConfig& training,
                  const FocalLossConfig& base_loss, const SweepData& data);

std::string sweep_table_markdown(const SweepResult& result);
std::string sweep_table_csv(const SweepResult& result);

// ---- highlighted predictions ----

struct CaseStudy {
  std::string terminal;  // ANSI colour codes
  std::string html;      // standalone XHTML document
};

CaseStudy render_case_study(const TokenPredictions& prediction);
// Throws EncodingError on empty text.
CaseStudy render_case_study(const std::string& text, const TokenClassifier& model,
                            const WordPieceTokenizer& tokenizer, double threshold);

std::string escape_xml(std::string_view text);

// ---- corpus distribution charts ----

struct PieSlice {
  std::string label;
  double value = 0.0;
  double percent = 0.0;  // as reported by the stats
};

struct PieChart {
  std::string title;
  std::vector<PieSlice> slices;
  double total() const;
};

struct DistributionFigures {
  PieChart bias_types;
  PieChart token_labels;
};

// Zero-valued categories are left out. Throws MetricError on empty stats.
DistributionFigures render_distributions(const CorpusStats& stats);

std::string pie_csv(const PieChart& chart);

}  // namespace gusnet
