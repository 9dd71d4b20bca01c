#include "gusnet/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

bool is_punctuation_word(const std::string& w) {
  return std::all_of(w.begin(), w.end(),
                     [](unsigned char c) { return std::ispunct(c) != 0; });
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string_view entity_count_mode_name(EntityCountMode mode) {
  return mode == EntityCountMode::kClassMin ? "class-min" : "any-entity";
}

EntityCountMode parse_entity_count_mode(std::string_view name) {
  if (name == "class-min") return EntityCountMode::kClassMin;
  if (name == "any-entity") return EntityCountMode::kAnyEntity;
  throw ConfigError("unknown entity count mode '" + std::string(name) +
                    "' (expected class-min or any-entity)");
}

BabeRecord make_babe_record(const BabeRow& row, const TokenPredictions& prediction,
                            EntityCountMode mode) {
  std::set<std::string> biased;
  for (const auto& w : row.biased_words) biased.insert(to_lower(trim(w)));
  BabeRecord rec;
  rec.text = row.text;
  std::array<std::size_t, 3> per_class{};
  std::size_t any = 0;
  for (const auto& wp : prediction.words) {
    if (is_punctuation_word(wp.word)) continue;
    ++rec.word_count;
    if (biased.count(to_lower(wp.word))) ++rec.biased_word_count;
    if (wp.labels.has_entity()) ++any;
    for (EntityClass c : kEntityClasses) {
      if (wp.labels.has(c)) ++per_class[static_cast<std::size_t>(c)];
    }
  }
  rec.predicted_entity_tokens = mode == EntityCountMode::kAnyEntity
                                    ? any
                                    : *std::min_element(per_class.begin(), per_class.end());
  if (rec.word_count > 0) {
    const double n = static_cast<double>(rec.word_count);
    rec.normalized_biased_words = static_cast<double>(rec.biased_word_count) / n;
    rec.normalized_entities = static_cast<double>(rec.predicted_entity_tokens) / n;
  }
  return rec;
}

std::vector<BinPoint> bin_minima(std::vector<BabeRecord>& records, std::size_t num_bins) {
  if (num_bins == 0) throw ConfigError("number of bins must be positive");
  std::vector<BinPoint> bins(num_bins);
  std::vector<bool> seen(num_bins, false);
  const double width = 1.0 / static_cast<double>(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    bins[b].bin = b;
    bins[b].center = (static_cast<double>(b) + 0.5) * width;
  }
  for (auto& r : records) {
    const double x = std::clamp(r.normalized_biased_words, 0.0, 1.0);
    const auto b = std::min(num_bins - 1,
                            static_cast<std::size_t>(std::floor(x * static_cast<double>(num_bins))));
    r.bin_id = b;
    if (!seen[b] || r.normalized_entities < bins[b].minimum) bins[b].minimum = r.normalized_entities;
    seen[b] = true;
    ++bins[b].count;
  }
  std::vector<BinPoint> out;
  for (std::size_t b = 0; b < num_bins; ++b) {
    if (seen[b]) out.push_back(bins[b]);
  }
  return out;
}

TrendLine fit_trend(std::span<const BinPoint> points) {
  if (points.size() < 2) {
    throw FitError("trend line needs at least two non-empty bins, got " +
                   std::to_string(points.size()));
  }
  double mx = 0, my = 0;
  for (const auto& p : points) {
    mx += p.center;
    my += p.minimum;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    sxx += (p.center - mx) * (p.center - mx);
    sxy += (p.center - mx) * (p.minimum - my);
  }
  if (sxx == 0.0) throw FitError("trend line needs distinct bin centres");
  TrendLine t;
  t.slope = sxy / sxx;
  t.intercept = my - t.slope * mx;
  return t;
}

BabeComparison babe_compare(const std::vector<BabeRow>& rows, const Predictor& predictor,
                            std::size_t num_bins, EntityCountMode mode) {
  std::vector<const BabeRow*> biased;
  std::vector<std::string> texts;
  for (const auto& r : rows) {
    if (r.biased && !trim(r.text).empty()) {
      biased.push_back(&r);
      texts.push_back(r.text);
    }
  }
  BabeComparison cmp;
  if (!texts.empty()) {
    const auto preds = predictor(texts);
    if (preds.size() != texts.size()) throw ShapeError("predictor returned the wrong count");
    for (std::size_t i = 0; i < texts.size(); ++i) {
      BabeRecord rec = make_babe_record(*biased[i], preds[i], mode);
      if (rec.word_count > 0) cmp.records.push_back(std::move(rec));
    }
  }
  cmp.points = bin_minima(cmp.records, num_bins);
  std::size_t next = 0;
  for (std::size_t b = 0; b < num_bins; ++b) {
    if (next < cmp.points.size() && cmp.points[next].bin == b) {
      ++next;
    } else {
      cmp.dropped_bins.push_back(b);
      spdlog::warn("bin {} is empty and was dropped", b);
    }
  }
  cmp.trend = fit_trend(cmp.points);
  return cmp;
}

std::string babe_points_csv(const BabeComparison& cmp) {
  std::string out = "bin,center,min_normalized_entities,count\n";
  for (const auto& p : cmp.points) {
    out += std::to_string(p.bin) + "," + num(p.center) + "," + num(p.minimum) + "," +
           std::to_string(p.count) + "\n";
  }
  out += "# trend slope=" + num(cmp.trend.slope) + " intercept=" + num(cmp.trend.intercept) + "\n";
  return out;
}

std::string babe_records_csv(const BabeComparison& cmp) {
  std::string out =
      "text,word_count,biased_word_count,normalized_biased_words,predicted_entity_tokens,"
      "normalized_entities,bin_id\n";
  for (const auto& r : cmp.records) {
    out += csv_field(r.text) + "," + std::to_string(r.word_count) + "," +
           std::to_string(r.biased_word_count) + "," + num(r.normalized_biased_words) + "," +
           std::to_string(r.predicted_entity_tokens) + "," + num(r.normalized_entities) + "," +
           std::to_string(r.bin_id) + "\n";
  }
  return out;
}

std::string_view sweep_parameter_name(SweepParameter p) {
  return p == SweepParameter::kAlpha ? "alpha" : "gamma";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "alpha") return SweepParameter::kAlpha;
  if (name == "gamma") return SweepParameter::kGamma;
  throw ConfigError("sweep parameter must be alpha or gamma, got '" + std::string(name) + "'");
}

SweepResult sweep(SweepParameter parameter, const std::vector<double>& values,
                  const EncoderConfig& encoder, const TrainingConfig& training,
                  const FocalLossConfig& base_loss, const SweepData& data) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (data.test.empty()) throw ConfigError("sweep needs a non-empty test split");
  SweepResult result;
  result.parameter = parameter;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    try {
      FocalLossConfig loss = base_loss;
      if (parameter == SweepParameter::kAlpha) {
        loss.alpha.fill(v);
      } else {
        loss.gamma = v;
      }
      loss.validate();
      TokenClassifier model(encoder, training.seed);
      train(model, data.train, data.validation, training, loss);
      const ModelEvaluation eval = evaluate_model(model, data.test, loss);
      for (std::size_t c = 0; c < kNumScoredClasses; ++c) row.f1[c] = eval.report.per_entity[c].f1;
      row.macro_f1 = eval.report.macro_f1;
      row.hamming = eval.report.hamming_loss;
    } catch (const DivergenceError& e) {
      row.failed = true;
      row.error = e.what();
      spdlog::warn("{}={} diverged: {}", sweep_parameter_name(parameter), v, e.what());
    } catch (const ConfigError& e) {
      row.failed = true;
      row.error = e.what();
      spdlog::warn("{}={} rejected: {}", sweep_parameter_name(parameter), v, e.what());
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string sweep_table_markdown(const SweepResult& result) {
  const std::string p(sweep_parameter_name(result.parameter));
  std::string out = "| " + p + " | GEN | UNFAIR | STEREO | Neutral | Macro | Hamming |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const auto& r : result.rows) {
    out += "| " + num(r.value) + " | ";
    if (r.failed) {
      out += "failed | | | | | |\n";
      continue;
    }
    for (double f : r.f1) out += fixed(f, 2) + " | ";
    out += fixed(r.macro_f1, 2) + " | " + fixed(r.hamming, 4) + " |\n";
  }
  return out;
}

std::string sweep_table_csv(const SweepResult& result) {
  std::string out = std::string(sweep_parameter_name(result.parameter)) +
                    ",gen_f1,unfair_f1,stereo_f1,neutral_f1,macro_f1,hamming,status\n";
  for (const auto& r : result.rows) {
    out += num(r.value);
    for (double f : r.f1) out += "," + num(f);
    out += "," + num(r.macro_f1) + "," + num(r.hamming) + "," + (r.failed ? "failed" : "ok") + "\n";
  }
  return out;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out += ' ';
        } else {
          out += c;
        }
    }
  }
  return out;
}

namespace {

constexpr std::array<const char*, 3> kAnsiColour = {"\x1b[1;34m", "\x1b[1;31m", "\x1b[1;33m"};
constexpr std::array<const char*, 3> kCssClass = {"gen", "unfair", "stereo"};

}  // namespace

CaseStudy render_case_study(const TokenPredictions& prediction) {
  CaseStudy out;
  std::string body;
  for (std::size_t i = 0; i < prediction.words.size(); ++i) {
    const auto& w = prediction.words[i];
    if (i) {
      out.terminal += ' ';
      body += ' ';
    }
    out.terminal += w.word;
    std::string classes = "word";
    std::string marks;
    for (EntityClass c : kEntityClasses) {
      if (!w.labels.has(c)) continue;
      const auto k = static_cast<std::size_t>(c);
      out.terminal += std::string(kAnsiColour[k]) + "[" + std::string(entity_code(c)) + "]\x1b[0m";
      classes += std::string(" ") + kCssClass[k];
      marks += std::string("<sup class=\"mark ") + kCssClass[k] + "\">" +
               std::string(entity_code(c)) + "</sup>";
    }
    body += "<span class=\"" + classes + "\" title=\"" + escape_xml(join(w.labels.names(), " ")) +
            "\">" + escape_xml(w.word) + marks + "</span>";
  }
  out.terminal += '\n';
  out.html =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<!DOCTYPE html>\n"
      "<html xmlns=\"http://www.w3.org/1999/xhtml\">\n"
      "<head><meta charset=\"UTF-8\"/><title>" + escape_xml(prediction.id) + "</title>\n"
      "<style>.gen{background:#cfe2ff}.unfair{color:#b00020;font-weight:bold}"
      ".stereo{text-decoration:underline #d4a000 3px}.mark{font-size:60%;margin-left:1px}"
      "</style></head>\n"
      "<body><p class=\"case-study\">" + body + "</p></body>\n</html>\n";
  return out;
}

CaseStudy render_case_study(const std::string& text, const TokenClassifier& model,
                            const WordPieceTokenizer& tokenizer, double threshold) {
  if (trim(text).empty()) throw EncodingError("case study text is empty");
  return render_case_study(predict({text}, model, tokenizer, threshold).front());
}

double PieChart::total() const {
  double t = 0;
  for (const auto& s : slices) t += s.value;
  return t;
}

DistributionFigures render_distributions(const CorpusStats& stats) {
  if (stats.sentences == 0 || stats.total_tokens == 0) {
    throw MetricError("cannot chart an empty corpus");
  }
  DistributionFigures figs;
  figs.bias_types.title = "Bias types";
  std::vector<std::pair<std::string, std::size_t>> types(stats.bias_type_counts.begin(),
                                                         stats.bias_type_counts.end());
  std::stable_sort(types.begin(), types.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [name, count] : types) {
    if (count == 0) continue;
    figs.bias_types.slices.push_back(
        {name, static_cast<double>(count),
         100.0 * static_cast<double>(count) / static_cast<double>(stats.sentences)});
  }
  figs.token_labels.title = "Token labels";
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    if (stats.label_counts[l] == 0) continue;
    figs.token_labels.slices.push_back({std::string(kLabelNames[l]),
                                        static_cast<double>(stats.label_counts[l]),
                                        stats.label_percentages[l]});
  }
  return figs;
}

std::string pie_csv(const PieChart& chart) {
  std::string out = "label,value,percent\n";
  for (const auto& s : chart.slices) {
    out += csv_field(s.label) + "," + num(s.value) + "," + num(s.percent) + "\n";
  }
  return out;
}

}  // namespace gusnet
