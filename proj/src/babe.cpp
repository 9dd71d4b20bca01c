#include "gusnet/babe.hpp"

#include <algorithm>
#include <array>
#include <regex>

#include "gusnet/corpus_forge.hpp"
#include "gusnet/error.hpp"
#include "gusnet/text.hpp"
#include "json.hpp"

namespace gusnet {

std::vector<std::vector<std::string>> parse_delimited(const std::string& content,
                                                      char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == delimiter) {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> parse_word_list(const std::string& field) {
  const std::string t = trim(field);
  if (t.empty() || t == "[]") return {};
  if (t.front() == '[') {
    auto doc = nlohmann::json::parse(t, nullptr, false);
    if (!doc.is_discarded() && doc.is_array()) {
      std::vector<std::string> out;
      for (const auto& e : doc) {
        if (e.is_string()) out.push_back(e.get<std::string>());
      }
      return out;
    }
    // Python list literal with single quotes.
    static const std::regex item(R"('((?:[^'\\]|\\.)*)'|\"((?:[^\"\\]|\\.)*)\")");
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(t.begin(), t.end(), item); it != std::sregex_iterator();
         ++it) {
      out.push_back((*it)[1].matched ? (*it)[1].str() : (*it)[2].str());
    }
    return out;
  }
  std::vector<std::string> out;
  std::string cur;
  for (char c : t) {
    if (c == ',' || c == ';' || c == '|') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

namespace {

bool parse_bias_label(const std::string& value) {
  const std::string v = to_lower(trim(value));
  return v == "biased" || v == "1" || v == "true" || v == "yes" || v == "bias";
}

}  // namespace

std::vector<BabeRow> read_babe(const std::filesystem::path& path) {
  const std::string content = load_text_file(path);
  const std::string header = content.substr(0, content.find('\n'));
  const std::array<char, 3> candidates = {'\t', ';', ','};
  char delim = ',';
  std::ptrdiff_t best = -1;
  for (char c : candidates) {
    const auto n = std::count(header.begin(), header.end(), c);
    if (n > best) {
      best = n;
      delim = c;
    }
  }
  auto rows = parse_delimited(content, delim);
  if (rows.empty()) throw ConfigError("empty corpus file " + path.string());
  std::ptrdiff_t text_col = -1, label_col = -1, words_col = -1;
  for (std::size_t k = 0; k < rows[0].size(); ++k) {
    const std::string h = to_lower(trim(rows[0][k]));
    if (h == "text" || h == "sentence") text_col = static_cast<std::ptrdiff_t>(k);
    if (h == "label_bias" || (h == "label" && label_col < 0)) {
      label_col = static_cast<std::ptrdiff_t>(k);
    }
    if (h == "biased_words") words_col = static_cast<std::ptrdiff_t>(k);
  }
  if (text_col < 0 || label_col < 0 || words_col < 0) {
    throw ConfigError(path.string() + ": header needs text, label_bias (or label) and "
                      "biased_words columns");
  }
  std::vector<BabeRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto need = static_cast<std::size_t>(std::max({text_col, label_col, words_col}));
    if (row.size() <= need) continue;
    BabeRow b;
    b.text = row[static_cast<std::size_t>(text_col)];
    b.biased = parse_bias_label(row[static_cast<std::size_t>(label_col)]);
    b.biased_words = parse_word_list(row[static_cast<std::size_t>(words_col)]);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace gusnet
