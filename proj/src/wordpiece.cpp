#include "gusnet/wordpiece.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "gusnet/error.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

namespace {

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> char_boundaries(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(s.size());
  return out;
}

}  // namespace

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase)
    : vocab_(std::move(vocab)), lowercase_(lowercase) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    index_.emplace(vocab_[i], static_cast<int>(i));
  }
  auto require = [&](std::string_view tok) {
    auto id = find(tok);
    if (!id) throw ConfigError("vocabulary lacks " + std::string(tok));
    return *id;
  };
  pad_ = require(kPad);
  unk_ = require(kUnk);
  cls_ = require(kCls);
  sep_ = require(kSep);
}

std::optional<int> WordPieceTokenizer::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordPieceTokenizer WordPieceTokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary " + path.string());
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordPieceTokenizer(std::move(vocab));
}

void WordPieceTokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write vocabulary " + path.string());
  for (const auto& tok : vocab_) out << tok << '\n';
}

WordPieceTokenizer WordPieceTokenizer::build(const std::vector<std::vector<std::string>>& corpus,
                                             std::size_t max_size, int min_count) {
  std::vector<std::string> vocab = {std::string(kPad), std::string(kUnk), std::string(kCls),
                                    std::string(kSep), std::string(kMask)};
  std::map<std::string, int> counts;
  std::set<std::string> chars;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) {
      const std::string lw = to_lower(w);
      ++counts[lw];
      const auto b = char_boundaries(lw);
      for (std::size_t i = 0; i + 1 < b.size(); ++i) chars.insert(lw.substr(b[i], b[i + 1] - b[i]));
    }
  }
  std::set<std::string> present(vocab.begin(), vocab.end());
  auto add = [&](const std::string& tok) {
    if (present.insert(tok).second) vocab.push_back(tok);
  };
  for (const auto& c : chars) add(c);
  for (const auto& c : chars) add("##" + c);
  std::vector<std::pair<std::string, int>> words(counts.begin(), counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [w, n] : words) {
    if (vocab.size() >= max_size || n < min_count) break;
    add(w);
  }
  return WordPieceTokenizer(std::move(vocab));
}

std::vector<std::string> WordPieceTokenizer::pieces(std::string_view word) const {
  std::vector<std::string> out;
  for (int id : encode_word(word)) out.push_back(token(id));
  return out;
}

std::vector<int> WordPieceTokenizer::encode_word(std::string_view word) const {
  const std::string w = lowercase_ ? to_lower(word) : std::string(word);
  if (w.empty()) return {};
  const auto b = char_boundaries(w);
  if (b.size() - 1 > kMaxWordChars) return {unk_};
  std::vector<int> ids;
  std::size_t start = 0;  // index into b
  while (start + 1 < b.size()) {
    std::optional<int> match;
    std::size_t end = b.size() - 1;
    for (; end > start; --end) {
      std::string piece = w.substr(b[start], b[end] - b[start]);
      if (start > 0) piece = "##" + piece;
      if (auto id = find(piece)) {
        match = id;
        break;
      }
    }
    if (!match) return {unk_};
    ids.push_back(*match);
    start = end;
  }
  return ids;
}

}  // namespace gusnet
