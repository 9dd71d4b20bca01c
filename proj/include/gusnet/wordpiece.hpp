#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gusnet {

// BERT-style WordPiece over pre-split words: lower-cases, then greedily takes
// the longest vocabulary piece, continuation pieces prefixed with "##".
class WordPieceTokenizer {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kMask = "[MASK]";
  static constexpr std::size_t kMaxWordChars = 100;

  explicit WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase = true);

  // One token per line (BERT vocab.txt format).
  static WordPieceTokenizer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Specials, every character seen (plain and "##"), then words occurring at
  // least `min_count` times by descending frequency, up to `max_size` entries.
  static WordPieceTokenizer build(const std::vector<std::vector<std::string>>& corpus,
                                  std::size_t max_size = 8000, int min_count = 2);

  std::vector<int> encode_word(std::string_view word) const;
  std::vector<std::string> pieces(std::string_view word) const;

  std::size_t size() const { return vocab_.size(); }
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view token) const;
  const std::vector<std::string>& vocab() const { return vocab_; }
  bool lowercase() const { return lowercase_; }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  bool lowercase_;
  int pad_ = 0, unk_ = 1, cls_ = 2, sep_ = 3;
};

}  // namespace gusnet
