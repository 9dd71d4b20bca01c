#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gusnet {

// One row of an externally annotated sentence-level bias corpus.
struct BabeRow {
  std::string text;
  bool biased = false;
  std::vector<std::string> biased_words;
};

// RFC 4180 style: quoted fields, doubled quotes, embedded delimiters/newlines.
std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delimiter);

// Parses "['a', 'b']", a JSON list, or a plain comma/semicolon separated list.
std::vector<std::string> parse_word_list(const std::string& field);

// Reads CSV/TSV/semicolon files with a header naming `text`, a bias label
// column (`label_bias` or `label`) and `biased_words`. The delimiter is
// whichever of tab, semicolon and comma is most frequent in the header.
std::vector<BabeRow> read_babe(const std::filesystem::path& path);

}  // namespace gusnet
