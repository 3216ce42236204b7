#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace webvln {

/// Boilerplate terms filtered out of page text. Single-word entries remove
/// matching tokens; multi-word entries remove matching token runs.
class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(const std::set<std::string>& entries);

  static Stoplist load(const std::string& path);
  static Stoplist defaults();

  bool contains_word(std::string_view lowered) const { return words_.count(std::string(lowered)) > 0; }
  const std::set<std::string>& words() const { return words_; }
  const std::vector<std::vector<std::string>>& phrases() const { return phrases_; }
  bool empty() const { return words_.empty() && phrases_.empty(); }

 private:
  std::set<std::string> words_;
  std::vector<std::vector<std::string>> phrases_;
};

// Boilerplate terms ("sign in", "cart", "menu", ...) used when a site config
// names no stoplist file.
const std::set<std::string>& default_stoplist_entries();

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// True when every character is ASCII punctuation (and there is at least one).
bool is_punctuation_only(std::string_view token);

// Strips leading/trailing ASCII punctuation ("socks?" -> "socks").
std::string strip_edge_punctuation(std::string_view token);

std::vector<std::string> clean_text(const std::vector<std::string>& raw_words, const Stoplist& stoplist);

// Whitespace split + clean_text with an empty stoplist.
std::vector<std::string> tokenize(std::string_view text);

// Collapses runs of whitespace into single spaces and trims.
std::string normalize_space(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace webvln
