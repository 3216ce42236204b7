#include "webvln/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "webvln/error.hpp"

namespace webvln {

Stoplist::Stoplist(const std::set<std::string>& entries) {
  for (const auto& entry : entries) {
    auto parts = split_whitespace(to_lower(entry));
    if (parts.empty()) continue;
    if (parts.size() == 1) {
      words_.insert(parts.front());
    } else {
      phrases_.push_back(std::move(parts));
    }
  }
}

Stoplist Stoplist::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::set<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    entries.insert(t);
  }
  return Stoplist(entries);
}

Stoplist Stoplist::defaults() { return Stoplist(default_stoplist_entries()); }

const std::set<std::string>& default_stoplist_entries() {
  static const std::set<std::string> kEntries = {
      "sign in", "sign up",    "log in",   "log out",        "my account",       "add to cart",
      "add to bag", "cart",    "basket",   "checkout",       "menu",             "search",
      "wishlist", "newsletter", "subscribe", "cookie",       "cookies",          "privacy policy",
      "terms of service", "terms and conditions", "skip to content", "javascript", "undefined", "null"};
  return kEntries;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_punctuation_only(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (!std::ispunct(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string strip_edge_punctuation(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(token[e - 1]))) --e;
  return std::string(token.substr(b, e - b));
}

std::vector<std::string> clean_text(const std::vector<std::string>& raw_words, const Stoplist& stoplist) {
  std::vector<std::string> lowered;
  lowered.reserve(raw_words.size());
  for (const auto& w : raw_words) {
    // A raw "word" may itself contain whitespace when it comes from a text node.
    for (auto& part : split_whitespace(w)) lowered.push_back(to_lower(part));
  }

  std::vector<bool> drop(lowered.size(), false);
  for (const auto& phrase : stoplist.phrases()) {
    if (phrase.size() > lowered.size()) continue;
    for (std::size_t i = 0; i + phrase.size() <= lowered.size(); ++i) {
      bool match = true;
      for (std::size_t k = 0; k < phrase.size() && match; ++k) match = lowered[i + k] == phrase[k];
      if (match) {
        for (std::size_t k = 0; k < phrase.size(); ++k) drop[i + k] = true;
      }
    }
  }

  std::vector<std::string> out;
  for (std::size_t i = 0; i < lowered.size(); ++i) {
    if (drop[i] || is_punctuation_only(lowered[i]) || stoplist.contains_word(lowered[i])) continue;
    out.push_back(std::move(lowered[i]));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  static const Stoplist kEmpty;
  return clean_text(split_whitespace(text), kEmpty);
}

std::string normalize_space(std::string_view s) { return join(split_whitespace(s), " "); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "IoError", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "IoError", "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace webvln
