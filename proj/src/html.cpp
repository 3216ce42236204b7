#include "webvln/html.hpp"

#include <array>
#include <cctype>
#include <functional>

#include "webvln/text.hpp"

namespace webvln::html {
namespace {

constexpr std::array kVoidTags = {"area", "base", "br", "col", "embed", "hr", "img", "input",
                                  "link", "meta", "param", "source", "track", "wbr"};
constexpr std::array kRawTextTags = {"script", "style", "textarea", "title"};
constexpr std::array kBlockTags = {"address", "article", "aside", "blockquote", "body", "dd", "div",
                                   "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form",
                                   "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li",
                                   "main", "nav", "ol", "p", "pre", "section", "table", "td",
                                   "th", "tr", "ul", "br"};

template <std::size_t N>
bool one_of(const std::array<const char*, N>& set, std::string_view tag) {
  for (const char* s : set) {
    if (tag == s) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::unique_ptr<Node> run() {
    auto root = std::make_unique<Node>();
    stack_.push_back(root.get());
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<') {
        if (starts_with("<!--")) {
          skip_past("-->");
        } else if (starts_with("<!") || starts_with("<?")) {
          skip_past(">");
        } else if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
          end_tag();
        } else if (pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
          start_tag();
        } else {
          text_until_tag();
        }
      } else {
        text_until_tag();
      }
    }
    return root;
  }

 private:
  bool starts_with(std::string_view prefix) const { return src_.substr(pos_, prefix.size()) == prefix; }

  void skip_past(std::string_view terminator) {
    auto e = src_.find(terminator, pos_);
    pos_ = e == std::string_view::npos ? src_.size() : e + terminator.size();
  }

  void add_text(std::string_view raw) {
    if (raw.empty()) return;
    auto node = std::make_unique<Node>();
    node->kind = Node::Kind::kText;
    node->text = decode_entities(raw);
    stack_.back()->children.push_back(std::move(node));
  }

  void text_until_tag() {
    auto e = src_.find('<', pos_ + 1);
    if (e == std::string_view::npos) e = src_.size();
    add_text(src_.substr(pos_, e - pos_));
    pos_ = e;
  }

  std::string read_name() {
    std::string name;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      name += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      ++pos_;
    }
    return name;
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  void start_tag() {
    ++pos_;  // '<'
    auto node = std::make_unique<Node>();
    node->tag = read_name();
    bool self_closing = false;
    while (pos_ < src_.size()) {
      skip_space();
      if (pos_ >= src_.size()) break;
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (src_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      auto name = read_name();
      if (name.empty()) {
        ++pos_;
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
          char q = src_[pos_++];
          auto e = src_.find(q, pos_);
          if (e == std::string_view::npos) e = src_.size();
          value = decode_entities(src_.substr(pos_, e - pos_));
          pos_ = std::min(e + 1, src_.size());
        } else {
          std::size_t b = pos_;
          while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && src_[pos_] != '>')
            ++pos_;
          value = decode_entities(src_.substr(b, pos_ - b));
        }
      }
      node->attrs.emplace(std::move(name), std::move(value));
    }

    Node* raw = node.get();
    stack_.back()->children.push_back(std::move(node));
    if (self_closing || one_of(kVoidTags, raw->tag)) return;

    if (one_of(kRawTextTags, raw->tag)) {
      const std::string close = "</" + raw->tag;
      std::size_t e = pos_;
      while (true) {
        e = src_.find("</", e);
        if (e == std::string_view::npos) break;
        if (to_lower(src_.substr(e, close.size())) == close) break;
        e += 2;
      }
      if (e == std::string_view::npos) e = src_.size();
      auto text = std::make_unique<Node>();
      text->kind = Node::Kind::kText;
      text->text = raw->tag == "textarea" || raw->tag == "title" ? decode_entities(src_.substr(pos_, e - pos_))
                                                                 : std::string(src_.substr(pos_, e - pos_));
      raw->children.push_back(std::move(text));
      pos_ = e;
      if (pos_ < src_.size()) skip_past(">");
      return;
    }
    stack_.push_back(raw);
  }

  void end_tag() {
    pos_ += 2;
    auto name = read_name();
    skip_past(">");
    // Close the nearest open element with this name; stray end tags are ignored.
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Node*> stack_;
};

void append_entity(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

bool is_hidden_container(std::string_view tag) {
  return tag == "script" || tag == "style" || tag == "noscript" || tag == "template" || tag == "head";
}

std::unique_ptr<Node> parse(std::string_view source) { return Parser(source).run(); }

std::string decode_entities(std::string_view s) {
  static const std::map<std::string, std::string, std::less<>> kNamed = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
      {"copy", "\xC2\xA9"}, {"reg", "\xC2\xAE"}, {"pound", "\xC2\xA3"}, {"euro", "\xE2\x82\xAC"},
      {"ndash", "-"}, {"mdash", "-"}, {"hellip", "..."}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += '&';
      continue;
    }
    auto name = s.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      try {
        unsigned long cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
                               ? std::stoul(std::string(name.substr(2)), nullptr, 16)
                               : std::stoul(std::string(name.substr(1)));
        append_entity(out, cp);
        i = semi;
        continue;
      } catch (const std::exception&) {
      }
    } else if (auto it = kNamed.find(name); it != kNamed.end()) {
      out += it->second;
      i = semi;
      continue;
    }
    out += '&';
  }
  return out;
}

std::string inner_text(const Node& node) {
  std::string acc;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.kind == Node::Kind::kText) {
      acc += ' ';
      acc += n.text;
      return;
    }
    if (is_hidden_container(n.tag)) return;
    for (const auto& c : n.children) walk(*c);
  };
  walk(node);
  return normalize_space(acc);
}

std::vector<std::string> text_blocks(const Node& root) {
  std::vector<std::string> blocks;
  std::string current;
  auto flush = [&] {
    auto t = normalize_space(current);
    if (!t.empty()) blocks.push_back(std::move(t));
    current.clear();
  };
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.kind == Node::Kind::kText) {
      current += ' ';
      current += n.text;
      return;
    }
    if (is_hidden_container(n.tag)) return;
    const bool block = one_of(kBlockTags, n.tag);
    if (block) flush();
    for (const auto& c : n.children) walk(*c);
    if (block) flush();
  };
  walk(root);
  flush();
  return blocks;
}

}  // namespace webvln::html
