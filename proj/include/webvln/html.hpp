#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace webvln::html {

// Minimal tag-soup DOM: enough structure to find clickable elements, their
// nested images and text, and the page's visible text blocks.
struct Node {
  enum class Kind { kElement, kText };

  Kind kind = Kind::kElement;
  std::string tag;  // lowercased; empty for text and the document root
  std::map<std::string, std::string> attrs;
  std::string text;  // entity-decoded, for text nodes
  std::vector<std::unique_ptr<Node>> children;

  const std::string* attr(const std::string& name) const {
    auto it = attrs.find(name);
    return it == attrs.end() ? nullptr : &it->second;
  }
};

std::unique_ptr<Node> parse(std::string_view source);

std::string decode_entities(std::string_view s);

// Concatenated descendant text, whitespace-normalized. Skips script/style.
std::string inner_text(const Node& node);

// Visible text grouped by block-level element, in document order.
std::vector<std::string> text_blocks(const Node& root);

bool is_hidden_container(std::string_view tag);

}  // namespace webvln::html
