#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "webvln/text.hpp"

namespace webvln {

using PageId = std::string;

// A clickable element. An absent description or image is the empty string.
struct Button {
  std::string button_id;
  std::string description;
  std::string image_ref;
  PageId target_page_id;

  bool operator==(const Button&) const = default;
};

struct WebPage {
  PageId page_id;
  std::string source_path;
  std::string screenshot_ref;
  std::vector<Button> buttons;  // document order
  std::vector<std::string> word_list;
  std::vector<std::string> captions;
  std::vector<std::string> text_blocks;  // visible text per block element, uncleaned

  bool operator==(const WebPage&) const = default;
};

// An element kind that counts as clickable, and the attribute holding its link.
struct SelectorRule {
  std::string tag;
  std::string target_attr;
};

// Maps an <img src> as written in the page to an asset path, or nullopt when
// the asset cannot be found.
using AssetResolver = std::function<std::optional<std::string>(std::string_view src)>;
using CaptionLookup = std::function<std::optional<std::string>(std::string_view asset)>;

struct ParseOptions {
  std::vector<SelectorRule> selectors = {{"a", "href"}};
  Stoplist stoplist;
  CaptionLookup captions;
  std::string screenshot_ref;
  std::string source_path;
};

WebPage parse_page(std::string_view html_source, const PageId& page_id, const AssetResolver& resolver,
                   const ParseOptions& options, std::vector<std::string>* warnings = nullptr);

// Link target -> page id for internal page links ("../pages/p2.html#x" -> "p2").
// External URLs are returned unchanged so graph construction can drop them.
std::optional<std::string> link_target(std::string_view href);

class NavGraph {
 public:
  struct BuildReport {
    std::size_t dropped_buttons = 0;
    std::vector<std::string> warnings;
  };

  static NavGraph build(std::vector<WebPage> pages, const PageId& homepage_id, BuildReport* report = nullptr,
                        std::string site_id = {}, std::string site_root = {});

  const PageId& homepage_id() const { return homepage_id_; }
  const std::string& site_id() const { return site_id_; }
  const std::string& site_root() const { return site_root_; }
  const std::map<PageId, WebPage>& pages() const { return pages_; }
  std::size_t edge_count() const { return edge_count_; }
  bool contains(const PageId& id) const { return pages_.count(id) > 0; }
  const WebPage& page(const PageId& id) const;

  // Index of the first button on `from` whose target is `to`.
  std::optional<std::size_t> button_index(const PageId& from, const PageId& to) const;

  // Absolute path of a site-relative asset reference.
  std::string resolve_path(const std::string& ref) const;

 private:
  std::map<PageId, WebPage> pages_;
  PageId homepage_id_;
  std::string site_id_;
  std::string site_root_;
  std::size_t edge_count_ = 0;
};

// Minimum-transition page sequence [from, ..., to]; ties go to the
// lexicographically smallest button-index sequence.
std::optional<std::vector<PageId>> shortest_path(const NavGraph& graph, const PageId& from, const PageId& to);

// Shortest transition counts from `from` to every reachable page.
std::map<PageId, std::size_t> bfs_distances(const NavGraph& graph, const PageId& from);

struct SiteConfig {
  std::string site_id;
  PageId homepage_id;
  std::vector<SelectorRule> selectors = {{"a", "href"}};
  std::string stoplist_path;  // relative to the site dir; empty = built-in list
};

SiteConfig load_site_config(const std::string& site_dir);

// Ingests `<site>/pages/*.html` using `<site>/site.json`.
NavGraph load_site(const std::string& site_dir, NavGraph::BuildReport* report = nullptr);

std::string graph_to_json(const NavGraph& graph);
NavGraph graph_from_json(std::string_view text);
NavGraph load_graph(const std::string& path);

}  // namespace webvln
