#include "webvln/site_graph.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <functional>
#include <set>

#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/html.hpp"
#include "webvln/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace webvln {
namespace {

const html::Node* first_img(const html::Node& node) {
  for (const auto& c : node.children) {
    if (c->kind != html::Node::Kind::kElement) continue;
    if (c->tag == "img") return c.get();
    if (auto* found = first_img(*c)) return found;
  }
  return nullptr;
}

bool has_content(const html::Node& node) {
  if (node.kind == html::Node::Kind::kText) return !trim(node.text).empty();
  if (!node.tag.empty()) return true;
  return std::any_of(node.children.begin(), node.children.end(), [](const auto& c) { return has_content(*c); });
}

}  // namespace

std::optional<std::string> link_target(std::string_view href) {
  std::string h = trim(href);
  if (h.empty() || h.front() == '#') return std::nullopt;
  const std::string lower = to_lower(h);
  for (const char* scheme : {"javascript:", "mailto:", "tel:", "data:"}) {
    if (lower.rfind(scheme, 0) == 0) return std::nullopt;
  }
  if (lower.find("://") != std::string::npos || lower.rfind("//", 0) == 0) return h;

  auto cut = h.find_first_of("?#");
  if (cut != std::string::npos) h.resize(cut);
  auto slash = h.find_last_of('/');
  std::string name = slash == std::string::npos ? h : h.substr(slash + 1);
  for (const char* ext : {".html", ".htm"}) {
    const std::string e = ext;
    if (name.size() > e.size() && to_lower(name.substr(name.size() - e.size())) == e) {
      return name.substr(0, name.size() - e.size());
    }
  }
  // Non-page resource (image, pdf, ...) or a bare route: keep as-is so the
  // graph builder can decide.
  return name.empty() ? std::nullopt : std::optional<std::string>(name);
}

WebPage parse_page(std::string_view html_source, const PageId& page_id, const AssetResolver& resolver,
                   const ParseOptions& options, std::vector<std::string>* warnings) {
  auto root = html::parse(html_source);
  if (!has_content(*root)) fail(ErrorCode::kParse, "NoContent", "page '" + page_id + "' is empty");

  WebPage page;
  page.page_id = page_id;
  page.source_path = options.source_path;
  page.screenshot_ref = options.screenshot_ref;

  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(page_id + ": " + w);
  };

  std::function<void(const html::Node&, bool)> walk = [&](const html::Node& n, bool inside_clickable) {
    if (n.kind != html::Node::Kind::kElement) return;
    if (html::is_hidden_container(n.tag) && n.tag != "head") return;

    if (!inside_clickable) {
      for (const auto& rule : options.selectors) {
        if (n.tag != rule.tag) continue;
        const std::string* href = n.attr(rule.target_attr);
        if (!href) continue;
        auto target = link_target(*href);
        if (!target) continue;

        Button b;
        b.button_id = page_id + "#" + std::to_string(page.buttons.size());
        b.target_page_id = *target;
        const html::Node* img = first_img(n);
        if (img) {
          if (auto* alt = img->attr("alt")) b.description = normalize_space(*alt);
        }
        if (b.description.empty()) b.description = html::inner_text(n);
        for (const char* a : {"alt", "aria-label", "title"}) {
          if (!b.description.empty()) break;
          if (auto* v = n.attr(a)) b.description = normalize_space(*v);
        }
        if (img) {
          if (auto* src = img->attr("src"); src && !src->empty()) {
            if (auto resolved = resolver ? resolver(*src) : std::nullopt) {
              b.image_ref = *resolved;
            } else {
              warn("UnresolvableAsset '" + *src + "'; button kept without image");
            }
          }
        }
        if (b.description.empty() && b.image_ref.empty()) {
          warn("clickable element to '" + b.target_page_id + "' has neither description nor image; skipped");
        } else {
          page.buttons.push_back(std::move(b));
        }
        for (const auto& c : n.children) walk(*c, true);
        return;
      }
    }

    if (n.tag == "img" && options.captions) {
      if (auto* src = n.attr("src")) {
        if (auto resolved = resolver ? resolver(*src) : std::nullopt) {
          if (auto caption = options.captions(*resolved)) page.captions.push_back(*caption);
        }
      }
    }
    for (const auto& c : n.children) walk(*c, inside_clickable);
  };
  walk(*root, false);

  // Body text only; the <head> subtree is skipped by text_blocks.
  page.text_blocks = html::text_blocks(*root);
  std::vector<std::string> raw;
  for (const auto& block : page.text_blocks) {
    for (auto& w : split_whitespace(block)) raw.push_back(std::move(w));
  }
  page.word_list = clean_text(raw, options.stoplist);
  return page;
}

NavGraph NavGraph::build(std::vector<WebPage> pages, const PageId& homepage_id, BuildReport* report,
                         std::string site_id, std::string site_root) {
  NavGraph g;
  g.site_id_ = std::move(site_id);
  g.site_root_ = std::move(site_root);
  for (auto& p : pages) {
    const PageId id = p.page_id;
    if (!g.pages_.emplace(id, std::move(p)).second) {
      fail(ErrorCode::kInvalidArgument, "DuplicatePageId", "page id '" + id + "' appears twice");
    }
  }
  if (!g.pages_.count(homepage_id)) {
    fail(ErrorCode::kInvalidArgument, "MissingHomepage", "homepage '" + homepage_id + "' not among pages");
  }
  g.homepage_id_ = homepage_id;

  std::size_t dropped = 0;
  for (auto& [id, page] : g.pages_) {
    std::vector<Button> kept;
    for (auto& b : page.buttons) {
      if (g.pages_.count(b.target_page_id)) {
        kept.push_back(std::move(b));
      } else {
        ++dropped;
        if (report) report->warnings.push_back(id + ": dropped button to '" + b.target_page_id + "' (not in site)");
      }
    }
    page.buttons = std::move(kept);
    g.edge_count_ += page.buttons.size();
  }
  if (report) report->dropped_buttons += dropped;
  return g;
}

const WebPage& NavGraph::page(const PageId& id) const {
  auto it = pages_.find(id);
  if (it == pages_.end()) fail(ErrorCode::kNotFound, "UnknownPageId", "no page '" + id + "'");
  return it->second;
}

std::optional<std::size_t> NavGraph::button_index(const PageId& from, const PageId& to) const {
  const auto& buttons = page(from).buttons;
  for (std::size_t i = 0; i < buttons.size(); ++i) {
    if (buttons[i].target_page_id == to) return i;
  }
  return std::nullopt;
}

std::string NavGraph::resolve_path(const std::string& ref) const {
  if (ref.empty()) return {};
  fs::path p(ref);
  if (p.is_absolute() || site_root_.empty()) return ref;
  return (fs::path(site_root_) / p).string();
}

std::optional<std::vector<PageId>> shortest_path(const NavGraph& graph, const PageId& from, const PageId& to) {
  graph.page(from);
  graph.page(to);
  if (from == to) return std::vector<PageId>{from};

  // BFS expanding buttons in document order: the first discovery of each page
  // is along its lexicographically smallest shortest button sequence.
  std::map<PageId, PageId> parent;
  std::deque<PageId> queue{from};
  std::set<PageId> seen{from};
  while (!queue.empty()) {
    PageId cur = queue.front();
    queue.pop_front();
    for (const auto& b : graph.page(cur).buttons) {
      if (!seen.insert(b.target_page_id).second) continue;
      parent[b.target_page_id] = cur;
      if (b.target_page_id == to) {
        std::vector<PageId> path{to};
        while (path.back() != from) path.push_back(parent.at(path.back()));
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(b.target_page_id);
    }
  }
  return std::nullopt;
}

std::map<PageId, std::size_t> bfs_distances(const NavGraph& graph, const PageId& from) {
  std::map<PageId, std::size_t> dist{{from, 0}};
  std::deque<PageId> queue{from};
  while (!queue.empty()) {
    PageId cur = queue.front();
    queue.pop_front();
    for (const auto& b : graph.page(cur).buttons) {
      if (dist.emplace(b.target_page_id, dist[cur] + 1).second) queue.push_back(b.target_page_id);
    }
  }
  return dist;
}

SiteConfig load_site_config(const std::string& site_dir) {
  const fs::path cfg_path = fs::path(site_dir) / "site.json";
  json j;
  try {
    j = json::parse(read_file(cfg_path.string()));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "ParseError", cfg_path.string() + ": " + e.what());
  }
  SiteConfig cfg;
  cfg.site_id = j.value("site_id", fs::path(site_dir).filename().string());
  cfg.homepage_id = j.value("homepage_id", std::string("index"));
  cfg.stoplist_path = j.value("stoplist", std::string());
  if (j.contains("selectors")) {
    cfg.selectors.clear();
    for (const auto& s : j.at("selectors")) {
      cfg.selectors.push_back({s.at("tag").get<std::string>(), s.value("attr", std::string("href"))});
    }
  }
  return cfg;
}

NavGraph load_site(const std::string& site_dir, NavGraph::BuildReport* report) {
  const fs::path root = fs::absolute(fs::path(site_dir)).lexically_normal();
  const SiteConfig cfg = load_site_config(root.string());

  ParseOptions opts;
  opts.selectors = cfg.selectors;
  opts.stoplist = cfg.stoplist_path.empty() ? Stoplist::defaults() : Stoplist::load((root / cfg.stoplist_path).string());

  std::map<std::string, std::string> captions;
  if (fs::exists(root / "captions.json")) {
    const json j = json::parse(read_file((root / "captions.json").string()));
    for (const auto& [k, v] : j.items()) {
      captions[k] = v.get<std::string>();
    }
  }
  opts.captions = [&](std::string_view asset) -> std::optional<std::string> {
    auto it = captions.find(std::string(asset));
    if (it == captions.end()) it = captions.find(fs::path(asset).filename().string());
    if (it == captions.end()) return std::nullopt;
    return it->second;
  };

  const fs::path pages_dir = root / "pages";
  if (!fs::is_directory(pages_dir)) fail(ErrorCode::kIo, "IoError", pages_dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(pages_dir)) {
    const auto ext = to_lower(e.path().extension().string());
    if (e.is_regular_file() && (ext == ".html" || ext == ".htm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  AssetResolver resolver = [&](std::string_view src) -> std::optional<std::string> {
    const fs::path s(std::string{src});
    for (const fs::path& candidate : {(pages_dir / s).lexically_normal(), (root / s).lexically_normal(),
                                      root / "assets" / s.filename()}) {
      if (fs::is_regular_file(candidate)) return candidate.lexically_relative(root).generic_string();
    }
    return std::nullopt;
  };

  NavGraph::BuildReport local;
  NavGraph::BuildReport& rep = report ? *report : local;
  std::vector<WebPage> pages;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    const fs::path shot = root / "screenshots" / (id + ".png");
    opts.screenshot_ref = fs::exists(shot) ? shot.lexically_relative(root).generic_string() : std::string();
    opts.source_path = f.lexically_relative(root).generic_string();
    if (opts.screenshot_ref.empty()) rep.warnings.push_back(id + ": no screenshot");
    pages.push_back(parse_page(read_file(f.string()), id, resolver, opts, &rep.warnings));
  }
  return NavGraph::build(std::move(pages), cfg.homepage_id, &rep, cfg.site_id, root.string());
}

std::string graph_to_json(const NavGraph& graph) {
  json j;
  j["site_id"] = graph.site_id();
  j["site_root"] = graph.site_root();
  j["homepage_id"] = graph.homepage_id();
  json pages = json::array();
  json edges = json::array();
  for (const auto& [id, page] : graph.pages()) {
    pages.push_back(page);
    for (const auto& b : page.buttons) edges.push_back({id, b.target_page_id, b.button_id});
  }
  j["pages"] = std::move(pages);
  j["edges"] = std::move(edges);
  j["edge_count"] = graph.edge_count();
  return j.dump(2) + "\n";
}

NavGraph graph_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    std::vector<WebPage> pages = j.at("pages").get<std::vector<WebPage>>();
    NavGraph::BuildReport rep;
    return NavGraph::build(std::move(pages), j.at("homepage_id").get<std::string>(), &rep,
                           j.value("site_id", std::string()), j.value("site_root", std::string()));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "ParseError", std::string("graph json: ") + e.what());
  }
}

NavGraph load_graph(const std::string& path) { return graph_from_json(read_file(path)); }

}  // namespace webvln
