#include "webvln/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/text.hpp"

using nlohmann::json;

namespace webvln {

Taxonomy Taxonomy::from_nodes(std::map<SynsetId, Node> nodes) {
  for (const auto& [id, node] : nodes) {
    for (const auto& p : node.parents) {
      if (!nodes.count(p)) fail(ErrorCode::kParse, "ParseError", "synset '" + id + "' has unknown parent '" + p + "'");
    }
  }

  // Iterative three-colour DFS along parent links.
  std::map<SynsetId, int> colour;
  for (const auto& [start, unused] : nodes) {
    if (colour[start] != 0) continue;
    std::vector<std::pair<SynsetId, std::size_t>> stack{{start, 0}};
    colour[start] = 1;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& parents = nodes.at(id).parents;
      if (next < parents.size()) {
        const SynsetId& p = parents[next++];
        if (colour[p] == 1) fail(ErrorCode::kParse, "CycleDetected", "cycle through '" + p + "'");
        if (colour[p] == 0) {
          colour[p] = 1;
          stack.emplace_back(p, 0);
        }
      } else {
        colour[id] = 2;
        stack.pop_back();
      }
    }
  }

  std::set<SynsetId> roots;
  for (const auto& [id, node] : nodes) {
    if (node.parents.empty()) roots.insert(id);
  }
  if (roots.size() > 1) {
    const SynsetId vr(kVirtualRoot);
    for (const auto& r : roots) nodes.at(r).parents.push_back(vr);
    nodes.emplace(vr, Node{});
    roots = {vr};
  }

  Taxonomy t;
  t.nodes_ = std::move(nodes);
  t.roots_ = std::move(roots);

  std::map<SynsetId, std::vector<SynsetId>> children;
  for (const auto& [id, node] : t.nodes_) {
    for (const auto& p : node.parents) children[p].push_back(id);
    for (const auto& l : node.lemmas) t.lemma_index_[to_lower(l)].push_back(id);
  }
  std::deque<SynsetId> queue;
  for (const auto& r : t.roots_) {
    t.depth_[r] = 1;
    queue.push_back(r);
  }
  while (!queue.empty()) {
    SynsetId cur = queue.front();
    queue.pop_front();
    for (const auto& c : children[cur]) {
      if (t.depth_.emplace(c, t.depth_[cur] + 1).second) queue.push_back(c);
    }
  }
  return t;
}

Taxonomy Taxonomy::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "ParseError", std::string("taxonomy json: ") + e.what());
  }
  const json& nodes_json = j.contains("nodes") && j.at("nodes").is_object() ? j.at("nodes") : j;
  std::map<SynsetId, Node> nodes;
  for (const auto& [id, v] : nodes_json.items()) {
    Node n;
    if (v.contains("lemmas")) {
      for (const auto& l : v.at("lemmas")) n.lemmas.insert(l.get<std::string>());
    } else {
      n.lemmas.insert(id);
    }
    if (v.contains("parents")) {
      for (const auto& p : v.at("parents")) n.parents.push_back(p.get<std::string>());
    }
    if (v.contains("parent")) n.parents.push_back(v.at("parent").get<std::string>());
    nodes.emplace(id, std::move(n));
  }
  return from_nodes(std::move(nodes));
}

namespace {

void parse_wordnet_into(std::string_view text, const std::string& source, std::map<SynsetId, Taxonomy::Node>& nodes) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kParse, "ParseError", source + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == ' ') continue;  // license header
    const auto bar = line.find('|');
    std::istringstream fields(line.substr(0, bar));
    std::string offset, lex_filenum, ss_type, w_cnt_hex;
    if (!(fields >> offset >> lex_filenum >> ss_type >> w_cnt_hex)) bad("truncated synset header");
    const std::string pos = ss_type == "s" ? "a" : ss_type;
    std::size_t w_cnt = 0;
    try {
      w_cnt = std::stoul(w_cnt_hex, nullptr, 16);
    } catch (const std::exception&) {
      bad("bad word count '" + w_cnt_hex + "'");
    }
    Taxonomy::Node node;
    for (std::size_t i = 0; i < w_cnt; ++i) {
      std::string word, lex_id;
      if (!(fields >> word >> lex_id)) bad("truncated word list");
      if (auto paren = word.find('('); paren != std::string::npos) word.resize(paren);
      std::replace(word.begin(), word.end(), '_', ' ');
      node.lemmas.insert(to_lower(word));
    }
    std::size_t p_cnt = 0;
    if (!(fields >> p_cnt)) bad("missing pointer count");
    for (std::size_t i = 0; i < p_cnt; ++i) {
      std::string symbol, target, target_pos, source_target;
      if (!(fields >> symbol >> target >> target_pos >> source_target)) bad("truncated pointer list");
      if (symbol == "@" || symbol == "@i") node.parents.push_back(target + "-" + target_pos);
    }
    nodes[offset + "-" + pos] = std::move(node);
  }
}

}  // namespace

Taxonomy Taxonomy::from_wordnet_data(std::string_view text, const std::string& source_name) {
  std::map<SynsetId, Node> nodes;
  parse_wordnet_into(text, source_name, nodes);
  return from_nodes(std::move(nodes));
}

Taxonomy Taxonomy::load(const std::vector<std::string>& files) {
  std::map<SynsetId, Node> nodes;
  bool any_data = false;
  for (const auto& f : files) {
    const std::string name = std::filesystem::path(f).filename().string();
    if (std::filesystem::path(f).extension() == ".json") {
      if (files.size() != 1) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "a JSON taxonomy must be loaded alone");
      return from_json(read_file(f));
    }
    if (name.rfind("index.", 0) == 0) continue;
    parse_wordnet_into(read_file(f), f, nodes);
    any_data = true;
  }
  if (!any_data) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "no taxonomy data file given");
  return from_nodes(std::move(nodes));
}

std::size_t Taxonomy::depth(const SynsetId& id) const {
  auto it = depth_.find(id);
  if (it == depth_.end()) fail(ErrorCode::kNotFound, "UnknownSynset", "no synset '" + id + "'");
  return it->second;
}

std::set<SynsetId> Taxonomy::ancestors_or_self(const SynsetId& id) const {
  if (!contains(id)) fail(ErrorCode::kNotFound, "UnknownSynset", "no synset '" + id + "'");
  std::set<SynsetId> seen{id};
  std::vector<SynsetId> stack{id};
  while (!stack.empty()) {
    SynsetId cur = std::move(stack.back());
    stack.pop_back();
    for (const auto& p : nodes_.at(cur).parents) {
      if (seen.insert(p).second) stack.push_back(p);
    }
  }
  return seen;
}

std::vector<SynsetId> Taxonomy::synsets_for(std::string_view lemma) const {
  auto it = lemma_index_.find(to_lower(lemma));
  return it == lemma_index_.end() ? std::vector<SynsetId>{} : it->second;
}

double Taxonomy::wup(const SynsetId& a, const SynsetId& b) const {
  const auto anc_a = ancestors_or_self(a);
  const auto anc_b = ancestors_or_self(b);
  std::size_t lcs_depth = 0;
  for (const auto& x : anc_a) {
    if (anc_b.count(x)) lcs_depth = std::max(lcs_depth, depth(x));
  }
  const double v = 2.0 * static_cast<double>(lcs_depth) / static_cast<double>(depth(a) + depth(b));
  return std::min(1.0, v);
}

double word_similarity(const std::string& a, const std::string& b, const Taxonomy& tax, double threshold) {
  double s = 0.0;
  if (a == b) {
    s = 1.0;
  } else {
    const auto sa = tax.synsets_for(a);
    const auto sb = tax.synsets_for(b);
    for (const auto& x : sa)
      for (const auto& y : sb) s = std::max(s, tax.wup(x, y));
  }
  return s < threshold ? s * kWupsScale : s;
}

double wups_score(std::string_view candidate, std::string_view reference, const Taxonomy& tax, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "threshold must lie in [0,1]");
  }
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;

  auto directed = [&](const std::vector<std::string>& from, const std::vector<std::string>& to) {
    double prod = 1.0;
    for (const auto& x : from) {
      double best = 0.0;
      for (const auto& y : to) best = std::max(best, word_similarity(x, y, tax, threshold));
      prod *= best;
    }
    return prod;
  };
  return std::min(directed(cand, ref), directed(ref, cand));
}

}  // namespace webvln
