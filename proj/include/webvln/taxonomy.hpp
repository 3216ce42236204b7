#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace webvln {

using SynsetId = std::string;

// Hypernym taxonomy for Wu-Palmer similarity. Depth convention: roots have
// depth 1, any other synset 1 + the minimum depth over its parents.
class Taxonomy {
 public:
  struct Node {
    std::set<std::string> lemmas;
    std::vector<SynsetId> parents;
  };

  static constexpr std::string_view kVirtualRoot = "-virtual-root-";

  Taxonomy() = default;

  // Validates (unknown parents -> ParseError, cycles -> CycleDetected) and
  // joins multiple roots under a virtual root.
  static Taxonomy from_nodes(std::map<SynsetId, Node> nodes);

  // {"nodes": {id: {"lemmas": [...], "parents": [...]}}} or the node map at top
  // level; "parent" (string) is accepted for "parents", lemmas default to [id].
  static Taxonomy from_json(std::string_view text);

  // Lexical-database noun data file (data.noun layout). Hypernym pointers
  // '@' and '@i' become parents.
  static Taxonomy from_wordnet_data(std::string_view text, const std::string& source_name = "data.noun");

  // Dispatches on file name: *.json, data.* (index.* files are accepted and
  // ignored since data files carry lemmas). Multiple data files are merged.
  static Taxonomy load(const std::vector<std::string>& files);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  bool contains(const SynsetId& id) const { return nodes_.count(id) > 0; }
  const std::map<SynsetId, Node>& nodes() const { return nodes_; }
  const std::set<SynsetId>& roots() const { return roots_; }
  std::size_t depth(const SynsetId& id) const;
  std::set<SynsetId> ancestors_or_self(const SynsetId& id) const;
  std::vector<SynsetId> synsets_for(std::string_view lemma) const;

  // 2 * depth(lcs) / (depth(a) + depth(b)), lcs = deepest common subsumer,
  // capped at 1 (a deep secondary parent can otherwise push it above 1).
  double wup(const SynsetId& a, const SynsetId& b) const;

 private:
  std::map<SynsetId, Node> nodes_;
  std::set<SynsetId> roots_;
  std::map<SynsetId, std::size_t> depth_;
  std::map<std::string, std::vector<SynsetId>> lemma_index_;
};

inline constexpr double kWupsScale = 0.1;

// Word-pair similarity: max wup over synset pairs; tokens outside the
// taxonomy only match themselves. Below-threshold values are scaled by 0.1.
double word_similarity(const std::string& a, const std::string& b, const Taxonomy& tax, double threshold);

// min(prod_a max_t s(a,t), prod_t max_a s(a,t)) over tokenized answers.
double wups_score(std::string_view candidate, std::string_view reference, const Taxonomy& tax, double threshold);

}  // namespace webvln
