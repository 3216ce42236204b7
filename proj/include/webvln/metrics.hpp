#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "webvln/simulator.hpp"
#include "webvln/taxonomy.hpp"

namespace webvln {

struct NavScores {
  double sr = 0;
  double osr = 0;
  double spl = 0;
  double tl = 0;  // mean page transitions
};

struct MetricsReport {
  NavScores nav;
  double wups09 = 0;
  double wups00 = 0;
  double bleu1 = 0;
  double bleu4 = 0;
  double rouge_l = 0;
  std::size_t n = 0;
};

struct EpisodeScores {
  bool success = false;
  bool oracle_success = false;
  double spl = 0;
  std::size_t tl = 0;
  double wups09 = 0;
  double wups00 = 0;
};

using RecordIndex = std::map<std::string, EpisodeRecord>;
// Site id -> graph, for datasets spanning several sites.
using GraphLookup = std::function<const NavGraph&(const std::string& site_id)>;

RecordIndex index_records(const std::vector<EpisodeRecord>& records);

// Throws Error{kNotFound, "UnknownRecord"} for unresolvable record ids.
NavScores nav_metrics(const std::vector<Trajectory>& trajectories, const RecordIndex& records, const NavGraph& graph);
NavScores nav_metrics(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                      const GraphLookup& graphs);

EpisodeScores score_episode(const Trajectory& trajectory, const EpisodeRecord& record, const NavGraph& graph,
                            const Taxonomy& taxonomy);

// Corpus BLEU with brevity penalty and uniform weights over 1..max_n grams.
double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& candidate_reference, int max_n);
double bleu(std::string_view candidate, std::string_view reference, int max_n);

inline constexpr double kRougeBeta = 1.2;
double rouge_l(std::string_view candidate, std::string_view reference);

MetricsReport compute_report(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                             const NavGraph& graph, const Taxonomy& taxonomy);
MetricsReport compute_report(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                             const GraphLookup& graphs, const Taxonomy& taxonomy);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view text);

// Aligned text table: SR OSR SPL TL WUPS0.9 WUPS0.0 B@1 B@4 R (fractions as percentages).
std::string report_to_table(const MetricsReport& report, const std::string& label = "run");

}  // namespace webvln
