#include "webvln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "webvln/error.hpp"

using nlohmann::json;

namespace webvln {
namespace {

const EpisodeRecord& lookup(const RecordIndex& records, const std::string& id) {
  auto it = records.find(id);
  if (it == records.end()) fail(ErrorCode::kNotFound, "UnknownRecord", "no record '" + id + "'");
  return it->second;
}

std::size_t optimal_transitions(const NavGraph& graph, const PageId& target, bool* reachable) {
  auto path = shortest_path(graph, graph.homepage_id(), target);
  *reachable = path.has_value();
  return path ? path->size() - 1 : 0;
}

}  // namespace

RecordIndex index_records(const std::vector<EpisodeRecord>& records) {
  RecordIndex idx;
  for (const auto& r : records) idx.emplace(r.record_id, r);
  return idx;
}

EpisodeScores score_episode(const Trajectory& tr, const EpisodeRecord& record, const NavGraph& graph,
                            const Taxonomy& taxonomy) {
  EpisodeScores s;
  const PageId& target = record.target_page_id();
  s.success = tr.stopped_page_id == target;
  s.oracle_success = std::find(tr.visited.begin(), tr.visited.end(), target) != tr.visited.end();
  s.tl = tr.transitions();
  bool reachable = false;
  const std::size_t d_star = optimal_transitions(graph, target, &reachable);
  if (s.success && reachable) {
    s.spl = d_star == 0 ? 1.0 : static_cast<double>(d_star) / static_cast<double>(std::max(d_star, s.tl));
  }
  const std::string answer = tr.answer.value_or("");
  s.wups09 = wups_score(answer, record.answer, taxonomy, 0.9);
  s.wups00 = wups_score(answer, record.answer, taxonomy, 0.0);
  return s;
}

NavScores nav_metrics(const std::vector<Trajectory>& trajectories, const RecordIndex& records, const NavGraph& graph) {
  return nav_metrics(trajectories, records, GraphLookup([&](const std::string&) -> const NavGraph& { return graph; }));
}

NavScores nav_metrics(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                      const GraphLookup& graphs) {
  NavScores out;
  if (trajectories.empty()) return out;
  for (const auto& tr : trajectories) {
    const auto& rec = lookup(records, tr.record_id);
    const NavGraph& graph = graphs(rec.site_id);
    const PageId& target = rec.target_page_id();
    const bool success = tr.stopped_page_id == target;
    out.sr += success;
    out.osr += std::find(tr.visited.begin(), tr.visited.end(), target) != tr.visited.end();
    bool reachable = false;
    const std::size_t d_star = optimal_transitions(graph, target, &reachable);
    if (success && reachable) {
      out.spl += d_star == 0 ? 1.0 : static_cast<double>(d_star) / static_cast<double>(std::max(d_star, tr.transitions()));
    }
    out.tl += static_cast<double>(tr.transitions());
  }
  const auto n = static_cast<double>(trajectories.size());
  out.sr /= n;
  out.osr /= n;
  out.spl /= n;
  out.tl /= n;
  return out;
}

double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& pairs, int max_n) {
  if (max_n < 1) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "max_n must be positive");
  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  double cand_len = 0, ref_len = 0;
  for (const auto& [c, r] : pairs) {
    const auto ct = tokenize(c);
    const auto rt = tokenize(r);
    cand_len += static_cast<double>(ct.size());
    ref_len += static_cast<double>(rt.size());
    for (int n = 1; n <= max_n; ++n) {
      std::map<std::vector<std::string>, int> ref_counts, cand_counts;
      for (std::size_t i = 0; i + n <= rt.size(); ++i) ++ref_counts[{rt.begin() + i, rt.begin() + i + n}];
      for (std::size_t i = 0; i + n <= ct.size(); ++i) ++cand_counts[{ct.begin() + i, ct.begin() + i + n}];
      for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        matched[n - 1] += std::min(count, it == ref_counts.end() ? 0 : it->second);
        total[n - 1] += count;
      }
    }
  }
  if (cand_len == 0) return 0.0;
  double log_sum = 0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * std::exp(log_sum / max_n);
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  return corpus_bleu({{std::string(candidate), std::string(reference)}}, max_n);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  if (c.empty() || r.empty()) return c.empty() && r.empty() ? 1.0 : 0.0;
  std::vector<std::vector<std::size_t>> dp(c.size() + 1, std::vector<std::size_t>(r.size() + 1, 0));
  for (std::size_t i = 1; i <= c.size(); ++i)
    for (std::size_t j = 1; j <= r.size(); ++j)
      dp[i][j] = c[i - 1] == r[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
  const double lcs = static_cast<double>(dp[c.size()][r.size()]);
  if (lcs == 0) return 0.0;
  const double p = lcs / static_cast<double>(c.size());
  const double rec = lcs / static_cast<double>(r.size());
  const double b2 = kRougeBeta * kRougeBeta;
  return (1 + b2) * p * rec / (rec + b2 * p);
}

MetricsReport compute_report(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                             const NavGraph& graph, const Taxonomy& taxonomy) {
  return compute_report(trajectories, records,
                        GraphLookup([&](const std::string&) -> const NavGraph& { return graph; }), taxonomy);
}

MetricsReport compute_report(const std::vector<Trajectory>& trajectories, const RecordIndex& records,
                             const GraphLookup& graphs, const Taxonomy& taxonomy) {
  MetricsReport rep;
  rep.n = trajectories.size();
  rep.nav = nav_metrics(trajectories, records, graphs);
  if (trajectories.empty()) return rep;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& tr : trajectories) {
    const auto& rec = lookup(records, tr.record_id);
    const std::string answer = tr.answer.value_or("");
    rep.wups09 += wups_score(answer, rec.answer, taxonomy, 0.9);
    rep.wups00 += wups_score(answer, rec.answer, taxonomy, 0.0);
    rep.rouge_l += rouge_l(answer, rec.answer);
    pairs.emplace_back(answer, rec.answer);
  }
  const auto n = static_cast<double>(trajectories.size());
  rep.wups09 /= n;
  rep.wups00 /= n;
  rep.rouge_l /= n;
  rep.bleu1 = corpus_bleu(pairs, 1);
  rep.bleu4 = corpus_bleu(pairs, 4);
  return rep;
}

std::string report_to_json(const MetricsReport& r) {
  json j{{"n", r.n},           {"sr", r.nav.sr},         {"osr", r.nav.osr},   {"spl", r.nav.spl},
         {"tl", r.nav.tl},     {"wups09", r.wups09},     {"wups00", r.wups00}, {"bleu1", r.bleu1},
         {"bleu4", r.bleu4},   {"rougeL", r.rouge_l}};
  return j.dump(2);
}

MetricsReport report_from_json(std::string_view text) {
  const json j = json::parse(text);
  MetricsReport r;
  r.n = j.at("n").get<std::size_t>();
  r.nav.sr = j.at("sr").get<double>();
  r.nav.osr = j.at("osr").get<double>();
  r.nav.spl = j.at("spl").get<double>();
  r.nav.tl = j.at("tl").get<double>();
  r.wups09 = j.at("wups09").get<double>();
  r.wups00 = j.at("wups00").get<double>();
  r.bleu1 = j.value("bleu1", 0.0);
  r.bleu4 = j.value("bleu4", 0.0);
  r.rouge_l = j.value("rougeL", 0.0);
  return r;
}

std::string report_to_table(const MetricsReport& r, const std::string& label) {
  char buf[512];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-12s %7s %7s %7s %7s %8s %8s %7s %7s %7s %6s\n", "", "SR", "OSR", "SPL", "TL",
                "WUPS0.9", "WUPS0.0", "B@1", "B@4", "R", "n");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-12s %7.2f %7.2f %7.2f %7.2f %8.2f %8.2f %7.2f %7.2f %7.2f %6zu\n", label.c_str(),
                100 * r.nav.sr, 100 * r.nav.osr, 100 * r.nav.spl, r.nav.tl, 100 * r.wups09, 100 * r.wups00,
                100 * r.bleu1, 100 * r.bleu4, 100 * r.rouge_l, r.n);
  out << buf;
  return out.str();
}

}  // namespace webvln
