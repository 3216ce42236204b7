#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "webvln/llm_client.hpp"
#include "webvln/simulator.hpp"

namespace webvln {

struct QAPair {
  std::string question;
  std::string answer;
  PageId source_page_id;

  bool operator==(const QAPair&) const = default;
};

struct SampledPath {
  std::vector<PageId> path;
  PageId target_page_id;
};

// Distinct targets reachable in at least two transitions, drawn uniformly
// without replacement. Returns fewer than n when the site has fewer eligible
// targets. Throws NotEnoughTargets when none exist.
std::vector<SampledPath> sample_paths(const NavGraph& graph, std::size_t n, std::uint64_t seed);

// The seven QA-generation instructions (five content rules, two noise rules).
const std::vector<std::string>& default_rules();

std::string build_prompt(const std::string& caption, const std::vector<std::string>& words,
                         const std::vector<std::string>& rules);

// Accepts "Q1: ... A1: ...", "Q: ...\nA: ...", "Question 1: ...\nAnswer 1: ..." forms.
std::vector<QAPair> parse_qa_response(const std::string& llm_output, const PageId& source_page_id = {});

struct SplitFractions {
  double train = 0.6;
  double val = 0.1;
  double test = 0.3;
};

// Labels records train/val/test so that records sharing a path land in the
// same split and split sizes hit the fractions as closely as grouping allows.
void assign_splits(std::vector<EpisodeRecord>& records, std::uint64_t seed, SplitFractions fractions = {});

struct GenerationOptions {
  std::vector<std::string> rules = default_rules();
  Stoplist stoplist = Stoplist::defaults();
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

struct GenerationReport {
  std::vector<std::string> skipped;  // one line per dropped target or pair
  std::size_t prompts_sent = 0;
};

std::vector<EpisodeRecord> generate_records(const NavGraph& graph, const std::vector<SampledPath>& paths,
                                            LlmClient& llm, Captioner* captioner, const GenerationOptions& options,
                                            GenerationReport* report = nullptr);

// k records per site, seeded, for manual review.
std::vector<EpisodeRecord> quality_sample(const std::vector<EpisodeRecord>& records, std::size_t k, std::uint64_t seed);

}  // namespace webvln
