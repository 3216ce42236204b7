#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "webvln/site_graph.hpp"

namespace webvln {

struct EpisodeRecord {
  std::string record_id;
  std::string site_id;
  std::string question;
  std::string description;  // may be empty
  std::string answer;
  std::vector<PageId> path;  // ground truth, starts at the homepage
  std::string split;         // train | val | test, empty when unassigned

  const PageId& target_page_id() const { return path.back(); }
  std::size_t transitions() const { return path.empty() ? 0 : path.size() - 1; }

  bool operator==(const EpisodeRecord&) const = default;
};

inline constexpr std::size_t kMinTransitions = 2;
inline constexpr std::size_t kDefaultMaxSteps = 10;

// Throws Error{kInvalidArgument, "RecordGraphMismatch"} when the record does
// not fit the graph.
void validate_record(const EpisodeRecord& record, const NavGraph& graph);

struct ClickButton {
  std::size_t button_index = 0;
  Button button;
};
struct StopEOA {};
using Action = std::variant<ClickButton, StopEOA>;

inline bool is_stop(const Action& a) { return std::holds_alternative<StopEOA>(a); }

struct Observation {
  PageId page_id;
  std::string screenshot_ref;
  std::vector<Action> candidates;  // page buttons in order, then StopEOA

  std::size_t stop_index() const { return candidates.size() - 1; }
  bool operator==(const Observation& o) const;
};

struct HistoryEntry {
  PageId page_id;
  std::size_t action_index = 0;
  bool operator==(const HistoryEntry&) const = default;
};

struct EpisodeState {
  EpisodeRecord record;
  PageId current_page_id;
  std::size_t t = 0;
  std::size_t max_steps = kDefaultMaxSteps;
  bool done = false;
  bool forced_stop = false;
  std::vector<PageId> visited;
  std::vector<HistoryEntry> history;

  bool operator==(const EpisodeState&) const = default;
};

struct Trajectory {
  std::string record_id;
  std::vector<PageId> visited;
  std::vector<std::size_t> action_indices;
  std::optional<std::string> answer;
  PageId stopped_page_id;
  bool forced_stop = false;

  std::size_t transitions() const { return visited.empty() ? 0 : visited.size() - 1; }
  bool operator==(const Trajectory&) const = default;
};

EpisodeState reset(const NavGraph& graph, const EpisodeRecord& record, std::size_t max_steps = kDefaultMaxSteps);
Observation observe(const EpisodeState& state, const NavGraph& graph);
EpisodeState step(const EpisodeState& state, std::size_t action_index, const NavGraph& graph);
Trajectory finish_with_answer(const EpisodeState& state, std::string answer);

// Re-executes logged action indices from reset.
EpisodeState replay(const NavGraph& graph, const EpisodeRecord& record, const std::vector<std::size_t>& action_indices,
                    std::size_t max_steps = kDefaultMaxSteps);

}  // namespace webvln
