#include "webvln/simulator.hpp"

#include "webvln/error.hpp"

namespace webvln {

bool Observation::operator==(const Observation& o) const {
  if (page_id != o.page_id || screenshot_ref != o.screenshot_ref || candidates.size() != o.candidates.size()) {
    return false;
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].index() != o.candidates[i].index()) return false;
    if (auto* a = std::get_if<ClickButton>(&candidates[i])) {
      const auto& b = std::get<ClickButton>(o.candidates[i]);
      if (a->button_index != b.button_index || !(a->button == b.button)) return false;
    }
  }
  return true;
}

void validate_record(const EpisodeRecord& record, const NavGraph& graph) {
  auto mismatch = [&](const std::string& why) {
    fail(ErrorCode::kInvalidArgument, "RecordGraphMismatch", "record '" + record.record_id + "': " + why);
  };
  if (record.path.size() < kMinTransitions + 1) mismatch("path has fewer than 2 transitions");
  if (record.path.front() != graph.homepage_id()) mismatch("path does not start at the homepage");
  for (const auto& p : record.path) {
    if (!graph.contains(p)) mismatch("unknown page '" + p + "'");
  }
  for (std::size_t i = 0; i + 1 < record.path.size(); ++i) {
    if (!graph.button_index(record.path[i], record.path[i + 1])) {
      mismatch("no edge " + record.path[i] + " -> " + record.path[i + 1]);
    }
  }
}

EpisodeState reset(const NavGraph& graph, const EpisodeRecord& record, std::size_t max_steps) {
  validate_record(record, graph);
  if (max_steps == 0) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "max_steps must be positive");
  EpisodeState s;
  s.record = record;
  s.current_page_id = graph.homepage_id();
  s.max_steps = max_steps;
  s.visited = {graph.homepage_id()};
  return s;
}

Observation observe(const EpisodeState& state, const NavGraph& graph) {
  if (state.done) fail(ErrorCode::kState, "EpisodeFinished", "episode '" + state.record.record_id + "' is done");
  const WebPage& page = graph.page(state.current_page_id);
  Observation obs;
  obs.page_id = page.page_id;
  obs.screenshot_ref = page.screenshot_ref;
  obs.candidates.reserve(page.buttons.size() + 1);
  for (std::size_t i = 0; i < page.buttons.size(); ++i) obs.candidates.emplace_back(ClickButton{i, page.buttons[i]});
  obs.candidates.emplace_back(StopEOA{});
  return obs;
}

EpisodeState step(const EpisodeState& state, std::size_t action_index, const NavGraph& graph) {
  if (state.done) fail(ErrorCode::kState, "EpisodeFinished", "episode '" + state.record.record_id + "' is done");
  const WebPage& page = graph.page(state.current_page_id);
  const std::size_t n = page.buttons.size() + 1;
  if (action_index >= n) {
    fail(ErrorCode::kInvalidArgument, "InvalidActionIndex",
         "index " + std::to_string(action_index) + " out of " + std::to_string(n) + " candidates");
  }
  EpisodeState next = state;
  next.history.push_back({state.current_page_id, action_index});
  if (action_index == n - 1) {
    next.done = true;
    return next;
  }
  next.current_page_id = page.buttons[action_index].target_page_id;
  next.visited.push_back(next.current_page_id);
  next.t += 1;
  if (next.t >= next.max_steps) {
    next.done = true;
    next.forced_stop = true;
  }
  return next;
}

Trajectory finish_with_answer(const EpisodeState& state, std::string answer) {
  if (!state.done) {
    fail(ErrorCode::kState, "EpisodeNotFinished", "episode '" + state.record.record_id + "' has not stopped");
  }
  Trajectory tr;
  tr.record_id = state.record.record_id;
  tr.visited = state.visited;
  for (const auto& h : state.history) tr.action_indices.push_back(h.action_index);
  tr.answer = std::move(answer);
  tr.stopped_page_id = state.current_page_id;
  tr.forced_stop = state.forced_stop;
  return tr;
}

EpisodeState replay(const NavGraph& graph, const EpisodeRecord& record, const std::vector<std::size_t>& action_indices,
                    std::size_t max_steps) {
  EpisodeState s = reset(graph, record, max_steps);
  for (std::size_t idx : action_indices) s = step(s, idx, graph);
  return s;
}

}  // namespace webvln
