#include "webvln/agents.hpp"

#include <algorithm>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>

#include "webvln/error.hpp"
#include "webvln/text.hpp"

namespace webvln {
namespace {

std::set<std::string> overlap_tokens(std::string_view text) {
  std::set<std::string> out;
  for (const auto& w : split_whitespace(to_lower(text))) {
    std::string t = strip_edge_punctuation(w);
    if (!t.empty()) out.insert(std::move(t));
  }
  return out;
}

std::size_t overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  for (const auto& w : a) n += b.count(w);
  return n;
}

AgentDecision stop_with(const Observation& obs, std::string answer) {
  return AgentDecision{obs.stop_index(), std::move(answer), false};
}

std::string best_block(const WebPage& page, const std::set<std::string>& query) {
  std::string best;
  std::size_t best_score = 0;
  for (const auto& block : page.text_blocks) {
    const std::size_t s = overlap(overlap_tokens(block), query);
    if (best.empty() || s > best_score) {
      best = block;
      best_score = s;
    }
  }
  return best;
}

std::string candidate_label(const Button& b) {
  if (!b.description.empty()) return b.description;
  return std::filesystem::path(b.image_ref).stem().string();
}

}  // namespace

std::string Agent::forced_answer(const EpisodeState&, const NavGraph&) { return {}; }

// ---------------------------------------------------------------- random

AgentDecision random_agent_step(const Observation& obs, Rng& rng, std::size_t steps_taken, std::size_t stop_after) {
  const std::size_t buttons = obs.candidates.size() - 1;
  if (steps_taken >= stop_after || buttons == 0) return stop_with(obs, "");
  return AgentDecision{static_cast<std::size_t>(uniform_index(rng, buttons)), std::nullopt, false};
}

void RandomAgent::begin(const EpisodeRecord&, const NavGraph&) {
  stop_after_ = kRandomMinSteps + static_cast<std::size_t>(uniform_index(rng_, kRandomMaxSteps - kRandomMinSteps + 1));
}

AgentDecision RandomAgent::act(const EpisodeState& state, const Observation& obs, const NavGraph&) {
  return random_agent_step(obs, rng_, state.t, stop_after_);
}

// ---------------------------------------------------------------- greedy

AgentDecision greedy_agent_step(const Observation& obs, const WebPage& page, const std::string& question,
                                const std::string& description) {
  const auto query = overlap_tokens(question + " " + description);
  const std::size_t buttons = obs.candidates.size() - 1;
  std::size_t best = 0, best_score = 0;
  for (std::size_t i = 0; i < buttons; ++i) {
    const auto& click = std::get<ClickButton>(obs.candidates[i]);
    const std::size_t s = overlap(overlap_tokens(click.button.description), query);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  std::string words;
  for (const auto& w : page.word_list) words += w + " ";
  const std::size_t page_score = overlap(overlap_tokens(words), query);
  if (buttons == 0 || page_score > best_score) return stop_with(obs, best_block(page, query));
  return AgentDecision{best, std::nullopt, false};
}

void GreedyAgent::begin(const EpisodeRecord& record, const NavGraph&) {
  question_ = record.question;
  description_ = record.description;
}

AgentDecision GreedyAgent::act(const EpisodeState&, const Observation& obs, const NavGraph& graph) {
  return greedy_agent_step(obs, graph.page(obs.page_id), question_, description_);
}

std::string GreedyAgent::forced_answer(const EpisodeState& state, const NavGraph& graph) {
  return best_block(graph.page(state.current_page_id), overlap_tokens(question_ + " " + description_));
}

// ---------------------------------------------------------------- oracle

void OracleAgent::begin(const EpisodeRecord& record, const NavGraph& graph) {
  validate_record(record, graph);
  record_ = record;
}

AgentDecision OracleAgent::act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) {
  if (state.t + 1 >= record_.path.size()) return stop_with(obs, record_.answer);
  const auto idx = graph.button_index(record_.path[state.t], record_.path[state.t + 1]);
  if (!idx) fail(ErrorCode::kState, "RecordGraphMismatch", "no button along the ground-truth path");
  return AgentDecision{*idx, std::nullopt, false};
}

std::string OracleAgent::forced_answer(const EpisodeState&, const NavGraph&) { return record_.answer; }

// ---------------------------------------------------------------- LLM

std::string format_observation(const Observation& obs, const std::vector<HistoryEntry>& history) {
  std::ostringstream out;
  out << "Current page: " << obs.page_id << "\n";
  out << "Candidates:\n";
  for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
    out << "[" << i << "] ";
    if (const auto* click = std::get_if<ClickButton>(&obs.candidates[i])) {
      out << candidate_label(click->button);
    } else {
      out << "[stop]";
    }
    out << "\n";
  }
  out << "History:";
  if (history.empty()) out << " none";
  for (const auto& h : history) out << " " << h.page_id << "[" << h.action_index << "]";
  out << "\n";
  return out.str();
}

std::string llm_agent_prompt(const Observation& obs, const std::vector<HistoryEntry>& history,
                             const std::string& question, const std::string& description) {
  std::ostringstream out;
  out << "You are browsing a shopping website to answer a question.\n";
  out << "Question: " << question << "\n";
  if (!description.empty()) out << "Description: " << description << "\n";
  out << "Reply with the bracketed index of the candidate to click, for example [0].\n";
  out << "When the current page answers the question, reply [stop] followed by the answer.\n\n";
  out << format_observation(obs, history);
  return out.str();
}

std::optional<AgentDecision> parse_agent_reply(const std::string& reply, const Observation& obs) {
  static const std::regex kToken(R"(\[\s*(\d+|stop)\s*\])", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(reply, m, kToken)) return std::nullopt;
  const std::string token = to_lower(m[1].str());
  const std::string rest = trim(m.suffix().str());
  if (token == "stop") return stop_with(obs, rest);
  std::size_t idx = 0;
  try {
    idx = std::stoul(token);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (idx >= obs.candidates.size()) return std::nullopt;
  if (idx == obs.stop_index()) return stop_with(obs, rest);
  return AgentDecision{idx, std::nullopt, false};
}

AgentDecision llm_agent_step(const Observation& obs, const std::vector<HistoryEntry>& history,
                             const std::string& question, const std::string& description, LlmClient& client) {
  const std::string prompt = llm_agent_prompt(obs, history, question, description);
  std::string reply;
  for (int attempt = 0; attempt < 2; ++attempt) {
    reply = client.complete(prompt);
    if (auto d = parse_agent_reply(reply, obs)) return *d;
  }
  AgentDecision d = stop_with(obs, trim(reply));
  d.fallback = true;
  return d;
}

void LlmAgent::begin(const EpisodeRecord& record, const NavGraph&) {
  question_ = record.question;
  description_ = record.description;
}

AgentDecision LlmAgent::act(const EpisodeState& state, const Observation& obs, const NavGraph&) {
  return llm_agent_step(obs, state.history, question_, description_, client_);
}

// ---------------------------------------------------------------- learned

FeatureCache& LearnedAgent::cache_for(const NavGraph& graph) {
  auto& slot = caches_[&graph];
  if (!slot) slot = std::make_unique<FeatureCache>(graph, model_.config().patches);
  return *slot;
}

void LearnedAgent::begin(const EpisodeRecord& record, const NavGraph&) {
  ad::Tape<float> tape(model_.tensors().size());
  const auto init = model_.init_state(tape, vocab_.encode(record.question), vocab_.encode(record.description));
  state_ = tape.value(init.state);
  language_ = tape.value(init.language);
  last_p_.clear();
}

AgentDecision LearnedAgent::act(const EpisodeState&, const Observation& obs, const NavGraph& graph) {
  const PageFeatures page = cache_for(graph).page(obs.page_id, vocab_);
  ad::Tape<float> tape(model_.tensors().size());
  const auto nav = model_.nav_step(tape, tape.constant(state_), tape.constant(language_),
                                   model_.screenshot_tokens(tape, page.screenshot_patches),
                                   model_.button_tokens(tape, page.buttons));
  state_ = tape.value(nav.state);
  const Matrix<float> p = ad::Tape<float>::softmax_rows(tape.value(nav.logits));
  last_p_.assign(p.data(), p.data() + p.size());
  Eigen::Index best = 0;
  p.row(0).maxCoeff(&best);
  const auto idx = static_cast<std::size_t>(best);
  if (idx == obs.stop_index()) {
    return stop_with(obs, vocab_.decode(model_.decode_greedy(state_, model_.config().max_answer_len)));
  }
  return AgentDecision{idx, std::nullopt, false};
}

std::string LearnedAgent::forced_answer(const EpisodeState&, const NavGraph&) {
  return vocab_.decode(model_.decode_greedy(state_, model_.config().max_answer_len));
}

}  // namespace webvln
