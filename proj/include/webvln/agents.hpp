#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "webvln/llm_client.hpp"
#include "webvln/model.hpp"
#include "webvln/rng.hpp"
#include "webvln/simulator.hpp"

namespace webvln {

struct AgentDecision {
  std::size_t action_index = 0;
  std::optional<std::string> answer;  // set when the decision stops
  bool fallback = false;              // LLM reply unusable, stop forced by the agent
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual void begin(const EpisodeRecord& record, const NavGraph& graph) = 0;
  virtual AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) = 0;
  // Answer after the simulator forced a stop.
  virtual std::string forced_answer(const EpisodeState& state, const NavGraph& graph);
};

inline constexpr std::size_t kRandomMinSteps = 3;
inline constexpr std::size_t kRandomMaxSteps = 8;

// Uniform button until `steps_taken` reaches `stop_after`; pages without
// buttons stop immediately.
AgentDecision random_agent_step(const Observation& obs, Rng& rng, std::size_t steps_taken, std::size_t stop_after);

// Overlap between the question + description and each candidate description.
AgentDecision greedy_agent_step(const Observation& obs, const WebPage& page, const std::string& question,
                                const std::string& description);

// Rendered candidate list for prompt-driven agents.
std::string format_observation(const Observation& obs, const std::vector<HistoryEntry>& history);
std::string llm_agent_prompt(const Observation& obs, const std::vector<HistoryEntry>& history,
                             const std::string& question, const std::string& description);

// First bracketed token of a reply; nullopt when unusable.
std::optional<AgentDecision> parse_agent_reply(const std::string& reply, const Observation& obs);

AgentDecision llm_agent_step(const Observation& obs, const std::vector<HistoryEntry>& history,
                             const std::string& question, const std::string& description, LlmClient& client);

class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "random"; }
  void begin(const EpisodeRecord& record, const NavGraph& graph) override;
  AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) override;
  std::size_t stop_after() const { return stop_after_; }

 private:
  Rng rng_;
  std::size_t stop_after_ = kRandomMinSteps;
};

class GreedyAgent : public Agent {
 public:
  std::string name() const override { return "greedy"; }
  void begin(const EpisodeRecord& record, const NavGraph& graph) override;
  AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) override;
  std::string forced_answer(const EpisodeState& state, const NavGraph& graph) override;

 private:
  std::string question_, description_;
};

// Follows the ground-truth path and answers with the gold text.
class OracleAgent : public Agent {
 public:
  std::string name() const override { return "oracle"; }
  void begin(const EpisodeRecord& record, const NavGraph& graph) override;
  AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) override;
  std::string forced_answer(const EpisodeState& state, const NavGraph& graph) override;

 private:
  EpisodeRecord record_;
};

class LlmAgent : public Agent {
 public:
  explicit LlmAgent(LlmClient& client) : client_(client) {}
  std::string name() const override { return "llm"; }
  void begin(const EpisodeRecord& record, const NavGraph& graph) override;
  AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) override;

 private:
  LlmClient& client_;
  std::string question_, description_;
};

// Argmax navigation with the toy model; answers are decoded from the state
// at which [EOA] was chosen.
class LearnedAgent : public Agent {
 public:
  LearnedAgent(const Model<float>& model, const Vocab& vocab) : model_(model), vocab_(vocab) {}
  std::string name() const override { return "learned"; }
  void begin(const EpisodeRecord& record, const NavGraph& graph) override;
  AgentDecision act(const EpisodeState& state, const Observation& obs, const NavGraph& graph) override;
  std::string forced_answer(const EpisodeState& state, const NavGraph& graph) override;

  // Action distribution of the last act() call.
  const std::vector<float>& last_probabilities() const { return last_p_; }

 private:
  FeatureCache& cache_for(const NavGraph& graph);

  const Model<float>& model_;
  const Vocab& vocab_;
  std::map<const NavGraph*, std::unique_ptr<FeatureCache>> caches_;
  Matrix<float> state_, language_;
  std::vector<float> last_p_;
};

}  // namespace webvln
