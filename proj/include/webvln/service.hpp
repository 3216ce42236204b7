#pragma once

#include <memory>
#include <string>
#include <vector>

#include "webvln/harness.hpp"

namespace webvln {

struct ServiceConfig {
  ServeSettings settings;
  std::string reports_dir;   // GET /reports/{run_id} reads <reports_dir>/<run_id>/report.json
  std::string session_log;   // finished sessions appended as JSONL, empty = none
  std::size_t max_steps = kDefaultMaxSteps;
  std::uint64_t seed = 0;    // record choice when none is requested
};

// HTTP session service. Each session is mutated by one request at a time;
// a concurrent request on the same session gets 409.
class Service {
 public:
  Service(const GraphSet& graphs, std::vector<EpisodeRecord> records, const Taxonomy& taxonomy, ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds (port 0 picks a free one) and serves on a background thread.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace webvln
