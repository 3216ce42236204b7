#include "webvln/service.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/json_io.hpp"
#include "webvln/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace webvln {
namespace {

using Clock = std::chrono::steady_clock;

struct Session {
  std::string id;
  EpisodeRecord record;
  const NavGraph* graph = nullptr;
  EpisodeState state;
  std::string owner;
  std::string created_at;
  Clock::time_point last_used;
  std::optional<Trajectory> trajectory;
  std::mutex mu;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error_reply(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  reply(res, status, extra);
}

std::string site_segment(const std::string& site_id) { return site_id.empty() ? "_" : site_id; }

}  // namespace

struct Service::Impl {
  const GraphSet& graphs;
  std::vector<EpisodeRecord> records;
  std::map<std::string, std::size_t> by_id;
  const Taxonomy& taxonomy;
  ServiceConfig config;

  httplib::Server server;
  std::thread thread;
  int bound_port = -1;

  mutable std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mutex rng_mu;
  Rng rng;
  std::mt19937_64 id_rng{std::random_device{}()};
  std::map<std::string, std::set<std::string>> asset_refs;  // site segment -> servable refs

  Impl(const GraphSet& g, std::vector<EpisodeRecord> recs, const Taxonomy& tax, ServiceConfig cfg)
      : graphs(g), records(std::move(recs)), taxonomy(tax), config(std::move(cfg)), rng(config.seed) {
    for (std::size_t i = 0; i < records.size(); ++i) by_id.emplace(records[i].record_id, i);
    for (const auto& [id, graph] : graphs.all()) {
      auto& refs = asset_refs[site_segment(id)];
      for (const auto& [pid, page] : graph.pages()) {
        if (!page.screenshot_ref.empty()) refs.insert(page.screenshot_ref);
        for (const auto& b : page.buttons) {
          if (!b.image_ref.empty()) refs.insert(b.image_ref);
        }
      }
    }
    routes();
  }

  std::string asset_url(const NavGraph& graph, const std::string& ref) const {
    return "/assets/" + site_segment(graph.site_id()) + "/" + ref;
  }

  std::string new_session_id() {
    std::lock_guard lk(rng_mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(id_rng()));
    return buf;
  }

  void expire_idle() {
    const auto limit = std::chrono::duration<double>(config.settings.idle_seconds);
    const auto now = Clock::now();
    std::lock_guard lk(sessions_mu);
    for (auto it = sessions.begin(); it != sessions.end();) {
      std::unique_lock slk(it->second->mu, std::try_to_lock);
      if (slk.owns_lock() && now - it->second->last_used > limit) {
        slk.unlock();
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lk(sessions_mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  json observation_json(const Session& s) const {
    json j{{"session_id", s.id}, {"page_id", s.state.current_page_id}, {"done", s.state.done},
           {"t", s.state.t},     {"max_steps", s.state.max_steps},     {"forced_stop", s.state.forced_stop}};
    j["candidates"] = json::array();
    j["screenshot"] = nullptr;
    if (s.state.done) return j;
    const Observation obs = observe(s.state, *s.graph);
    if (!obs.screenshot_ref.empty()) j["screenshot"] = asset_url(*s.graph, obs.screenshot_ref);
    for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
      json c{{"index", i}};
      if (const auto* click = std::get_if<ClickButton>(&obs.candidates[i])) {
        c["kind"] = "button";
        c["description"] = click->button.description;
        c["image"] = click->button.image_ref.empty() ? json(nullptr) : json(asset_url(*s.graph, click->button.image_ref));
      } else {
        c["kind"] = "stop";
        c["description"] = "[EOA]";
        c["image"] = nullptr;
      }
      j["candidates"].push_back(std::move(c));
    }
    return j;
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw json::type_error::create(302, "request body must be an object", nullptr);
    return j;
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = body_of(req);
    } catch (const json::exception& e) {
      return error_reply(res, 400, std::string("malformed JSON: ") + e.what());
    }
    const std::string record_id = body.value("record_id", "");
    const std::string split = body.value("split", "");
    const std::string owner = body.value("owner", "human");
    const EpisodeRecord* rec = nullptr;
    if (!record_id.empty()) {
      auto it = by_id.find(record_id);
      if (it == by_id.end()) return error_reply(res, 404, "unknown record '" + record_id + "'");
      rec = &records[it->second];
    } else {
      std::vector<const EpisodeRecord*> pool;
      for (const auto& r : records) {
        if (split.empty() || split == "all" || r.split == split) pool.push_back(&r);
      }
      if (pool.empty()) return error_reply(res, 400, "no records for split '" + split + "'");
      std::lock_guard lk(rng_mu);
      rec = pool[uniform_index(rng, pool.size())];
    }
    auto s = std::make_shared<Session>();
    s->id = new_session_id();
    s->record = *rec;
    s->graph = &graphs.get(rec->site_id);
    s->state = reset(*s->graph, *rec, config.max_steps);
    s->owner = owner;
    s->created_at = utc_now();
    s->last_used = Clock::now();
    {
      std::lock_guard lk(sessions_mu);
      sessions.emplace(s->id, s);
    }
    reply(res, 201, {{"session_id", s->id},
                     {"record_id", rec->record_id},
                     {"question", rec->question},
                     {"description", rec->description},
                     {"owner", owner},
                     {"created_at", s->created_at}});
  }

  template <class Fn>
  void with_session(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    auto s = find(req.path_params.at("id"));
    if (!s) return error_reply(res, 404, "unknown session");
    std::unique_lock lk(s->mu, std::try_to_lock);
    if (!lk.owns_lock()) return error_reply(res, 409, "session busy");
    s->last_used = Clock::now();
    fn(*s);
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      expire_idle();
      const bool api = req.path.rfind("/sessions", 0) == 0 || req.path.rfind("/reports", 0) == 0;
      const std::string& token = config.settings.token;
      if (api && !token.empty()) {
        const bool ok = req.get_header_value("Authorization") == "Bearer " + token ||
                        req.get_header_value("X-Webvln-Token") == token;
        if (!ok) {
          error_reply(res, 401, "missing or wrong token");
          return httplib::Server::HandlerResponse::Handled;
        }
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        error_reply(res, 500, e.what());
      } catch (...) {
        error_reply(res, 500, "unknown error");
      }
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });

    server.Get("/sessions/:id/observation", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](Session& s) { reply(res, 200, observation_json(s)); });
    });

    server.Post("/sessions/:id/action", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](Session& s) {
        if (s.state.done) return error_reply(res, 409, "episode finished");
        json body;
        try {
          body = body_of(req);
        } catch (const json::exception& e) {
          return error_reply(res, 400, std::string("malformed JSON: ") + e.what());
        }
        const std::size_t count = observe(s.state, *s.graph).candidates.size();
        if (!body.contains("index") || !body["index"].is_number_integer() || body["index"].get<long long>() < 0 ||
            body["index"].get<long long>() >= static_cast<long long>(count)) {
          return error_reply(res, 400, "invalid action index", {{"candidate_count", count}});
        }
        s.state = step(s.state, body["index"].get<std::size_t>(), *s.graph);
        reply(res, 200, observation_json(s));
      });
    });

    server.Post("/sessions/:id/answer", [this](const httplib::Request& req, httplib::Response& res) {
      with_session(req, res, [&](Session& s) {
        if (!s.state.done) return error_reply(res, 409, "episode not finished");
        if (s.trajectory) return error_reply(res, 409, "answer already submitted");
        json body;
        try {
          body = body_of(req);
        } catch (const json::exception& e) {
          return error_reply(res, 400, std::string("malformed JSON: ") + e.what());
        }
        if (!body.contains("text") || !body["text"].is_string()) return error_reply(res, 400, "missing answer text");
        s.trajectory = finish_with_answer(s.state, body["text"].get<std::string>());
        const EpisodeScores sc = score_episode(*s.trajectory, s.record, *s.graph, taxonomy);
        json scores{{"success", sc.success},   {"oracle_success", sc.oracle_success}, {"spl", sc.spl},
                    {"tl", sc.tl},             {"wups09", sc.wups09},                 {"wups00", sc.wups00}};
        if (!config.session_log.empty()) {
          json row = *s.trajectory;
          row["session_id"] = s.id;
          row["owner"] = s.owner;
          append_jsonl(config.session_log, row);
        }
        reply(res, 200, {{"trajectory_id", s.id}, {"trajectory", *s.trajectory}, {"scores", scores}});
      });
    });

    server.Get("/reports/:run_id", [this](const httplib::Request& req, httplib::Response& res) {
      static const std::regex kSafe("[A-Za-z0-9_.-]+");
      const std::string run = req.path_params.at("run_id");
      if (!std::regex_match(run, kSafe) || run == "." || run == ".." || config.reports_dir.empty()) {
        return error_reply(res, 404, "unknown report");
      }
      const fs::path p = fs::path(config.reports_dir) / run / "report.json";
      if (!fs::is_regular_file(p)) return error_reply(res, 404, "unknown report");
      res.set_content(read_file(p.string()), "application/json");
    });

    server.Get(R"(/assets/([^/]+)/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string site = req.matches[1];
      const std::string ref = req.matches[2];
      auto it = asset_refs.find(site);
      if (it == asset_refs.end() || !it->second.count(ref)) return error_reply(res, 404, "unknown asset");
      const NavGraph& g = graphs.get(site == "_" ? std::string() : site);
      const std::string path = g.resolve_path(ref);
      if (!fs::is_regular_file(path)) return error_reply(res, 404, "asset missing on disk");
      const std::string ext = fs::path(path).extension().string();
      const char* type = ext == ".png" ? "image/png" : (ext == ".jpg" || ext == ".jpeg") ? "image/jpeg" : "application/octet-stream";
      res.set_content(read_file(path), type);
    });

    if (!config.settings.ui_dir.empty() && !server.set_mount_point("/", config.settings.ui_dir)) {
      fail(ErrorCode::kIo, "IoError", "UI directory not found: " + config.settings.ui_dir);
    }
  }
};

Service::Service(const GraphSet& graphs, std::vector<EpisodeRecord> records, const Taxonomy& taxonomy,
                 ServiceConfig config)
    : impl_(std::make_unique<Impl>(graphs, std::move(records), taxonomy, std::move(config))) {}

Service::~Service() { stop(); }

int Service::start() {
  const auto& s = impl_->config.settings;
  const int port = s.port == 0 ? impl_->server.bind_to_any_port(s.host)
                               : (impl_->server.bind_to_port(s.host, s.port) ? s.port : -1);
  if (port < 0) fail(ErrorCode::kIo, "IoError", "cannot bind " + s.host + ":" + std::to_string(s.port));
  impl_->bound_port = port;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::run() {
  const auto& s = impl_->config.settings;
  impl_->bound_port = s.port;
  if (!impl_->server.listen(s.host, s.port)) {
    fail(ErrorCode::kIo, "IoError", "cannot listen on " + s.host + ":" + std::to_string(s.port));
  }
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int Service::port() const { return impl_->bound_port; }

std::size_t Service::session_count() const {
  std::lock_guard lk(impl_->sessions_mu);
  return impl_->sessions.size();
}

}  // namespace webvln
