#include "tcr/gateway/service.hpp"

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <thread>

#include "tcr/common/errors.hpp"
#include "tcr/gateway/llm_client.hpp"
#include "tcr/policy/policy.hpp"

namespace tcr::gateway {

struct Service::Http {
  httplib::Server server;
  std::thread listener;
  std::mutex mu;
  std::condition_variable cv;
  bool bound = false;
  bool started = false;
  bool finished = false;
};

namespace {

Reply error_reply(int status, const std::string& message) {
  ojson j;
  j["error"] = {{"status", status}, {"message", message}};
  return {status, j.dump()};
}

Reply json_reply(const ojson& j) { return {200, dump_fixed(j)}; }

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::domain: return 422;
    case ErrorKind::remote_embed:
    case ErrorKind::protocol: return 502;
    case ErrorKind::format:
    case ErrorKind::invalid_argument:
    case ErrorKind::empty_input: return 400;
    default: return 500;
  }
}

const json* number_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  if (!it->is_number()) throw FormatError(std::string("field '") + key + "' must be a number");
  return &*it;
}

}  // namespace

Service::Service(AppConfig cfg, std::shared_ptr<const signals::TextGenerator> generator)
    : cfg_(std::move(cfg)), generator_(std::move(generator)), http_(std::make_unique<Http>()) {
  cfg_.validate();
  if (!generator_ && cfg_.llm.url) generator_ = std::make_shared<LlmClient>(cfg_.llm);

  auto adapt = [](Reply r, httplib::Response& res) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  http_->server.Get("/healthz", [this, adapt](const httplib::Request&, httplib::Response& res) { adapt(healthz(), res); });
  http_->server.Post("/v1/decide",
                     [this, adapt](const httplib::Request& req, httplib::Response& res) { adapt(decide(req.body), res); });
  http_->server.Post("/v1/signals", [this, adapt](const httplib::Request& req, httplib::Response& res) {
    adapt(signals(req.body), res);
  });
  http_->server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(error_reply(res.status, "no such endpoint").body, "application/json");
  });
  auto sec = cfg_.server.request_timeout_ms / 1000;
  auto usec = (cfg_.server.request_timeout_ms % 1000) * 1000;
  http_->server.set_read_timeout(sec, usec);
  http_->server.set_write_timeout(sec, usec);
}

Service::~Service() { stop(); }

void Service::load_checkpoint(const std::string& path) { install(load_model_file(path, cfg_.embed)); }

void Service::install(std::shared_ptr<const ModelState> state) {
  std::lock_guard lock(state_mu_);
  state_ = std::move(state);
}

std::shared_ptr<const ModelState> Service::state() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

bool Service::ready() const { return state() != nullptr; }

Reply Service::healthz() const {
  auto s = state();
  ojson j;
  if (!s) {
    j["status"] = "loading";
    j["checkpoint_hash"] = nullptr;
    return {503, j.dump()};
  }
  j["status"] = "ok";
  j["checkpoint_hash"] = s->checkpoint_hash;
  return {200, j.dump()};
}

Reply Service::decide(const std::string& body) const {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error_reply(400, "body must be a JSON object");
  try {
    signals::ConflictSignals s;
    s.sigma_sem = number_field(j, "sigma_sem")->get<double>();
    s.sigma_fact = number_field(j, "sigma_fact")->get<double>();
    s.sigma_ans = number_field(j, "sigma_ans")->get<double>();
    if (auto it = j.find("query_id"); it != j.end() && it->is_string()) s.query_id = it->get<std::string>();
    if (!(s.sigma_sem >= -1.0 && s.sigma_sem <= 1.0)) throw DomainError("sigma_sem must lie in [-1, 1]");
    if (!(s.sigma_fact >= -1.0 && s.sigma_fact <= 1.0)) throw DomainError("sigma_fact must lie in [-1, 1]");
    if (!(s.sigma_ans >= 0.0 && s.sigma_ans <= 1.0)) throw DomainError("sigma_ans must lie in [0, 1]");
    ojson out = decision_to_json(policy::decide(s, cfg_.policy));
    out["thresholds"] = policy::thresholds_to_json(cfg_.policy);
    return json_reply(out);
  } catch (const Error& e) {
    return error_reply(status_for(e), e.what());
  }
}

Reply Service::signals(const std::string& body) const {
  auto t0 = std::chrono::steady_clock::now();
  auto model = state();
  if (!model) return error_reply(503, "checkpoint is still loading");
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return error_reply(400, "body must be a JSON object");
  try {
    SignalRequest req = signal_request_from_json(j);
    SignalOutcome o = compute_signals(*model, cfg_, generator_.get(), {req}).front();
    policy::Decision d = policy::decide(o.signals, cfg_.policy);
    std::string hard_prompt = signals::render_hard_prompt(o.signals);

    ojson generation = nullptr;
    if (generator_ && !o.llm_failed) {
      try {
        generation = generator_->generate(generation_prompt(hard_prompt, req.query, req.context));
      } catch (const GeneratorUnavailableError&) {
      }
    }

    ojson out;
    out["query_id"] = o.signals.query_id;
    ojson sig;
    sig["sigma_sem"] = o.signals.sigma_sem;
    sig["sigma_fact"] = o.signals.sigma_fact;
    sig["sigma_ans"] = o.signals.sigma_ans;
    out["signals"] = sig;
    out["sigma_ans_source"] = o.sigma_ans_source;
    out["decision"] = decision_to_json(d);
    out["thresholds"] = policy::thresholds_to_json(cfg_.policy);
    out["hard_prompt"] = hard_prompt;
    out["mode"] = generation.is_null() ? "signals-only" : "full";
    out["generation"] = generation;
    out["checkpoint_hash"] = model->checkpoint_hash;
    out["latency_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return json_reply(out);
  } catch (const Error& e) {
    return error_reply(status_for(e), e.what());
  }
}

int Service::bind(const std::string& host, int port) {
  int bound = port == 0 ? http_->server.bind_to_any_port(host) : (http_->server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  http_->bound = true;
  return bound;
}

void Service::start() {
  if (!http_->bound) throw ConfigError("service must be bound before start");
  {
    std::lock_guard lock(http_->mu);
    if (http_->started) return;
    http_->started = true;
  }
  http_->listener = std::thread([this] {
    http_->server.listen_after_bind();
    std::lock_guard lock(http_->mu);
    http_->finished = true;
    http_->cv.notify_all();
  });
  http_->server.wait_until_ready();
}

void Service::wait() {
  std::unique_lock lock(http_->mu);
  http_->cv.wait(lock, [this] { return http_->finished || !http_->started; });
}

void Service::stop() {
  if (!http_) return;
  http_->server.stop();
  if (http_->listener.joinable()) http_->listener.join();
  std::lock_guard lock(http_->mu);
  http_->finished = true;
  http_->cv.notify_all();
}

}  // namespace tcr::gateway
