#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "tcr/gateway/config.hpp"
#include "tcr/gateway/pipeline.hpp"
#include "tcr/signals/answerability.hpp"

namespace tcr::gateway {

struct Reply {
  int status = 200;
  std::string body;
};

// JSON service: POST /v1/signals, POST /v1/decide, GET /healthz. Handlers are
// plain methods so they can be exercised without a socket.
class Service {
 public:
  // Without an explicit generator, one is built from cfg.llm when a URL is set.
  explicit Service(AppConfig cfg, std::shared_ptr<const signals::TextGenerator> generator = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void load_checkpoint(const std::string& path);
  void install(std::shared_ptr<const ModelState> state);
  bool ready() const;

  Reply healthz() const;
  Reply decide(const std::string& body) const;
  Reply signals(const std::string& body) const;

  // Returns the bound port (an ephemeral one when port is 0).
  int bind(const std::string& host, int port);
  void start();
  void wait();
  void stop();

  const AppConfig& config() const { return cfg_; }

 private:
  std::shared_ptr<const ModelState> state() const;

  AppConfig cfg_;
  std::shared_ptr<const signals::TextGenerator> generator_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const ModelState> state_;

  struct Http;
  std::unique_ptr<Http> http_;
};

}  // namespace tcr::gateway
