#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "support/mock_server.hpp"
#include "support/service_suite.hpp"

using namespace tcr;
using namespace tcr::gateway;
using namespace tcr::testing;

namespace {

const std::string& query(std::size_t i) { return signal_queries().at(i); }

}  // namespace

TEST_CASE("healthz reports loading until a checkpoint is installed") {
  RunningService r(AppConfig{}, false);
  CHECK(r.get("/healthz").first == 503);
  auto [status, body] = r.post("/v1/signals", query(0));
  CHECK(status == 503);
  CHECK(body["error"]["status"] == 503);

  r.svc.install(small_model());
  auto [hs, hb] = r.get("/healthz");
  CHECK(hs == 200);
  CHECK(hb["status"] == "ok");

  auto [ns, nb] = r.get("/nowhere");
  CHECK(ns == 404);
  CHECK(nb["error"]["status"] == 404);
}

TEST_CASE("full mode with a mock LLM") {
  MockServer llm(mock_llm);
  AppConfig cfg;
  cfg.llm.url = llm.url("/v1/chat/completions");
  cfg.answerability.mode = AnswerabilityMode::llm_probe;
  RunningService r(cfg);
  auto [status, j] = r.post("/v1/signals", query(0));
  CHECK(status == 200);
  CHECK(j["mode"] == "full");
  CHECK(j["generation"] == "Paris");
  CHECK(j["sigma_ans_source"] == "llm-probe");
  CHECK(j["signals"]["sigma_ans"].get<double>() == doctest::Approx(0.9));
  CHECK(llm.requests() == 2);
}

TEST_CASE("LLM timeout degrades to signals-only") {
  MockServer slow([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(chat_reply("yes"), "application/json");
  });
  AppConfig cfg;
  cfg.llm.url = slow.url("/v1/chat/completions");
  cfg.llm.timeout_ms = 200;
  cfg.answerability.mode = AnswerabilityMode::llm_probe;
  RunningService r(cfg);
  auto t0 = std::chrono::steady_clock::now();
  auto [status, j] = r.post("/v1/signals", query(0));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(status == 200);
  CHECK(j["mode"] == "signals-only");
  CHECK(j["generation"].is_null());
  CHECK(j["sigma_ans_source"] == "prior");
  CHECK(j["decision"].contains("verdict"));
  CHECK(secs < 2.0);
}

TEST_CASE("LLM unreachable degrades to signals-only") {
  AppConfig cfg;
  cfg.llm.url = "http://127.0.0.1:9/v1/chat/completions";
  cfg.llm.timeout_ms = 300;
  RunningService r(cfg);
  auto [status, j] = r.post("/v1/signals", query(2));
  CHECK(status == 200);
  CHECK(j["mode"] == "signals-only");
  CHECK(j["sigma_ans_source"] == "request");
}

TEST_CASE("decide endpoint status codes") {
  RunningService r(AppConfig{});
  auto [ok, j] = r.post("/v1/decide", R"({"sigma_sem": 0.9, "sigma_fact": 0.2, "sigma_ans": 0.4})");
  CHECK(ok == 200);
  CHECK(j["verdict"] == "FlagConflict");
  CHECK(r.post("/v1/decide", "nope").first == 400);
  CHECK(r.post("/v1/decide", R"({"sigma_sem": 0.9, "sigma_fact": 2, "sigma_ans": 0.4})").first == 422);
  CHECK(r.post("/v1/signals", R"({"query": "q"})").first == 400);
}

TEST_CASE("recorded responses") {
  MockServer llm(mock_llm);
  AppConfig cfg;
  cfg.llm.url = llm.url("/v1/chat/completions");
  RunningService r(cfg);
  json got = recorded_responses(r);
  if (std::getenv("TCR_PRINT_FIXTURES")) std::printf("%s\n", got.dump(2).c_str());
  auto want = json::parse(read_file(std::string(TCR_FIXTURES) + "/service_responses.json"));
  REQUIRE(want.size() == got.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(got[i] == want[i]);
  }
}

TEST_CASE("concurrent requests") {
  RunningService r(AppConfig{});
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i)
        if (r.post("/v1/signals", query(0)).first == 200) ++ok;
    });
  for (auto& t : threads) t.join();
  CHECK(ok == 40);
}
