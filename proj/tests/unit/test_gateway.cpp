#include <doctest.h>

#include <chrono>
#include <thread>

#include "support/mock_server.hpp"
#include "tcr/common/errors.hpp"
#include "tcr/common/io.hpp"
#include "tcr/decoupler/checkpoint.hpp"
#include "tcr/gateway/config.hpp"
#include "tcr/gateway/llm_client.hpp"
#include "tcr/gateway/pipeline.hpp"
#include "tcr/gateway/service.hpp"

using namespace tcr;
using namespace tcr::gateway;
using tcr::testing::MockServer;

namespace {

std::string chat_reply(const std::string& content) {
  json j;
  j["choices"] = json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

struct FixedGenerator : signals::TextGenerator {
  std::string reply;
  explicit FixedGenerator(std::string r) : reply(std::move(r)) {}
  std::string generate(const std::string&) const override { return reply; }
};

struct DownGenerator : signals::TextGenerator {
  std::string generate(const std::string&) const override { throw GeneratorUnavailableError("down"); }
};

const std::string& checkpoint_bytes() {
  static const std::string bytes = [] {
    auto ts = datagen::build_dataset(60, 1);
    embedkit::EmbedConfig ec;
    ec.dim = 32;
    auto emb = decoupler::embed_triples(ts, ec);
    decoupler::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.d_out = 8;
    return decoupler::serialize_checkpoint(decoupler::train(ts, emb, cfg));
  }();
  return bytes;
}

std::shared_ptr<const ModelState> model() { return load_model(checkpoint_bytes(), embedkit::EmbedConfig{}); }

json body_of(const Reply& r) { return json::parse(r.body); }

const char* kSignalBody = R"({"query": "Where is the Louvre?", "context": "The Louvre is located in Paris."})";

}  // namespace

TEST_CASE("config parsing is strict") {
  auto c = config_from_json(json::parse(R"({"seed": 7, "policy": {"sem_threshold": 0.5}, "llm": {"timeout_ms": 500}})"));
  CHECK(c.seed == 7);
  CHECK(c.policy.sem_threshold == 0.5);
  CHECK(c.policy.fact_threshold == policy::PolicyConfig{}.fact_threshold);
  CHECK(c.llm.timeout_ms == 500);

  auto round = config_from_json(json::parse(config_to_json(c).dump()));
  CHECK(config_to_json(round).dump() == config_to_json(c).dump());

  try {
    config_from_json(json::parse(R"({"policy": {"sem_treshold": 0.5}})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("policy.sem_treshold") != std::string::npos);
  }
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"bogus": 1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"seed": "x"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"train": {"optimizer": "lbfgs"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"answerability": {"mode": "psychic"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"datagen": {"split_ratios": [0.5, 0.5, 0.5]}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse("[]")), ConfigError);
}

TEST_CASE("seed propagation and environment overrides") {
  auto c = config_from_json(json::parse(R"({"seed": 9})"));
  c.propagate_seed();
  CHECK(c.train.seed == 9);

  std::map<std::string, std::string> env{{"TCR_EMBED_URL", "http://127.0.0.1:9/embed"},
                                         {"TCR_LLM_URL", "http://127.0.0.1:9/chat"}};
  auto lookup = [&](const char* k) -> std::optional<std::string> {
    auto it = env.find(k);
    return it == env.end() ? std::nullopt : std::optional(it->second);
  };
  apply_env_overrides(c, lookup);
  CHECK(c.embed.url == "http://127.0.0.1:9/embed");
  CHECK(c.llm.url == "http://127.0.0.1:9/chat");
  env["TCR_LLM_URL"] = "";
  apply_env_overrides(c, lookup);
  CHECK_FALSE(c.llm.url);
  CHECK(c.embed.url);
}

TEST_CASE("llm client request and response format") {
  auto body = json::parse(LlmClient::request_body("m", "hi"));
  CHECK(body["model"] == "m");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "hi");
  CHECK(LlmClient::parse_response(chat_reply("ok")) == "ok");
  CHECK_THROWS_AS(LlmClient::parse_response("{}"), GeneratorUnavailableError);
  CHECK_THROWS_AS(LlmClient::parse_response("nope"), GeneratorUnavailableError);
  CHECK_THROWS_AS(LlmClient(LlmConfig{}), ConfigError);
}

TEST_CASE("llm client against a mock endpoint") {
  MockServer echo([](const httplib::Request& req, httplib::Response& res) {
    auto j = json::parse(req.body);
    res.set_content(chat_reply("echo: " + j["messages"][0]["content"].get<std::string>()), "application/json");
  });
  LlmConfig cfg;
  cfg.url = echo.url("/v1/chat/completions");
  CHECK(LlmClient(cfg).generate("ping") == "echo: ping");
  CHECK(echo.requests() == 1);

  MockServer failing([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  cfg.url = failing.url("/chat");
  CHECK_THROWS_AS(LlmClient(cfg).generate("x"), GeneratorUnavailableError);
  CHECK(failing.requests() == 3);

  MockServer rejecting([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  cfg.url = rejecting.url("/chat");
  CHECK_THROWS_AS(LlmClient(cfg).generate("x"), GeneratorUnavailableError);
  CHECK(rejecting.requests() == 1);

  MockServer slow([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_reply("late"), "application/json");
  });
  cfg.url = slow.url("/chat");
  cfg.timeout_ms = 300;
  auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(LlmClient(cfg).generate("x"), GeneratorUnavailableError);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 1.5);
  CHECK(slow.requests() <= 3);
}

TEST_CASE("answerability precedence") {
  AppConfig cfg;
  SignalRequest req{"q-1", "Where is the Louvre?", "ctx", std::nullopt, std::nullopt};
  CHECK(estimate_answerability(req, cfg, nullptr).source == "prior");
  CHECK(estimate_answerability(req, cfg, nullptr).value == 0.5);

  req.closed_book_correct = true;
  CHECK(estimate_answerability(req, cfg, nullptr).source == "synthetic-oracle");

  cfg.answerability.mode = AnswerabilityMode::llm_probe;
  FixedGenerator yes("yes 0.8");
  auto a = estimate_answerability(req, cfg, &yes);
  CHECK(a.source == "llm-probe");
  CHECK(a.value == doctest::Approx(0.8));

  DownGenerator down;
  auto b = estimate_answerability(req, cfg, &down);
  CHECK(b.source == "synthetic-oracle");
  CHECK(b.llm_failed);

  req.sigma_ans = 0.25;
  CHECK(estimate_answerability(req, cfg, &yes).source == "request");
  req.sigma_ans = 1.5;
  CHECK_THROWS_AS(estimate_answerability(req, cfg, &yes), DomainError);
}

TEST_CASE("default query id") {
  CHECK(default_query_id("abc") == "q-" + sha256_hex("abc").substr(0, 12));
  CHECK(default_query_id("abc").size() == 14);
}

TEST_CASE("signal request parsing") {
  auto r = signal_request_from_json(json::parse(R"({"id": "x", "question": "q?", "context": "c."})"));
  CHECK(r.query_id == "x");
  CHECK(r.query == "q?");
  CHECK_THROWS_AS(signal_request_from_json(json::parse(R"({"query": 3, "context": "c"})")), FormatError);
  CHECK_THROWS_AS(signal_request_from_json(json::parse("[]")), FormatError);
}

TEST_CASE("service healthz and decide") {
  Service svc{AppConfig{}};
  auto h = svc.healthz();
  CHECK(h.status == 503);
  CHECK(body_of(h)["status"] == "loading");
  CHECK(svc.signals(kSignalBody).status == 503);

  svc.install(model());
  h = svc.healthz();
  CHECK(h.status == 200);
  CHECK(body_of(h)["checkpoint_hash"] == model()->checkpoint_hash);

  auto d = svc.decide(R"({"sigma_sem": 0.9, "sigma_fact": 0.2, "sigma_ans": 0.4})");
  CHECK(d.status == 200);
  CHECK(body_of(d)["verdict"] == "FlagConflict");
  CHECK(body_of(d)["thresholds"]["sem_threshold"] == 0.65);

  auto bad = svc.decide("{not json");
  CHECK(bad.status == 400);
  CHECK(body_of(bad)["error"]["status"] == 400);
  CHECK(svc.decide(R"({"sigma_sem": 0.9, "sigma_fact": 0.2})").status == 400);
  CHECK(svc.decide(R"({"sigma_sem": "high", "sigma_fact": 0.2, "sigma_ans": 0.4})").status == 400);
  auto dom = svc.decide(R"({"sigma_sem": 0.9, "sigma_fact": 0.2, "sigma_ans": 1.4})");
  CHECK(dom.status == 422);
  CHECK(body_of(dom)["error"]["message"].get<std::string>().find("sigma_ans") != std::string::npos);
}

TEST_CASE("service signals modes") {
  SUBCASE("no generator") {
    Service svc{AppConfig{}};
    svc.install(model());
    auto r = svc.signals(kSignalBody);
    REQUIRE(r.status == 200);
    auto j = body_of(r);
    CHECK(j["mode"] == "signals-only");
    CHECK(j["generation"].is_null());
    CHECK(j["sigma_ans_source"] == "prior");
    CHECK(j["query_id"] == default_query_id("Where is the Louvre?"));
    CHECK(j["hard_prompt"].get<std::string>().size() > 0);
    CHECK(j["signals"]["sigma_sem"].get<double>() >= -1.0);
    CHECK(j["signals"]["sigma_sem"].get<double>() <= 1.0);
    CHECK(j.contains("latency_ms"));
  }
  SUBCASE("generator available") {
    Service svc{AppConfig{}, std::make_shared<FixedGenerator>("Paris")};
    svc.install(model());
    auto j = body_of(svc.signals(kSignalBody));
    CHECK(j["mode"] == "full");
    CHECK(j["generation"] == "Paris");
  }
  SUBCASE("generator down") {
    AppConfig cfg;
    cfg.answerability.mode = AnswerabilityMode::llm_probe;
    Service svc{cfg, std::make_shared<DownGenerator>()};
    svc.install(model());
    auto j = body_of(svc.signals(kSignalBody));
    CHECK(j["mode"] == "signals-only");
    CHECK(j["sigma_ans_source"] == "prior");
  }
  SUBCASE("request errors") {
    Service svc{AppConfig{}};
    svc.install(model());
    CHECK(svc.signals("[1]").status == 400);
    CHECK(svc.signals(R"({"query": "q"})").status == 400);
    CHECK(svc.signals(R"({"query": "q", "context": "c", "sigma_ans": 2})").status == 422);
  }
}

TEST_CASE("model loading") {
  CHECK_THROWS_AS(load_model("garbage", embedkit::EmbedConfig{}), FormatError);
  auto m = model();
  CHECK(m->embed.dim == 32);
  CHECK(m->checkpoint_hash == sha256_hex(checkpoint_bytes()));
}
