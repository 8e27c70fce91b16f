#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "tcr/tcr.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  tcr_string_free(s);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tcr_capi_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct Cfg {
  tcr_config* c = nullptr;
  explicit Cfg(const char* text = nullptr) { REQUIRE(tcr_config_create(text, &c) == TCR_OK); }
  ~Cfg() { tcr_config_free(c); }
};

std::string small_config() { return slurp(std::string(TCR_FIXTURES) + "/small_config.json"); }

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::strcmp(tcr_status_name(TCR_OK), "ok") == 0);
  CHECK(std::strcmp(tcr_status_name(TCR_E_DOMAIN), "domain") == 0);
  CHECK(std::strlen(tcr_version()) > 0);

  tcr_config* cfg = nullptr;
  CHECK(tcr_config_create("{\"bogus\": 1}", &cfg) == TCR_E_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(tcr_last_error()).find("bogus") != std::string::npos);
  CHECK(tcr_config_create("{not json", &cfg) == TCR_E_CONFIG);

  Cfg ok;
  CHECK(std::string(tcr_last_error()).empty());
  CHECK(tcr_config_create(nullptr, nullptr) == TCR_E_INVALID_ARGUMENT);
  CHECK(tcr_config_load("/nonexistent/cfg.json", &cfg) != TCR_OK);
}

TEST_CASE("config round trip and seed") {
  Cfg c(small_config().c_str());
  CHECK(tcr_config_set_seed(c.c, 7) == TCR_OK);
  char* s = nullptr;
  REQUIRE(tcr_config_to_json(c.c, &s) == TCR_OK);
  auto j = json::parse(take(s));
  CHECK(j["seed"] == 7);
  CHECK(j["embed"]["dim"] == 64);
}

TEST_CASE("decide through the C API") {
  Cfg c;
  tcr_signals s{0.9, 0.2, 0.4};
  tcr_verdict v;
  char* dj = nullptr;
  REQUIRE(tcr_decide(c.c, &s, &v, &dj) == TCR_OK);
  CHECK(v == TCR_FLAG_CONFLICT);
  auto j = json::parse(take(dj));
  CHECK(j["verdict"] == "FlagConflict");
  CHECK(j["rationale"].get<std::string>().find("-> FlagConflict") != std::string::npos);

  s = {0.9, 0.8, 0.4};
  REQUIRE(tcr_decide(c.c, &s, &v, nullptr) == TCR_OK);
  CHECK(v == TCR_TRUST_CONTEXT);
  s = {0.9, 0.2, 0.9};
  REQUIRE(tcr_decide(c.c, &s, &v, nullptr) == TCR_OK);
  CHECK(v == TCR_TRUST_MEMORY);

  s = {0.9, 0.2, 1.5};
  CHECK(tcr_decide(c.c, &s, &v, nullptr) == TCR_E_DOMAIN);
  CHECK(tcr_decide(c.c, nullptr, &v, nullptr) == TCR_E_INVALID_ARGUMENT);

  s = {0.9, 0.2, 0.4};
  char* hp = nullptr;
  REQUIRE(tcr_render_hard_prompt(&s, &hp) == TCR_OK);
  CHECK_FALSE(take(hp).empty());
}

TEST_CASE("theory through the C API") {
  tcr_pipeline_params p;
  tcr_pipeline_params_default(&p);
  p.rho = 0.3;
  double gap = 0, bound = 0;
  REQUIRE(tcr_exact_gap(&p, &gap) == TCR_OK);
  REQUIRE(tcr_upper_bound(&p, &bound) == TCR_OK);
  CHECK(gap <= bound + 1e-12);

  tcr_sim_result r;
  REQUIRE(tcr_simulate(&p, 100000, 3, &r) == TCR_OK);
  CHECK(r.n == 100000);
  CHECK(r.branch_counts[0] + r.branch_counts[1] + r.branch_counts[2] + r.branch_counts[3] == 100000);
  CHECK(std::abs(r.delta_hat - gap) <= 5 * r.std_error);

  p.fnr = 2.0;
  CHECK(tcr_exact_gap(&p, &gap) == TCR_E_DOMAIN);

  char* csv = nullptr;
  REQUIRE(tcr_bound_sweep("{\"rho\": [0.1, 0.2]}", 1000, 1, &csv) == TCR_OK);
  CHECK(take(csv).rfind("rho,fnr,", 0) == 0);
  CHECK(tcr_bound_sweep("{\"nope\": [1]}", 1000, 1, &csv) == TCR_E_CONFIG);
}

TEST_CASE("small end-to-end pipeline") {
  TempDir dir("pipeline");
  Cfg c(small_config().c_str());
  std::string triples = dir.file("triples.jsonl"), qa = dir.file("qa.jsonl"), ckpt = dir.file("model.tcrw");
  REQUIRE(tcr_gen_data(c.c, triples.c_str(), qa.c_str()) == TCR_OK);
  CHECK(fs::file_size(triples) > 0);

  char* summary = nullptr;
  REQUIRE(tcr_train(c.c, triples.c_str(), ckpt.c_str(), &summary) == TCR_OK);
  auto sj = json::parse(take(summary));
  CHECK(sj["epochs"] == 5);
  CHECK(sj["loss_curve"].size() == 6);
  CHECK(sj["final_loss"].get<double>() < sj["initial_loss"].get<double>());

  tcr_model* m = nullptr;
  REQUIRE(tcr_model_load(c.c, ckpt.c_str(), &m) == TCR_OK);
  char* h = nullptr;
  REQUIRE(tcr_model_hash(m, &h) == TCR_OK);
  CHECK(take(h) == sj["checkpoint_hash"]);

  tcr_signals s;
  REQUIRE(tcr_model_signals(m, c.c, "Where is the Louvre?", "The Louvre is located in Paris.", NAN, &s) == TCR_OK);
  CHECK(s.sigma_sem >= -1.0);
  CHECK(s.sigma_sem <= 1.0);
  CHECK(s.sigma_ans == 0.5);
  REQUIRE(tcr_model_signals(m, c.c, "q", "c", 0.9, &s) == TCR_OK);
  CHECK(s.sigma_ans == 0.9);
  CHECK(tcr_model_signals(m, c.c, "", "c", 0.9, &s) == TCR_E_FORMAT);

  char* report = nullptr;
  REQUIRE(tcr_detect(m, c.c, triples.c_str(), "test", &report) == TCR_OK);
  auto rj = json::parse(take(report));
  CHECK(rj["auroc"].get<double>() >= 0.0);
  CHECK(tcr_detect(m, c.c, triples.c_str(), "validation", &report) == TCR_E_INVALID_ARGUMENT);

  std::string rep = dir.file("report.json"), csv = dir.file("table.csv");
  REQUIRE(tcr_eval(c.c, qa.c_str(), ckpt.c_str(), rep.c_str(), csv.c_str(), nullptr) == TCR_OK);
  auto ej = json::parse(slurp(rep));
  CHECK(ej["report_version"] == 1);
  CHECK(ej["config"]["checkpoint_hash"] == sj["checkpoint_hash"]);
  CHECK(slurp(csv).rfind("method,kgrr,mcor,em,f1\n", 0) == 0);

  std::string points = dir.file("points.csv");
  char* ps = nullptr;
  REQUIRE(tcr_probe2d(c.c, triples.c_str(), points.c_str(), nullptr, &ps) == TCR_OK);
  CHECK(json::parse(take(ps)).is_object());

  tcr_model_free(m);
}

TEST_CASE("pipeline errors") {
  TempDir dir("errors");
  Cfg c(small_config().c_str());
  std::string bad = dir.file("bad.jsonl");
  std::ofstream(bad) << "{\"not\": \"a triple\"}\n";
  CHECK(tcr_train(c.c, bad.c_str(), dir.file("m").c_str(), nullptr) == TCR_E_FORMAT);
  CHECK(tcr_train(c.c, dir.file("missing.jsonl").c_str(), dir.file("m").c_str(), nullptr) == TCR_E_IO);
  tcr_model* m = nullptr;
  CHECK(tcr_model_load(c.c, bad.c_str(), &m) == TCR_E_FORMAT);
  CHECK(m == nullptr);
}

TEST_CASE("server lifecycle") {
  Cfg c;
  tcr_server* srv = nullptr;
  REQUIRE(tcr_server_create(c.c, &srv) == TCR_OK);
  int port = 0;
  REQUIRE(tcr_server_bind(srv, "127.0.0.1", 0, &port) == TCR_OK);
  CHECK(port > 0);
  REQUIRE(tcr_server_start(srv) == TCR_OK);
  CHECK(tcr_server_load_checkpoint(srv, "/nonexistent.tcrw") == TCR_E_IO);
  CHECK(tcr_server_stop(srv) == TCR_OK);
  CHECK(tcr_server_wait(srv) == TCR_OK);
  tcr_server_free(srv);
}
