#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcr/tcr.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(tcr_status s) {
  switch (s) {
    case TCR_OK: return kExitOk;
    case TCR_E_INVALID_ARGUMENT:
    case TCR_E_CONFIG: return kExitUsage;
    default: return kExitData;
  }
}

void check(tcr_status s, const char* what) {
  if (s != TCR_OK) throw Failure{exit_code_for(s), std::string(what) + ": " + tcr_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  tcr_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitData, "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kExitData, "cannot write '" + path + "'"};
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file");
  app->add_option("--seed", c.seed, "Seed for every stochastic stage");
}

class Config {
 public:
  Config(const Common& c, const json& overrides) {
    json j = json::object();
    if (!c.config_path.empty()) {
      j = json::parse(slurp(c.config_path), nullptr, false);
      if (j.is_discarded()) throw Failure{kExitUsage, "config file '" + c.config_path + "' is not valid JSON"};
    }
    j.merge_patch(overrides);
    check(tcr_config_create(j.dump().c_str(), &cfg_), "config");
    if (c.seed) check(tcr_config_set_seed(cfg_, *c.seed), "config");
  }
  ~Config() { tcr_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  const tcr_config* get() const { return cfg_; }
  json resolved() const {
    char* s = nullptr;
    check(tcr_config_to_json(cfg_, &s), "config");
    return json::parse(take(s));
  }

 private:
  tcr_config* cfg_ = nullptr;
};

class Model {
 public:
  Model(const Config& cfg, const std::string& path) { check(tcr_model_load(cfg.get(), path.c_str(), &m_), "checkpoint"); }
  ~Model() { tcr_model_free(m_); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  const tcr_model* get() const { return m_; }

 private:
  tcr_model* m_ = nullptr;
};

int serve(const Config& cfg, const std::string& checkpoint, const std::string& host, int port) {
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  tcr_server* server = nullptr;
  check(tcr_server_create(cfg.get(), &server), "server");
  int bound = 0;
  tcr_status st = tcr_server_bind(server, host.c_str(), port, &bound);
  if (st == TCR_OK) st = tcr_server_start(server);
  if (st == TCR_OK) {
    std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), bound);
    st = tcr_server_load_checkpoint(server, checkpoint.c_str());
  }
  if (st != TCR_OK) {
    std::string msg = tcr_last_error();
    tcr_server_free(server);
    throw Failure{exit_code_for(st), "server: " + msg};
  }
  std::fprintf(stderr, "checkpoint loaded\n");
  int sig = 0;
  sigwait(&stop_signals, &sig);
  tcr_server_stop(server);
  tcr_server_free(server);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conflict-aware retrieval middleware toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tcr_version()));

  Common common;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic triple corpus and QA cases");
  std::string out_dir = ".";
  std::optional<std::size_t> n_triples;
  gen->add_option("--out-dir", out_dir, "Directory for triples.jsonl and qa.jsonl");
  gen->add_option("--n-triples", n_triples, "Number of knowledge triples");
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "Train the semantic and factual projection heads");
  std::string data_path, checkpoint_path, summary_path;
  std::optional<int> epochs;
  train->add_option("--data", data_path, "Triples JSONL")->required();
  train->add_option("--out", checkpoint_path, "Checkpoint output path")->required();
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--summary", summary_path, "Write the training summary JSON here");
  add_common(train, common);

  auto* probe = app.add_subcommand("probe2d", "Fit the 2-D linear probe and export scatter CSVs");
  std::string points_path, pca_path;
  probe->add_option("--data", data_path, "Triples JSONL")->required();
  probe->add_option("--out", points_path, "Probe-space points CSV")->required();
  probe->add_option("--pca-out", pca_path, "PCA scores CSV");
  probe->add_option("--summary", summary_path, "Write the probe summary JSON here");
  add_common(probe, common);

  auto* sig = app.add_subcommand("signals", "Compute conflict signals for a JSONL batch");
  std::string in_path, out_path;
  sig->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required();
  sig->add_option("--in", in_path, "Input JSONL")->required();
  sig->add_option("--out", out_path, "Output JSONL")->required();
  add_common(sig, common);

  auto* detect = app.add_subcommand("detect", "Conflict detection F1, AUROC and threshold sweep");
  std::string split = "test";
  detect->add_option("--data", data_path, "Triples JSONL")->required();
  detect->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required();
  detect->add_option("--split", split, "train, dev, test or all")->check(CLI::IsMember({"train", "dev", "test", "all"}));
  detect->add_option("--out", out_path, "Write the report JSON here");
  add_common(detect, common);

  auto* sim = app.add_subcommand("simulate-bound", "Exact gap, bound and Monte Carlo estimate over a grid");
  std::string grid_path, grid_text;
  std::optional<std::uint64_t> n_trials;
  auto* grid_opt = sim->add_option("--grid", grid_path, "Grid spec JSON file {param: [values]}");
  sim->add_option("--grid-json", grid_text, "Inline grid spec JSON")->excludes(grid_opt);
  sim->add_option("--n", n_trials, "Monte Carlo trials per grid point");
  sim->add_option("--out", out_path, "CSV output path (default stdout)");
  add_common(sim, common);

  auto* ev = app.add_subcommand("eval", "Run the end-to-end QA benchmark");
  std::string qa_path, report_path, csv_path, surrogate_path;
  ev->add_option("--qa", qa_path, "QA cases JSONL")->required();
  ev->add_option("--checkpoint", checkpoint_path, "Checkpoint")->required();
  ev->add_option("--out", report_path, "Report JSON path")->required();
  ev->add_option("--csv", csv_path, "Method comparison CSV path");
  ev->add_option("--surrogate-report", surrogate_path, "Train the signal-weighting surrogate and write its report");
  add_common(ev, common);

  auto* srv = app.add_subcommand("serve", "Run the JSON HTTP service");
  std::optional<std::string> host;
  std::optional<int> port;
  srv->add_option("--checkpoint", checkpoint_path, "Checkpoint (defaults to server.checkpoint_path)");
  srv->add_option("--host", host, "Listen address");
  srv->add_option("--port", port, "Listen port");
  add_common(srv, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      json o = json::object();
      if (n_triples) o["datagen"]["n_triples"] = *n_triples;
      Config cfg(common, o);
      std::string triples = out_dir + "/triples.jsonl", qa = out_dir + "/qa.jsonl";
      check(tcr_gen_data(cfg.get(), triples.c_str(), qa.c_str()), "gen-data");
      std::printf("%s\n%s\n", triples.c_str(), qa.c_str());
    } else if (train->parsed()) {
      json o = json::object();
      if (epochs) o["train"]["epochs"] = *epochs;
      Config cfg(common, o);
      char* summary = nullptr;
      check(tcr_train(cfg.get(), data_path.c_str(), checkpoint_path.c_str(), &summary), "train");
      std::string s = take(summary);
      if (!summary_path.empty()) write_text(summary_path, s + "\n");
      std::printf("%s\n", s.c_str());
    } else if (probe->parsed()) {
      Config cfg(common, json::object());
      char* summary = nullptr;
      check(tcr_probe2d(cfg.get(), data_path.c_str(), points_path.c_str(), pca_path.empty() ? nullptr : pca_path.c_str(),
                        &summary),
            "probe2d");
      std::string s = take(summary);
      if (!summary_path.empty()) write_text(summary_path, s + "\n");
      std::printf("%s\n", s.c_str());
    } else if (sig->parsed()) {
      Config cfg(common, json::object());
      Model model(cfg, checkpoint_path);
      check(tcr_signals_batch(model.get(), cfg.get(), in_path.c_str(), out_path.c_str()), "signals");
    } else if (detect->parsed()) {
      Config cfg(common, json::object());
      Model model(cfg, checkpoint_path);
      char* report = nullptr;
      check(tcr_detect(model.get(), cfg.get(), data_path.c_str(), split.c_str(), &report), "detect");
      std::string s = take(report);
      if (!out_path.empty()) write_text(out_path, s + "\n");
      std::printf("%s\n", s.c_str());
    } else if (sim->parsed()) {
      Config cfg(common, json::object());
      json resolved = cfg.resolved();
      std::string spec = !grid_path.empty() ? slurp(grid_path) : (!grid_text.empty() ? grid_text : "{}");
      std::uint64_t n = n_trials ? *n_trials : resolved["theory"]["n_trials"].get<std::uint64_t>();
      char* csv = nullptr;
      check(tcr_bound_sweep(spec.c_str(), n, resolved["seed"].get<std::uint64_t>(), &csv), "simulate-bound");
      std::string s = take(csv);
      if (out_path.empty()) std::fputs(s.c_str(), stdout);
      else write_text(out_path, s);
    } else if (ev->parsed()) {
      Config cfg(common, json::object());
      check(tcr_eval(cfg.get(), qa_path.c_str(), checkpoint_path.c_str(), report_path.c_str(),
                     csv_path.empty() ? nullptr : csv_path.c_str(),
                     surrogate_path.empty() ? nullptr : surrogate_path.c_str()),
            "eval");
      std::printf("%s\n", report_path.c_str());
    } else if (srv->parsed()) {
      json o = json::object();
      if (host) o["server"]["host"] = *host;
      if (port) o["server"]["port"] = *port;
      if (!checkpoint_path.empty()) o["server"]["checkpoint_path"] = checkpoint_path;
      Config cfg(common, o);
      json resolved = cfg.resolved();
      const json& server = resolved["server"];
      if (server["checkpoint_path"].is_null()) throw Failure{kExitUsage, "serve: no checkpoint given"};
      return serve(cfg, server["checkpoint_path"].get<std::string>(), server["host"].get<std::string>(),
                   server["port"].get<int>());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.code;
  }
  return kExitOk;
}
