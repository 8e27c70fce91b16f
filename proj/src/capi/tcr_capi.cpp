#include "tcr/tcr.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "tcr/common/errors.hpp"
#include "tcr/common/io.hpp"
#include "tcr/datagen/datagen.hpp"
#include "tcr/decoupler/checkpoint.hpp"
#include "tcr/decoupler/probe.hpp"
#include "tcr/decoupler/trainer.hpp"
#include "tcr/eval/benchmark.hpp"
#include "tcr/gateway/config.hpp"
#include "tcr/gateway/llm_client.hpp"
#include "tcr/gateway/pipeline.hpp"
#include "tcr/gateway/service.hpp"
#include "tcr/policy/policy.hpp"
#include "tcr/signals/signals.hpp"
#include "tcr/theory/theory.hpp"

using namespace tcr;

struct tcr_config {
  gateway::AppConfig cfg;
};

struct tcr_model {
  std::shared_ptr<const gateway::ModelState> state;
};

struct tcr_server {
  std::unique_ptr<gateway::Service> service;
};

namespace {

thread_local std::string g_last_error;

tcr_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return TCR_E_INVALID_ARGUMENT;
    case ErrorKind::dimension: return TCR_E_DIMENSION;
    case ErrorKind::degenerate_vector:
    case ErrorKind::degenerate_input: return TCR_E_DEGENERATE;
    case ErrorKind::domain: return TCR_E_DOMAIN;
    case ErrorKind::config: return TCR_E_CONFIG;
    case ErrorKind::capacity: return TCR_E_CAPACITY;
    case ErrorKind::empty_input: return TCR_E_EMPTY_INPUT;
    case ErrorKind::missing_embedding: return TCR_E_MISSING_EMBEDDING;
    case ErrorKind::format: return TCR_E_FORMAT;
    case ErrorKind::io: return TCR_E_IO;
    case ErrorKind::remote_embed:
    case ErrorKind::protocol: return TCR_E_REMOTE;
    case ErrorKind::provider:
    case ErrorKind::generator_unavailable: return TCR_E_PROVIDER;
  }
  return TCR_E_INTERNAL;
}

template <typename F>
tcr_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return TCR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("JSON error: ") + e.what();
    return TCR_E_FORMAT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TCR_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TCR_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return TCR_E_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgumentError(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

theory::PipelineParams to_params(const tcr_pipeline_params* p) {
  require(p, "params");
  theory::PipelineParams q;
  q.rho = p->rho;
  q.fnr = p->fnr;
  q.fpr = p->fpr;
  q.eps = p->eps;
  q.beta = p->beta;
  q.zeta = p->zeta;
  return q;
}

signals::ConflictSignals to_signals(const tcr_signals* s) {
  require(s, "signals");
  signals::ConflictSignals c;
  c.sigma_sem = s->sigma_sem;
  c.sigma_fact = s->sigma_fact;
  c.sigma_ans = s->sigma_ans;
  return c;
}

std::unique_ptr<signals::TextGenerator> make_generator(const gateway::AppConfig& cfg) {
  if (!cfg.llm.url) return nullptr;
  return std::make_unique<gateway::LlmClient>(cfg.llm);
}

json embed_meta(const embedkit::EmbedConfig& e) {
  json j;
  if (e.url) {
    j["source"] = "remote";
    j["url"] = *e.url;
  } else {
    j["source"] = "hash-fallback";
    j["dim"] = e.dim;
    j["seed"] = e.seed;
  }
  return j;
}

std::optional<datagen::Split> parse_split(const char* s) {
  if (!s || std::strcmp(s, "all") == 0) return std::nullopt;
  auto sp = datagen::split_from_string(s);
  if (!sp) throw InvalidArgumentError(std::string("unknown split '") + s + "'");
  return sp;
}

}  // namespace

extern "C" {

const char* tcr_last_error(void) { return g_last_error.c_str(); }

const char* tcr_status_name(tcr_status status) {
  switch (status) {
    case TCR_OK: return "ok";
    case TCR_E_INVALID_ARGUMENT: return "invalid_argument";
    case TCR_E_CONFIG: return "config";
    case TCR_E_DIMENSION: return "dimension";
    case TCR_E_DEGENERATE: return "degenerate";
    case TCR_E_DOMAIN: return "domain";
    case TCR_E_CAPACITY: return "capacity";
    case TCR_E_EMPTY_INPUT: return "empty_input";
    case TCR_E_MISSING_EMBEDDING: return "missing_embedding";
    case TCR_E_FORMAT: return "format";
    case TCR_E_IO: return "io";
    case TCR_E_REMOTE: return "remote";
    case TCR_E_PROVIDER: return "provider";
    case TCR_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* tcr_version(void) { return "1.0.0"; }

void tcr_string_free(char* s) { std::free(s); }

tcr_status tcr_config_create(const char* json_text, tcr_config** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    auto c = std::make_unique<tcr_config>();
    if (json_text) {
      json j = json::parse(json_text, nullptr, false);
      if (j.is_discarded()) throw ConfigError("config is not valid JSON");
      c->cfg = gateway::config_from_json(j);
    }
    gateway::apply_env_overrides(c->cfg);
    *out = c.release();
  });
}

tcr_status tcr_config_load(const char* path, tcr_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto c = std::make_unique<tcr_config>();
    c->cfg = gateway::load_config(path);
    gateway::apply_env_overrides(c->cfg);
    *out = c.release();
  });
}

void tcr_config_free(tcr_config* cfg) { delete cfg; }

tcr_status tcr_config_set_seed(tcr_config* cfg, uint64_t seed) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->cfg.seed = seed;
    cfg->cfg.propagate_seed();
  });
}

tcr_status tcr_config_to_json(const tcr_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup_string(gateway::config_to_json(cfg->cfg).dump(2));
  });
}

tcr_status tcr_gen_data(const tcr_config* cfg, const char* triples_path, const char* qa_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(triples_path, "triples_path");
    const auto& c = cfg->cfg;
    auto ts = datagen::build_dataset(c.datagen.n_triples, c.seed, c.datagen.split_ratios);
    write_file(triples_path, datagen::triples_to_jsonl(ts));
    if (qa_path) write_file(qa_path, datagen::qa_cases_to_jsonl(datagen::build_qa_cases(ts, c.datagen.qa)));
  });
}

tcr_status tcr_train(const tcr_config* cfg, const char* triples_path, const char* checkpoint_path,
                     char** summary_json) {
  return guard([&] {
    require(cfg, "cfg");
    require(triples_path, "triples_path");
    require(checkpoint_path, "checkpoint_path");
    const auto& c = cfg->cfg;
    auto ts = datagen::read_triples_jsonl(triples_path);
    auto emb = decoupler::embed_triples(ts, c.embed, datagen::Split::train);
    auto pair = decoupler::train(ts, emb, c.train);
    pair.meta.embed = embed_meta(c.embed);
    std::string bytes = decoupler::serialize_checkpoint(pair);
    write_file(checkpoint_path, bytes);
    if (summary_json) {
      ojson s;
      s["checkpoint_hash"] = sha256_hex(bytes);
      s["base_dim"] = pair.base_dim;
      s["d_out"] = pair.sem.d_out;
      s["epochs"] = c.train.epochs;
      s["initial_loss"] = pair.meta.loss_curve.front();
      s["final_loss"] = pair.meta.loss_curve.back();
      s["loss_curve"] = pair.meta.loss_curve;
      *summary_json = dup_string(dump_fixed(s, 8));
    }
  });
}

tcr_status tcr_model_load(const tcr_config* cfg, const char* checkpoint_path, tcr_model** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<tcr_model>();
    m->state = gateway::load_model_file(checkpoint_path, cfg->cfg.embed);
    *out = m.release();
  });
}

void tcr_model_free(tcr_model* model) { delete model; }

tcr_status tcr_model_hash(const tcr_model* model, char** out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = dup_string(model->state->checkpoint_hash);
  });
}

tcr_status tcr_model_signals(const tcr_model* model, const tcr_config* cfg, const char* query, const char* context,
                             double sigma_ans, tcr_signals* out) {
  return guard([&] {
    require(model, "model");
    require(cfg, "cfg");
    require(query, "query");
    require(context, "context");
    require(out, "out");
    gateway::SignalRequest req;
    req.query = query;
    req.context = context;
    if (sigma_ans >= 0.0 && sigma_ans <= 1.0) req.sigma_ans = sigma_ans;
    auto gen = make_generator(cfg->cfg);
    auto o = gateway::compute_signals(*model->state, cfg->cfg, gen.get(), {req}).front();
    out->sigma_sem = o.signals.sigma_sem;
    out->sigma_fact = o.signals.sigma_fact;
    out->sigma_ans = o.signals.sigma_ans;
  });
}

tcr_status tcr_signals_batch(const tcr_model* model, const tcr_config* cfg, const char* in_path,
                             const char* out_path) {
  return guard([&] {
    require(model, "model");
    require(cfg, "cfg");
    require(in_path, "in_path");
    require(out_path, "out_path");
    auto gen = make_generator(cfg->cfg);
    write_file(out_path, gateway::signals_batch(*model->state, cfg->cfg, gen.get(), read_lines(in_path)));
  });
}

tcr_status tcr_detect(const tcr_model* model, const tcr_config* cfg, const char* triples_path, const char* split,
                      char** report_json) {
  return guard([&] {
    require(model, "model");
    require(cfg, "cfg");
    require(triples_path, "triples_path");
    require(report_json, "report_json");
    auto ts = datagen::read_triples_jsonl(triples_path);
    auto d = eval::evaluate_detection(ts, model->state->pair, cfg->cfg.embed, cfg->cfg.policy, parse_split(split));
    ojson j = eval::detection_to_json(d);
    j["checkpoint_hash"] = model->state->checkpoint_hash;
    j["split"] = split ? split : "all";
    j["thresholds"] = policy::thresholds_to_json(cfg->cfg.policy);
    *report_json = dup_string(dump_fixed(j));
  });
}

tcr_status tcr_probe2d(const tcr_config* cfg, const char* triples_path, const char* points_csv_path,
                       const char* pca_csv_path, char** summary_json) {
  return guard([&] {
    require(cfg, "cfg");
    require(triples_path, "triples_path");
    require(points_csv_path, "points_csv_path");
    const auto& c = cfg->cfg;
    auto ts = datagen::read_triples_jsonl(triples_path);
    auto emb = decoupler::embed_triples(ts, c.embed);
    std::vector<decoupler::LabeledPair> fit, held;
    std::vector<std::string> held_ids;
    const std::pair<decoupler::Surface, decoupler::PairLabel> variants[] = {
        {decoupler::Surface::paraphrase, decoupler::PairLabel::para},
        {decoupler::Surface::contradiction, decoupler::PairLabel::conf},
        {decoupler::Surface::unrelated, decoupler::PairLabel::irr}};
    for (const auto& t : ts) {
      if (t.split == datagen::Split::dev) continue;
      const auto& a = emb.at(decoupler::surface_key(t.base.id, decoupler::Surface::statement)).values;
      for (const auto& [surface, label] : variants) {
        decoupler::LabeledPair p{a, emb.at(decoupler::surface_key(t.base.id, surface)).values, label};
        if (t.split == datagen::Split::train) {
          fit.push_back(std::move(p));
        } else {
          held.push_back(std::move(p));
          held_ids.push_back(t.base.id);
        }
      }
    }
    if (held.empty()) throw EmptyInputError("probe2d needs test-split triples");
    decoupler::ProbeConfig pc = c.probe;
    auto probe = decoupler::train_probe_2d(fit, pc);
    auto summary = decoupler::summarize_probe(probe, fit, held);

    std::string csv = "triple_id,label,x,y\n";
    for (std::size_t i = 0; i < held.size(); ++i) {
      auto pt = decoupler::probe_point(probe, held[i]);
      csv += held_ids[i] + "," + decoupler::to_string(held[i].label) + "," +
             format_fixed(summary.axis_sign[0] * pt[0], 6) + "," + format_fixed(summary.axis_sign[1] * pt[1], 6) +
             "\n";
    }
    write_file(points_csv_path, csv);

    if (pca_csv_path) {
      std::vector<std::vector<double>> rows;
      for (const auto& p : held) rows.push_back(decoupler::pair_feature(p.anchor, p.variant));
      auto scores = decoupler::pca_scores(rows, 2);
      std::string pca = "triple_id,label,pc1,pc2\n";
      for (std::size_t i = 0; i < held.size(); ++i)
        pca += held_ids[i] + "," + decoupler::to_string(held[i].label) + "," + format_fixed(scores[i][0], 6) + "," +
               format_fixed(scores[i][1], 6) + "\n";
      write_file(pca_csv_path, pca);
    }

    if (summary_json) {
      ojson s;
      s["n_fit"] = fit.size();
      s["n_eval"] = held.size();
      s["accuracy"] = summary.accuracy;
      s["axis_sign"] = summary.axis_sign;
      ojson cen;
      for (auto l : {decoupler::PairLabel::para, decoupler::PairLabel::conf, decoupler::PairLabel::irr})
        cen[decoupler::to_string(l)] = summary.centroids[static_cast<int>(l)];
      s["centroids"] = cen;
      *summary_json = dup_string(dump_fixed(s));
    }
  });
}

tcr_status tcr_eval(const tcr_config* cfg, const char* qa_path, const char* checkpoint_path, const char* report_path,
                    const char* csv_path, const char* surrogate_report_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(qa_path, "qa_path");
    require(checkpoint_path, "checkpoint_path");
    require(report_path, "report_path");
    const auto& c = cfg->cfg;
    eval::BenchmarkConfig bc;
    bc.policy = c.policy;
    bc.oracle = c.answerability.oracle;
    bc.embed = c.embed;
    bc.seed = c.seed;
    bc.run_surrogate = surrogate_report_path != nullptr;
    bc.surrogate = c.surrogate;
    auto r = eval::run_benchmark_files(qa_path, checkpoint_path, bc);
    write_file(report_path, dump_fixed(r.report) + "\n");
    if (csv_path) write_file(csv_path, r.csv);
    if (surrogate_report_path) write_file(surrogate_report_path, dump_fixed(weighting::report_to_json(*r.surrogate)) + "\n");
  });
}

tcr_status tcr_decide(const tcr_config* cfg, const tcr_signals* s, tcr_verdict* verdict, char** decision_json) {
  return guard([&] {
    require(cfg, "cfg");
    auto sig = to_signals(s);
    auto d = policy::decide(sig, cfg->cfg.policy);
    if (verdict) *verdict = static_cast<tcr_verdict>(static_cast<int>(d.verdict));
    if (decision_json) {
      ojson j = gateway::decision_to_json(d);
      j["thresholds"] = policy::thresholds_to_json(cfg->cfg.policy);
      *decision_json = dup_string(dump_fixed(j));
    }
  });
}

tcr_status tcr_render_hard_prompt(const tcr_signals* s, char** out) {
  return guard([&] {
    require(out, "out");
    *out = dup_string(signals::render_hard_prompt(to_signals(s)));
  });
}

void tcr_pipeline_params_default(tcr_pipeline_params* out) {
  if (!out) return;
  theory::PipelineParams d;
  *out = {d.rho, d.fnr, d.fpr, d.eps, d.beta, d.zeta};
}

tcr_status tcr_exact_gap(const tcr_pipeline_params* p, double* out) {
  return guard([&] {
    require(out, "out");
    *out = theory::exact_gap(to_params(p));
  });
}

tcr_status tcr_upper_bound(const tcr_pipeline_params* p, double* out) {
  return guard([&] {
    require(out, "out");
    *out = theory::upper_bound(to_params(p));
  });
}

tcr_status tcr_simulate(const tcr_pipeline_params* p, uint64_t n, uint64_t seed, tcr_sim_result* out) {
  return guard([&] {
    require(out, "out");
    auto r = theory::simulate(to_params(p), n, seed);
    out->delta_hat = r.delta_hat;
    out->std_error = r.std_error;
    out->n = r.n;
    const char* keys[] = {"R0D0", "R0D1", "R1D0", "R1D1"};
    for (int i = 0; i < 4; ++i) {
      auto it = r.branch_counts.find(keys[i]);
      out->branch_counts[i] = it == r.branch_counts.end() ? 0 : it->second;
    }
  });
}

tcr_status tcr_bound_sweep(const char* grid_json, uint64_t n, uint64_t seed, char** csv) {
  return guard([&] {
    require(grid_json, "grid_json");
    require(csv, "csv");
    json spec = json::parse(grid_json, nullptr, false);
    if (spec.is_discarded()) throw FormatError("sweep grid is not valid JSON");
    *csv = dup_string(theory::sweep_to_csv(theory::bound_sweep(spec, n, seed)));
  });
}

tcr_status tcr_server_create(const tcr_config* cfg, tcr_server** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<tcr_server>();
    s->service = std::make_unique<gateway::Service>(cfg->cfg);
    *out = s.release();
  });
}

tcr_status tcr_server_bind(tcr_server* server, const char* host, int port, int* bound_port) {
  return guard([&] {
    require(server, "server");
    require(host, "host");
    int p = server->service->bind(host, port);
    if (bound_port) *bound_port = p;
  });
}

tcr_status tcr_server_start(tcr_server* server) {
  return guard([&] {
    require(server, "server");
    server->service->start();
  });
}

tcr_status tcr_server_load_checkpoint(tcr_server* server, const char* path) {
  return guard([&] {
    require(server, "server");
    require(path, "path");
    server->service->load_checkpoint(path);
  });
}

tcr_status tcr_server_wait(tcr_server* server) {
  return guard([&] {
    require(server, "server");
    server->service->wait();
  });
}

tcr_status tcr_server_stop(tcr_server* server) {
  return guard([&] {
    require(server, "server");
    server->service->stop();
  });
}

void tcr_server_free(tcr_server* server) { delete server; }

}  // extern "C"
