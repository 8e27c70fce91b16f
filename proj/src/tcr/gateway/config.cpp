#include "tcr/gateway/config.hpp"

#include <cstdlib>
#include <initializer_list>
#include <limits>
#include <set>

#include "tcr/common/errors.hpp"
#include "tcr/common/http.hpp"

namespace tcr::gateway {

namespace {

class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config section '" + label() + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
      if (!allowed.count(k)) throw ConfigError("unknown config key '" + key_path(k) + "'");
  }

  const json* find(const char* key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) const {
    if (auto* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }

  template <typename T>
    requires std::is_integral_v<T>
  void get(const char* key, T& out) const {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "an integer");
      if (v->is_number_unsigned()) {
        auto u = v->get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) fail(key, "in range");
        out = static_cast<T>(u);
      } else {
        auto s = v->get<std::int64_t>();
        if constexpr (std::is_unsigned_v<T>) {
          if (s < 0) fail(key, "non-negative");
        } else if (s < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
                   s > static_cast<std::int64_t>(std::numeric_limits<T>::max())) {
          fail(key, "in range");
        }
        out = static_cast<T>(s);
      }
    }
  }

  void get(const char* key, std::string& out) const {
    if (auto* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, std::optional<std::string>& out) const {
    if (auto* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_string()) fail(key, "a string or null");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, std::array<double, 3>& out) const {
    if (auto* v = find(key)) {
      if (!v->is_array() || v->size() != 3) fail(key, "an array of three numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) fail(key, "an array of three numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  Section sub(const char* key, std::initializer_list<const char*> keys) const {
    return Section(j_.at(key), key_path(key), keys);
  }

  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("config key '" + key_path(key) + "' must be " + what);
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  std::string key_path(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json& j_;
  std::string path_;
};

void check_url(const std::optional<std::string>& url, const char* key) {
  if (!url) return;
  try {
    parse_url(*url);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

const char* to_string(AnswerabilityMode m) {
  return m == AnswerabilityMode::llm_probe ? "llm-probe" : "synthetic-oracle";
}

void AppConfig::validate() const {
  if (embed.dim < 8) throw ConfigError("embed.dim must be >= 8");
  if (embed.timeout_ms <= 0) throw ConfigError("embed.timeout_ms must be positive");
  if (embed.max_batch < 1) throw ConfigError("embed.max_batch must be >= 1");
  check_url(embed.url, "embed.url");
  if (datagen.n_triples < 1) throw ConfigError("datagen.n_triples must be >= 1");
  double total = 0.0;
  for (double r : datagen.split_ratios) {
    if (!(r >= 0.0)) throw ConfigError("datagen.split_ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("datagen.split_ratios must sum to 1");
  double mix = 0.0;
  for (double r : datagen.qa.mix) {
    if (!(r >= 0.0)) throw ConfigError("datagen.qa.mix must be non-negative");
    mix += r;
  }
  if (std::abs(mix - 1.0) > 1e-9) throw ConfigError("datagen.qa.mix must sum to 1");
  for (double p : {datagen.qa.noise_rate, datagen.qa.knowledge_rate})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("datagen.qa rates must lie in [0, 1]");
  if (datagen.qa.cases_per_triple < 1) throw ConfigError("datagen.qa.cases_per_triple must be >= 1");
  train.validate();
  if (probe.epochs < 1 || !(probe.learning_rate > 0.0) || !(probe.pull_weight >= 0.0))
    throw ConfigError("probe settings out of range");
  policy.validate();
  if (!(answerability.prior >= 0.0 && answerability.prior <= 1.0))
    throw ConfigError("answerability.prior must lie in [0, 1]");
  if (!(answerability.oracle.noise >= 0.0)) throw ConfigError("answerability.noise must be non-negative");
  if (answerability.calibration) answerability.calibration->validate();
  check_url(llm.url, "llm.url");
  if (llm.timeout_ms <= 0) throw ConfigError("llm.timeout_ms must be positive");
  if (llm.max_retries < 0 || llm.max_retries > 2) throw ConfigError("llm.max_retries must lie in [0, 2]");
  if (server.port < 0 || server.port > 65535) throw ConfigError("server.port must lie in [0, 65535]");
  if (server.request_timeout_ms <= 0) throw ConfigError("server.request_timeout_ms must be positive");
  surrogate.validate();
  if (theory.n_trials < 1000) throw ConfigError("theory.n_trials must be >= 1000");
}

void AppConfig::propagate_seed() {
  datagen.qa.seed = seed;
  train.seed = seed;
  probe.seed = seed;
  answerability.oracle.seed = seed;
  surrogate.seed = seed;
}

AppConfig config_from_json(const json& j) {
  AppConfig c;
  Section root(j, "", {"seed", "embed", "datagen", "train", "probe", "policy", "answerability", "llm", "server",
                       "surrogate", "theory"});
  root.get("seed", c.seed);
  if (root.find("embed")) {
    auto s = root.sub("embed", {"url", "dim", "seed", "timeout_ms", "max_batch"});
    s.get("url", c.embed.url);
    s.get("dim", c.embed.dim);
    s.get("seed", c.embed.seed);
    s.get("timeout_ms", c.embed.timeout_ms);
    s.get("max_batch", c.embed.max_batch);
  }
  if (root.find("datagen")) {
    auto s = root.sub("datagen", {"n_triples", "split_ratios", "qa"});
    s.get("n_triples", c.datagen.n_triples);
    s.get("split_ratios", c.datagen.split_ratios);
    if (s.find("qa")) {
      auto q = s.sub("qa", {"mix", "noise_rate", "knowledge_rate", "cases_per_triple", "split"});
      q.get("mix", c.datagen.qa.mix);
      q.get("noise_rate", c.datagen.qa.noise_rate);
      q.get("knowledge_rate", c.datagen.qa.knowledge_rate);
      q.get("cases_per_triple", c.datagen.qa.cases_per_triple);
      std::string split = c.datagen.qa.split ? datagen::to_string(*c.datagen.qa.split) : "all";
      q.get("split", split);
      if (split == "all") {
        c.datagen.qa.split.reset();
      } else {
        auto sp = datagen::split_from_string(split);
        if (!sp) q.fail("split", "one of train, dev, test, all");
        c.datagen.qa.split = *sp;
      }
    }
  }
  if (root.find("train")) {
    auto s = root.sub("train", {"tau", "epochs", "batch_size", "learning_rate", "optimizer", "d_out"});
    s.get("tau", c.train.tau);
    s.get("epochs", c.train.epochs);
    s.get("batch_size", c.train.batch_size);
    s.get("learning_rate", c.train.learning_rate);
    s.get("d_out", c.train.d_out);
    std::string opt = decoupler::to_string(c.train.optimizer);
    s.get("optimizer", opt);
    auto o = decoupler::optimizer_from_string(opt);
    if (!o) s.fail("optimizer", "one of sgd, adam");
    c.train.optimizer = *o;
  }
  if (root.find("probe")) {
    auto s = root.sub("probe", {"epochs", "learning_rate", "pull_weight"});
    s.get("epochs", c.probe.epochs);
    s.get("learning_rate", c.probe.learning_rate);
    s.get("pull_weight", c.probe.pull_weight);
  }
  if (root.find("policy")) {
    auto s = root.sub("policy", {"sem_threshold", "fact_threshold", "ans_high", "ans_low", "early_stop_step"});
    s.get("sem_threshold", c.policy.sem_threshold);
    s.get("fact_threshold", c.policy.fact_threshold);
    s.get("ans_high", c.policy.ans_high);
    s.get("ans_low", c.policy.ans_low);
    s.get("early_stop_step", c.policy.early_stop_step);
  }
  if (root.find("answerability")) {
    auto s = root.sub("answerability", {"mode", "base_known", "base_unknown", "noise", "prior", "calibration"});
    std::string mode = to_string(c.answerability.mode);
    s.get("mode", mode);
    if (mode == "synthetic-oracle") c.answerability.mode = AnswerabilityMode::synthetic_oracle;
    else if (mode == "llm-probe") c.answerability.mode = AnswerabilityMode::llm_probe;
    else s.fail("mode", "one of synthetic-oracle, llm-probe");
    s.get("base_known", c.answerability.oracle.base_known);
    s.get("base_unknown", c.answerability.oracle.base_unknown);
    s.get("noise", c.answerability.oracle.noise);
    s.get("prior", c.answerability.prior);
    if (auto* cal = s.find("calibration"); cal && !cal->is_null()) {
      auto cs = s.sub("calibration", {"xs", "ys"});
      signals::Calibration calib;
      for (auto [key, dst] : {std::pair{"xs", &calib.xs}, std::pair{"ys", &calib.ys}}) {
        auto* v = cs.find(key);
        if (!v || !v->is_array()) cs.fail(key, "an array of numbers");
        for (const auto& x : *v) {
          if (!x.is_number()) cs.fail(key, "an array of numbers");
          dst->push_back(x.get<double>());
        }
      }
      c.answerability.calibration = std::move(calib);
    }
  }
  if (root.find("llm")) {
    auto s = root.sub("llm", {"url", "model", "timeout_ms", "max_retries"});
    s.get("url", c.llm.url);
    s.get("model", c.llm.model);
    s.get("timeout_ms", c.llm.timeout_ms);
    s.get("max_retries", c.llm.max_retries);
  }
  if (root.find("server")) {
    auto s = root.sub("server", {"host", "port", "checkpoint_path", "request_timeout_ms"});
    s.get("host", c.server.host);
    s.get("port", c.server.port);
    s.get("checkpoint_path", c.server.checkpoint_path);
    s.get("request_timeout_ms", c.server.request_timeout_ms);
  }
  if (root.find("surrogate")) {
    auto s = root.sub("surrogate", {"epochs", "batch_size", "learning_rate", "n_soft", "hidden", "d_model",
                                    "calibration_fraction", "holdout_fraction", "loss_alpha", "snr_cap"});
    auto& g = c.surrogate;
    s.get("epochs", g.epochs);
    s.get("batch_size", g.batch_size);
    s.get("learning_rate", g.learning_rate);
    s.get("n_soft", g.n_soft);
    s.get("hidden", g.hidden);
    s.get("d_model", g.d_model);
    s.get("calibration_fraction", g.calibration_fraction);
    s.get("holdout_fraction", g.holdout_fraction);
    s.get("loss_alpha", g.weights.loss_alpha);
    s.get("snr_cap", g.weights.cap);
  }
  if (root.find("theory")) {
    auto s = root.sub("theory", {"n_trials"});
    s.get("n_trials", c.theory.n_trials);
  }
  c.propagate_seed();
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

ojson config_to_json(const AppConfig& c) {
  auto opt_str = [](const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); };
  ojson j;
  j["seed"] = c.seed;
  j["embed"] = {{"url", opt_str(c.embed.url)},
                {"dim", c.embed.dim},
                {"seed", c.embed.seed},
                {"timeout_ms", c.embed.timeout_ms},
                {"max_batch", c.embed.max_batch}};
  ojson qa;
  qa["mix"] = c.datagen.qa.mix;
  qa["noise_rate"] = c.datagen.qa.noise_rate;
  qa["knowledge_rate"] = c.datagen.qa.knowledge_rate;
  qa["cases_per_triple"] = c.datagen.qa.cases_per_triple;
  qa["split"] = c.datagen.qa.split ? datagen::to_string(*c.datagen.qa.split) : "all";
  j["datagen"] = {{"n_triples", c.datagen.n_triples}, {"split_ratios", c.datagen.split_ratios}, {"qa", qa}};
  j["train"] = {{"tau", c.train.tau},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate},
                {"optimizer", decoupler::to_string(c.train.optimizer)},
                {"d_out", c.train.d_out}};
  j["probe"] = {{"epochs", c.probe.epochs},
                {"learning_rate", c.probe.learning_rate},
                {"pull_weight", c.probe.pull_weight}};
  j["policy"] = policy::thresholds_to_json(c.policy);
  ojson ans;
  ans["mode"] = to_string(c.answerability.mode);
  ans["base_known"] = c.answerability.oracle.base_known;
  ans["base_unknown"] = c.answerability.oracle.base_unknown;
  ans["noise"] = c.answerability.oracle.noise;
  ans["prior"] = c.answerability.prior;
  if (c.answerability.calibration)
    ans["calibration"] = {{"xs", c.answerability.calibration->xs}, {"ys", c.answerability.calibration->ys}};
  else
    ans["calibration"] = nullptr;
  j["answerability"] = ans;
  j["llm"] = {{"url", opt_str(c.llm.url)},
              {"model", c.llm.model},
              {"timeout_ms", c.llm.timeout_ms},
              {"max_retries", c.llm.max_retries}};
  j["server"] = {{"host", c.server.host},
                 {"port", c.server.port},
                 {"checkpoint_path", opt_str(c.server.checkpoint_path)},
                 {"request_timeout_ms", c.server.request_timeout_ms}};
  const auto& g = c.surrogate;
  j["surrogate"] = {{"epochs", g.epochs},
                    {"batch_size", g.batch_size},
                    {"learning_rate", g.learning_rate},
                    {"n_soft", g.n_soft},
                    {"hidden", g.hidden},
                    {"d_model", g.d_model},
                    {"calibration_fraction", g.calibration_fraction},
                    {"holdout_fraction", g.holdout_fraction},
                    {"loss_alpha", g.weights.loss_alpha},
                    {"snr_cap", g.weights.cap}};
  j["theory"] = {{"n_trials", c.theory.n_trials}};
  return j;
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_env_overrides(AppConfig& cfg, const EnvLookup& env) {
  auto apply = [&](const char* name, std::optional<std::string>& dst) {
    auto v = env(name);
    if (!v) return;
    if (v->empty()) dst.reset();
    else dst = *v;
  };
  apply("TCR_EMBED_URL", cfg.embed.url);
  apply("TCR_LLM_URL", cfg.llm.url);
  check_url(cfg.embed.url, "TCR_EMBED_URL");
  check_url(cfg.llm.url, "TCR_LLM_URL");
}

}  // namespace tcr::gateway
