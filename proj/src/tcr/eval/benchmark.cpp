#include "tcr/eval/benchmark.hpp"

#include <map>

#include "tcr/common/errors.hpp"
#include "tcr/decoupler/checkpoint.hpp"
#include "tcr/signals/signals.hpp"

namespace tcr::eval {

using datagen::ContextType;

embedkit::EmbedConfig embed_config_for(const decoupler::EncoderPair& pair, const embedkit::EmbedConfig& base) {
  embedkit::EmbedConfig cfg = base;
  if (cfg.url) return cfg;
  const auto& e = pair.meta.embed;
  if (e.is_object() && e.value("source", "") == "hash-fallback") {
    cfg.dim = e.value("dim", cfg.dim);
    cfg.seed = e.value("seed", cfg.seed);
  } else {
    cfg.dim = pair.base_dim;
  }
  return cfg;
}

ContextReading read_context(const std::string& context, const std::string& subject, datagen::Relation relation) {
  for (const auto& sentence : datagen::split_sentences(context)) {
    auto parsed = datagen::parse_statement(sentence);
    if (parsed && parsed->subject == subject && parsed->relation == relation)
      return {true, parsed->negated, parsed->object};
  }
  return {};
}

namespace {

ojson nullable(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

template <typename F>
std::optional<double> try_metric(F&& f) {
  try {
    return f();
  } catch (const DegenerateInputError&) {
    return std::nullopt;
  }
}

struct QaSummary {
  double em = 0.0, f1 = 0.0;
  std::optional<double> kgrr, mcor;
};

QaSummary summarize(const std::vector<CaseResult>& results, const std::vector<datagen::QACase>& cases,
                    OutcomeCase CaseResult::*which, const std::vector<std::string>& answers) {
  QaSummary s;
  std::vector<OutcomeCase> outcomes;
  for (std::size_t i = 0; i < results.size(); ++i) {
    s.em += em(answers[i], cases[i].gold_answer);
    s.f1 += f1_token(answers[i], cases[i].gold_answer);
    outcomes.push_back(results[i].*which);
  }
  double n = static_cast<double>(results.size());
  s.em /= n;
  s.f1 /= n;
  s.kgrr = try_metric([&] { return kgrr(outcomes); });
  s.mcor = try_metric([&] { return mcor(outcomes); });
  return s;
}

ojson qa_json(const QaSummary& s) {
  ojson j;
  j["em"] = s.em;
  j["f1"] = s.f1;
  j["kgrr"] = nullable(s.kgrr);
  j["mcor"] = nullable(s.mcor);
  return j;
}

std::string csv_field(const std::optional<double>& v) { return v ? format_fixed(*v, 6) : ""; }

std::string csv_row(const std::string& method, const QaSummary& s) {
  return method + "," + csv_field(s.kgrr) + "," + csv_field(s.mcor) + "," + format_fixed(s.em, 6) + "," +
         format_fixed(s.f1, 6) + "\n";
}

}  // namespace

BenchmarkResult run_benchmark(const std::vector<datagen::QACase>& cases, const decoupler::EncoderPair& pair,
                              const BenchmarkConfig& cfg, const std::string& checkpoint_hash) {
  if (cases.empty()) throw EmptyInputError("benchmark needs at least one QA case");
  cfg.policy.validate();
  pair.validate();
  embedkit::EmbedConfig embed = embed_config_for(pair, cfg.embed);
  signals::OracleConfig oracle_cfg = cfg.oracle;
  oracle_cfg.seed = cfg.seed;
  signals::SyntheticOracle oracle(oracle_cfg);

  std::vector<std::string> texts;
  std::vector<datagen::ParsedQuestion> questions;
  for (const auto& c : cases) {
    auto q = datagen::parse_question(c.question);
    if (!q) throw FormatError("QA case '" + c.id + "': question does not match any template");
    if (c.closed_book_answer.empty()) throw FormatError("QA case '" + c.id + "' has no closed_book_answer");
    questions.push_back(*q);
    texts.push_back(datagen::render_statement(q->subject, q->relation, c.closed_book_answer));
    texts.push_back(c.context);
  }
  auto embs = embedkit::embed_batch(texts, embed);

  BenchmarkResult out;
  std::vector<std::string> final_answers, context_answers, memory_answers;
  std::vector<policy::FlipObservation> flips;
  std::map<std::string, int> verdict_counts;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    CaseResult r;
    r.id = c.id;
    const auto& qe = embs[2 * i];
    const auto& ce = embs[2 * i + 1];
    r.signals.query_id = c.id;
    r.signals.sigma_sem = signals::sigma_sem(qe, ce, pair);
    r.signals.sigma_fact = signals::sigma_fact(qe, ce, pair);
    r.signals.sigma_ans = signals::sigma_ans({c.id, c.question, c.closed_book_correct}, oracle);
    r.decision = policy::decide(r.signals, cfg.policy);

    ContextReading reading = read_context(c.context, questions[i].subject, questions[i].relation);
    r.context_answer = reading.relevant && !reading.negated ? reading.object : "";
    bool use_context = r.decision.verdict == policy::Verdict::TrustContext ||
                       (r.decision.verdict == policy::Verdict::FlagConflict && r.decision.ans_bin == policy::AnsBin::Low);
    r.final_answer = use_context ? r.context_answer : c.closed_book_answer;
    r.parametric_answer_used = em(r.final_answer, c.closed_book_answer) == 1;
    r.em = em(r.final_answer, c.gold_answer);
    r.f1 = f1_token(r.final_answer, c.gold_answer);
    r.outcome = {c.closed_book_correct, c.context_type, r.em == 1.0};
    r.always_context = {c.closed_book_correct, c.context_type, em(r.context_answer, c.gold_answer) == 1};
    r.closed_book = {c.closed_book_correct, c.context_type, em(c.closed_book_answer, c.gold_answer) == 1};

    bool disagrees = reading.relevant && (reading.negated ? reading.object == c.closed_book_answer
                                                          : reading.object != c.closed_book_answer);
    r.detection = {policy::conflict_score(r.signals.sigma_sem, r.signals.sigma_fact, cfg.policy), disagrees ? 1 : 0};

    flips.push_back({r.decision, r.parametric_answer_used});
    ++verdict_counts[policy::to_string(r.decision.verdict)];
    final_answers.push_back(r.final_answer);
    context_answers.push_back(r.context_answer);
    memory_answers.push_back(c.closed_book_answer);
    out.cases.push_back(std::move(r));
  }

  QaSummary tcr_qa = summarize(out.cases, cases, &CaseResult::outcome, final_answers);
  QaSummary ctx_qa = summarize(out.cases, cases, &CaseResult::always_context, context_answers);
  QaSummary cb_qa = summarize(out.cases, cases, &CaseResult::closed_book, memory_answers);

  std::vector<DetectionRecord> recs;
  std::size_t tp = 0, fp = 0, fn = 0, n_pos = 0;
  for (const auto& r : out.cases) {
    recs.push_back(r.detection);
    bool pred = r.decision.region == policy::Region::ConflictZone;
    n_pos += r.detection.label;
    if (pred && r.detection.label) ++tp;
    else if (pred) ++fp;
    else if (r.detection.label) ++fn;
  }
  bool both = n_pos > 0 && n_pos < recs.size();

  ojson report;
  report["report_version"] = 1;
  ojson det;
  det["f1"] = both ? ojson(tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn))
                   : ojson(nullptr);
  det["auroc"] = both ? ojson(auroc(recs)) : ojson(nullptr);
  det["n_positive"] = n_pos;
  det["n_negative"] = recs.size() - n_pos;
  report["detection"] = det;
  report["qa"] = qa_json(tcr_qa);
  report["baselines"] = ojson::object();
  report["baselines"]["always_context"] = qa_json(ctx_qa);
  report["baselines"]["closed_book"] = qa_json(cb_qa);
  ojson fr = ojson::object();
  for (const auto& [bin, rate] : policy::flip_rate(flips)) fr[policy::to_string(bin)] = rate;
  report["flip_rates"] = fr;
  ojson vc = ojson::object();
  for (const auto& [k, v] : verdict_counts) vc[k] = v;
  report["verdict_counts"] = vc;

  if (cfg.run_surrogate) {
    std::vector<weighting::SurrogateCase> sc;
    for (const auto& r : out.cases)
      sc.push_back({{r.signals.sigma_sem, r.signals.sigma_fact, r.signals.sigma_ans}, r.detection.label});
    weighting::SurrogateConfig scfg = cfg.surrogate;
    scfg.seed = cfg.seed;
    out.surrogate = weighting::train_surrogate(sc, scfg);
    ojson s;
    s["heldout_accuracy"] = out.surrogate->heldout_accuracy;
    s["majority_baseline"] = out.surrogate->majority_baseline;
    s["final_weights"] = ojson::object();
    for (const char* k : weighting::kSignalNames) s["final_weights"][k] = out.surrogate->model.weights.at(k);
    report["surrogate"] = s;
  }

  ojson conf;
  conf["seed"] = cfg.seed;
  conf["n_cases"] = cases.size();
  conf["checkpoint_hash"] = checkpoint_hash;
  conf["policy"] = policy::thresholds_to_json(cfg.policy);
  ojson ans;
  ans["mode"] = oracle.mode();
  ans["base_known"] = oracle_cfg.base_known;
  ans["base_unknown"] = oracle_cfg.base_unknown;
  ans["noise"] = oracle_cfg.noise;
  conf["answerability"] = ans;
  ojson emb;
  emb["source"] = embed.url ? "remote" : "hash-fallback";
  emb["dim"] = embed.dim;
  emb["seed"] = embed.seed;
  conf["embed"] = emb;
  conf["flip_definition"] = "TrustContext or FlagConflict verdict whose final answer differs from the closed-book answer";
  report["config"] = conf;
  out.report = std::move(report);

  out.csv = "method,kgrr,mcor,em,f1\n" + csv_row("tcr", tcr_qa) + csv_row("always_context", ctx_qa) +
            csv_row("closed_book", cb_qa);
  return out;
}

BenchmarkResult run_benchmark_files(const std::string& qa_path, const std::string& checkpoint_path,
                                    const BenchmarkConfig& cfg) {
  auto cases = datagen::read_qa_jsonl(qa_path);
  std::string bytes = read_file(checkpoint_path);
  auto pair = decoupler::deserialize_checkpoint(bytes);
  return run_benchmark(cases, pair, cfg, sha256_hex(bytes));
}

DetectionEval evaluate_detection(const datagen::TripleSet& ts, const decoupler::EncoderPair& pair,
                                 const embedkit::EmbedConfig& embed, const policy::PolicyConfig& policy,
                                 std::optional<datagen::Split> split) {
  policy.validate();
  auto cfg = embed_config_for(pair, embed);
  auto emb = decoupler::embed_triples(ts, cfg, split);
  DetectionEval d;
  std::size_t tp = 0, fp = 0, fn = 0;
  const std::array<decoupler::Surface, 3> variants = {decoupler::Surface::paraphrase,
                                                      decoupler::Surface::contradiction, decoupler::Surface::unrelated};
  for (const auto& t : ts) {
    if (split && t.split != *split) continue;
    ++d.n_triples;
    const auto& anchor = emb.at(decoupler::surface_key(t.base.id, decoupler::Surface::statement));
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& v = emb.at(decoupler::surface_key(t.base.id, variants[k]));
      double s = signals::sigma_sem(anchor, v, pair);
      double f = signals::sigma_fact(anchor, v, pair);
      d.mean_sem[k] += s;
      d.mean_fact[k] += f;
      int label = k == 1 ? 1 : 0;
      d.records.push_back({policy::conflict_score(s, f, policy), label});
      bool pred = policy::classify_region(s, f, policy) == policy::Region::ConflictZone;
      if (pred && label) ++tp;
      else if (pred) ++fp;
      else if (label) ++fn;
    }
  }
  if (d.n_triples == 0) throw EmptyInputError("no triples in the requested split");
  for (std::size_t k = 0; k < 3; ++k) {
    d.mean_sem[k] /= static_cast<double>(d.n_triples);
    d.mean_fact[k] /= static_cast<double>(d.n_triples);
  }
  d.f1_at_rule = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  d.auroc = auroc(d.records);
  d.sweep = sweep_thresholds(d.records);
  return d;
}

ojson detection_to_json(const DetectionEval& d) {
  ojson j;
  j["n_triples"] = d.n_triples;
  j["f1_region_rule"] = d.f1_at_rule;
  j["auroc"] = d.auroc;
  j["best_threshold"] = d.sweep.best_threshold;
  j["best_f1"] = d.sweep.best_f1;
  ojson means;
  const char* names[] = {"paraphrase", "contradiction", "unrelated"};
  for (std::size_t k = 0; k < 3; ++k) {
    means[names[k]]["sem"] = d.mean_sem[k];
    means[names[k]]["fact"] = d.mean_fact[k];
  }
  j["means"] = means;
  j["sem_margin"] = d.sem_margin();
  j["fact_margin"] = d.fact_margin();
  return j;
}

}  // namespace tcr::eval
