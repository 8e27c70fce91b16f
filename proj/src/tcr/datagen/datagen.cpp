#include "tcr/datagen/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"

namespace tcr::datagen {

namespace {

constexpr double kSwapProbability = 0.7;
constexpr int kDistractorAttempts = 64;

std::string make_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", prefix, i);
  return buf;
}

struct PoolIndex {
  std::map<Relation, std::vector<std::string>> objects;  // distinct, first-seen order
  std::map<Relation, std::size_t> counts;
};

PoolIndex index_pool(const std::vector<KnowledgeTriple>& pool) {
  PoolIndex idx;
  std::map<Relation, std::set<std::string>> seen;
  for (const auto& p : pool) {
    ++idx.counts[p.relation];
    if (seen[p.relation].insert(p.object).second) idx.objects[p.relation].push_back(p.object);
  }
  return idx;
}

// Prefers a candidate sharing no word trigram with the original.
std::string pick_distractor(const std::string& original, const std::vector<std::string>& candidates, Rng& rng) {
  std::vector<const std::string*> different;
  for (const auto& c : candidates)
    if (c != original) different.push_back(&c);
  if (different.empty()) throw CapacityError("no distractor object available for '" + original + "'");
  for (int attempt = 0; attempt < kDistractorAttempts; ++attempt) {
    const std::string& c = *different[rng.below(different.size())];
    if (!shares_trigram(c, original)) return c;
  }
  return *different[rng.below(different.size())];
}

ConflictTriple make_variants_indexed(const KnowledgeTriple& t, const std::vector<KnowledgeTriple>& pool,
                                     const PoolIndex& idx, std::uint64_t seed) {
  auto count_it = idx.counts.find(t.relation);
  if (count_it == idx.counts.end() || count_it->second < 2)
    throw CapacityError("pool needs at least two triples with relation " + std::string(to_string(t.relation)));

  Rng rng(seed);
  const RelationSpec& spec = relation_spec(t.relation);
  ConflictTriple ct;
  ct.base = t;
  ct.statement = render(spec.templates[0], t.subject, t.object);
  std::size_t alt = 1 + rng.below(spec.templates.size() - 1);
  ct.paraphrase = render(spec.templates[alt], t.subject, t.object);

  if (rng.bernoulli(kSwapProbability)) {
    std::vector<std::string> candidates = idx.objects.at(t.relation);
    bool any_other = false;
    for (const auto& c : candidates) any_other = any_other || c != t.object;
    if (!any_other) candidates = *spec.objects;
    ct.contradiction = render(spec.templates[0], t.subject, pick_distractor(t.object, candidates, rng));
  } else {
    ct.contradiction = render(spec.negation, t.subject, t.object);
  }

  auto eligible = [&t](const KnowledgeTriple& u) { return u.subject != t.subject && u.relation != t.relation; };
  const KnowledgeTriple* other = nullptr;
  for (int attempt = 0; attempt < 256 && !other; ++attempt) {
    const auto& u = pool[rng.below(pool.size())];
    if (eligible(u)) other = &u;
  }
  if (!other) {
    std::size_t start = rng.below(pool.size());
    for (std::size_t k = 0; k < pool.size() && !other; ++k) {
      const auto& u = pool[(start + k) % pool.size()];
      if (eligible(u)) other = &u;
    }
  }
  if (!other) throw CapacityError("pool has no triple with a different subject and relation");
  const RelationSpec& other_spec = relation_spec(other->relation);
  ct.unrelated = render(other_spec.templates[rng.below(other_spec.templates.size())], other->subject, other->object);
  return ct;
}

}  // namespace

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "unknown";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  return std::nullopt;
}

const char* to_string(ContextType t) {
  switch (t) {
    case ContextType::golden: return "golden";
    case ContextType::conflicting: return "conflicting";
    case ContextType::irrelevant: return "irrelevant";
  }
  return "unknown";
}

std::optional<ContextType> context_type_from_string(std::string_view s) {
  if (s == "golden") return ContextType::golden;
  if (s == "conflicting") return ContextType::conflicting;
  if (s == "irrelevant") return ContextType::irrelevant;
  return std::nullopt;
}

std::vector<KnowledgeTriple> sample_triples(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_triples requires n >= 1");
  std::vector<std::pair<Relation, std::size_t>> keys;
  for (Relation r : kRelations) {
    const auto& subjects = *relation_spec(r).subjects;
    for (std::size_t i = 0; i < subjects.size(); ++i) keys.emplace_back(r, i);
  }
  if (n > keys.size())
    throw CapacityError("requested " + std::to_string(n) + " triples but lexicon capacity is " +
                        std::to_string(keys.size()));
  Rng rng(seed);
  // partial Fisher-Yates: the first n slots form the sample
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(keys.size() - i));
    std::swap(keys[i], keys[j]);
  }
  std::vector<KnowledgeTriple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RelationSpec& spec = relation_spec(keys[i].first);
    KnowledgeTriple t;
    t.id = make_id('t', i);
    t.subject = (*spec.subjects)[keys[i].second];
    t.relation = keys[i].first;
    t.object = (*spec.objects)[rng.below(spec.objects->size())];
    out.push_back(std::move(t));
  }
  return out;
}

ConflictTriple make_variants(const KnowledgeTriple& t, const std::vector<KnowledgeTriple>& pool,
                             std::uint64_t seed) {
  return make_variants_indexed(t, pool, index_pool(pool), seed);
}

TripleSet build_dataset(std::size_t n, std::uint64_t seed, std::array<double, 3> split_ratios) {
  double total = split_ratios[0] + split_ratios[1] + split_ratios[2];
  for (double r : split_ratios)
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
  if (std::fabs(total - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  auto base = sample_triples(n, seed);
  PoolIndex idx = index_pool(base);
  TripleSet ts;
  ts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ts.push_back(make_variants_indexed(base[i], base, idx, derive_seed(seed, 1, i)));

  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * split_ratios[0]));
  auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * split_ratios[1]));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);
  for (std::size_t i = 0; i < n; ++i)
    ts[i].split = i < n_train ? Split::train : (i < n_train + n_dev ? Split::dev : Split::test);
  return ts;
}

std::vector<QACase> build_qa_cases(const TripleSet& ts, const QaOptions& opts) {
  if (ts.empty()) throw EmptyInputError("build_qa_cases requires a non-empty triple set");
  double mix_total = opts.mix[0] + opts.mix[1] + opts.mix[2];
  for (double m : opts.mix)
    if (!(m >= 0.0)) throw ConfigError("context mix fractions must be non-negative");
  if (std::fabs(mix_total - 1.0) > 1e-9) throw ConfigError("context mix must sum to 1");
  if (!(opts.noise_rate >= 0.0 && opts.noise_rate <= 1.0)) throw ConfigError("noise_rate must be in [0, 1]");
  if (!(opts.knowledge_rate >= 0.0 && opts.knowledge_rate <= 1.0))
    throw ConfigError("knowledge_rate must be in [0, 1]");
  if (opts.cases_per_triple < 1) throw ConfigError("cases_per_triple must be >= 1");

  std::vector<const ConflictTriple*> source;
  for (const auto& t : ts)
    if (!opts.split || t.split == *opts.split) source.push_back(&t);
  if (source.empty()) throw EmptyInputError("no triples in the requested split");

  std::size_t m = source.size() * opts.cases_per_triple;
  auto n_golden = static_cast<std::size_t>(std::llround(static_cast<double>(m) * opts.mix[0]));
  auto n_conf = static_cast<std::size_t>(std::llround(static_cast<double>(m) * opts.mix[1]));
  n_golden = std::min(n_golden, m);
  n_conf = std::min(n_conf, m - n_golden);
  std::vector<ContextType> types(m, ContextType::irrelevant);
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n_golden) types[i] = ContextType::golden;
    else if (i < n_golden + n_conf) types[i] = ContextType::conflicting;
  }
  Rng type_rng(derive_seed(opts.seed, 2));
  type_rng.shuffle(types);

  std::vector<QACase> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const ConflictTriple& t = *source[i / opts.cases_per_triple];
    const RelationSpec& spec = relation_spec(t.base.relation);
    Rng rng(derive_seed(opts.seed, 3, i));
    QACase c;
    c.id = make_id('q', i);
    c.question = render(spec.question, t.base.subject, "");
    c.gold_answer = t.base.object;
    c.context_type = types[i];
    switch (c.context_type) {
      case ContextType::golden: c.context = t.paraphrase; break;
      case ContextType::conflicting: c.context = t.contradiction; break;
      case ContextType::irrelevant: c.context = t.unrelated; break;
    }
    if (rng.bernoulli(opts.noise_rate) && ts.size() > 1) {
      for (int attempt = 0; attempt < 256; ++attempt) {
        const auto& other = ts[rng.below(ts.size())];
        auto parsed = parse_statement(other.unrelated);
        if (parsed && parsed->subject != t.base.subject) {
          c.context += " " + other.unrelated;
          break;
        }
      }
    }
    c.closed_book_correct = rng.bernoulli(opts.knowledge_rate);
    c.closed_book_answer = c.closed_book_correct ? t.base.object : pick_distractor(t.base.object, *spec.objects, rng);
    out.push_back(std::move(c));
  }
  return out;
}

ojson to_json(const ConflictTriple& t) {
  ojson j;
  j["id"] = t.base.id;
  j["subject"] = t.base.subject;
  j["relation"] = to_string(t.base.relation);
  j["object"] = t.base.object;
  j["statement"] = t.statement;
  j["paraphrase"] = t.paraphrase;
  j["contradiction"] = t.contradiction;
  j["unrelated"] = t.unrelated;
  j["split"] = to_string(t.split);
  return j;
}

namespace {

std::string get_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw FormatError(std::string("missing string field '") + key + "'");
  return j[key].get<std::string>();
}

}  // namespace

ConflictTriple triple_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("triple record is not a JSON object");
  ConflictTriple t;
  t.base.id = get_string(j, "id");
  t.base.subject = get_string(j, "subject");
  auto rel = relation_from_string(get_string(j, "relation"));
  if (!rel) throw FormatError("unknown relation '" + get_string(j, "relation") + "'");
  t.base.relation = *rel;
  t.base.object = get_string(j, "object");
  t.statement = get_string(j, "statement");
  t.paraphrase = get_string(j, "paraphrase");
  t.contradiction = get_string(j, "contradiction");
  t.unrelated = get_string(j, "unrelated");
  auto split = split_from_string(get_string(j, "split"));
  if (!split) throw FormatError("unknown split '" + get_string(j, "split") + "'");
  t.split = *split;
  return t;
}

ojson to_json(const QACase& c) {
  ojson j;
  j["id"] = c.id;
  j["question"] = c.question;
  j["gold_answer"] = c.gold_answer;
  j["context"] = c.context;
  j["context_type"] = to_string(c.context_type);
  j["closed_book_correct"] = c.closed_book_correct;
  j["closed_book_answer"] = c.closed_book_answer;
  return j;
}

QACase qa_case_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("QA record is not a JSON object");
  QACase c;
  c.id = get_string(j, "id");
  c.question = get_string(j, "question");
  c.gold_answer = get_string(j, "gold_answer");
  c.context = get_string(j, "context");
  auto type = context_type_from_string(get_string(j, "context_type"));
  if (!type) throw FormatError("unknown context_type '" + get_string(j, "context_type") + "'");
  c.context_type = *type;
  if (!j.contains("closed_book_correct") || !j["closed_book_correct"].is_boolean())
    throw FormatError("missing boolean field 'closed_book_correct'");
  c.closed_book_correct = j["closed_book_correct"].get<bool>();
  if (j.contains("closed_book_answer")) {
    c.closed_book_answer = get_string(j, "closed_book_answer");
  } else if (c.closed_book_correct) {
    c.closed_book_answer = c.gold_answer;
  }
  return c;
}

std::string triples_to_jsonl(const TripleSet& ts) {
  std::string out;
  for (const auto& t : ts) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::string qa_cases_to_jsonl(const std::vector<QACase>& cases) {
  std::string out;
  for (const auto& c : cases) {
    out += to_json(c).dump();
    out += '\n';
  }
  return out;
}

namespace {

template <typename T, typename F>
std::vector<T> read_jsonl(const std::string& path, F&& parse) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

TripleSet read_triples_jsonl(const std::string& path) {
  return read_jsonl<ConflictTriple>(path, [](const json& j) { return triple_from_json(j); });
}

std::vector<QACase> read_qa_jsonl(const std::string& path) {
  return read_jsonl<QACase>(path, [](const json& j) { return qa_case_from_json(j); });
}

}  // namespace tcr::datagen
