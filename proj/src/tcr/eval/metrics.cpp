#include "tcr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>

#include "tcr/common/errors.hpp"

namespace tcr::eval {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c); }

std::vector<std::string> tokens(std::string_view s) {
  std::istringstream in{normalize_answer(s)};
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

void check_both_classes(std::span<const DetectionRecord> recs) {
  if (recs.empty()) throw DegenerateInputError("detection metrics need records");
  bool pos = false, neg = false;
  for (const auto& r : recs) {
    if (r.label != 0 && r.label != 1) throw DomainError("detection labels must be 0 or 1");
    if (!std::isfinite(r.score)) throw DomainError("detection scores must be finite");
    (r.label ? pos : neg) = true;
  }
  if (!pos || !neg) throw DegenerateInputError("detection metrics need both classes");
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string lower;
  lower.reserve(s.size());
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (is_ascii_punct(c)) continue;
    lower += static_cast<char>(c < 128 ? std::tolower(c) : c);
  }
  std::istringstream in(lower);
  std::string w, out;
  while (in >> w) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

int em(std::string_view pred, std::string_view gold) { return normalize_answer(pred) == normalize_answer(gold) ? 1 : 0; }

double f1_token(std::string_view pred, std::string_view gold) {
  auto p = tokens(pred), g = tokens(gold);
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int same = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  double precision = static_cast<double>(same) / static_cast<double>(p.size());
  double recall = static_cast<double>(same) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

double detection_f1(std::span<const DetectionRecord> recs, double threshold) {
  check_both_classes(recs);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : recs) {
    bool pred = r.score >= threshold;
    if (pred && r.label) ++tp;
    else if (pred) ++fp;
    else if (r.label) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

ThresholdSweep sweep_thresholds(std::span<const DetectionRecord> recs) {
  check_both_classes(recs);
  std::vector<double> scores;
  for (const auto& r : recs) scores.push_back(r.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  ThresholdSweep s;
  s.best_f1 = -1.0;
  for (double t : scores) {
    double f = detection_f1(recs, t);
    s.curve.emplace_back(t, f);
    if (f > s.best_f1) {
      s.best_f1 = f;
      s.best_threshold = t;
    }
  }
  return s;
}

double auroc(std::span<const DetectionRecord> recs) {
  check_both_classes(recs);
  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return recs[a].score < recs[b].score; });
  // twice the rank sum of positives, kept integral so ties stay exact
  std::int64_t rank2_pos = 0, n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && recs[order[j + 1]].score == recs[order[i]].score) ++j;
    std::int64_t rank2 = static_cast<std::int64_t>(i + 1) + static_cast<std::int64_t>(j + 1);
    for (std::size_t k = i; k <= j; ++k)
      if (recs[order[k]].label) {
        rank2_pos += rank2;
        ++n_pos;
      }
    i = j + 1;
  }
  std::int64_t n_neg = static_cast<std::int64_t>(recs.size()) - n_pos;
  std::int64_t u2 = rank2_pos - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * n_pos * n_neg);
}

double auroc_bruteforce(std::span<const DetectionRecord> recs) {
  check_both_classes(recs);
  std::int64_t twice = 0, n_pos = 0, n_neg = 0;
  for (const auto& p : recs) {
    if (!p.label) {
      ++n_neg;
      continue;
    }
    ++n_pos;
    for (const auto& n : recs) {
      if (n.label) continue;
      if (p.score > n.score) twice += 2;
      else if (p.score == n.score) twice += 1;
    }
  }
  return static_cast<double>(twice) / static_cast<double>(2 * n_pos * n_neg);
}

double kgrr(std::span<const OutcomeCase> cases) {
  std::size_t denom = 0, hit = 0;
  for (const auto& c : cases) {
    if (c.closed_book_correct || c.context_type != datagen::ContextType::golden) continue;
    ++denom;
    hit += c.final_correct;
  }
  if (denom == 0) throw DegenerateInputError("kgrr needs closed-book-wrong cases with golden context");
  return static_cast<double>(hit) / static_cast<double>(denom);
}

double mcor(std::span<const OutcomeCase> cases) {
  std::size_t denom = 0, overridden = 0;
  for (const auto& c : cases) {
    if (!c.closed_book_correct || c.context_type != datagen::ContextType::conflicting) continue;
    ++denom;
    overridden += !c.final_correct;
  }
  if (denom == 0) throw DegenerateInputError("mcor needs closed-book-correct cases with conflicting context");
  return static_cast<double>(overridden) / static_cast<double>(denom);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("correlation inputs differ in length");
  if (a.size() < 3) throw DegenerateInputError("correlation needs at least three points");
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInputError("correlation of a constant sequence");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman inputs differ in length");
  auto ra = average_ranks(a), rb = average_ranks(b);
  return pearson(ra, rb);
}

double krippendorff_alpha_nominal(const RatingMatrix& ratings) {
  if (ratings.size() < 2) throw DegenerateInputError("krippendorff alpha needs at least two raters");
  std::size_t n_items = ratings[0].size();
  for (const auto& row : ratings)
    if (row.size() != n_items) throw DimensionError("every rater row must cover the same items");
  if (n_items < 2) throw DegenerateInputError("krippendorff alpha needs at least two items");

  std::map<std::pair<int, int>, double> o;  // coincidence matrix
  for (std::size_t u = 0; u < n_items; ++u) {
    std::vector<int> vals;
    for (const auto& row : ratings)
      if (row[u]) vals.push_back(*row[u]);
    if (vals.size() < 2) continue;  // unpairable item
    double w = 1.0 / static_cast<double>(vals.size() - 1);
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = 0; j < vals.size(); ++j)
        if (i != j) o[{vals[i], vals[j]}] += w;
  }
  if (o.empty()) throw DegenerateInputError("no pairable ratings");
  std::map<int, double> marginals;
  double n = 0.0, disagree_obs = 0.0;
  for (const auto& [ck, v] : o) {
    marginals[ck.first] += v;
    n += v;
    if (ck.first != ck.second) disagree_obs += v;
  }
  double disagree_exp = 0.0;
  for (const auto& [c, nc] : marginals)
    for (const auto& [k, nk] : marginals)
      if (c != k) disagree_exp += nc * nk;
  if (disagree_exp == 0.0) throw DegenerateInputError("krippendorff alpha is undefined when only one category is used");
  return 1.0 - (n - 1.0) * disagree_obs / disagree_exp;
}

}  // namespace tcr::eval
