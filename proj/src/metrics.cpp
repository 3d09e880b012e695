#include "driftlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

long ConfusionMatrix::total() const {
  long n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), 0L);
  return n;
}

EvalResult evaluate(const ConfusionMatrix& cm) {
  EvalResult r;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    double predicted = 0.0;
    double actual = 0.0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      predicted += static_cast<double>(cm.counts[o][c]);
      actual += static_cast<double>(cm.counts[c][o]);
    }
    auto& s = r.per_class[c];
    s.precision = safe_ratio(tp, predicted);
    s.recall = safe_ratio(tp, actual);
    s.f1 = safe_ratio(2.0 * tp, predicted + actual);
  }
  r.f1_macro = (r.per_class[0].f1 + r.per_class[1].f1 + r.per_class[2].f1) / 3.0;
  return r;
}

ConfusionMatrix confusion(std::span<const Label> golds, std::span<const Label> preds) {
  if (golds.size() != preds.size()) {
    throw ValidationError("score: " + std::to_string(golds.size()) + " golds vs " +
                          std::to_string(preds.size()) + " predictions");
  }
  if (golds.empty()) throw ValidationError("score: nothing to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < golds.size(); ++i) cm.add(golds[i], preds[i]);
  return cm;
}

EvalResult score(std::span<const Label> golds, std::span<const Label> preds) {
  return evaluate(confusion(golds, preds));
}

double relative_change(double score, double base) {
  if (!(base > 0.0)) throw ValidationError("relative change needs a positive base score");
  return (score - base) / base;
}

IntervalEstimate bootstrap_ci(std::span<const double> values, double level, int draws,
                              std::uint64_t seed) {
  if (values.size() < 2) throw ValidationError("bootstrap needs at least 2 values");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must be in (0, 1)");
  if (draws < 1) throw ValidationError("draws must be >= 1");

  const double n = static_cast<double>(values.size());
  IntervalEstimate est;
  est.level = level;
  est.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

  std::vector<double> means(static_cast<std::size_t>(draws));
  Rng rng(seed);
  for (double& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.uniform_index(values.size())];
    m = sum / n;
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  est.lower = std::min(quantile_sorted(means, tail), est.mean);
  est.upper = std::max(quantile_sorted(means, 1.0 - tail), est.mean);
  return est;
}

AgreementReport fleiss_kappa(std::span<const std::array<int, kNumClasses>> table) {
  if (table.empty()) throw ValidationError("fleiss_kappa: empty table");
  const int n = std::accumulate(table[0].begin(), table[0].end(), 0);
  if (n < 2) throw ValidationError("fleiss_kappa: need at least 2 raters per item");

  AgreementReport rep;
  rep.n_items = table.size();
  rep.n_raters = n;
  std::array<double, kNumClasses> pooled{};
  double p_sum = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    int total = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      if (row[j] < 0) throw ValidationError("fleiss_kappa: negative count");
      total += row[j];
      sq += static_cast<double>(row[j]) * row[j];
      pooled[j] += row[j];
    }
    if (total != n) {
      throw ValidationError("fleiss_kappa: item " + std::to_string(i) + " has " +
                            std::to_string(total) + " ratings, expected " + std::to_string(n));
    }
    p_sum += (sq - n) / (static_cast<double>(n) * (n - 1));
  }
  const double all = static_cast<double>(n) * static_cast<double>(table.size());
  rep.observed_agreement = p_sum / static_cast<double>(table.size());
  for (double& pj : pooled) {
    pj /= all;
    rep.expected_agreement += pj * pj;
  }
  if (rep.expected_agreement >= 1.0) {
    // Every vote in one category: agreement is perfect by construction.
    rep.kappa = 1.0;
  } else {
    rep.kappa = (rep.observed_agreement - rep.expected_agreement) / (1.0 - rep.expected_agreement);
  }
  return rep;
}

}  // namespace driftlab
