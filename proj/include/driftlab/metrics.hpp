#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/label.hpp"

namespace driftlab {

// Rows are gold classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<long, kNumClasses>, kNumClasses> counts{};

  void add(Label gold, Label pred) { ++counts[index_of(gold)][index_of(pred)]; }
  long total() const;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalResult {
  std::array<ClassScores, kNumClasses> per_class{};
  double f1_macro = 0.0;

  const ClassScores& operator[](Label l) const { return per_class[index_of(l)]; }
};

// Undefined ratios (0/0) count as 0.
EvalResult evaluate(const ConfusionMatrix& cm);
EvalResult score(std::span<const Label> golds, std::span<const Label> preds);
ConfusionMatrix confusion(std::span<const Label> golds, std::span<const Label> preds);

// (score - base) / base; base must be positive.
double relative_change(double score, double base);

template <typename Time>
std::vector<std::pair<Time, double>> relative_change(std::span<const std::pair<Time, double>> series,
                                                     double base) {
  std::vector<std::pair<Time, double>> out;
  out.reserve(series.size());
  for (const auto& [t, s] : series) out.emplace_back(t, relative_change(s, base));
  return out;
}

struct IntervalEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

inline constexpr int kDefaultBootstrapDraws = 1000;

// Percentile bootstrap of the mean. Quantiles interpolate linearly between
// order statistics of the resampled means; the interval is widened to contain
// the sample mean if the percentiles miss it.
IntervalEstimate bootstrap_ci(std::span<const double> values, double level, int draws,
                              std::uint64_t seed);

struct AgreementReport {
  double kappa = 0.0;
  double observed_agreement = 0.0;  // P-bar
  double expected_agreement = 0.0;  // P-bar_e
  std::size_t n_items = 0;
  int n_raters = 0;
};

// Fleiss' kappa over items x {negative, neutral, positive} vote counts. Every
// item must carry the same number n >= 2 of votes.
AgreementReport fleiss_kappa(std::span<const std::array<int, kNumClasses>> table);

}  // namespace driftlab
