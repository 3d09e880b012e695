#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/classifier.hpp"
#include "driftlab/ingest.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/timeline.hpp"

namespace driftlab {

struct CellResult {
  std::size_t window_id = 0;
  std::size_t eval_bin = 0;
  std::size_t repeat_index = 0;
  ConfusionMatrix confusion;
  EvalResult eval_result;
  bool is_training_time = false;
};

// Aggregate over repeats for one (window, eval bin, class, metric).
// class_key is "macro" or a class name; metric is "f1" or "relative_change".
struct SummaryRow {
  std::size_t window_id = 0;
  std::size_t eval_bin = 0;
  bool is_training_time = false;
  std::string class_key;
  std::string metric;
  std::size_t n = 0;  // repeats contributing
  IntervalEstimate interval;
};

struct DriftResults {
  std::string classifier_tag;
  ExperimentPlan plan;
  std::vector<TimeBin> bins;  // example_ids cleared; bounds only
  std::vector<WindowSpec> windows;
  std::vector<int> train_counts;  // per window position, oldest bin first
  std::vector<CellResult> cells;  // sorted by (window, eval_bin, repeat)
  std::vector<SummaryRow> summaries;
  std::vector<std::string> warnings;

  const SummaryRow* find(std::size_t window_id, std::size_t eval_bin, std::string_view class_key,
                         std::string_view metric) const;
  const CellResult* cell(std::size_t window_id, std::size_t eval_bin, std::size_t repeat) const;
};

struct RunOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  // Completed (window, repeat) units are appended here and skipped on rerun.
  std::optional<std::filesystem::path> checkpoint;
  int bootstrap_draws = kDefaultBootstrapDraws;
  double level = 0.95;
  // Training items drawn from each window position (oldest first); empty means
  // plan.n_train_per_bin everywhere. No entry may exceed plan.n_train_per_bin.
  std::vector<int> train_counts;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Seed for the model of window w in repeat r.
std::uint64_t train_seed(const ExperimentPlan& plan, std::size_t repeat_index,
                         std::size_t window_id);

// floor(total / window_bins) per bin, remainder to the most recent bins.
std::vector<int> window_train_counts(int total, int window_bins);

// For every repeat and window: train on the pooled train splits of the
// window's bins, evaluate on the eval split of its last bin and every later
// bin, then bootstrap summaries over repeats.
DriftResults run_drift(const ExperimentPlan& plan, std::span<const LabeledExample> corpus,
                       const ClassifierBackend& backend, const RunOptions& options = {});

// Each size is the total per window; per-bin count = size / window_bins.
std::vector<std::pair<int, DriftResults>> run_size_ablation(const ExperimentPlan& plan,
                                                            std::span<const int> sizes,
                                                            std::span<const LabeledExample> corpus,
                                                            const ClassifierBackend& backend,
                                                            const RunOptions& options = {});

// Each length (days, a multiple of bin_days) sets window_bins; the total number
// of training items per model stays `total_train`.
std::vector<std::pair<int, DriftResults>> run_window_ablation(
    const ExperimentPlan& plan, std::span<const int> window_day_lengths, int total_train,
    std::span<const LabeledExample> corpus, const ClassifierBackend& backend,
    const RunOptions& options = {});

struct WindowModel {
  WindowSpec window;
  std::shared_ptr<const TrainedClassifier> model;
  std::string warning;  // set when a constant predictor stands in
};

// The models run_drift trains for one repeat, one per window.
std::vector<WindowModel> train_window_models(const ExperimentPlan& plan,
                                             std::span<const LabeledExample> corpus,
                                             const ClassifierBackend& backend,
                                             std::size_t repeat_index = 0,
                                             const std::vector<int>& train_counts = {});

// window_id,eval_bin,repeat,class,metric,value
void write_cells_csv(std::ostream& out, const DriftResults& results);

// window_id,train_end,eval_bin,eval_bin_start,is_training_time,class,metric,n,mean,lower,upper,level
void write_summary_csv(std::ostream& out, const DriftResults& results);

}  // namespace driftlab
