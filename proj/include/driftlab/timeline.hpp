#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "driftlab/ingest.hpp"
#include "driftlab/keyvalue.hpp"
#include "driftlab/time.hpp"

namespace driftlab {

struct ExperimentPlan {
  int bin_days = 90;
  int window_bins = 4;
  int n_train_per_bin = 400;
  int n_eval_per_bin = 150;
  int repeats = 50;
  std::uint64_t master_seed = 0;
  // Defaults to midnight UTC of the earliest example.
  std::optional<Timestamp> origin;
  // Observation end; defaults to the latest example timestamp. Only full bins
  // that end at or before it are kept.
  std::optional<Timestamp> end;
  // Allow undersized bins, split proportionally.
  bool downsample = false;

  void validate() const;
};

ExperimentPlan plan_from_config(const KeyValueConfig& cfg);
ExperimentPlan load_plan(const std::filesystem::path& path);
void write_plan(std::ostream& out, const ExperimentPlan& plan);

struct TimeBin {
  std::size_t index = 0;
  Timestamp start;  // inclusive
  Timestamp end;    // exclusive
  std::vector<std::size_t> example_ids;  // positions in the corpus, ascending
};

struct Binning {
  std::vector<TimeBin> bins;
  Timestamp origin;
  std::size_t dropped = 0;  // examples past the last full bin
};

// Bin k covers [origin + k*bin_days, origin + (k+1)*bin_days). Trailing partial
// bins are dropped. Requires a corpus sorted by created_at.
Binning build_bins(std::span<const LabeledExample> corpus, const ExperimentPlan& plan);

struct SplitSample {
  std::size_t repeat_index = 0;
  std::size_t bin_index = 0;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> eval_ids;
  bool downsampled = false;
  std::string warning;
};

// Seed for the (repeat, bin) cell: mix_seed(master_seed, split, repeat, bin).
std::uint64_t split_seed(const ExperimentPlan& plan, std::size_t repeat_index,
                         std::size_t bin_index);

// Draws a seeded permutation of the bin. The first n_eval items form the eval
// split and the following items the train split, so the eval split of a
// (repeat, bin) cell does not depend on how many training items are requested.
// `n_train` overrides plan.n_train_per_bin and may not exceed it.
SplitSample sample_splits(const TimeBin& bin, const ExperimentPlan& plan,
                          std::size_t repeat_index, std::optional<int> n_train = std::nullopt);

struct WindowSpec {
  std::size_t window_id = 0;
  std::vector<std::size_t> bin_indices;
  Timestamp train_end;
};

// One window per bin w >= window_bins - 1, covering [w - window_bins + 1, w].
std::vector<WindowSpec> build_windows(std::span<const TimeBin> bins, const ExperimentPlan& plan);

void write_bins_csv(std::ostream& out, std::span<const TimeBin> bins);

// (repeat, bin, item_id, role) for every split of every repeat.
void write_splits_csv(std::ostream& out, std::span<const LabeledExample> corpus,
                      std::span<const TimeBin> bins, const ExperimentPlan& plan);

}  // namespace driftlab
