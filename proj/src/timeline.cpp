#include "driftlab/timeline.hpp"

#include <algorithm>
#include <numeric>

#include "driftlab/csv.hpp"
#include "driftlab/error.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

void ExperimentPlan::validate() const {
  if (bin_days <= 0) throw ValidationError("bin_days must be positive");
  if (window_bins <= 0) throw ValidationError("window_bins must be positive");
  if (n_train_per_bin <= 0) throw ValidationError("n_train_per_bin must be positive");
  if (n_eval_per_bin <= 0) throw ValidationError("n_eval_per_bin must be positive");
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (origin && end && *end <= *origin) throw ValidationError("end must be after origin");
}

ExperimentPlan plan_from_config(const KeyValueConfig& cfg) {
  cfg.reject_unknown({"bin_days", "window_bins", "n_train_per_bin", "n_eval_per_bin", "repeats",
                      "master_seed", "origin", "end", "downsample"});
  ExperimentPlan plan;
  auto int_field = [&](const char* key, int& target) {
    if (auto v = cfg.get(key)) target = static_cast<int>(parse_integer(*v, key));
  };
  auto time_field = [&](const char* key, std::optional<Timestamp>& target) {
    if (auto v = cfg.get(key)) {
      const auto t = parse_timestamp(*v);
      if (!t) throw ValidationError(std::string(key) + ": bad timestamp '" + *v + "'");
      target = *t;
    }
  };
  int_field("bin_days", plan.bin_days);
  int_field("window_bins", plan.window_bins);
  int_field("n_train_per_bin", plan.n_train_per_bin);
  int_field("n_eval_per_bin", plan.n_eval_per_bin);
  int_field("repeats", plan.repeats);
  if (auto v = cfg.get("master_seed")) plan.master_seed = parse_unsigned(*v, "master_seed");
  time_field("origin", plan.origin);
  time_field("end", plan.end);
  if (auto v = cfg.get("downsample")) plan.downsample = parse_bool(*v, "downsample");
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  return plan_from_config(KeyValueConfig::load(path));
}

void write_plan(std::ostream& out, const ExperimentPlan& plan) {
  out << "bin_days = " << plan.bin_days << '\n'
      << "window_bins = " << plan.window_bins << '\n'
      << "n_train_per_bin = " << plan.n_train_per_bin << '\n'
      << "n_eval_per_bin = " << plan.n_eval_per_bin << '\n'
      << "repeats = " << plan.repeats << '\n'
      << "master_seed = " << plan.master_seed << '\n';
  if (plan.origin) out << "origin = " << format_timestamp(*plan.origin) << '\n';
  if (plan.end) out << "end = " << format_timestamp(*plan.end) << '\n';
  out << "downsample = " << (plan.downsample ? "true" : "false") << '\n';
}

Binning build_bins(std::span<const LabeledExample> corpus, const ExperimentPlan& plan) {
  plan.validate();
  if (corpus.empty()) throw ValidationError("empty corpus");
  for (std::size_t i = 1; i < corpus.size(); ++i) {
    if (corpus[i].created_at < corpus[i - 1].created_at) {
      throw ValidationError("corpus is not sorted by created_at (at " + corpus[i].item_id + ")");
    }
  }
  const Timestamp earliest = corpus.front().created_at;
  const Timestamp origin =
      plan.origin.value_or(Timestamp{std::chrono::sys_seconds{day_of(earliest)}});
  if (origin > earliest) throw ValidationError("origin is later than the earliest example");
  const Timestamp stop = plan.end.value_or(corpus.back().created_at);

  const auto width = std::chrono::duration_cast<std::chrono::seconds>(Days{plan.bin_days});
  const auto n_bins = static_cast<std::size_t>((stop - origin) / width);

  Binning out;
  out.origin = origin;
  out.bins.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.bins[k].index = k;
    out.bins[k].start = origin + width * static_cast<long>(k);
    out.bins[k].end = origin + width * static_cast<long>(k + 1);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto k = static_cast<std::size_t>((corpus[i].created_at - origin) / width);
    if (k < n_bins) {
      out.bins[k].example_ids.push_back(i);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

std::uint64_t split_seed(const ExperimentPlan& plan, std::size_t repeat_index,
                         std::size_t bin_index) {
  return mix_seed(plan.master_seed, SeedDomain::split, repeat_index, bin_index);
}

SplitSample sample_splits(const TimeBin& bin, const ExperimentPlan& plan,
                          std::size_t repeat_index, std::optional<int> n_train) {
  const int requested = n_train.value_or(plan.n_train_per_bin);
  if (requested < 0 || requested > plan.n_train_per_bin) {
    throw ValidationError("requested train count " + std::to_string(requested) +
                          " exceeds n_train_per_bin");
  }
  const std::size_t size = bin.example_ids.size();
  const auto nominal = static_cast<std::size_t>(plan.n_train_per_bin + plan.n_eval_per_bin);

  SplitSample s;
  s.repeat_index = repeat_index;
  s.bin_index = bin.index;

  std::size_t n_eval = static_cast<std::size_t>(plan.n_eval_per_bin);
  std::size_t train_pool = static_cast<std::size_t>(plan.n_train_per_bin);
  if (size < nominal) {
    if (!plan.downsample) {
      throw ValidationError("bin " + std::to_string(bin.index) + " has " + std::to_string(size) +
                            " examples, need " + std::to_string(nominal));
    }
    train_pool = size * static_cast<std::size_t>(plan.n_train_per_bin) / nominal;
    n_eval = size - train_pool;
    s.downsampled = true;
    s.warning = "bin " + std::to_string(bin.index) + " undersized (" + std::to_string(size) +
                "); split " + std::to_string(train_pool) + " train / " + std::to_string(n_eval) +
                " eval";
  }
  const std::size_t n_take = std::min(static_cast<std::size_t>(requested), train_pool);

  std::vector<std::size_t> perm = bin.example_ids;
  Rng rng(split_seed(plan, repeat_index, bin.index));
  rng.shuffle(std::span(perm));
  s.eval_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
  s.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_eval),
                     perm.begin() + static_cast<std::ptrdiff_t>(n_eval + n_take));
  return s;
}

std::vector<WindowSpec> build_windows(std::span<const TimeBin> bins, const ExperimentPlan& plan) {
  const auto k = static_cast<std::size_t>(plan.window_bins);
  if (bins.size() < k) {
    throw ValidationError("need at least " + std::to_string(k) + " bins for a window, have " +
                          std::to_string(bins.size()));
  }
  std::vector<WindowSpec> windows;
  for (std::size_t w = k - 1; w < bins.size(); ++w) {
    WindowSpec spec;
    spec.window_id = windows.size();
    spec.bin_indices.resize(k);
    std::iota(spec.bin_indices.begin(), spec.bin_indices.end(), w + 1 - k);
    spec.train_end = bins[w].end;
    windows.push_back(std::move(spec));
  }
  return windows;
}

void write_bins_csv(std::ostream& out, std::span<const TimeBin> bins) {
  out << "bin,start,end,n_examples\n";
  for (const auto& b : bins) {
    out << b.index << ',' << format_timestamp(b.start) << ',' << format_timestamp(b.end) << ','
        << b.example_ids.size() << '\n';
  }
}

void write_splits_csv(std::ostream& out, std::span<const LabeledExample> corpus,
                      std::span<const TimeBin> bins, const ExperimentPlan& plan) {
  out << "repeat,bin,item_id,role\n";
  for (int r = 0; r < plan.repeats; ++r) {
    for (const auto& b : bins) {
      const auto s = sample_splits(b, plan, static_cast<std::size_t>(r));
      for (auto id : s.train_ids) {
        out << r << ',' << b.index << ',' << csv_escape(corpus[id].item_id) << ",train\n";
      }
      for (auto id : s.eval_ids) {
        out << r << ',' << b.index << ',' << csv_escape(corpus[id].item_id) << ",eval\n";
      }
    }
  }
}

}  // namespace driftlab
