#include "driftlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "driftlab/csv.hpp"
#include "driftlab/keyvalue.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

struct Unit {
  std::size_t repeat;
  std::size_t window;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string run_fingerprint(const ExperimentPlan& plan, const std::string& tag,
                            std::span<const int> counts, std::size_t corpus_size) {
  std::ostringstream os;
  write_plan(os, plan);
  os << tag << '|' << corpus_size;
  for (int c : counts) os << '|' << c;
  return hex64(fnv1a64(os.str()));
}

using UnitCells = std::vector<CellResult>;

std::map<std::pair<std::size_t, std::size_t>, UnitCells> load_checkpoint(
    const std::filesystem::path& path, const std::string& fingerprint, std::size_t n_bins,
    std::span<const WindowSpec> windows) {
  std::map<std::pair<std::size_t, std::size_t>, UnitCells> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 13 || f[0] != fingerprint) continue;
    try {
      CellResult c;
      c.window_id = static_cast<std::size_t>(parse_unsigned(f[1], "window"));
      c.repeat_index = static_cast<std::size_t>(parse_unsigned(f[2], "repeat"));
      c.eval_bin = static_cast<std::size_t>(parse_unsigned(f[3], "eval_bin"));
      for (std::size_t i = 0; i < 9; ++i) {
        c.confusion.counts[i / 3][i % 3] = static_cast<long>(parse_integer(f[4 + i], "count"));
      }
      if (c.window_id >= windows.size()) continue;
      c.eval_result = evaluate(c.confusion);
      c.is_training_time = c.eval_bin == windows[c.window_id].bin_indices.back();
      done[{c.repeat_index, c.window_id}].push_back(c);
    } catch (const ValidationError&) {
      // torn line from an interrupted run
    }
  }
  // Only complete units count.
  for (auto it = done.begin(); it != done.end();) {
    const std::size_t expected = n_bins - windows[it->first.second].bin_indices.back();
    std::set<std::size_t> bins_seen;
    for (const auto& c : it->second) bins_seen.insert(c.eval_bin);
    if (bins_seen.size() != expected || it->second.size() != expected) {
      it = done.erase(it);
    } else {
      ++it;
    }
  }
  return done;
}

IntervalEstimate summarize(std::span<const double> values, double level, int draws,
                           std::uint64_t seed) {
  IntervalEstimate est;
  est.level = level;
  if (values.empty()) {
    est.mean = est.lower = est.upper = std::numeric_limits<double>::quiet_NaN();
  } else if (values.size() == 1) {
    est.mean = est.lower = est.upper = values[0];
  } else {
    est = bootstrap_ci(values, level, draws, seed);
  }
  return est;
}

void aggregate(DriftResults& r, const RunOptions& options) {
  const auto& plan = r.plan;
  const std::size_t n_bins = r.bins.size();
  // Cells are sorted by (window, eval_bin, repeat): walk the runs.
  std::size_t i = 0;
  std::uint64_t series = 0;
  while (i < r.cells.size()) {
    const std::size_t w = r.cells[i].window_id;
    const std::size_t b = r.cells[i].eval_bin;
    std::size_t j = i;
    while (j < r.cells.size() && r.cells[j].window_id == w && r.cells[j].eval_bin == b) ++j;
    const std::size_t base_bin = r.windows[w].bin_indices.back();

    for (std::size_t k = 0; k <= kNumClasses; ++k) {
      const bool macro = k == kNumClasses;
      const std::string key = macro ? "macro" : std::string(to_string(label_at(k)));
      auto metric_of = [&](const CellResult& c) {
        return macro ? c.eval_result.f1_macro : c.eval_result.per_class[k].f1;
      };
      std::vector<double> f1s;
      std::vector<double> rel;
      for (std::size_t m = i; m < j; ++m) {
        const auto& c = r.cells[m];
        f1s.push_back(metric_of(c));
        const CellResult* base = r.cell(w, base_bin, c.repeat_index);
        const double base_value = metric_of(*base);
        if (base_value > 0.0) rel.push_back(relative_change(metric_of(c), base_value));
      }
      const std::uint64_t cell_id = w * n_bins + b;
      SummaryRow row;
      row.window_id = w;
      row.eval_bin = b;
      row.is_training_time = b == base_bin;
      row.class_key = key;
      row.metric = "f1";
      row.n = f1s.size();
      row.interval = summarize(f1s, options.level, options.bootstrap_draws,
                               mix_seed(plan.master_seed, SeedDomain::bootstrap, cell_id, series++));
      r.summaries.push_back(row);
      row.metric = "relative_change";
      row.n = rel.size();
      row.interval = summarize(rel, options.level, options.bootstrap_draws,
                               mix_seed(plan.master_seed, SeedDomain::bootstrap, cell_id, series++));
      r.summaries.push_back(row);
    }
    i = j;
  }
}

std::vector<int> resolve_train_counts(const ExperimentPlan& plan, const std::vector<int>& requested) {
  std::vector<int> counts = requested;
  if (counts.empty()) counts.assign(static_cast<std::size_t>(plan.window_bins), plan.n_train_per_bin);
  if (counts.size() != static_cast<std::size_t>(plan.window_bins)) {
    throw ValidationError("train_counts must have one entry per window position");
  }
  for (int c : counts) {
    if (c < 1 || c > plan.n_train_per_bin) {
      throw ValidationError("train count " + std::to_string(c) + " outside [1, n_train_per_bin]");
    }
  }
  return counts;
}

std::pair<std::shared_ptr<const TrainedClassifier>, std::string> train_unit_model(
    const ExperimentPlan& plan, std::span<const LabeledExample> corpus,
    const std::vector<SplitSample>& splits, const WindowSpec& window, const std::vector<int>& counts,
    const ClassifierBackend& backend, std::size_t r) {
  const std::size_t w = window.window_id;
  std::vector<LabeledText> train_set;
  std::array<bool, kNumClasses> present{};
  for (std::size_t pos = 0; pos < window.bin_indices.size(); ++pos) {
    const auto& split = splits[window.bin_indices[pos]];
    const auto take = std::min(static_cast<std::size_t>(counts[pos]), split.train_ids.size());
    for (std::size_t i = 0; i < take; ++i) {
      const auto& ex = corpus[split.train_ids[i]];
      train_set.push_back({ex.text, ex.label});
      present[index_of(ex.label)] = true;
    }
  }
  if (train_set.empty()) {
    throw ValidationError("window " + std::to_string(w) + " has no training examples");
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    const Label only = train_set.front().label;
    return {std::make_shared<ConstantClassifier>(only),
            "window " + std::to_string(w) + " repeat " + std::to_string(r) +
                ": single-class training set, predicting " + std::string(to_string(only))};
  }
  return {backend.train(train_set, train_seed(plan, r, w), CellKey{w, r}), {}};
}

}  // namespace

const SummaryRow* DriftResults::find(std::size_t window_id, std::size_t eval_bin,
                                     std::string_view class_key, std::string_view metric) const {
  for (const auto& s : summaries) {
    if (s.window_id == window_id && s.eval_bin == eval_bin && s.class_key == class_key &&
        s.metric == metric) {
      return &s;
    }
  }
  return nullptr;
}

const CellResult* DriftResults::cell(std::size_t window_id, std::size_t eval_bin,
                                     std::size_t repeat) const {
  const auto key = std::make_tuple(window_id, eval_bin, repeat);
  const auto it = std::lower_bound(cells.begin(), cells.end(), key, [](const CellResult& c, const auto& k) {
    return std::make_tuple(c.window_id, c.eval_bin, c.repeat_index) < k;
  });
  if (it == cells.end() || std::make_tuple(it->window_id, it->eval_bin, it->repeat_index) != key) {
    return nullptr;
  }
  return &*it;
}

std::uint64_t train_seed(const ExperimentPlan& plan, std::size_t repeat_index,
                         std::size_t window_id) {
  return mix_seed(plan.master_seed, SeedDomain::train, repeat_index, window_id);
}

std::vector<int> window_train_counts(int total, int window_bins) {
  if (window_bins <= 0) throw ValidationError("window_bins must be positive");
  if (total < window_bins) {
    throw ValidationError("cannot spread " + std::to_string(total) + " training items over " +
                          std::to_string(window_bins) + " bins");
  }
  std::vector<int> counts(static_cast<std::size_t>(window_bins), total / window_bins);
  const int remainder = total % window_bins;
  for (int i = 0; i < remainder; ++i) ++counts[counts.size() - 1 - static_cast<std::size_t>(i)];
  return counts;
}

DriftResults run_drift(const ExperimentPlan& plan, std::span<const LabeledExample> corpus,
                       const ClassifierBackend& backend, const RunOptions& options) {
  plan.validate();
  auto binning = build_bins(corpus, plan);
  const auto windows = build_windows(binning.bins, plan);
  const std::size_t n_bins = binning.bins.size();

  const std::vector<int> counts = resolve_train_counts(plan, options.train_counts);

  DriftResults results;
  results.classifier_tag = backend.tag();
  results.plan = plan;
  results.windows = windows;
  results.train_counts = counts;

  // All splits up front; they are shared between windows.
  const auto repeats = static_cast<std::size_t>(plan.repeats);
  std::vector<std::vector<SplitSample>> splits(repeats);
  std::set<std::string> warnings;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (const auto& bin : binning.bins) {
      splits[r].push_back(sample_splits(bin, plan, r));
      if (!splits[r].back().warning.empty() && r == 0) warnings.insert(splits[r].back().warning);
    }
  }
  const std::string fingerprint = run_fingerprint(plan, results.classifier_tag, counts, corpus.size());
  std::map<std::pair<std::size_t, std::size_t>, UnitCells> completed;
  if (options.checkpoint) completed = load_checkpoint(*options.checkpoint, fingerprint, n_bins, windows);

  std::vector<Unit> units;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t w = 0; w < windows.size(); ++w) units.push_back({r, w});
  }
  std::vector<UnitCells> unit_cells(units.size());
  std::vector<std::vector<std::string>> unit_warnings(units.size());
  std::vector<char> needs_run(units.size(), 1);
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (auto it = completed.find({units[u].repeat, units[u].window}); it != completed.end()) {
      unit_cells[u] = std::move(it->second);
      needs_run[u] = 0;
    }
  }

  std::ofstream checkpoint_out;
  if (options.checkpoint) {
    const bool fresh = !std::filesystem::exists(*options.checkpoint);
    bool torn_tail = false;
    if (!fresh) {
      std::ifstream tail(*options.checkpoint, std::ios::binary | std::ios::ate);
      if (tail && tail.tellg() > 0) {
        tail.seekg(-1, std::ios::end);
        torn_tail = tail.get() != '\n';
      }
    }
    checkpoint_out.open(*options.checkpoint, std::ios::app);
    if (!checkpoint_out) throw Error("cannot open checkpoint " + options.checkpoint->string());
    if (fresh) checkpoint_out << "# driftlab checkpoint v1\n";
    if (torn_tail) checkpoint_out << '\n';
  }
  std::mutex checkpoint_mutex;

  auto run_unit = [&](std::size_t u) {
    const auto [r, w] = units[u];
    const auto& window = windows[w];
    auto [model, warning] = train_unit_model(plan, corpus, splits[r], window, counts, backend, r);
    if (!warning.empty()) unit_warnings[u].push_back(std::move(warning));

    UnitCells cells;
    for (std::size_t b = window.bin_indices.back(); b < n_bins; ++b) {
      const auto& split = splits[r][b];
      std::vector<std::string> texts;
      texts.reserve(split.eval_ids.size());
      for (auto id : split.eval_ids) texts.push_back(corpus[id].text);
      const auto probs = model->predict(texts);
      CellResult c;
      c.window_id = w;
      c.eval_bin = b;
      c.repeat_index = r;
      for (std::size_t i = 0; i < split.eval_ids.size(); ++i) {
        c.confusion.add(corpus[split.eval_ids[i]].label, probs[i].argmax());
      }
      c.eval_result = evaluate(c.confusion);
      c.is_training_time = b == window.bin_indices.back();
      cells.push_back(c);
    }
    if (options.checkpoint) {
      std::lock_guard lock(checkpoint_mutex);
      for (const auto& c : cells) {
        checkpoint_out << fingerprint << ',' << c.window_id << ',' << c.repeat_index << ','
                       << c.eval_bin;
        for (const auto& row : c.confusion.counts) {
          for (long v : row) checkpoint_out << ',' << v;
        }
        checkpoint_out << '\n';
      }
      checkpoint_out.flush();
    }
    unit_cells[u] = std::move(cells);
  };

  std::vector<std::size_t> pending;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (needs_run[u]) pending.push_back(u);
  }
  std::size_t n_threads = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  n_threads = std::max<std::size_t>(1, std::min(n_threads, pending.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{units.size() - pending.size()};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::mutex progress_mutex;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      const std::size_t u = pending[k];
      try {
        run_unit(u);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failed.exchange(true)) {
          const std::string where = "window " + std::to_string(units[u].window) + ", repeat " +
                                    std::to_string(units[u].repeat) + ": ";
          first_error = std::make_exception_ptr(Error(where + e.what()));
        }
        return;
      }
      const std::size_t done = ++finished;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(done, units.size());
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);

  for (std::size_t u = 0; u < units.size(); ++u) {
    for (auto& c : unit_cells[u]) results.cells.push_back(std::move(c));
    for (auto& wmsg : unit_warnings[u]) warnings.insert(std::move(wmsg));
  }
  std::sort(results.cells.begin(), results.cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::make_tuple(a.window_id, a.eval_bin, a.repeat_index) <
           std::make_tuple(b.window_id, b.eval_bin, b.repeat_index);
  });
  results.warnings.assign(warnings.begin(), warnings.end());

  for (auto& bin : binning.bins) bin.example_ids.clear();
  results.bins = std::move(binning.bins);
  aggregate(results, options);
  return results;
}

std::vector<std::pair<int, DriftResults>> run_size_ablation(const ExperimentPlan& plan,
                                                            std::span<const int> sizes,
                                                            std::span<const LabeledExample> corpus,
                                                            const ClassifierBackend& backend,
                                                            const RunOptions& options) {
  for (int size : sizes) {
    if (size <= 0 || size % plan.window_bins != 0) {
      throw ValidationError("training size " + std::to_string(size) +
                            " is not a positive multiple of window_bins = " +
                            std::to_string(plan.window_bins));
    }
  }
  std::vector<std::pair<int, DriftResults>> out;
  for (int size : sizes) {
    ExperimentPlan variant = plan;
    variant.n_train_per_bin = size / plan.window_bins;
    RunOptions opts = options;
    opts.train_counts.clear();
    if (opts.checkpoint) {
      opts.checkpoint = opts.checkpoint->string() + ".size" + std::to_string(size);
    }
    out.emplace_back(size, run_drift(variant, corpus, backend, opts));
  }
  return out;
}

std::vector<std::pair<int, DriftResults>> run_window_ablation(
    const ExperimentPlan& plan, std::span<const int> window_day_lengths, int total_train,
    std::span<const LabeledExample> corpus, const ClassifierBackend& backend,
    const RunOptions& options) {
  for (int len : window_day_lengths) {
    if (len <= 0 || len % plan.bin_days != 0) {
      throw ValidationError("window length " + std::to_string(len) +
                            " days is not a positive multiple of bin_days = " +
                            std::to_string(plan.bin_days));
    }
  }
  std::vector<std::pair<int, DriftResults>> out;
  for (int len : window_day_lengths) {
    ExperimentPlan variant = plan;
    variant.window_bins = len / plan.bin_days;
    const auto counts = window_train_counts(total_train, variant.window_bins);
    variant.n_train_per_bin = *std::max_element(counts.begin(), counts.end());
    RunOptions opts = options;
    opts.train_counts = counts;
    if (opts.checkpoint) opts.checkpoint = opts.checkpoint->string() + ".len" + std::to_string(len);
    out.emplace_back(len, run_drift(variant, corpus, backend, opts));
  }
  return out;
}

std::vector<WindowModel> train_window_models(const ExperimentPlan& plan,
                                             std::span<const LabeledExample> corpus,
                                             const ClassifierBackend& backend,
                                             std::size_t repeat_index,
                                             const std::vector<int>& train_counts) {
  plan.validate();
  const auto binning = build_bins(corpus, plan);
  const auto windows = build_windows(binning.bins, plan);
  const auto counts = resolve_train_counts(plan, train_counts);
  std::vector<SplitSample> splits;
  for (const auto& bin : binning.bins) splits.push_back(sample_splits(bin, plan, repeat_index));
  std::vector<WindowModel> out;
  for (const auto& window : windows) {
    auto [model, warning] = train_unit_model(plan, corpus, splits, window, counts, backend, repeat_index);
    out.push_back({window, std::move(model), std::move(warning)});
  }
  return out;
}

void write_cells_csv(std::ostream& out, const DriftResults& results) {
  out << "window_id,eval_bin,repeat,class,metric,value\n";
  for (const auto& c : results.cells) {
    const std::string prefix = std::to_string(c.window_id) + ',' + std::to_string(c.eval_bin) +
                               ',' + std::to_string(c.repeat_index) + ',';
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto name = std::string(to_string(label_at(k)));
      const auto& s = c.eval_result.per_class[k];
      out << prefix << name << ",precision," << format_real(s.precision) << '\n';
      out << prefix << name << ",recall," << format_real(s.recall) << '\n';
      out << prefix << name << ",f1," << format_real(s.f1) << '\n';
    }
    out << prefix << "macro,f1," << format_real(c.eval_result.f1_macro) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const DriftResults& results) {
  out << "window_id,train_end,eval_bin,eval_bin_start,is_training_time,class,metric,n,mean,lower,"
         "upper,level\n";
  for (const auto& s : results.summaries) {
    out << s.window_id << ',' << format_timestamp(results.windows[s.window_id].train_end) << ','
        << s.eval_bin << ',' << format_timestamp(results.bins[s.eval_bin].start) << ','
        << (s.is_training_time ? 1 : 0) << ',' << s.class_key << ',' << s.metric << ',' << s.n
        << ',' << format_real(s.interval.mean) << ',' << format_real(s.interval.lower) << ','
        << format_real(s.interval.upper) << ',' << format_real(s.interval.level) << '\n';
  }
}

}  // namespace driftlab
