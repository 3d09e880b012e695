#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "driftlab/timeline.hpp"
#include "support.hpp"

using namespace driftlab;
using test_support::day;
using test_support::example;
using test_support::ts;

namespace {

// One example every `step_hours`, starting at midnight of day 0.
std::vector<LabeledExample> spaced_corpus(int days, int step_hours = 24) {
  std::vector<LabeledExample> out;
  const auto end = day(days);
  int k = 0;
  for (auto t = day(0); t <= end; t += std::chrono::hours(step_hours)) {
    out.push_back(example("e" + std::to_string(k), t, label_at(static_cast<std::size_t>(k % 3))));
    ++k;
  }
  return out;
}

TimeBin bin_of_size(std::size_t n, std::size_t index = 0) {
  TimeBin b;
  b.index = index;
  b.start = day(0);
  b.end = day(90);
  for (std::size_t i = 0; i < n; ++i) b.example_ids.push_back(1000 + i);
  return b;
}

}  // namespace

TEST_CASE("bin counts follow the span") {
  ExperimentPlan plan;
  CHECK(build_bins(spaced_corpus(270), plan).bins.size() == 3);
  CHECK(build_bins(spaced_corpus(1188), plan).bins.size() == 13);
  CHECK(build_bins(spaced_corpus(269), plan).bins.size() == 2);

  const auto binning = build_bins(spaced_corpus(1188), plan);
  CHECK(binning.origin == day(0));
  for (std::size_t k = 0; k < binning.bins.size(); ++k) {
    const auto& b = binning.bins[k];
    CHECK(b.index == k);
    CHECK(b.end - b.start == std::chrono::days(90));
    if (k > 0) CHECK(b.start == binning.bins[k - 1].end);
    CHECK(b.example_ids.size() == 90);
  }
  // Days 1170 .. 1188 fall in the dropped partial bin.
  CHECK(binning.dropped == 19);
}

TEST_CASE("bins are half-open and every example lands in at most one") {
  ExperimentPlan plan;
  const std::vector<LabeledExample> corpus = {
      example("a", day(0) + std::chrono::hours(5), Label::neutral),
      example("b", day(90) - std::chrono::seconds(1), Label::neutral),
      example("c", day(90), Label::neutral),
      example("d", day(185), Label::neutral)};
  const auto binning = build_bins(corpus, plan);
  REQUIRE(binning.bins.size() == 2);
  CHECK(binning.bins[0].example_ids == std::vector<std::size_t>{0, 1});
  CHECK(binning.bins[1].example_ids == std::vector<std::size_t>{2});
  CHECK(binning.dropped == 1);
}

TEST_CASE("origin and end overrides") {
  const auto corpus = spaced_corpus(400);
  ExperimentPlan plan;
  plan.origin = day(0) - std::chrono::days(10);
  auto binning = build_bins(corpus, plan);
  CHECK(binning.bins.size() == 4);
  CHECK(binning.bins[0].example_ids.size() == 80);

  plan.end = day(0) + std::chrono::days(170);
  CHECK(build_bins(corpus, plan).bins.size() == 2);

  ExperimentPlan late;
  late.origin = day(1);
  CHECK_THROWS_AS(build_bins(corpus, late), ValidationError);
  CHECK_THROWS_AS(build_bins(std::vector<LabeledExample>{}, ExperimentPlan{}), ValidationError);

  auto unsorted = corpus;
  std::swap(unsorted[3], unsorted[7]);
  CHECK_THROWS_AS(build_bins(unsorted, ExperimentPlan{}), ValidationError);
}

TEST_CASE("a bin of exactly 550 is partitioned 400 / 150") {
  ExperimentPlan plan;
  const auto bin = bin_of_size(550, 3);
  const auto s = sample_splits(bin, plan, 0);
  CHECK(s.train_ids.size() == 400);
  CHECK(s.eval_ids.size() == 150);
  CHECK_FALSE(s.downsampled);
  std::set<std::size_t> all(s.train_ids.begin(), s.train_ids.end());
  all.insert(s.eval_ids.begin(), s.eval_ids.end());
  CHECK(all.size() == 550);
  CHECK(std::set<std::size_t>(bin.example_ids.begin(), bin.example_ids.end()) == all);
}

TEST_CASE("splits are deterministic, disjoint and vary with the repeat") {
  ExperimentPlan plan;
  plan.master_seed = 99;
  const auto bin = bin_of_size(700, 2);
  const auto a = sample_splits(bin, plan, 4);
  const auto b = sample_splits(bin, plan, 4);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.eval_ids == b.eval_ids);
  CHECK(sample_splits(bin, plan, 5).eval_ids != a.eval_ids);
  plan.master_seed = 100;
  CHECK(sample_splits(bin, plan, 4).eval_ids != a.eval_ids);

  for (std::size_t r = 0; r < 20; ++r) {
    const auto s = sample_splits(bin, plan, r);
    std::set<std::size_t> train(s.train_ids.begin(), s.train_ids.end());
    REQUIRE(train.size() == s.train_ids.size());
    for (auto id : s.eval_ids) REQUIRE(train.count(id) == 0);
  }
}

TEST_CASE("fewer training items keep the same eval split") {
  ExperimentPlan plan;
  const auto bin = bin_of_size(600);
  const auto full = sample_splits(bin, plan, 1);
  const auto part = sample_splits(bin, plan, 1, 100);
  CHECK(part.eval_ids == full.eval_ids);
  REQUIRE(part.train_ids.size() == 100);
  CHECK(std::equal(part.train_ids.begin(), part.train_ids.end(), full.train_ids.begin()));
  CHECK_THROWS_AS(sample_splits(bin, plan, 1, 401), ValidationError);
}

TEST_CASE("undersized bins") {
  ExperimentPlan plan;
  const auto bin = bin_of_size(300, 7);
  try {
    sample_splits(bin, plan, 0);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bin 7") != std::string::npos);
    CHECK(msg.find("300") != std::string::npos);
  }
  plan.downsample = true;
  const auto s = sample_splits(bin, plan, 0);
  // floor(300 * 400 / 550) = 218, remainder 82
  CHECK(s.train_ids.size() == 218);
  CHECK(s.eval_ids.size() == 82);
  CHECK(s.downsampled);
  CHECK_FALSE(s.warning.empty());
}

TEST_CASE("sliding windows") {
  ExperimentPlan plan;
  const auto bins13 = build_bins(spaced_corpus(1188), plan).bins;
  const auto windows = build_windows(bins13, plan);
  REQUIRE(windows.size() == 10);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    CHECK(windows[w].window_id == w);
    CHECK(windows[w].bin_indices == std::vector<std::size_t>{w, w + 1, w + 2, w + 3});
    CHECK(windows[w].train_end == bins13[w + 3].end);
  }
  const std::vector<TimeBin> four(bins13.begin(), bins13.begin() + 4);
  CHECK(build_windows(four, plan).size() == 1);
  const std::vector<TimeBin> three(bins13.begin(), bins13.begin() + 3);
  CHECK_THROWS_AS(build_windows(three, plan), ValidationError);
}

TEST_CASE("window train union holds n_train_per_bin * window_bins") {
  ExperimentPlan plan;
  plan.n_train_per_bin = 40;
  plan.n_eval_per_bin = 15;
  const auto binning = build_bins(spaced_corpus(1188, 2), plan);
  for (const auto& w : build_windows(binning.bins, plan)) {
    std::set<std::size_t> pooled;
    for (auto b : w.bin_indices) {
      const auto s = sample_splits(binning.bins[b], plan, 3);
      pooled.insert(s.train_ids.begin(), s.train_ids.end());
    }
    CHECK(pooled.size() == 160);
  }
}

TEST_CASE("plans round-trip through the config format") {
  ExperimentPlan plan;
  plan.bin_days = 30;
  plan.window_bins = 2;
  plan.n_train_per_bin = 10;
  plan.n_eval_per_bin = 5;
  plan.repeats = 3;
  plan.master_seed = 18446744073709551615ULL;
  plan.origin = ts("2019-01-01T00:00:00Z");
  plan.end = ts("2021-01-01T00:00:00Z");
  plan.downsample = true;
  std::ostringstream out;
  write_plan(out, plan);
  std::istringstream in(out.str());
  const auto back = plan_from_config(KeyValueConfig::parse(in));
  CHECK(back.bin_days == 30);
  CHECK(back.window_bins == 2);
  CHECK(back.n_train_per_bin == 10);
  CHECK(back.n_eval_per_bin == 5);
  CHECK(back.repeats == 3);
  CHECK(back.master_seed == plan.master_seed);
  CHECK(back.origin == plan.origin);
  CHECK(back.end == plan.end);
  CHECK(back.downsample);

  std::istringstream unknown("bin_dayz = 3\n");
  CHECK_THROWS_AS(plan_from_config(KeyValueConfig::parse(unknown)), ValidationError);
  std::istringstream zero("repeats = 0\n");
  CHECK_THROWS_AS(plan_from_config(KeyValueConfig::parse(zero)), ValidationError);
}

TEST_CASE("split manifests list every role once per repeat") {
  ExperimentPlan plan;
  plan.n_train_per_bin = 4;
  plan.n_eval_per_bin = 2;
  plan.repeats = 2;
  const auto corpus = spaced_corpus(200, 48);
  const auto bins = build_bins(corpus, plan).bins;
  std::ostringstream out;
  write_splits_csv(out, corpus, bins, plan);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "repeat,bin,item_id,role");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 2 * static_cast<int>(bins.size()) * 6);

  std::ostringstream bins_csv;
  write_bins_csv(bins_csv, bins);
  CHECK(bins_csv.str().starts_with("bin,start,end,n_examples\n0,2020-01-01T00:00:00Z,2020-03-31T00:00:00Z,45\n"));
}
