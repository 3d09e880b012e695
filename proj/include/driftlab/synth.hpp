#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/ingest.hpp"
#include "driftlab/keyvalue.hpp"
#include "driftlab/label.hpp"
#include "driftlab/time.hpp"

namespace driftlab {

struct WeightedToken {
  std::string token;
  double weight = 1.0;
};

using Vocabulary = std::vector<WeightedToken>;

// Whitespace-separated entries: "word", "word:weight", "@prefix*count"
// (prefix0 .. prefix<count-1>, uniform) or "@prefix*count~zipf" (weight 1/(k+1)).
Vocabulary parse_vocabulary(std::string_view spec);

struct PriorPoint {
  double day = 0.0;
  std::array<double, kNumClasses> probs{};
};

// Epoch e blends linearly into epoch e+1 over [start_day, end_day].
struct DriftSegment {
  double start_day = 0.0;
  double end_day = 0.0;
};

struct DriftScenario {
  std::size_t n_items = 5000;
  int time_span_days = 1188;
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2017} / 7 / 1}};
  std::vector<PriorPoint> priors;  // piecewise linear in time, flat beyond the ends
  // vocabularies[class][epoch]; every class needs segments.size() + 1 epochs.
  std::array<std::vector<Vocabulary>, kNumClasses> vocabularies;
  std::vector<DriftSegment> segments;
  Vocabulary shared;             // class-independent filler
  double shared_fraction = 0.0;  // probability a token comes from `shared`
  int min_tokens = 6;
  int max_tokens = 14;
  double annotator_noise = 0.0;  // probability a rater votes uniformly at random
  int raters_per_item = 3;
  std::uint64_t seed = 0;

  std::size_t epochs() const { return segments.size() + 1; }
  void validate() const;
};

struct EpochMix {
  std::size_t epoch = 0;     // current epoch
  double next_weight = 0.0;  // share drawn from epoch + 1
};

std::array<double, kNumClasses> prior_at(const DriftScenario& s, double day);
EpochMix epoch_mix_at(const DriftScenario& s, double day);

struct GeneratedCorpus {
  std::vector<AnnotationRecord> records;  // items in time order, votes grouped per item
  std::vector<std::string> item_ids;
  std::vector<Timestamp> times;
  std::vector<Label> truth;
};

// Deterministic given scenario.seed; each item draws from its own derived
// stream so items are independent of generation order.
GeneratedCorpus generate(const DriftScenario& scenario);

DriftScenario scenario_from_config(const KeyValueConfig& cfg);
DriftScenario load_scenario(const std::filesystem::path& path);
void write_scenario(std::ostream& out, const DriftScenario& scenario);

// Built-in scenarios: "static", "swap", "negative-shift".
DriftScenario preset_scenario(std::string_view name);

}  // namespace driftlab
