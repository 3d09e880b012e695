#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "driftlab/keyvalue.hpp"
#include "driftlab/metrics.hpp"
#include "driftlab/synth.hpp"
#include "support.hpp"

using namespace driftlab;

namespace {

DriftScenario small_scenario(double noise, std::size_t n_items = 2000, std::uint64_t seed = 1) {
  DriftScenario s;
  s.n_items = n_items;
  s.time_span_days = 100;
  s.priors = {{0.0, {0.2, 0.3, 0.5}}};
  s.vocabularies[0] = {parse_vocabulary("@n*20")};
  s.vocabularies[1] = {parse_vocabulary("@u*20")};
  s.vocabularies[2] = {parse_vocabulary("@p*20")};
  s.shared = parse_vocabulary("@w*50~zipf");
  s.shared_fraction = 0.3;
  s.annotator_noise = noise;
  s.seed = seed;
  return s;
}

std::vector<std::array<int, kNumClasses>> vote_table(const GeneratedCorpus& g) {
  std::map<std::string, std::array<int, kNumClasses>> by_item;
  for (const auto& r : g.records) ++by_item[r.item_id][index_of(r.vote)];
  std::vector<std::array<int, kNumClasses>> table;
  for (const auto& [id, v] : by_item) table.push_back(v);
  return table;
}

std::string scenario_text(const DriftScenario& s) {
  std::ostringstream os;
  write_scenario(os, s);
  return os.str();
}

}  // namespace

TEST_CASE("vocabulary specs") {
  const auto v = parse_vocabulary("alpha beta:2.5 @w*3 @z*3~zipf");
  REQUIRE(v.size() == 8);
  CHECK(v[0].token == "alpha");
  CHECK(v[0].weight == 1.0);
  CHECK(v[1].weight == 2.5);
  CHECK(v[2].token == "w0");
  CHECK(v[4].token == "w2");
  CHECK(v[5].token == "z0");
  CHECK(v[5].weight == 1.0);
  CHECK(v[7].weight == doctest::Approx(1.0 / 3.0));
  for (const char* bad : {"a:-1", "a:x", "@w*0", "@w*x", "@*3", "@w*3~flat"}) {
    CHECK_THROWS_AS(parse_vocabulary(bad), ValidationError);
  }
}

TEST_CASE("priors interpolate and epochs blend") {
  const auto s = preset_scenario("negative-shift");
  const auto mid = prior_at(s, 794.0);
  CHECK(mid[0] == doctest::Approx(0.325));
  CHECK(mid[1] == doctest::Approx(0.325));
  CHECK(mid[2] == doctest::Approx(0.35));
  CHECK(prior_at(s, -5.0) == s.priors.front().probs);
  CHECK(prior_at(s, 5000.0) == s.priors.back().probs);

  const auto swap = preset_scenario("swap");
  CHECK(epoch_mix_at(swap, 10.0).epoch == 0);
  CHECK(epoch_mix_at(swap, 10.0).next_weight == 0.0);
  CHECK(epoch_mix_at(swap, 594.0).epoch == 0);
  CHECK(epoch_mix_at(swap, 594.0).next_weight == doctest::Approx(0.5));
  CHECK(epoch_mix_at(swap, 700.0).epoch == 1);
  CHECK(epoch_mix_at(swap, 700.0).next_weight == 0.0);
}

TEST_CASE("generation is deterministic and time-ordered") {
  const auto s = small_scenario(0.2, 500);
  const auto a = generate(s);
  const auto b = generate(s);
  REQUIRE(a.records.size() == 1500);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].text == b.records[i].text);
    CHECK(a.records[i].vote == b.records[i].vote);
    CHECK(a.records[i].created_at == b.records[i].created_at);
  }
  for (std::size_t i = 1; i < a.times.size(); ++i) CHECK(a.times[i - 1] <= a.times[i]);
  CHECK(a.times.front() >= s.start);
  CHECK(a.times.back() < s.start + std::chrono::days(s.time_span_days));

  for (const auto& r : a.records) {
    std::istringstream words(r.text);
    int n = 0;
    std::string w;
    while (words >> w) ++n;
    CHECK(n >= s.min_tokens);
    CHECK(n <= s.max_tokens);
  }

  auto other = s;
  other.seed = 2;
  CHECK(generate(other).records[0].text != a.records[0].text);
}

TEST_CASE("noise-free annotation resolves to the truth") {
  const auto g = generate(small_scenario(0.0, 3000));
  const auto resolved = resolve_labels(g.records);
  REQUIRE(resolved.examples.size() == 3000);
  std::map<std::string, Label> truth;
  for (std::size_t i = 0; i < g.item_ids.size(); ++i) truth[g.item_ids[i]] = g.truth[i];
  for (const auto& e : resolved.examples) {
    CHECK(e.label == truth.at(e.item_id));
    CHECK(e.agreement == 1.0);
  }
}

TEST_CASE("class frequencies follow the prior") {
  const auto s = small_scenario(0.1, 10000, 5);
  const auto g = generate(s);
  std::array<double, kNumClasses> counts{};
  for (auto l : g.truth) counts[index_of(l)] += 1.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double p = s.priors[0].probs[c];
    const double se = std::sqrt(p * (1 - p) / 10000.0);
    CHECK(std::abs(counts[c] / 10000.0 - p) < 3 * se);
  }
}

TEST_CASE("rater disagreement matches the noise model") {
  for (double eps : {0.1, 0.3}) {
    const auto g = generate(small_scenario(eps, 10000, 11));
    const auto table = vote_table(g);
    std::size_t disagree = 0;
    for (const auto& row : table) {
      if (*std::max_element(row.begin(), row.end()) < 3) ++disagree;
    }
    // A rater votes the truth with probability 1 - eps + eps/3 and each other class with eps/3.
    const double q = 1.0 - eps + eps / 3.0;
    const double expected = 1.0 - q * q * q - 2.0 * std::pow(eps / 3.0, 3);
    CHECK(std::abs(static_cast<double>(disagree) / 10000.0 - expected) < 0.02);
  }
}

TEST_CASE("agreement falls as noise rises") {
  double previous = 2.0;
  for (double eps : {0.0, 0.2, 0.4}) {
    const auto kappa = fleiss_kappa(vote_table(generate(small_scenario(eps, 5000, 3)))).kappa;
    CHECK(kappa < previous);
    previous = kappa;
  }
  CHECK(fleiss_kappa(vote_table(generate(small_scenario(0.0, 500)))).kappa == doctest::Approx(1.0));
}

TEST_CASE("class vocabularies switch across the drift segment") {
  auto s = preset_scenario("swap");
  s.n_items = 3000;
  const auto g = generate(s);
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < g.truth.size(); ++i) {
    if (g.truth[i] != Label::negative) continue;
    const double d = std::chrono::duration<double>(g.times[i] - s.start).count() / 86400.0;
    const auto& rec = *std::find_if(g.records.begin(), g.records.end(),
                                    [&](const AnnotationRecord& r) { return r.item_id == g.item_ids[i]; });
    std::istringstream words(rec.text);
    std::string w;
    while (words >> w) {
      if (d < 585.0) {
        CHECK_FALSE(w.starts_with("vd"));
        before += w.starts_with("va");
      } else if (d > 603.0) {
        CHECK_FALSE(w.starts_with("va"));
        after += w.starts_with("vd");
      }
    }
  }
  CHECK(before > 100);
  CHECK(after > 100);
}

TEST_CASE("scenarios round-trip through config text") {
  for (const char* name : {"static", "swap", "negative-shift"}) {
    const auto s = preset_scenario(name);
    const auto text = scenario_text(s);
    std::istringstream in(text);
    const auto back = scenario_from_config(KeyValueConfig::parse(in));
    CHECK(scenario_text(back) == text);
    CHECK(text.size() < 2000);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      REQUIRE(back.vocabularies[c].size() == s.vocabularies[c].size());
      for (std::size_t e = 0; e < s.epochs(); ++e) {
        REQUIRE(back.vocabularies[c][e].size() == s.vocabularies[c][e].size());
        for (std::size_t k = 0; k < s.vocabularies[c][e].size(); ++k) {
          CHECK(back.vocabularies[c][e][k].token == s.vocabularies[c][e][k].token);
          CHECK(back.vocabularies[c][e][k].weight == s.vocabularies[c][e][k].weight);
        }
      }
    }
    for (std::size_t k = 0; k < s.shared.size(); ++k) CHECK(back.shared[k].weight == s.shared[k].weight);
    auto small = s;
    small.n_items = 50;
    auto small_back = back;
    small_back.n_items = 50;
    const auto a = generate(small);
    const auto b = generate(small_back);
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].text == b.records[i].text);
  }
  CHECK_THROWS_AS(preset_scenario("chaos"), ValidationError);
}

TEST_CASE("vocabulary runs are written compactly") {
  auto s = small_scenario(0.1);
  s.vocabularies[0] = {parse_vocabulary("x y:2 @k*4~zipf @m*3 m3 solo0 z:0.125")};
  const auto text = scenario_text(s);
  CHECK(text.find("vocab.negative.0 = x y:2 @k*4~zipf @m*4 solo0 z:0.125\n") != std::string::npos);
  std::istringstream in(text);
  CHECK(scenario_text(scenario_from_config(KeyValueConfig::parse(in))) == text);
}

TEST_CASE("scenario validation") {
  auto check_invalid = [](auto mutate) {
    auto s = small_scenario(0.1);
    mutate(s);
    CHECK_THROWS_AS(s.validate(), ValidationError);
  };
  check_invalid([](DriftScenario& s) { s.priors[0].probs = {0.5, 0.5, 0.5}; });
  check_invalid([](DriftScenario& s) { s.priors.clear(); });
  check_invalid([](DriftScenario& s) { s.segments = {{10, 20}}; });
  check_invalid([](DriftScenario& s) { s.min_tokens = 9; s.max_tokens = 3; });
  check_invalid([](DriftScenario& s) { s.annotator_noise = 1.0; });
  check_invalid([](DriftScenario& s) { s.shared_fraction = 1.5; });
  check_invalid([](DriftScenario& s) { s.n_items = 0; });
  check_invalid([](DriftScenario& s) { s.raters_per_item = 0; });

  std::istringstream unknown("n_items = 10\nprior = 0: 0.2 0.3 0.5\nvocab.negative.0 = a\nvocab.neutral.0 = b\nvocab.positive.0 = c\ncolour = red\n");
  CHECK_THROWS_AS(scenario_from_config(KeyValueConfig::parse(unknown)), ValidationError);
  std::istringstream minimal("n_items = 10\nprior = 0: 0.2 0.3 0.5\nvocab.negative.0 = a\nvocab.neutral.0 = b\nvocab.positive.0 = c\n");
  CHECK(generate(scenario_from_config(KeyValueConfig::parse(minimal))).item_ids.size() == 10);
}
