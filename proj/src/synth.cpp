#include "driftlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftlab/csv.hpp"
#include "driftlab/error.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/text.hpp"

namespace driftlab {

namespace {

class Sampler {
 public:
  explicit Sampler(const Vocabulary& vocab) : vocab_(&vocab) {
    double acc = 0.0;
    for (const auto& t : vocab) {
      acc += t.weight;
      cumulative_.push_back(acc);
    }
  }
  const std::string& draw(Rng& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                         cumulative_.size() - 1);
    return (*vocab_)[i].token;
  }

 private:
  const Vocabulary* vocab_;
  std::vector<double> cumulative_;
};

void validate_vocabulary(const Vocabulary& v, const std::string& what) {
  if (v.empty()) throw ValidationError(what + " is empty");
  for (const auto& t : v) {
    if (t.token.empty() || count_whitespace_tokens(t.token) != 1) {
      throw ValidationError(what + ": bad token '" + t.token + "'");
    }
    if (!(t.weight > 0.0) || !std::isfinite(t.weight)) {
      throw ValidationError(what + ": weights must be positive");
    }
  }
}

// Length of the run prefix0, prefix1, ... starting at v[i] whose weights are
// all 1 (zipf = false) or 1/(k+1) (zipf = true).
std::size_t generator_run(const Vocabulary& v, std::size_t i, const std::string& prefix, bool zipf) {
  std::size_t k = 0;
  while (i + k < v.size() && v[i + k].token == prefix + std::to_string(k) &&
         v[i + k].weight == (zipf ? 1.0 / static_cast<double>(k + 1) : 1.0)) {
    ++k;
  }
  return k;
}

// Generated runs are written back as "@prefix*count[~zipf]" so that weights
// survive the round trip bit for bit.
std::string format_vocabulary(const Vocabulary& v) {
  std::string out;
  std::size_t i = 0;
  while (i < v.size()) {
    if (!out.empty()) out += ' ';
    const auto& tok = v[i].token;
    if (tok.size() > 1 && tok.back() == '0') {
      const std::string prefix = tok.substr(0, tok.size() - 1);
      const std::size_t zipf = generator_run(v, i, prefix, true);
      const std::size_t flat = generator_run(v, i, prefix, false);
      const std::size_t run = std::max(zipf, flat);
      if (run >= 2) {
        out += '@' + prefix + '*' + std::to_string(run) + (zipf > flat ? "~zipf" : "");
        i += run;
        continue;
      }
    }
    out += tok;
    if (v[i].weight != 1.0) out += ':' + format_real(v[i].weight);
    ++i;
  }
  return out;
}

}  // namespace

Vocabulary parse_vocabulary(std::string_view spec) {
  Vocabulary out;
  for (const auto& entry : split_whitespace(spec)) {
    if (entry.starts_with('@')) {
      const auto star = entry.find('*');
      if (star == std::string::npos || star == 1) {
        throw ValidationError("vocabulary generator '" + entry + "' must look like @prefix*count");
      }
      const std::string prefix = entry.substr(1, star - 1);
      std::string count_text = entry.substr(star + 1);
      bool zipf = false;
      if (const auto tilde = count_text.find('~'); tilde != std::string::npos) {
        if (count_text.substr(tilde + 1) != "zipf") {
          throw ValidationError("unknown vocabulary shape in '" + entry + "'");
        }
        zipf = true;
        count_text = count_text.substr(0, tilde);
      }
      const auto count = parse_unsigned(count_text, "vocabulary size");
      if (count == 0) throw ValidationError("vocabulary generator '" + entry + "' is empty");
      for (unsigned long long k = 0; k < count; ++k) {
        out.push_back({prefix + std::to_string(k), zipf ? 1.0 / static_cast<double>(k + 1) : 1.0});
      }
    } else if (const auto colon = entry.rfind(':'); colon != std::string::npos && colon > 0) {
      const double weight = parse_real(entry.substr(colon + 1), "token weight");
      if (!(weight > 0.0)) throw ValidationError("token weight in '" + entry + "' must be positive");
      out.push_back({entry.substr(0, colon), weight});
    } else {
      out.push_back({entry, 1.0});
    }
  }
  return out;
}

void DriftScenario::validate() const {
  if (n_items == 0) throw ValidationError("n_items must be positive");
  if (time_span_days <= 0) throw ValidationError("time_span_days must be positive");
  if (priors.empty()) throw ValidationError("at least one prior point is required");
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const auto& p = priors[i];
    double sum = 0.0;
    for (double v : p.probs) {
      if (!(v >= 0.0)) throw ValidationError("prior probabilities must be >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("prior at day " + format_real(p.day) + " does not sum to 1");
    if (i > 0 && p.day < priors[i - 1].day) throw ValidationError("prior points must be sorted by day");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.end_day < s.start_day) throw ValidationError("drift segment ends before it starts");
    if (i > 0 && s.start_day < segments[i - 1].end_day) {
      throw ValidationError("drift segments overlap or are unsorted");
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (vocabularies[c].size() != epochs()) {
      throw ValidationError("class " + std::string(to_string(label_at(c))) + " needs " +
                            std::to_string(epochs()) + " vocabulary epochs, has " +
                            std::to_string(vocabularies[c].size()));
    }
    for (std::size_t e = 0; e < epochs(); ++e) {
      validate_vocabulary(vocabularies[c][e], "vocab." + std::string(to_string(label_at(c))) +
                                                  "." + std::to_string(e));
    }
  }
  if (shared_fraction < 0.0 || shared_fraction > 1.0) {
    throw ValidationError("shared_fraction must be in [0, 1]");
  }
  if (shared_fraction > 0.0) validate_vocabulary(shared, "shared");
  if (min_tokens < 1 || max_tokens < min_tokens) throw ValidationError("bad token count range");
  if (!(annotator_noise >= 0.0 && annotator_noise < 1.0)) {
    throw ValidationError("annotator_noise must be in [0, 1)");
  }
  if (raters_per_item < 1) throw ValidationError("raters_per_item must be >= 1");
}

std::array<double, kNumClasses> prior_at(const DriftScenario& s, double day) {
  if (day <= s.priors.front().day) return s.priors.front().probs;
  if (day >= s.priors.back().day) return s.priors.back().probs;
  const auto it = std::upper_bound(s.priors.begin(), s.priors.end(), day,
                                   [](double d, const PriorPoint& p) { return d < p.day; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double span = hi.day - lo.day;
  const double w = span > 0.0 ? (day - lo.day) / span : 1.0;
  std::array<double, kNumClasses> out{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    out[c] = (1.0 - w) * lo.probs[c] + w * hi.probs[c];
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return out;
}

EpochMix epoch_mix_at(const DriftScenario& s, double day) {
  EpochMix mix;
  for (const auto& seg : s.segments) {
    if (day >= seg.end_day) {
      ++mix.epoch;
      continue;
    }
    if (day >= seg.start_day) mix.next_weight = (day - seg.start_day) / (seg.end_day - seg.start_day);
    break;
  }
  return mix;
}

GeneratedCorpus generate(const DriftScenario& scenario) {
  scenario.validate();
  std::array<std::vector<Sampler>, kNumClasses> samplers;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (const auto& v : scenario.vocabularies[c]) samplers[c].emplace_back(v);
  }
  const Sampler shared = scenario.shared_fraction > 0.0 ? Sampler(scenario.shared) : Sampler(scenario.vocabularies[0][0]);
  const auto span_seconds = static_cast<std::uint64_t>(scenario.time_span_days) * 86400ULL;

  struct Item {
    Timestamp t;
    Label truth;
    std::string text;
    std::vector<Label> votes;
    std::size_t draw_index;
  };
  std::vector<Item> items(scenario.n_items);
  for (std::size_t i = 0; i < scenario.n_items; ++i) {
    Rng rng(mix_seed(scenario.seed, SeedDomain::synth, i));
    Item& it = items[i];
    it.draw_index = i;
    const auto offset = rng.uniform_index(span_seconds);
    it.t = scenario.start + std::chrono::seconds(static_cast<long long>(offset));
    const double day = static_cast<double>(offset) / 86400.0;

    const auto prior = prior_at(scenario, day);
    const double u = rng.uniform01();
    std::size_t cls = 0;
    double acc = prior[0];
    while (cls + 1 < kNumClasses && u >= acc) acc += prior[++cls];
    it.truth = label_at(cls);

    const auto mix = epoch_mix_at(scenario, day);
    const auto n_tokens = static_cast<int>(rng.uniform_index(
                              static_cast<std::uint64_t>(scenario.max_tokens - scenario.min_tokens + 1))) +
                          scenario.min_tokens;
    for (int k = 0; k < n_tokens; ++k) {
      const std::string* token = nullptr;
      if (scenario.shared_fraction > 0.0 && rng.bernoulli(scenario.shared_fraction)) {
        token = &shared.draw(rng);
      } else {
        const bool next = mix.next_weight > 0.0 && rng.bernoulli(mix.next_weight);
        token = &samplers[cls][mix.epoch + (next ? 1 : 0)].draw(rng);
      }
      if (!it.text.empty()) it.text += ' ';
      it.text += *token;
    }
    for (int r = 0; r < scenario.raters_per_item; ++r) {
      if (rng.bernoulli(scenario.annotator_noise)) {
        it.votes.push_back(label_at(rng.uniform_index(kNumClasses)));
      } else {
        it.votes.push_back(it.truth);
      }
    }
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.t != b.t ? a.t < b.t : a.draw_index < b.draw_index;
  });

  GeneratedCorpus out;
  out.records.reserve(items.size() * static_cast<std::size_t>(scenario.raters_per_item));
  char id[32];
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::snprintf(id, sizeof id, "syn-%07zu", i);
    out.item_ids.emplace_back(id);
    out.times.push_back(items[i].t);
    out.truth.push_back(items[i].truth);
    for (std::size_t r = 0; r < items[i].votes.size(); ++r) {
      out.records.push_back({id, items[i].text, items[i].t, "rater-" + std::to_string(r),
                             items[i].votes[r]});
    }
  }
  return out;
}

DriftScenario scenario_from_config(const KeyValueConfig& cfg) {
  cfg.reject_unknown({"n_items", "time_span_days", "start", "seed", "annotator_noise",
                      "raters_per_item", "min_tokens", "max_tokens", "shared", "shared_fraction",
                      "prior", "segment", "vocab.*"});
  DriftScenario s;
  if (auto v = cfg.get("n_items")) s.n_items = static_cast<std::size_t>(parse_unsigned(*v, "n_items"));
  if (auto v = cfg.get("time_span_days")) s.time_span_days = static_cast<int>(parse_integer(*v, "time_span_days"));
  if (auto v = cfg.get("start")) {
    const auto t = parse_timestamp(*v);
    if (!t) throw ValidationError("start: bad timestamp '" + *v + "'");
    s.start = *t;
  }
  if (auto v = cfg.get("seed")) s.seed = parse_unsigned(*v, "seed");
  if (auto v = cfg.get("annotator_noise")) s.annotator_noise = parse_real(*v, "annotator_noise");
  if (auto v = cfg.get("raters_per_item")) s.raters_per_item = static_cast<int>(parse_integer(*v, "raters_per_item"));
  if (auto v = cfg.get("min_tokens")) s.min_tokens = static_cast<int>(parse_integer(*v, "min_tokens"));
  if (auto v = cfg.get("max_tokens")) s.max_tokens = static_cast<int>(parse_integer(*v, "max_tokens"));
  if (auto v = cfg.get("shared")) s.shared = parse_vocabulary(*v);
  if (auto v = cfg.get("shared_fraction")) s.shared_fraction = parse_real(*v, "shared_fraction");

  for (const auto& line : cfg.get_all("prior")) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ValidationError("prior must look like 'day: p_neg p_neu p_pos'");
    PriorPoint p;
    p.day = parse_real(line.substr(0, colon), "prior day");
    const auto probs = split_whitespace(line.substr(colon + 1));
    if (probs.size() != kNumClasses) throw ValidationError("prior needs three probabilities");
    for (std::size_t c = 0; c < kNumClasses; ++c) p.probs[c] = parse_real(probs[c], "prior probability");
    s.priors.push_back(p);
  }
  for (const auto& line : cfg.get_all("segment")) {
    const auto parts = split_whitespace(line);
    if (parts.size() != 2) throw ValidationError("segment must look like 'start_day end_day'");
    s.segments.push_back({parse_real(parts[0], "segment start"), parse_real(parts[1], "segment end")});
  }
  for (const auto& [key, value] : cfg.entries()) {
    if (!key.starts_with("vocab.")) continue;
    const auto parts = split(key, '.');
    const auto cls = parts.size() == 3 ? parse_label(parts[1]) : std::nullopt;
    if (!cls) throw ValidationError("vocabulary key must look like vocab.<class>.<epoch>: " + key);
    const auto epoch = static_cast<std::size_t>(parse_unsigned(parts[2], "vocabulary epoch"));
    auto& epochs = s.vocabularies[index_of(*cls)];
    if (epochs.size() <= epoch) epochs.resize(epoch + 1);
    epochs[epoch] = parse_vocabulary(value);
  }
  s.validate();
  return s;
}

DriftScenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_config(KeyValueConfig::load(path));
}

void write_scenario(std::ostream& out, const DriftScenario& s) {
  out << "n_items = " << s.n_items << '\n'
      << "time_span_days = " << s.time_span_days << '\n'
      << "start = " << format_timestamp(s.start) << '\n'
      << "seed = " << s.seed << '\n'
      << "annotator_noise = " << format_real(s.annotator_noise) << '\n'
      << "raters_per_item = " << s.raters_per_item << '\n'
      << "min_tokens = " << s.min_tokens << '\n'
      << "max_tokens = " << s.max_tokens << '\n'
      << "shared_fraction = " << format_real(s.shared_fraction) << '\n';
  if (!s.shared.empty()) out << "shared = " << format_vocabulary(s.shared) << '\n';
  for (const auto& p : s.priors) {
    out << "prior = " << format_real(p.day) << ": " << format_real(p.probs[0]) << ' '
        << format_real(p.probs[1]) << ' ' << format_real(p.probs[2]) << '\n';
  }
  for (const auto& seg : s.segments) {
    out << "segment = " << format_real(seg.start_day) << ' ' << format_real(seg.end_day) << '\n';
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t e = 0; e < s.vocabularies[c].size(); ++e) {
      out << "vocab." << to_string(label_at(c)) << '.' << e << " = "
          << format_vocabulary(s.vocabularies[c][e]) << '\n';
    }
  }
}

DriftScenario preset_scenario(std::string_view name) {
  DriftScenario s;
  s.n_items = 9000;
  s.time_span_days = 1188;
  s.seed = 20170701;
  s.annotator_noise = 0.15;
  s.raters_per_item = 3;
  s.min_tokens = 6;
  s.max_tokens = 14;
  s.shared = parse_vocabulary("@w*300~zipf");
  s.shared_fraction = 0.5;

  if (name == "static") {
    s.priors = {{0.0, {0.2, 0.35, 0.45}}};
    s.vocabularies[0] = {parse_vocabulary("@neg*40~zipf")};
    s.vocabularies[1] = {parse_vocabulary("@neu*40~zipf")};
    s.vocabularies[2] = {parse_vocabulary("@pos*40~zipf")};
    return s;
  }
  if (name == "swap") {
    // Every class vocabulary is replaced by a fresh, disjoint one around the midpoint.
    s.priors = {{0.0, {0.3, 0.35, 0.35}}};
    s.vocabularies[0] = {parse_vocabulary("@va*40~zipf"), parse_vocabulary("@vd*40~zipf")};
    s.vocabularies[1] = {parse_vocabulary("@vb*40~zipf"), parse_vocabulary("@ve*40~zipf")};
    s.vocabularies[2] = {parse_vocabulary("@vc*40~zipf"), parse_vocabulary("@vf*40~zipf")};
    s.segments = {{585.0, 603.0}};
    return s;
  }
  if (name == "negative-shift") {
    // Negative share grows while negative wording moves to fresh vocabulary.
    s.priors = {{0.0, {0.15, 0.35, 0.5}}, {400.0, {0.15, 0.35, 0.5}}, {1188.0, {0.5, 0.3, 0.2}}};
    s.vocabularies[0] = {parse_vocabulary("@neg*40~zipf"), parse_vocabulary("@anti*40~zipf")};
    s.vocabularies[1] = {parse_vocabulary("@neu*40~zipf"), parse_vocabulary("@neu*40~zipf")};
    s.vocabularies[2] = {parse_vocabulary("@pos*40~zipf"), parse_vocabulary("@pos*40~zipf")};
    s.segments = {{400.0, 800.0}};
    return s;
  }
  throw ValidationError("unknown preset scenario '" + std::string(name) +
                        "' (static, swap, negative-shift)");
}

}  // namespace driftlab
