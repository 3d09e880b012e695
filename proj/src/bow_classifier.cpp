#include "driftlab/bow_classifier.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "driftlab/rng.hpp"
#include "driftlab/text.hpp"

namespace driftlab {

namespace {

void softmax_inplace(std::span<double, kNumClasses> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double log_sum_exp(std::span<const double, kNumClasses> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

// Little-endian primitives independent of host byte order.
template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(u & 0xFF);
    u = static_cast<U>(u >> 8);
  }
  out.write(buf, sizeof buf);
}

template <typename T>
T get_le(std::istream& in) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) {
    throw ValidationError("model file truncated");
  }
  U u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<U>((u << 8) | buf[i]);
  return static_cast<T>(u);
}

void put_real(std::ostream& out, double v, Model::RealWidth width) {
  if (width == Model::RealWidth::f32) {
    put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  } else {
    put_le(out, std::bit_cast<std::uint64_t>(v));
  }
}

double get_real(std::istream& in, Model::RealWidth width) {
  if (width == Model::RealWidth::f32) {
    return static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
  }
  return std::bit_cast<double>(get_le<std::uint64_t>(in));
}

void put_string(std::ostream& out, std::string_view s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get_le<std::uint32_t>(in);
  if (n > (1U << 24)) throw ValidationError("model file: implausible string length");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw ValidationError("model file truncated");
  return s;
}

constexpr char kMagic[8] = {'D', 'L', 'B', 'O', 'W', 'M', 'D', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void ClassifierConfig::validate() const {
  if (dim < 1) throw ValidationError("dim must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("lr0 must be > 0");
  if (word_ngrams != 1 && word_ngrams != 2) throw ValidationError("word_ngrams must be 1 or 2");
  if (word_ngrams > 1 && bucket_count == 0) throw ValidationError("bucket_count must be > 0");
  if (min_token_count < 1) throw ValidationError("min_token_count must be >= 1");
}

Label ProbVector::argmax() const {
  const double mx = std::max({p[0], p[1], p[2]});
  const bool neg = p[0] == mx;
  const bool pos = p[2] == mx;
  if (p[1] == mx || (neg && pos)) return Label::neutral;
  return neg ? Label::negative : Label::positive;
}

std::vector<std::string> preprocess(std::string_view text) {
  std::string folded = ascii_fold(text);
  for (char& c : folded) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return split_whitespace(folded);
}

std::optional<std::size_t> Model::word_row(std::string_view token) const {
  const auto it = vocab_.find(std::string(token));
  if (it == vocab_.end()) return std::nullopt;
  return it->second;
}

std::size_t Model::bucket_of(std::string_view left, std::string_view right) const {
  std::string gram;
  gram.reserve(left.size() + right.size() + 1);
  gram.append(left).append(" ").append(right);
  return words_.size() + static_cast<std::size_t>(fnv1a64(gram) % config_.bucket_count);
}

std::vector<std::size_t> Model::feature_rows(std::span<const std::string> tokens) const {
  std::vector<std::size_t> rows;
  rows.reserve(tokens.size() * 2);
  std::vector<bool> known(tokens.size(), false);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (const auto r = word_row(tokens[i])) {
      rows.push_back(*r);
      known[i] = true;
    }
  }
  if (config_.word_ngrams == 2) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (known[i] && known[i + 1]) rows.push_back(bucket_of(tokens[i], tokens[i + 1]));
    }
  }
  return rows;
}

std::vector<double> Model::initial_row(std::size_t row) const {
  Rng rng(mix_seed(config_.seed, SeedDomain::row_init, row));
  const double bound = 1.0 / static_cast<double>(config_.dim);
  std::vector<double> values(dim());
  for (double& v : values) v = rng.uniform(-bound, bound);
  return values;
}

std::span<double> Model::materialize(std::size_t row) {
  if (row < words_.size()) return std::span(input_).subspan(row * dim(), dim());
  const auto bucket = static_cast<std::uint64_t>(row - words_.size());
  auto it = buckets_.find(bucket);
  if (it == buckets_.end()) it = buckets_.emplace(bucket, initial_row(row)).first;
  return it->second;
}

void Model::add_row_to(std::size_t row, std::span<double> acc) const {
  if (row < words_.size()) {
    const double* src = input_.data() + row * dim();
    for (std::size_t k = 0; k < dim(); ++k) acc[k] += src[k];
    return;
  }
  const auto it = buckets_.find(static_cast<std::uint64_t>(row - words_.size()));
  const std::vector<double> values = it != buckets_.end() ? it->second : initial_row(row);
  for (std::size_t k = 0; k < dim(); ++k) acc[k] += values[k];
}

double Model::input_weight(std::size_t row, std::size_t k) const {
  if (row < words_.size()) return input_[row * dim() + k];
  const auto it = buckets_.find(static_cast<std::uint64_t>(row - words_.size()));
  return it != buckets_.end() ? it->second[k] : initial_row(row)[k];
}

double& Model::input_weight(std::size_t row, std::size_t k) { return materialize(row)[k]; }

std::vector<double> Model::input_matrix() const {
  std::vector<double> m = input_;
  for (const auto& [bucket, values] : buckets_) m.insert(m.end(), values.begin(), values.end());
  return m;
}

ProbVector Model::predict_tokens(std::span<const std::string> tokens) const {
  const auto rows = feature_rows(tokens);
  ProbVector out;
  if (rows.empty()) return out;
  std::vector<double> hidden(dim(), 0.0);
  for (auto r : rows) add_row_to(r, hidden);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& h : hidden) h *= inv;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double z = 0.0;
    for (std::size_t k = 0; k < dim(); ++k) z += output_[c * dim() + k] * hidden[k];
    out.p[c] = z;
  }
  softmax_inplace(out.p);
  return out;
}

ProbVector predict(const Model& model, std::string_view text) {
  const auto tokens = preprocess(text);
  return model.predict_tokens(tokens);
}

Model train(std::span<const TrainingExample> examples, const ClassifierConfig& config,
            TrainStats* stats) {
  config.validate();
  if (examples.empty()) throw ValidationError("empty training set");

  TrainStats local;
  std::array<bool, kNumClasses> present{};
  std::vector<const TrainingExample*> usable;
  usable.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.tokens.empty()) {
      ++local.skipped_empty;
      continue;
    }
    usable.push_back(&ex);
    present[index_of(ex.label)] = true;
  }
  if (usable.empty()) throw ValidationError("every training example is empty");
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw SingleClassError("training set contains a single class");
  }

  Model model;
  model.config_ = config;

  // Vocabulary in order of first appearance, filtered by count.
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto* ex : usable) {
    for (const auto& t : ex->tokens) {
      if (counts[t]++ == 0) order.push_back(t);
    }
  }
  for (const auto& t : order) {
    if (counts[t] >= static_cast<std::size_t>(config.min_token_count)) {
      model.vocab_.emplace(t, model.words_.size());
      model.words_.push_back(t);
    }
  }
  const std::size_t dim = model.dim();
  model.input_.resize(model.words_.size() * dim);
  for (std::size_t r = 0; r < model.words_.size(); ++r) {
    const auto row = model.initial_row(r);
    std::copy(row.begin(), row.end(), model.input_.begin() + static_cast<std::ptrdiff_t>(r * dim));
  }
  model.output_.assign(kNumClasses * dim, 0.0);

  // Resolve every example to row pointers once; map nodes and the dense
  // vocabulary block stay put for the rest of training.
  struct Prepared {
    std::vector<double*> rows;
    std::size_t label;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(usable.size());
  for (const auto* ex : usable) {
    Prepared p{{}, index_of(ex->label)};
    for (auto r : model.feature_rows(ex->tokens)) p.rows.push_back(model.materialize(r).data());
    if (p.rows.empty()) {
      ++local.skipped_empty;  // every token fell below min_token_count
      continue;
    }
    prepared.push_back(std::move(p));
  }
  if (prepared.empty()) throw ValidationError("no training example has a known token");

  std::vector<std::size_t> visit(prepared.size());
  std::iota(visit.begin(), visit.end(), 0);
  Rng rng(config.seed);

  const double total_updates =
      static_cast<double>(config.epochs) * static_cast<double>(prepared.size());
  std::size_t step = 0;
  std::vector<double> hidden(dim);
  std::vector<double> grad_hidden(dim);
  std::array<double, kNumClasses> probs{};
  double* const out_w = model.output_.data();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(visit));
    double epoch_loss = 0.0;
    for (const std::size_t idx : visit) {
      const Prepared& ex = prepared[idx];
      const double lr = config.lr0 * (1.0 - static_cast<double>(step) / total_updates);
      ++step;

      std::fill(hidden.begin(), hidden.end(), 0.0);
      for (const double* row : ex.rows) {
        for (std::size_t k = 0; k < dim; ++k) hidden[k] += row[k];
      }
      const double inv_m = 1.0 / static_cast<double>(ex.rows.size());
      for (double& h : hidden) h *= inv_m;

      for (std::size_t c = 0; c < kNumClasses; ++c) {
        double z = 0.0;
        for (std::size_t k = 0; k < dim; ++k) z += out_w[c * dim + k] * hidden[k];
        probs[c] = z;
      }
      epoch_loss += log_sum_exp(probs) - probs[ex.label];
      softmax_inplace(probs);

      std::fill(grad_hidden.begin(), grad_hidden.end(), 0.0);
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double g = probs[c] - (c == ex.label ? 1.0 : 0.0);
        double* w = out_w + c * dim;
        for (std::size_t k = 0; k < dim; ++k) {
          grad_hidden[k] += g * w[k];
          w[k] -= lr * g * hidden[k];
        }
      }
      const double scale = lr * inv_m;
      for (double* row : ex.rows) {
        for (std::size_t k = 0; k < dim; ++k) row[k] -= scale * grad_hidden[k];
      }
    }
    local.last_epoch_loss = epoch_loss / static_cast<double>(prepared.size());
  }
  local.updates = step;
  if (stats != nullptr) *stats = local;
  return model;
}

LossGradient loss_and_gradient(const Model& model, const TrainingExample& example) {
  const auto rows = model.feature_rows(example.tokens);
  if (rows.empty()) throw ValidationError("example has no known token");
  const std::size_t dim = model.dim();
  const double inv_m = 1.0 / static_cast<double>(rows.size());

  std::vector<double> hidden(dim, 0.0);
  for (auto r : rows) {
    for (std::size_t k = 0; k < dim; ++k) hidden[k] += model.input_weight(r, k);
  }
  for (double& h : hidden) h *= inv_m;

  std::array<double, kNumClasses> z{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t k = 0; k < dim; ++k) z[c] += model.output_weight(label_at(c), k) * hidden[k];
  }
  const std::size_t y = index_of(example.label);
  LossGradient out;
  out.loss = log_sum_exp(z) - z[y];
  std::array<double, kNumClasses> p = z;
  softmax_inplace(p);

  std::set<std::size_t> distinct(rows.begin(), rows.end());
  out.input_rows.assign(distinct.begin(), distinct.end());
  out.gradient.assign(kNumClasses * dim + out.input_rows.size() * dim, 0.0);

  std::vector<double> grad_hidden(dim, 0.0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double g = p[c] - (c == y ? 1.0 : 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      out.gradient[c * dim + k] = g * hidden[k];
      grad_hidden[k] += g * model.output_weight(label_at(c), k);
    }
  }
  // A row appearing j times among m features contributes j/m of grad_hidden.
  for (auto r : rows) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(out.input_rows.begin(), out.input_rows.end(), r) -
        out.input_rows.begin());
    double* block = out.gradient.data() + kNumClasses * dim + pos * dim;
    for (std::size_t k = 0; k < dim; ++k) block[k] += grad_hidden[k] * inv_m;
  }
  return out;
}

void Model::save(std::ostream& out, RealWidth width) const {
  out.write(kMagic, sizeof kMagic);
  put_le(out, kFormatVersion);
  put_le(out, static_cast<std::uint32_t>(width));
  put_le(out, static_cast<std::int32_t>(config_.dim));
  put_le(out, static_cast<std::int32_t>(config_.epochs));
  put_le(out, static_cast<std::int32_t>(config_.word_ngrams));
  put_le(out, static_cast<std::int32_t>(config_.min_token_count));
  put_le(out, std::bit_cast<std::uint64_t>(config_.lr0));
  put_le(out, config_.bucket_count);
  put_le(out, config_.seed);
  put_string(out, preprocessing_);
  put_le(out, static_cast<std::uint64_t>(words_.size()));
  for (const auto& w : words_) put_string(out, w);
  for (double v : input_) put_real(out, v, width);
  put_le(out, static_cast<std::uint64_t>(buckets_.size()));
  for (const auto& [bucket, values] : buckets_) {
    put_le(out, bucket);
    for (double v : values) put_real(out, v, width);
  }
  for (double v : output_) put_real(out, v, width);
  if (!out) throw Error("failed to write model");
}

Model Model::load(std::istream& in) {
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError("not a driftlab model file (bad magic)");
  }
  if (get_le<std::uint32_t>(in) != kFormatVersion) {
    throw ValidationError("unsupported model format version");
  }
  const auto width_raw = get_le<std::uint32_t>(in);
  if (width_raw != 4 && width_raw != 8) throw ValidationError("model file: bad real width");
  const auto width = static_cast<RealWidth>(width_raw);

  Model m;
  m.config_.dim = get_le<std::int32_t>(in);
  m.config_.epochs = get_le<std::int32_t>(in);
  m.config_.word_ngrams = get_le<std::int32_t>(in);
  m.config_.min_token_count = get_le<std::int32_t>(in);
  m.config_.lr0 = std::bit_cast<double>(get_le<std::uint64_t>(in));
  m.config_.bucket_count = get_le<std::uint64_t>(in);
  m.config_.seed = get_le<std::uint64_t>(in);
  m.config_.validate();
  m.preprocessing_ = get_string(in);
  const auto n_words = get_le<std::uint64_t>(in);
  m.words_.reserve(n_words);
  for (std::uint64_t i = 0; i < n_words; ++i) {
    m.words_.push_back(get_string(in));
    m.vocab_.emplace(m.words_.back(), i);
  }
  m.input_.resize(n_words * m.dim());
  for (double& v : m.input_) v = get_real(in, width);
  const auto n_buckets = get_le<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_buckets; ++i) {
    const auto bucket = get_le<std::uint64_t>(in);
    std::vector<double> values(m.dim());
    for (double& v : values) v = get_real(in, width);
    m.buckets_.emplace(bucket, std::move(values));
  }
  m.output_.resize(kNumClasses * m.dim());
  for (double& v : m.output_) v = get_real(in, width);
  return m;
}

}  // namespace driftlab
