#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/label.hpp"

namespace driftlab {

struct ClassifierConfig {
  int dim = 10;
  int epochs = 500;
  double lr0 = 0.01;
  int word_ngrams = 1;
  std::uint64_t bucket_count = 2'000'000;  // only used when word_ngrams > 1
  int min_token_count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ProbVector {
  std::array<double, kNumClasses> p{1.0 / 3, 1.0 / 3, 1.0 / 3};

  double operator[](Label l) const { return p[index_of(l)]; }

  // Ties resolve to neutral.
  Label argmax() const;
};

inline constexpr std::string_view kPreprocessingTag = "ascii-fold+lowercase+whitespace-split";

// Compatibility fold to ASCII, lowercase, split on whitespace. The input is
// expected to be anonymized already.
std::vector<std::string> preprocess(std::string_view text);

struct TrainingExample {
  std::vector<std::string> tokens;
  Label label = Label::neutral;
};

class SingleClassError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct TrainStats {
  std::size_t skipped_empty = 0;  // examples with no tokens
  std::size_t updates = 0;
  double last_epoch_loss = 0.0;  // mean cross-entropy over the final epoch
};

// Averaged token embeddings feeding a softmax layer (fastText supervised mode
// without subwords). Input rows are laid out as [vocabulary | hash buckets];
// bucket rows are stored sparsely and materialized on first update.
class Model {
 public:
  enum class RealWidth : std::uint32_t { f32 = 4, f64 = 8 };

  const ClassifierConfig& config() const { return config_; }
  std::string_view preprocessing() const { return preprocessing_; }
  std::size_t dim() const { return static_cast<std::size_t>(config_.dim); }
  std::size_t vocabulary_size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<std::size_t> word_row(std::string_view token) const;

  // Input rows used for a token sequence: known unigrams, then (when
  // word_ngrams == 2) one bucket row per adjacent pair of known tokens.
  // Unknown tokens are ignored.
  std::vector<std::size_t> feature_rows(std::span<const std::string> tokens) const;

  double input_weight(std::size_t row, std::size_t k) const;
  double& input_weight(std::size_t row, std::size_t k);
  double output_weight(Label c, std::size_t k) const { return output_[index_of(c) * dim() + k]; }
  double& output_weight(Label c, std::size_t k) { return output_[index_of(c) * dim() + k]; }

  // Dense copies for inspection.
  std::vector<double> input_matrix() const;  // vocabulary rows, then materialized buckets
  const std::vector<double>& output_matrix() const { return output_; }

  ProbVector predict_tokens(std::span<const std::string> tokens) const;

  // Little-endian container:
  //   "DLBOWMDL" | u32 version=1 | u32 real_bytes (4 or 8)
  //   i32 dim, epochs, word_ngrams, min_token_count | f64 lr0 | u64 bucket_count | u64 seed
  //   str preprocessing | u64 n_words | n_words x str
  //   n_words*dim reals | u64 n_buckets | n_buckets x (u64 bucket, dim reals)
  //   3*dim reals (output rows negative, neutral, positive)
  // where str = u32 byte length + UTF-8 bytes.
  void save(std::ostream& out, RealWidth width = RealWidth::f32) const;
  static Model load(std::istream& in);

  friend Model train(std::span<const TrainingExample>, const ClassifierConfig&, TrainStats*);

 private:
  Model() = default;

  std::span<double> materialize(std::size_t row);
  void add_row_to(std::size_t row, std::span<double> acc) const;
  std::vector<double> initial_row(std::size_t row) const;
  std::size_t bucket_of(std::string_view left, std::string_view right) const;

  ClassifierConfig config_;
  std::string preprocessing_{kPreprocessingTag};
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<double> input_;  // words_.size() x dim
  std::map<std::uint64_t, std::vector<double>> buckets_;
  std::vector<double> output_;  // 3 x dim
};

// Plain SGD, one example per step, learning rate decaying linearly from lr0 to
// 0 over epochs * n_examples steps, examples visited in a seeded shuffled
// order each epoch. Needs at least two distinct classes.
Model train(std::span<const TrainingExample> examples, const ClassifierConfig& config,
            TrainStats* stats = nullptr);

// Uniform when the text has no known token.
ProbVector predict(const Model& model, std::string_view text);

struct LossGradient {
  double loss = 0.0;
  // Flat layout: output rows (negative, neutral, positive) x dim, then one
  // dim-block per distinct input row in `input_rows` (ascending).
  std::vector<double> gradient;
  std::vector<std::size_t> input_rows;
};

// Softmax cross-entropy and its analytic gradient for one example. Throws
// ValidationError when no token is known.
LossGradient loss_and_gradient(const Model& model, const TrainingExample& example);

}  // namespace driftlab
