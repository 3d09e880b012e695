#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "driftlab/bow_classifier.hpp"
#include "driftlab/label.hpp"

namespace driftlab {

struct LabeledText {
  std::string text;
  Label label = Label::neutral;
};

// A trained model, immutable and safe to share across threads.
class TrainedClassifier {
 public:
  virtual ~TrainedClassifier() = default;
  virtual std::vector<ProbVector> predict(std::span<const std::string> texts) const = 0;
};

// Coordinates of the (window, repeat) unit a model is trained for.
struct CellKey {
  std::size_t window_id = 0;
  std::size_t repeat_index = 0;
};

// Something the drift protocol can train. Implementations must be safe to call
// concurrently from several threads.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  // Stable identifier of classifier and configuration; keys checkpoints.
  virtual std::string tag() const = 0;
  virtual std::shared_ptr<const TrainedClassifier> train(std::span<const LabeledText> examples,
                                                         std::uint64_t seed,
                                                         const CellKey& key) const = 0;
};

class BuiltinClassifier final : public TrainedClassifier {
 public:
  explicit BuiltinClassifier(Model model) : model_(std::move(model)) {}
  std::vector<ProbVector> predict(std::span<const std::string> texts) const override;
  const Model& model() const { return model_; }

 private:
  Model model_;
};

// In-process bag-of-words classifier; `seed` replaces config.seed.
class BuiltinBackend final : public ClassifierBackend {
 public:
  explicit BuiltinBackend(ClassifierConfig config);
  std::string tag() const override;
  std::shared_ptr<const TrainedClassifier> train(std::span<const LabeledText> examples,
                                                 std::uint64_t seed,
                                                 const CellKey& key) const override;

 private:
  ClassifierConfig config_;
};

// Predicts the same class for everything; stands in when a training set holds a
// single class.
class ConstantClassifier final : public TrainedClassifier {
 public:
  explicit ConstantClassifier(Label label) : label_(label) {}
  std::vector<ProbVector> predict(std::span<const std::string> texts) const override;

 private:
  Label label_;
};

std::vector<TrainingExample> to_training_examples(std::span<const LabeledText> examples);

}  // namespace driftlab
