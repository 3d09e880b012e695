#include "driftlab/classifier.hpp"

#include <sstream>

#include "driftlab/csv.hpp"

namespace driftlab {

std::vector<ProbVector> BuiltinClassifier::predict(std::span<const std::string> texts) const {
  std::vector<ProbVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(driftlab::predict(model_, t));
  return out;
}

std::vector<ProbVector> ConstantClassifier::predict(std::span<const std::string> texts) const {
  ProbVector p;
  p.p = {0.0, 0.0, 0.0};
  p.p[index_of(label_)] = 1.0;
  return std::vector<ProbVector>(texts.size(), p);
}

std::vector<TrainingExample> to_training_examples(std::span<const LabeledText> examples) {
  std::vector<TrainingExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back({preprocess(e.text), e.label});
  return out;
}

BuiltinBackend::BuiltinBackend(ClassifierConfig config) : config_(config) { config_.validate(); }

std::string BuiltinBackend::tag() const {
  std::ostringstream os;
  os << "builtin-bow(dim=" << config_.dim << ",epochs=" << config_.epochs
     << ",lr=" << format_real(config_.lr0) << ",ngrams=" << config_.word_ngrams
     << ",buckets=" << config_.bucket_count << ",min_count=" << config_.min_token_count << ")";
  return os.str();
}

std::shared_ptr<const TrainedClassifier> BuiltinBackend::train(
    std::span<const LabeledText> examples, std::uint64_t seed, const CellKey&) const {
  ClassifierConfig cfg = config_;
  cfg.seed = seed;
  const auto prepared = to_training_examples(examples);
  return std::make_shared<BuiltinClassifier>(driftlab::train(prepared, cfg));
}

}  // namespace driftlab
