#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftlab/ingest.hpp"
#include "driftlab/metrics.hpp"

namespace driftlab {

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<double> values;  // row-major, ids.size() x dim
  std::size_t dim = 0;
  std::string provider;

  std::size_t size() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span(values).subspan(i * dim, dim);
  }
  EmbeddingSet subset(std::span<const std::size_t> rows) const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string tag() const = 0;
  virtual EmbeddingSet embed(std::span<const std::string> ids,
                             std::span<const std::string> texts) const = 0;
};

// Each preprocessed token seeds a fixed Gaussian vector through FNV-1a; a
// sentence is the L2-normalized mean of its token vectors (zero if empty).
class HashedProjectionProvider final : public EmbeddingProvider {
 public:
  explicit HashedProjectionProvider(std::size_t dim = 256, std::uint64_t seed = 0);
  std::string tag() const override;
  EmbeddingSet embed(std::span<const std::string> ids,
                     std::span<const std::string> texts) const override;
  std::vector<double> token_vector(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Precomputed vectors, one "id<TAB>d<TAB>v1,v2,...,vd" record per line.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  static FileEmbeddingProvider load(std::istream& in, std::string name);
  static FileEmbeddingProvider load(const std::filesystem::path& path);
  std::string tag() const override { return "file:" + name_; }
  EmbeddingSet embed(std::span<const std::string> ids,
                     std::span<const std::string> texts) const override;
  std::size_t dim() const { return dim_; }

 private:
  std::string name_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

EmbeddingSet embed_corpus(std::span<const LabeledExample> corpus, const EmbeddingProvider& provider);

// Mean over dimensions of the per-dimension sample variance (trace of the
// covariance divided by d). Needs n >= 2.
double corpus_variability(const EmbeddingSet& emb);

struct SimilarityMatrices {
  std::size_t size = 0;
  std::vector<double> raw;      // cosine of mean vectors, size x size
  std::vector<double> display;  // off-diagonals min-max rescaled to [0, 1], diagonal 1

  double raw_at(std::size_t i, std::size_t j) const { return raw[i * size + j]; }
  double display_at(std::size_t i, std::size_t j) const { return display[i * size + j]; }
};

// Cosine similarity between corpus mean vectors. When every off-diagonal value
// is equal the display matrix is all ones.
SimilarityMatrices similarity_matrix(std::span<const EmbeddingSet> corpora,
                                     std::span<const std::string> names = {});

struct LabelDistribution {
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> fractions{};
  std::size_t total = 0;
};

LabelDistribution label_distribution(std::span<const LabeledExample> examples);

struct NamedCorpus {
  std::string name;
  std::vector<LabeledExample> examples;
};

struct CorpusSummary {
  std::string name;
  LabelDistribution labels;
  std::optional<AgreementReport> agreement;  // items with the most common vote count
  double variability = 0.0;                  // NaN below 2 examples
  std::array<double, kNumClasses> class_variability{};
};

struct DiagnosticsReport {
  std::string provider;
  std::vector<CorpusSummary> corpora;
  SimilarityMatrices similarity;
  // Class-conditional means; absent when some corpus lacks the class.
  std::array<std::optional<SimilarityMatrices>, kNumClasses> class_similarity;
};

DiagnosticsReport diagnose(std::span<const NamedCorpus> corpora, const EmbeddingProvider& provider);

void write_summary_csv(std::ostream& out, const DiagnosticsReport& report);
void write_matrix_csv(std::ostream& out, std::span<const std::string> names,
                      std::span<const double> matrix);
// summary.csv plus similarity_<all|class>_<raw|display>.csv in `dir`.
void write_report(const std::filesystem::path& dir, const DiagnosticsReport& report);

}  // namespace driftlab
