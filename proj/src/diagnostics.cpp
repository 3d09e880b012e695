#include "driftlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "driftlab/bow_classifier.hpp"
#include "driftlab/csv.hpp"
#include "driftlab/keyvalue.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> mean_vector(const EmbeddingSet& emb) {
  std::vector<double> mean(emb.dim, 0.0);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto r = emb.row(i);
    for (std::size_t k = 0; k < emb.dim; ++k) mean[k] += r[k];
  }
  if (emb.size() > 0) {
    for (double& v : mean) v /= static_cast<double>(emb.size());
  }
  return mean;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> rows) const {
  EmbeddingSet out;
  out.dim = dim;
  out.provider = provider;
  for (auto r : rows) {
    out.ids.push_back(ids[r]);
    const auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

HashedProjectionProvider::HashedProjectionProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ < 2) throw ValidationError("embedding dimension must be >= 2");
}

std::string HashedProjectionProvider::tag() const {
  return "hashed-random-projection(d=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) +
         ")";
}

std::vector<double> HashedProjectionProvider::token_vector(std::string_view token) const {
  Rng rng(mix_seed(seed_, SeedDomain::embedding, fnv1a64(token)));
  std::vector<double> v(dim_);
  for (double& x : v) x = rng.gaussian();
  return v;
}

EmbeddingSet HashedProjectionProvider::embed(std::span<const std::string> ids,
                                             std::span<const std::string> texts) const {
  if (ids.size() != texts.size()) throw ValidationError("ids and texts differ in length");
  EmbeddingSet out;
  out.dim = dim_;
  out.provider = tag();
  out.ids.assign(ids.begin(), ids.end());
  out.values.assign(ids.size() * dim_, 0.0);
  std::unordered_map<std::string, std::vector<double>> cache;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto tokens = preprocess(texts[i]);
    if (tokens.empty()) continue;
    double* row = out.values.data() + i * dim_;
    for (const auto& t : tokens) {
      auto it = cache.find(t);
      if (it == cache.end()) it = cache.emplace(t, token_vector(t)).first;
      for (std::size_t k = 0; k < dim_; ++k) row[k] += it->second[k];
    }
    // Normalizing the sum equals normalizing the mean.
    const double n = norm(std::span<const double>(row, dim_));
    if (n > 0.0) {
      for (std::size_t k = 0; k < dim_; ++k) row[k] /= n;
    }
  }
  return out;
}

FileEmbeddingProvider FileEmbeddingProvider::load(std::istream& in, std::string name) {
  FileEmbeddingProvider p;
  p.name_ = std::move(name);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = p.name_ + ":" + std::to_string(line_no) + ": ";
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw ValidationError(where + "expected id<TAB>d<TAB>values");
    const auto d = static_cast<std::size_t>(parse_unsigned(fields[1], "dimension"));
    const auto parts = split(fields[2], ',');
    if (parts.size() != d) {
      throw ValidationError(where + "dimension mismatch: declared " + std::to_string(d) +
                            ", found " + std::to_string(parts.size()));
    }
    if (p.dim_ == 0) p.dim_ = d;
    if (d != p.dim_) {
      throw ValidationError(where + "dimension mismatch: " + std::to_string(d) + " vs " +
                            std::to_string(p.dim_));
    }
    if (d < 2) throw ValidationError(where + "dimension must be >= 2");
    std::vector<double> v;
    v.reserve(d);
    for (const auto& s : parts) {
      v.push_back(parse_real(s, "embedding value"));
      if (!std::isfinite(v.back())) throw ValidationError(where + "non-finite value");
    }
    p.table_[fields[0]] = std::move(v);
  }
  return p;
}

FileEmbeddingProvider FileEmbeddingProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());
  return load(in, path.filename().string());
}

EmbeddingSet FileEmbeddingProvider::embed(std::span<const std::string> ids,
                                          std::span<const std::string>) const {
  EmbeddingSet out;
  out.dim = dim_;
  out.provider = tag();
  for (const auto& id : ids) {
    const auto it = table_.find(id);
    if (it == table_.end()) throw ValidationError("embedding file has no vector for id '" + id + "'");
    out.ids.push_back(id);
    out.values.insert(out.values.end(), it->second.begin(), it->second.end());
  }
  return out;
}

EmbeddingSet embed_corpus(std::span<const LabeledExample> corpus,
                          const EmbeddingProvider& provider) {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  ids.reserve(corpus.size());
  texts.reserve(corpus.size());
  for (const auto& e : corpus) {
    ids.push_back(e.item_id);
    texts.push_back(e.text);
  }
  return provider.embed(ids, texts);
}

double corpus_variability(const EmbeddingSet& emb) {
  if (emb.size() < 2) throw ValidationError("corpus_variability needs at least 2 vectors");
  const auto mean = mean_vector(emb);
  double total = 0.0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto r = emb.row(i);
    for (std::size_t k = 0; k < emb.dim; ++k) {
      const double d = r[k] - mean[k];
      total += d * d;
    }
  }
  return total / static_cast<double>(emb.size() - 1) / static_cast<double>(emb.dim);
}

SimilarityMatrices similarity_matrix(std::span<const EmbeddingSet> corpora,
                                     std::span<const std::string> names) {
  const std::size_t m = corpora.size();
  SimilarityMatrices out;
  out.size = m;
  out.raw.assign(m * m, 0.0);
  out.display.assign(m * m, 0.0);
  if (m == 0) return out;

  const std::size_t dim = corpora[0].dim;
  std::vector<std::vector<double>> means;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
    if (corpora[i].dim != dim) throw ValidationError("corpus " + name + ": dimension mismatch");
    if (corpora[i].provider != corpora[0].provider) {
      throw ValidationError("corpus " + name + ": embeddings from provider '" +
                            corpora[i].provider + "' cannot be compared with '" +
                            corpora[0].provider + "'");
    }
    means.push_back(mean_vector(corpora[i]));
    const double n = norm(means.back());
    if (!(n > 0.0)) throw ValidationError("corpus " + name + " has a zero mean vector");
    for (double& v : means.back()) v /= n;
  }
  for (std::size_t i = 0; i < m; ++i) {
    out.raw[i * m + i] = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += means[i][k] * means[j][k];
      dot = std::clamp(dot, -1.0, 1.0);
      out.raw[i * m + j] = dot;
      out.raw[j * m + i] = dot;
    }
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      lo = std::min(lo, out.raw[i * m + j]);
      hi = std::max(hi, out.raw[i * m + j]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j || !(hi > lo)) {
        out.display[i * m + j] = 1.0;
      } else {
        out.display[i * m + j] = (out.raw[i * m + j] - lo) / (hi - lo);
      }
    }
  }
  return out;
}

LabelDistribution label_distribution(std::span<const LabeledExample> examples) {
  LabelDistribution d;
  for (const auto& e : examples) ++d.counts[index_of(e.label)];
  d.total = examples.size();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    d.fractions[c] =
        d.total > 0 ? static_cast<double>(d.counts[c]) / static_cast<double>(d.total) : 0.0;
  }
  return d;
}

DiagnosticsReport diagnose(std::span<const NamedCorpus> corpora,
                           const EmbeddingProvider& provider) {
  DiagnosticsReport report;
  report.provider = provider.tag();
  std::vector<EmbeddingSet> embeddings;
  std::vector<std::string> names;
  std::array<std::vector<EmbeddingSet>, kNumClasses> by_class;
  std::array<bool, kNumClasses> class_complete{true, true, true};

  for (const auto& corpus : corpora) {
    CorpusSummary s;
    s.name = corpus.name;
    names.push_back(corpus.name);
    s.labels = label_distribution(corpus.examples);

    // Fleiss' kappa needs a constant rater count; use the most common one.
    std::map<int, std::size_t> per_count;
    for (const auto& e : corpus.examples) ++per_count[e.n_votes];
    if (!per_count.empty()) {
      const int n = std::max_element(per_count.begin(), per_count.end(), [](auto& a, auto& b) {
                      return a.second < b.second;
                    })->first;
      std::vector<std::array<int, kNumClasses>> table;
      for (const auto& e : corpus.examples) {
        if (e.n_votes == n) table.push_back(e.votes);
      }
      if (n >= 2) s.agreement = fleiss_kappa(table);
    }

    auto emb = embed_corpus(corpus.examples, provider);
    s.variability = emb.size() >= 2 ? corpus_variability(emb) : kNaN;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        if (index_of(corpus.examples[i].label) == c) rows.push_back(i);
      }
      auto sub = emb.subset(rows);
      s.class_variability[c] = sub.size() >= 2 ? corpus_variability(sub) : kNaN;
      if (sub.size() == 0) class_complete[c] = false;
      by_class[c].push_back(std::move(sub));
    }
    embeddings.push_back(std::move(emb));
    report.corpora.push_back(std::move(s));
  }

  report.similarity = similarity_matrix(embeddings, names);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (class_complete[c]) report.class_similarity[c] = similarity_matrix(by_class[c], names);
  }
  return report;
}

void write_summary_csv(std::ostream& out, const DiagnosticsReport& report) {
  out << "corpus,name,n,n_negative,n_neutral,n_positive,frac_negative,frac_neutral,frac_positive,"
         "kappa,kappa_items,kappa_raters,variability,variability_negative,variability_neutral,"
         "variability_positive,provider\n";
  for (std::size_t i = 0; i < report.corpora.size(); ++i) {
    const auto& s = report.corpora[i];
    out << i << ',' << csv_escape(s.name) << ',' << s.labels.total;
    for (auto c : s.labels.counts) out << ',' << c;
    for (auto f : s.labels.fractions) out << ',' << format_real(f);
    if (s.agreement) {
      out << ',' << format_real(s.agreement->kappa) << ',' << s.agreement->n_items << ','
          << s.agreement->n_raters;
    } else {
      out << ",,,";
    }
    out << ',' << format_real(s.variability);
    for (auto v : s.class_variability) out << ',' << format_real(v);
    out << ',' << csv_escape(report.provider) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, std::span<const std::string> names,
                      std::span<const double> matrix) {
  out << "corpus";
  for (const auto& n : names) out << ',' << csv_escape(n);
  out << '\n';
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << csv_escape(names[i]);
    for (std::size_t j = 0; j < names.size(); ++j) out << ',' << format_real(matrix[i * names.size() + j]);
    out << '\n';
  }
}

void write_report(const std::filesystem::path& dir, const DiagnosticsReport& report) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> names;
  for (const auto& c : report.corpora) names.push_back(c.name);
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_csv(out, report);
  }
  auto emit = [&](const std::string& key, const SimilarityMatrices& sim) {
    std::ofstream raw(dir / ("similarity_" + key + "_raw.csv"));
    write_matrix_csv(raw, names, sim.raw);
    std::ofstream display(dir / ("similarity_" + key + "_display.csv"));
    write_matrix_csv(display, names, sim.display);
  };
  emit("all", report.similarity);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (report.class_similarity[c]) emit(std::string(to_string(label_at(c))), *report.class_similarity[c]);
  }
}

}  // namespace driftlab
