#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/classifier.hpp"
#include "driftlab/error.hpp"
#include "driftlab/keyvalue.hpp"

namespace driftlab {

// Command templates are expanded with shell-quoted values for {train_file},
// {model_dir}, {input_file}, {output_file} and {seed}.
//
// Train file: UTF-8, one "label<TAB>text" line per example, labels spelled
// negative/neutral/positive. Prediction input: one text per line. Prediction
// output: one "label<TAB>p_negative<TAB>p_neutral<TAB>p_positive" line per
// input line (any whitespace separates fields). Tabs and line breaks inside
// texts are written as spaces.
struct ExternalModelSpec {
  std::string train_command;    // needs {train_file} and {model_dir}
  std::string predict_command;  // needs {model_dir}, {input_file}, {output_file}
  std::filesystem::path model_dir;
  int timeout_seconds = 3600;
  int max_concurrent = 1;

  void validate() const;
};

ExternalModelSpec external_spec_from_config(const KeyValueConfig& cfg);
ExternalModelSpec load_external_spec(const std::filesystem::path& path);

enum class AdapterErrorKind {
  train_failed,
  timeout,
  empty_model_dir,
  predict_failed,
  line_count_mismatch,
  unparseable_row,
  probability_out_of_range,
};

std::string_view to_string(AdapterErrorKind kind);

class AdapterError : public Error {
 public:
  AdapterError(AdapterErrorKind kind, const std::string& message, std::string diagnostics = {});
  AdapterErrorKind kind() const { return kind_; }
  const std::string& diagnostics() const { return diagnostics_; }

 private:
  AdapterErrorKind kind_;
  std::string diagnostics_;
};

struct ExternalModelHandle {
  ExternalModelSpec spec;
  std::filesystem::path model_dir;
};

std::string expand_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

void write_train_file(std::ostream& out, std::span<const LabeledText> examples);
std::vector<LabeledText> read_train_file(std::istream& in);
void write_prediction_input(std::ostream& out, std::span<const std::string> texts);
void write_prediction_output(std::ostream& out, std::span<const ProbVector> probs);

// Validates and renormalizes prediction rows. A row whose probabilities sum to
// a value in [0.99, 1.01] is rescaled to sum 1; anything else is rejected.
std::vector<ProbVector> parse_prediction_output(std::istream& in, std::size_t expected_lines);

// Writes the train file, runs train_command and checks that it exited 0 and
// left something in the model directory. `model_dir` defaults to
// spec.model_dir and is recreated empty first.
ExternalModelHandle train_external(const ExternalModelSpec& spec,
                                   std::span<const LabeledText> train_set,
                                   std::optional<std::uint64_t> seed = std::nullopt,
                                   std::optional<std::filesystem::path> model_dir = std::nullopt);

std::vector<ProbVector> predict_external(const ExternalModelHandle& handle,
                                         std::span<const std::string> texts);

// Drives external commands from the drift protocol. Each (window, repeat)
// unit trains into spec.model_dir / "w<window>_r<repeat>"; at most
// spec.max_concurrent commands run at once.
class ExternalBackend final : public ClassifierBackend {
 public:
  explicit ExternalBackend(ExternalModelSpec spec);
  ~ExternalBackend() override;
  std::string tag() const override;
  std::shared_ptr<const TrainedClassifier> train(std::span<const LabeledText> examples,
                                                 std::uint64_t seed,
                                                 const CellKey& key) const override;

 private:
  struct Limiter;
  ExternalModelSpec spec_;
  std::unique_ptr<Limiter> limiter_;
};

}  // namespace driftlab
