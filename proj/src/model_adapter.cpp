#include "driftlab/model_adapter.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <fstream>
#include <mutex>
#include <sstream>

#include "driftlab/process.hpp"
#include "driftlab/text.hpp"

namespace driftlab {

namespace fs = std::filesystem;

namespace {

std::string sanitize_line(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

// Scratch directory under the system temp dir (honours TMPDIR), removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<std::uint64_t> counter{0};
    path_ = fs::temp_directory_path() /
            ("driftlab-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

bool directory_has_entries(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return false;
  return fs::directory_iterator(dir, ec) != fs::directory_iterator();
}

void require_placeholder(std::string_view tmpl, std::string_view name, const char* which) {
  if (tmpl.find("{" + std::string(name) + "}") == std::string_view::npos) {
    throw ValidationError(std::string(which) + " lacks the {" + std::string(name) + "} placeholder");
  }
}

}  // namespace

std::string_view to_string(AdapterErrorKind kind) {
  switch (kind) {
    case AdapterErrorKind::train_failed: return "TrainFailed";
    case AdapterErrorKind::timeout: return "Timeout";
    case AdapterErrorKind::empty_model_dir: return "EmptyModelDir";
    case AdapterErrorKind::predict_failed: return "PredictFailed";
    case AdapterErrorKind::line_count_mismatch: return "LineCountMismatch";
    case AdapterErrorKind::unparseable_row: return "UnparseableRow";
    case AdapterErrorKind::probability_out_of_range: return "ProbabilityOutOfRange";
  }
  return "?";
}

AdapterError::AdapterError(AdapterErrorKind kind, const std::string& message,
                           std::string diagnostics)
    : Error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      diagnostics_(std::move(diagnostics)) {}

void ExternalModelSpec::validate() const {
  require_placeholder(train_command, "train_file", "train_command");
  require_placeholder(train_command, "model_dir", "train_command");
  require_placeholder(predict_command, "model_dir", "predict_command");
  require_placeholder(predict_command, "input_file", "predict_command");
  require_placeholder(predict_command, "output_file", "predict_command");
  if (model_dir.empty()) throw ValidationError("model_dir is empty");
  if (timeout_seconds < 1) throw ValidationError("timeout_seconds must be >= 1");
  if (max_concurrent < 1) throw ValidationError("max_concurrent must be >= 1");
}

ExternalModelSpec external_spec_from_config(const KeyValueConfig& cfg) {
  cfg.reject_unknown(
      {"train_command", "predict_command", "model_dir", "timeout_seconds", "max_concurrent"});
  ExternalModelSpec spec;
  auto required = [&](const char* key) {
    auto v = cfg.get(key);
    if (!v) throw ValidationError(cfg.source() + ": missing '" + key + "'");
    return *v;
  };
  spec.train_command = required("train_command");
  spec.predict_command = required("predict_command");
  spec.model_dir = required("model_dir");
  if (auto v = cfg.get("timeout_seconds")) {
    spec.timeout_seconds = static_cast<int>(parse_integer(*v, "timeout_seconds"));
  }
  if (auto v = cfg.get("max_concurrent")) {
    spec.max_concurrent = static_cast<int>(parse_integer(*v, "max_concurrent"));
  }
  spec.validate();
  return spec;
}

ExternalModelSpec load_external_spec(const fs::path& path) {
  return external_spec_from_config(KeyValueConfig::load(path));
}

std::string expand_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        if (const auto it = values.find(name); it != values.end()) {
          out += shell_quote(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

void write_train_file(std::ostream& out, std::span<const LabeledText> examples) {
  for (const auto& e : examples) out << to_string(e.label) << '\t' << sanitize_line(e.text) << '\n';
}

std::vector<LabeledText> read_train_file(std::istream& in) {
  std::vector<LabeledText> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto label = parse_label(std::string_view(line).substr(0, tab));
    if (tab == std::string::npos || !label) {
      throw ValidationError("train file line " + std::to_string(line_no) + ": expected label<TAB>text");
    }
    out.push_back({line.substr(tab + 1), *label});
  }
  return out;
}

void write_prediction_input(std::ostream& out, std::span<const std::string> texts) {
  for (const auto& t : texts) out << sanitize_line(t) << '\n';
}

void write_prediction_output(std::ostream& out, std::span<const ProbVector> probs) {
  char buf[128];
  for (const auto& p : probs) {
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t%.17g\n", p.p[0], p.p[1], p.p[2]);
    out << to_string(p.argmax()) << buf;
  }
}

std::vector<ProbVector> parse_prediction_output(std::istream& in, std::size_t expected_lines) {
  std::vector<ProbVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      // A trailing blank line is tolerated; interior blanks are not.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw AdapterError(AdapterErrorKind::unparseable_row,
                         "blank prediction row " + std::to_string(line_no));
    }
    const auto fields = split_whitespace(line);
    if (fields.size() != 4 || !parse_label(fields[0])) {
      throw AdapterError(AdapterErrorKind::unparseable_row,
                         "prediction row " + std::to_string(line_no) + ": '" + line + "'");
    }
    ProbVector p;
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      try {
        p.p[c] = parse_real(fields[c + 1], "probability");
      } catch (const ValidationError&) {
        throw AdapterError(AdapterErrorKind::unparseable_row,
                           "prediction row " + std::to_string(line_no) + ": '" + line + "'");
      }
      if (!std::isfinite(p.p[c]) || p.p[c] < 0.0 || p.p[c] > 1.01) {
        throw AdapterError(AdapterErrorKind::probability_out_of_range,
                           "prediction row " + std::to_string(line_no) + ": '" + line + "'");
      }
      sum += p.p[c];
    }
    if (sum < 0.99 || sum > 1.01) {
      throw AdapterError(AdapterErrorKind::probability_out_of_range,
                         "prediction row " + std::to_string(line_no) + " sums to " +
                             std::to_string(sum));
    }
    if (sum != 1.0) {
      for (double& v : p.p) v /= sum;
    }
    out.push_back(p);
  }
  if (out.size() != expected_lines) {
    throw AdapterError(AdapterErrorKind::line_count_mismatch,
                       "expected " + std::to_string(expected_lines) + " prediction rows, got " +
                           std::to_string(out.size()));
  }
  return out;
}

ExternalModelHandle train_external(const ExternalModelSpec& spec,
                                   std::span<const LabeledText> train_set,
                                   std::optional<std::uint64_t> seed,
                                   std::optional<fs::path> model_dir) {
  spec.validate();
  ExternalModelHandle handle{spec, model_dir.value_or(spec.model_dir)};
  fs::remove_all(handle.model_dir);
  fs::create_directories(handle.model_dir);

  ScratchDir scratch;
  const fs::path train_file = scratch.path() / "train.tsv";
  {
    std::ofstream out(train_file);
    write_train_file(out, train_set);
    if (!out) throw Error("cannot write " + train_file.string());
  }
  std::map<std::string, std::string> values{{"train_file", train_file.string()},
                                            {"model_dir", handle.model_dir.string()}};
  if (seed) values["seed"] = std::to_string(*seed);
  const auto cmd = expand_template(spec.train_command, values);
  const auto result = run_shell(cmd, std::chrono::seconds(spec.timeout_seconds));
  if (result.timed_out) {
    throw AdapterError(AdapterErrorKind::timeout,
                       "training exceeded " + std::to_string(spec.timeout_seconds) + " s",
                       result.output);
  }
  if (result.exit_code != 0) {
    throw AdapterError(AdapterErrorKind::train_failed,
                       "train command exited with " + std::to_string(result.exit_code),
                       result.output);
  }
  if (!directory_has_entries(handle.model_dir)) {
    throw AdapterError(AdapterErrorKind::empty_model_dir,
                       "train command left " + handle.model_dir.string() + " empty", result.output);
  }
  return handle;
}

std::vector<ProbVector> predict_external(const ExternalModelHandle& handle,
                                         std::span<const std::string> texts) {
  ScratchDir scratch;
  const fs::path input_file = scratch.path() / "input.txt";
  const fs::path output_file = scratch.path() / "output.tsv";
  {
    std::ofstream out(input_file);
    write_prediction_input(out, texts);
    if (!out) throw Error("cannot write " + input_file.string());
  }
  const auto cmd = expand_template(handle.spec.predict_command,
                                   {{"model_dir", handle.model_dir.string()},
                                    {"input_file", input_file.string()},
                                    {"output_file", output_file.string()}});
  const auto result = run_shell(cmd, std::chrono::seconds(handle.spec.timeout_seconds));
  if (result.timed_out) {
    throw AdapterError(AdapterErrorKind::timeout,
                       "prediction exceeded " + std::to_string(handle.spec.timeout_seconds) + " s",
                       result.output);
  }
  if (result.exit_code != 0) {
    throw AdapterError(AdapterErrorKind::predict_failed,
                       "predict command exited with " + std::to_string(result.exit_code),
                       result.output);
  }
  std::ifstream in(output_file);
  if (!in) {
    throw AdapterError(AdapterErrorKind::predict_failed, "no output file written", result.output);
  }
  return parse_prediction_output(in, texts.size());
}

struct ExternalBackend::Limiter {
  std::mutex mutex;
  std::condition_variable cv;
  int available = 1;

  void acquire() {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard lock(mutex);
      ++available;
    }
    cv.notify_one();
  }
};

namespace {

class ExternalClassifier final : public TrainedClassifier {
 public:
  ExternalClassifier(ExternalModelHandle handle, std::function<void()> acquire,
                     std::function<void()> release)
      : handle_(std::move(handle)), acquire_(std::move(acquire)), release_(std::move(release)) {}

  std::vector<ProbVector> predict(std::span<const std::string> texts) const override {
    acquire_();
    try {
      auto out = predict_external(handle_, texts);
      release_();
      return out;
    } catch (...) {
      release_();
      throw;
    }
  }

 private:
  ExternalModelHandle handle_;
  std::function<void()> acquire_;
  std::function<void()> release_;
};

}  // namespace

ExternalBackend::ExternalBackend(ExternalModelSpec spec)
    : spec_(std::move(spec)), limiter_(std::make_unique<Limiter>()) {
  spec_.validate();
  limiter_->available = spec_.max_concurrent;
}

ExternalBackend::~ExternalBackend() = default;

std::string ExternalBackend::tag() const {
  return "external(train=" + spec_.train_command + ",predict=" + spec_.predict_command + ")";
}

std::shared_ptr<const TrainedClassifier> ExternalBackend::train(
    std::span<const LabeledText> examples, std::uint64_t seed, const CellKey& key) const {
  const fs::path dir = spec_.model_dir / ("w" + std::to_string(key.window_id) + "_r" +
                                          std::to_string(key.repeat_index));
  limiter_->acquire();
  ExternalModelHandle handle;
  try {
    handle = train_external(spec_, examples, seed, dir);
  } catch (...) {
    limiter_->release();
    throw;
  }
  limiter_->release();
  Limiter* limiter = limiter_.get();
  return std::make_shared<ExternalClassifier>(
      std::move(handle), [limiter] { limiter->acquire(); }, [limiter] { limiter->release(); });
}

}  // namespace driftlab
