#include "driftlab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "driftlab/classifier.hpp"
#include "driftlab/csv.hpp"
#include "driftlab/diagnostics.hpp"
#include "driftlab/error.hpp"
#include "driftlab/experiment.hpp"
#include "driftlab/ingest.hpp"
#include "driftlab/model_adapter.hpp"
#include "driftlab/sentiment.hpp"
#include "driftlab/synth.hpp"
#include "driftlab/timeline.hpp"

namespace driftlab {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct PlanFlags {
  std::string plan_file;
  std::optional<int> bin_days, window_bins, n_train_per_bin, n_eval_per_bin, repeats;
  std::optional<std::uint64_t> master_seed;
  std::string origin, end;
  bool downsample = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--plan", plan_file, "Experiment plan (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--bin-days", bin_days);
    cmd->add_option("--window-bins", window_bins);
    cmd->add_option("--n-train-per-bin", n_train_per_bin);
    cmd->add_option("--n-eval-per-bin", n_eval_per_bin);
    cmd->add_option("--repeats", repeats);
    cmd->add_option("--master-seed", master_seed);
    cmd->add_option("--origin", origin, "Timeline origin (ISO-8601 with zone)");
    cmd->add_option("--end", end, "Observation end (ISO-8601 with zone)");
    cmd->add_flag("--downsample", downsample, "Split undersized bins proportionally");
  }

  ExperimentPlan resolve() const {
    ExperimentPlan plan = plan_file.empty() ? ExperimentPlan{} : load_plan(plan_file);
    if (bin_days) plan.bin_days = *bin_days;
    if (window_bins) plan.window_bins = *window_bins;
    if (n_train_per_bin) plan.n_train_per_bin = *n_train_per_bin;
    if (n_eval_per_bin) plan.n_eval_per_bin = *n_eval_per_bin;
    if (repeats) plan.repeats = *repeats;
    if (master_seed) plan.master_seed = *master_seed;
    auto timestamp = [](const std::string& text, const char* what) {
      const auto t = parse_timestamp(text);
      if (!t) throw ValidationError(std::string(what) + ": bad timestamp '" + text + "'");
      return *t;
    };
    if (!origin.empty()) plan.origin = timestamp(origin, "--origin");
    if (!end.empty()) plan.end = timestamp(end, "--end");
    if (downsample) plan.downsample = true;
    plan.validate();
    return plan;
  }
};

struct ClassifierFlags {
  ClassifierConfig config;
  std::string external;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dim", config.dim)->capture_default_str();
    cmd->add_option("--epochs", config.epochs)->capture_default_str();
    cmd->add_option("--lr", config.lr0, "Initial learning rate")->capture_default_str();
    cmd->add_option("--word-ngrams", config.word_ngrams)->capture_default_str();
    cmd->add_option("--bucket-count", config.bucket_count)->capture_default_str();
    cmd->add_option("--min-token-count", config.min_token_count)->capture_default_str();
    cmd->add_option("--external", external, "External model spec; replaces the built-in classifier")
        ->check(CLI::ExistingFile);
  }

  std::unique_ptr<ClassifierBackend> resolve(Json& manifest) const {
    if (!external.empty()) {
      auto spec = load_external_spec(external);
      manifest["classifier"] = {{"kind", "external"},
                                {"spec_file", external},
                                {"train_command", spec.train_command},
                                {"predict_command", spec.predict_command},
                                {"model_dir", spec.model_dir.string()},
                                {"timeout_seconds", spec.timeout_seconds},
                                {"max_concurrent", spec.max_concurrent}};
      return std::make_unique<ExternalBackend>(std::move(spec));
    }
    config.validate();
    manifest["classifier"] = {{"kind", "builtin"},
                              {"dim", config.dim},
                              {"epochs", config.epochs},
                              {"lr", config.lr0},
                              {"word_ngrams", config.word_ngrams},
                              {"bucket_count", config.bucket_count},
                              {"min_token_count", config.min_token_count},
                              {"preprocessing", std::string(kPreprocessingTag)}};
    return std::make_unique<BuiltinBackend>(config);
  }
};

Json plan_json(const ExperimentPlan& plan) {
  Json j = {{"bin_days", plan.bin_days},
            {"window_bins", plan.window_bins},
            {"n_train_per_bin", plan.n_train_per_bin},
            {"n_eval_per_bin", plan.n_eval_per_bin},
            {"repeats", plan.repeats},
            {"master_seed", plan.master_seed},
            {"downsample", plan.downsample}};
  j["origin"] = plan.origin ? Json(format_timestamp(*plan.origin)) : Json(nullptr);
  j["end"] = plan.end ? Json(format_timestamp(*plan.end)) : Json(nullptr);
  return j;
}

Json manifest_header(const std::string& subcommand) {
  return {{"tool", "driftlab"}, {"subcommand", subcommand}};
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  return in;
}

void write_manifest(const fs::path& dir, const Json& manifest) {
  auto out = open_output(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

void prepare_output_dir(const fs::path& dir) {
  if (fs::exists(dir) && !fs::is_directory(dir)) {
    throw ValidationError(dir.string() + " exists and is not a directory");
  }
  fs::create_directories(dir);
}

std::vector<LabeledExample> load_corpus(const std::string& path) {
  auto in = open_input(path);
  auto corpus = read_resolved(in);
  if (corpus.empty()) throw ValidationError(path + " holds no examples");
  return corpus;
}

std::size_t thread_count(std::size_t requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_results(const fs::path& dir, const DriftResults& results) {
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "summary.csv");
    write_summary_csv(out, results);
  }
  auto out = open_output(dir / "cells.csv");
  write_cells_csv(out, results);
}

Json results_json(const DriftResults& r) {
  Json j = {{"classifier_tag", r.classifier_tag},
            {"n_bins", r.bins.size()},
            {"n_windows", r.windows.size()},
            {"n_cells", r.cells.size()},
            {"train_counts", r.train_counts}};
  j["warnings"] = r.warnings;
  return j;
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  for (const auto& part : split(text, ',')) {
    out.push_back(static_cast<int>(parse_integer(part, what)));
  }
  if (out.empty()) throw ValidationError(std::string(what) + " is empty");
  return out;
}

struct CommonRunFlags {
  std::size_t threads = 0;
  bool resume = false;
  int bootstrap_draws = kDefaultBootstrapDraws;
  double level = 0.95;

  void attach(CLI::App* cmd) {
    cmd->add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
    cmd->add_flag("--resume", resume, "Reuse completed units from the checkpoint in --out");
    cmd->add_option("--bootstrap-draws", bootstrap_draws)->capture_default_str();
    cmd->add_option("--level", level, "Confidence level")->capture_default_str();
  }

  RunOptions options(const fs::path& out_dir) const {
    if (bootstrap_draws < 1) throw ValidationError("--bootstrap-draws must be positive");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("--level must be in (0, 1)");
    RunOptions o;
    o.threads = thread_count(threads);
    o.bootstrap_draws = bootstrap_draws;
    o.level = level;
    o.checkpoint = out_dir / "checkpoint.csv";
    return o;
  }

  void reset_checkpoints(const fs::path& out_dir) const {
    if (resume || !fs::exists(out_dir)) return;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
      if (entry.path().filename().string().starts_with("checkpoint.csv")) fs::remove(entry.path());
    }
  }

  Json json(const RunOptions& o) const {
    return {{"threads", o.threads}, {"bootstrap_draws", o.bootstrap_draws}, {"level", o.level},
            {"resume", resume}};
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-drift evaluation toolkit", "driftlab"};
  app.require_subcommand(1);

  // ingest
  std::string ingest_input, ingest_out;
  auto* ingest_cmd = app.add_subcommand("ingest", "Anonymize, filter and majority-resolve annotations");
  ingest_cmd->add_option("--input", ingest_input, "Annotation records (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--out", ingest_out, "Output directory")->required();

  // bins
  PlanFlags bins_plan;
  std::string bins_corpus, bins_out;
  auto* bins_cmd = app.add_subcommand("bins", "Export time bins and train/eval splits");
  bins_cmd->add_option("--corpus", bins_corpus, "Resolved corpus")->required()->check(CLI::ExistingFile);
  bins_cmd->add_option("--out", bins_out, "Output directory")->required();
  bins_plan.attach(bins_cmd);

  // drift
  PlanFlags drift_plan;
  ClassifierFlags drift_clf;
  CommonRunFlags drift_run;
  std::string drift_corpus, drift_out;
  auto* drift_cmd = app.add_subcommand("drift", "Run the sliding-window drift protocol");
  drift_cmd->add_option("--corpus", drift_corpus, "Resolved corpus")->required()->check(CLI::ExistingFile);
  drift_cmd->add_option("--out", drift_out, "Output directory")->required();
  drift_plan.attach(drift_cmd);
  drift_clf.attach(drift_cmd);
  drift_run.attach(drift_cmd);

  // ablate-size
  PlanFlags size_plan;
  ClassifierFlags size_clf;
  CommonRunFlags size_run;
  std::string size_corpus, size_out, size_list;
  auto* size_cmd = app.add_subcommand("ablate-size", "Repeat the protocol for several training-set sizes");
  size_cmd->add_option("--corpus", size_corpus, "Resolved corpus")->required()->check(CLI::ExistingFile);
  size_cmd->add_option("--out", size_out, "Output directory")->required();
  size_cmd->add_option("--sizes", size_list, "Comma-separated totals per window")->required();
  size_plan.attach(size_cmd);
  size_clf.attach(size_cmd);
  size_run.attach(size_cmd);

  // ablate-window
  PlanFlags len_plan;
  ClassifierFlags len_clf;
  CommonRunFlags len_run;
  std::string len_corpus, len_out, len_list;
  std::optional<int> len_total;
  auto* len_cmd = app.add_subcommand("ablate-window", "Repeat the protocol for several window lengths");
  len_cmd->add_option("--corpus", len_corpus, "Resolved corpus")->required()->check(CLI::ExistingFile);
  len_cmd->add_option("--out", len_out, "Output directory")->required();
  len_cmd->add_option("--lengths", len_list, "Comma-separated window lengths in days")->required();
  len_cmd->add_option("--total-train", len_total,
                      "Training items per model (default window_bins * n_train_per_bin)");
  len_plan.attach(len_cmd);
  len_clf.attach(len_cmd);
  len_run.attach(len_cmd);

  // diagnose
  PlanFlags diag_plan;
  std::string diag_corpus, diag_out, diag_mode = "bin", diag_provider = "hashed", diag_embeddings;
  std::size_t diag_dim = 256;
  std::uint64_t diag_seed = 0;
  auto* diag_cmd = app.add_subcommand("diagnose", "Label, agreement and embedding diagnostics per bin or window");
  diag_cmd->add_option("--corpus", diag_corpus, "Resolved corpus")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--out", diag_out, "Output directory")->required();
  diag_cmd->add_option("--mode", diag_mode)->check(CLI::IsMember({"bin", "window"}))->capture_default_str();
  diag_cmd->add_option("--provider", diag_provider)
      ->check(CLI::IsMember({"hashed", "file"}))
      ->capture_default_str();
  diag_cmd->add_option("--embeddings", diag_embeddings, "Vector file for --provider file")
      ->check(CLI::ExistingFile);
  diag_cmd->add_option("--embedding-dim", diag_dim)->capture_default_str();
  diag_cmd->add_option("--embedding-seed", diag_seed)->capture_default_str();
  diag_plan.attach(diag_cmd);

  // sentiment
  PlanFlags sent_plan;
  ClassifierFlags sent_clf;
  std::string sent_corpus, sent_stream, sent_out;
  std::size_t sent_legacy = 0, sent_repeat = 0;
  bool sent_skip_early = false;
  auto* sent_cmd = app.add_subcommand("sentiment", "Weekly sentiment index from legacy and updated models");
  sent_cmd->add_option("--corpus", sent_corpus, "Resolved training corpus")->required()->check(CLI::ExistingFile);
  sent_cmd->add_option("--stream", sent_stream, "Items to score (JSON lines with created_at, text)")
      ->required()
      ->check(CLI::ExistingFile);
  sent_cmd->add_option("--out", sent_out, "Output directory")->required();
  sent_cmd->add_option("--legacy-window", sent_legacy, "Window whose model stays fixed")->capture_default_str();
  sent_cmd->add_option("--repeat", sent_repeat, "Repeat whose splits train the models")->capture_default_str();
  sent_cmd->add_flag("--skip-early", sent_skip_early, "Drop stream items older than the first model");
  sent_plan.attach(sent_cmd);
  sent_clf.attach(sent_cmd);

  // synth
  std::string synth_scenario, synth_preset, synth_out;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic annotated corpus with scheduled drift");
  auto* scenario_opt = synth_cmd->add_option("--scenario", synth_scenario, "Scenario file")->check(CLI::ExistingFile);
  auto* preset_opt = synth_cmd->add_option("--preset", synth_preset, "Built-in scenario")
                         ->check(CLI::IsMember({"static", "swap", "negative-shift"}));
  scenario_opt->excludes(preset_opt);
  synth_cmd->add_option("--seed", synth_seed, "Override the scenario seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("driftlab");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest_cmd) {
      Json manifest = manifest_header("ingest");
      manifest["input"] = ingest_input;
      auto in = open_input(ingest_input);
      const IngestReport report = ingest(in);
      prepare_output_dir(ingest_out);
      {
        auto o = open_output(fs::path(ingest_out) / "resolved.jsonl");
        write_resolved(o, report.corpus.examples);
      }
      {
        auto o = open_output(fs::path(ingest_out) / "rejects.csv");
        write_rejects_csv(o, report.rejects);
      }
      manifest["records_read"] = report.records_read;
      manifest["records_rejected"] = report.rejects.size();
      manifest["records_ineligible"] = report.records_ineligible;
      manifest["items_resolved"] = report.corpus.examples.size();
      manifest["items_skipped"] = report.corpus.skipped_items;
      manifest["items_excluded"] = report.corpus.excluded_items;
      write_manifest(ingest_out, manifest);
      out << "resolved " << report.corpus.examples.size() << " items from " << report.records_read
          << " records (" << report.rejects.size() << " malformed lines)\n";
      return 0;
    }

    if (*bins_cmd) {
      const ExperimentPlan plan = bins_plan.resolve();
      const auto corpus = load_corpus(bins_corpus);
      const Binning binning = build_bins(corpus, plan);
      prepare_output_dir(bins_out);
      {
        auto o = open_output(fs::path(bins_out) / "plan.cfg");
        write_plan(o, plan);
      }
      {
        auto o = open_output(fs::path(bins_out) / "bins.csv");
        write_bins_csv(o, binning.bins);
      }
      {
        auto o = open_output(fs::path(bins_out) / "splits.csv");
        write_splits_csv(o, corpus, binning.bins, plan);
      }
      Json manifest = manifest_header("bins");
      manifest["corpus"] = bins_corpus;
      manifest["plan"] = plan_json(plan);
      manifest["origin"] = format_timestamp(binning.origin);
      manifest["n_bins"] = binning.bins.size();
      manifest["dropped"] = binning.dropped;
      write_manifest(bins_out, manifest);
      out << binning.bins.size() << " bins, " << binning.dropped << " examples past the last full bin\n";
      return 0;
    }

    if (*drift_cmd) {
      Json manifest = manifest_header("drift");
      manifest["corpus"] = drift_corpus;
      const ExperimentPlan plan = drift_plan.resolve();
      manifest["plan"] = plan_json(plan);
      const auto backend = drift_clf.resolve(manifest);
      auto options = drift_run.options(drift_out);
      manifest["run"] = drift_run.json(options);
      const auto corpus = load_corpus(drift_corpus);
      prepare_output_dir(drift_out);
      drift_run.reset_checkpoints(drift_out);
      const DriftResults results = run_drift(plan, corpus, *backend, options);
      write_results(drift_out, results);
      {
        auto o = open_output(fs::path(drift_out) / "plan.cfg");
        write_plan(o, plan);
      }
      manifest["results"] = results_json(results);
      write_manifest(drift_out, manifest);
      for (const auto& w : results.warnings) err << "warning: " << w << '\n';
      out << results.cells.size() << " cells over " << results.windows.size() << " windows and "
          << results.bins.size() << " bins\n";
      return 0;
    }

    if (*size_cmd || *len_cmd) {
      const bool by_size = size_cmd->parsed();
      auto& pf = by_size ? size_plan : len_plan;
      auto& cf = by_size ? size_clf : len_clf;
      auto& rf = by_size ? size_run : len_run;
      const std::string& corpus_path = by_size ? size_corpus : len_corpus;
      const fs::path dir = by_size ? size_out : len_out;

      Json manifest = manifest_header(by_size ? "ablate-size" : "ablate-window");
      manifest["corpus"] = corpus_path;
      const ExperimentPlan plan = pf.resolve();
      manifest["plan"] = plan_json(plan);
      const auto backend = cf.resolve(manifest);
      auto options = rf.options(dir);
      manifest["run"] = rf.json(options);
      const auto values = parse_int_list(by_size ? size_list : len_list, by_size ? "--sizes" : "--lengths");
      const int total = len_total.value_or(plan.window_bins * plan.n_train_per_bin);
      if (by_size) {
        manifest["sizes"] = values;
      } else {
        manifest["lengths_days"] = values;
        manifest["total_train"] = total;
      }
      const auto corpus = load_corpus(corpus_path);
      prepare_output_dir(dir);
      rf.reset_checkpoints(dir);
      const auto runs = by_size ? run_size_ablation(plan, values, corpus, *backend, options)
                                : run_window_ablation(plan, values, total, corpus, *backend, options);
      Json runs_json = Json::array();
      for (const auto& [value, results] : runs) {
        const std::string name = (by_size ? "size_" : "len_") + std::to_string(value);
        write_results(dir / name, results);
        Json entry = {{"name", name}, {"value", value}};
        entry["results"] = results_json(results);
        runs_json.push_back(entry);
        for (const auto& w : results.warnings) err << "warning: " << name << ": " << w << '\n';
      }
      manifest["runs"] = runs_json;
      write_manifest(dir, manifest);
      out << runs.size() << " ablation runs written to " << dir.string() << '\n';
      return 0;
    }

    if (*diag_cmd) {
      Json manifest = manifest_header("diagnose");
      manifest["corpus"] = diag_corpus;
      const ExperimentPlan plan = diag_plan.resolve();
      manifest["plan"] = plan_json(plan);
      manifest["mode"] = diag_mode;
      std::unique_ptr<EmbeddingProvider> provider;
      if (diag_provider == "file") {
        if (diag_embeddings.empty()) throw ValidationError("--provider file needs --embeddings");
        provider = std::make_unique<FileEmbeddingProvider>(FileEmbeddingProvider::load(diag_embeddings));
      } else {
        if (diag_dim == 0) throw ValidationError("--embedding-dim must be positive");
        provider = std::make_unique<HashedProjectionProvider>(diag_dim, diag_seed);
      }
      manifest["provider"] = provider->tag();
      const auto corpus = load_corpus(diag_corpus);
      const Binning binning = build_bins(corpus, plan);
      std::vector<NamedCorpus> groups;
      auto collect = [&](std::string name, const std::vector<std::size_t>& bin_ids) {
        NamedCorpus g{std::move(name), {}};
        for (auto b : bin_ids) {
          for (auto id : binning.bins[b].example_ids) g.examples.push_back(corpus[id]);
        }
        groups.push_back(std::move(g));
      };
      if (diag_mode == "bin") {
        for (const auto& bin : binning.bins) {
          collect("bin" + std::to_string(bin.index) + "_" + format_date(std::chrono::floor<std::chrono::days>(bin.start)),
                  {bin.index});
        }
      } else {
        for (const auto& w : build_windows(binning.bins, plan)) {
          collect("window" + std::to_string(w.window_id), w.bin_indices);
        }
      }
      if (groups.size() < 2) throw ValidationError("diagnostics need at least two bins or windows");
      const DiagnosticsReport report = diagnose(groups, *provider);
      prepare_output_dir(diag_out);
      write_report(diag_out, report);
      manifest["corpora"] = groups.size();
      write_manifest(diag_out, manifest);
      out << "diagnostics for " << groups.size() << " corpora written to " << diag_out << '\n';
      return 0;
    }

    if (*sent_cmd) {
      Json manifest = manifest_header("sentiment");
      manifest["corpus"] = sent_corpus;
      manifest["stream"] = sent_stream;
      const ExperimentPlan plan = sent_plan.resolve();
      manifest["plan"] = plan_json(plan);
      const auto backend = sent_clf.resolve(manifest);
      manifest["legacy_window"] = sent_legacy;
      manifest["repeat"] = sent_repeat;
      manifest["skip_early"] = sent_skip_early;
      const auto corpus = load_corpus(sent_corpus);
      std::vector<StreamItem> stream;
      {
        auto in = open_input(sent_stream);
        stream = read_stream(in);
      }
      const auto models = train_window_models(plan, corpus, *backend, sent_repeat);
      if (models.empty()) throw ValidationError("the corpus yields no training window");
      if (sent_legacy >= models.size()) {
        throw ValidationError("--legacy-window " + std::to_string(sent_legacy) + " out of range (" +
                              std::to_string(models.size()) + " windows)");
      }
      std::vector<TimelineModel> timeline;
      for (const auto& m : models) timeline.push_back({m.window.train_end, m.model});
      std::size_t skipped = 0;
      if (sent_skip_early) {
        const auto first = timeline.front().train_end;
        const auto before = stream.size();
        std::erase_if(stream, [&](const StreamItem& s) { return s.t < first; });
        skipped = before - stream.size();
      }
      const auto cmp = compare_legacy_updated(stream, *models[sent_legacy].model, timeline);
      prepare_output_dir(sent_out);
      {
        auto o = open_output(fs::path(sent_out) / "sentiment.csv");
        write_sentiment_csv(o, cmp);
      }
      Json model_list = Json::array();
      for (const auto& m : models) {
        model_list.push_back({{"window_id", m.window.window_id},
                              {"train_end", format_timestamp(m.window.train_end)},
                              {"warning", m.warning}});
      }
      manifest["models"] = model_list;
      manifest["stream_items_scored"] = stream.size();
      manifest["stream_items_skipped"] = skipped;
      write_manifest(sent_out, manifest);
      out << "final-quarter mean: legacy " << format_real(final_quarter_mean(cmp.legacy)) << ", updated "
          << format_real(final_quarter_mean(cmp.updated)) << '\n';
      return 0;
    }

    if (*synth_cmd) {
      if (synth_scenario.empty() == synth_preset.empty()) {
        throw ValidationError("synth needs exactly one of --scenario or --preset");
      }
      DriftScenario scenario =
          synth_preset.empty() ? load_scenario(synth_scenario) : preset_scenario(synth_preset);
      if (synth_seed) scenario.seed = *synth_seed;
      scenario.validate();
      const GeneratedCorpus generated = generate(scenario);
      prepare_output_dir(synth_out);
      const fs::path dir = synth_out;
      {
        auto o = open_output(dir / "annotations.jsonl");
        write_annotations(o, generated.records);
      }
      {
        auto o = open_output(dir / "stream.jsonl");
        for (std::size_t i = 0; i < generated.item_ids.size(); ++i) {
          const auto& rec = generated.records[i * static_cast<std::size_t>(scenario.raters_per_item)];
          o << Json{{"created_at", format_timestamp(rec.created_at)}, {"text", rec.text}}.dump() << '\n';
        }
      }
      {
        auto o = open_output(dir / "truth.csv");
        o << "item_id,created_at,label\n";
        for (std::size_t i = 0; i < generated.item_ids.size(); ++i) {
          o << generated.item_ids[i] << ',' << format_timestamp(generated.times[i]) << ','
            << to_string(generated.truth[i]) << '\n';
        }
      }
      {
        auto o = open_output(dir / "scenario.cfg");
        write_scenario(o, scenario);
      }
      Json manifest = manifest_header("synth");
      manifest["scenario_source"] = synth_preset.empty() ? synth_scenario : "preset:" + synth_preset;
      manifest["seed"] = scenario.seed;
      manifest["n_items"] = scenario.n_items;
      manifest["n_records"] = generated.records.size();
      write_manifest(dir, manifest);
      out << "generated " << generated.item_ids.size() << " items (" << generated.records.size()
          << " annotation records)\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace driftlab
