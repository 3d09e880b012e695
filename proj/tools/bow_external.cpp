// Built-in bag-of-words classifier behind the external-command protocol.
//
//   bow_external train --train-file F --model-dir D [--seed N] [--dim ..]
//   bow_external predict --model-dir D --input F --output F
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "driftlab/bow_classifier.hpp"
#include "driftlab/classifier.hpp"
#include "driftlab/model_adapter.hpp"

namespace fs = std::filesystem;
using namespace driftlab;

int main(int argc, char** argv) {
  CLI::App app{"Bag-of-words classifier speaking the external model protocol", "bow_external"};
  app.require_subcommand(1);

  ClassifierConfig config;
  std::string train_file, model_dir;
  auto* train_cmd = app.add_subcommand("train");
  train_cmd->add_option("--train-file", train_file)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model-dir", model_dir)->required();
  train_cmd->add_option("--seed", config.seed);
  train_cmd->add_option("--dim", config.dim);
  train_cmd->add_option("--epochs", config.epochs);
  train_cmd->add_option("--lr", config.lr0);
  train_cmd->add_option("--word-ngrams", config.word_ngrams);
  train_cmd->add_option("--bucket-count", config.bucket_count);
  train_cmd->add_option("--min-token-count", config.min_token_count);

  std::string input, output;
  auto* predict_cmd = app.add_subcommand("predict");
  predict_cmd->add_option("--model-dir", model_dir)->required()->check(CLI::ExistingDirectory);
  predict_cmd->add_option("--input", input)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--output", output)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path model_path = fs::path(model_dir) / "model.bin";
    if (*train_cmd) {
      config.validate();
      std::ifstream in(train_file, std::ios::binary);
      const auto examples = read_train_file(in);
      const Model model = train(to_training_examples(examples), config);
      fs::create_directories(model_dir);
      std::ofstream out(model_path, std::ios::binary);
      model.save(out, Model::RealWidth::f64);
      if (!out) throw Error("cannot write " + model_path.string());
      return 0;
    }
    std::ifstream model_in(model_path, std::ios::binary);
    if (!model_in) throw Error("no model in " + model_dir);
    const Model model = Model::load(model_in);
    std::ifstream in(input, std::ios::binary);
    std::vector<ProbVector> probs;
    std::string line;
    while (std::getline(in, line)) probs.push_back(predict(model, line));
    std::ofstream out(output, std::ios::binary);
    write_prediction_output(out, probs);
    return out ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "bow_external: " << e.what() << '\n';
    return 2;
  }
}
