// Batch experiment runner: synthetic data generation, kernel precomputation,
// ensemble training/evaluation and phase-space plots, all driven by flags or
// a JSON config. Exit codes: 0 success, 2 config error, 3 resource/budget,
// 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtag/cache.hpp"
#include "qtag/cv_kernel.hpp"
#include "qtag/dataset.hpp"
#include "qtag/errors.hpp"
#include "qtag/pipeline.hpp"
#include "qtag/serialize.hpp"
#include "qtag/tagging.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qtag::ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw qtag::ConfigError(path + ": " + e.what());
  }
  return j;
}

struct GenDataArgs {
  std::size_t count = 1000;
  std::size_t features = 130;
  std::size_t informative = 8;
  double separation = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct GramArgs {
  std::string data;
  std::string backend;
  std::string out;
  bool standardize = false;
  int qubits = 4;
  int depth = 4;
  std::uint64_t angle_seed = 0;
  int layers = 1;
  double beta = 0.1;
  double gamma = 0.1;
  int truncation = 8;
  int threads = 0;
};

struct WignerArgs {
  int truncation = 8;
  double displace = 0.0;
  double squeeze = 0.0;
  double extent = 4.0;
  double step = 0.1;
  std::string out;
};

void run_gen_data(const GenDataArgs& a) {
  qtag::SyntheticSpec spec;
  spec.count = a.count;
  spec.feature_count = a.features;
  spec.informative_count = a.informative;
  spec.class_separation = a.separation;
  spec.seed = a.seed;
  qtag::save_events(a.out, qtag::generate_synthetic(spec));
}

void run_compute_gram(const GramArgs& a) {
  qtag::Dataset d = qtag::load_events(a.data);
  if (d.empty()) throw qtag::ConfigError("compute-gram: no events in '" + a.data + "'");
  if (a.standardize) d = qtag::apply_standardizer(d, qtag::fit_standardizer(d));

  qtag::EmbeddingSpec spec;
  if (a.backend == "qubit") {
    spec = qtag::QubitEmbeddingSpec::from_seed(a.qubits, a.depth, a.angle_seed);
  } else if (a.backend == "cv") {
    qtag::CvEmbeddingSpec cv;
    cv.n_modes = static_cast<int>(d.feature_count);
    cv.layers = a.layers;
    cv.beta = a.beta;
    cv.gamma = a.gamma;
    cv.truncation = a.truncation;
    cv.validate();
    spec = cv;
  } else {
    throw qtag::ConfigError("compute-gram: backend must be 'qubit' or 'cv'");
  }
  qtag::save_kernel(a.out, qtag::gram(d, spec, a.threads));
}

void run_wigner(const WignerArgs& a) {
  Eigen::VectorXcd state = Eigen::VectorXcd::Zero(a.truncation);
  state[0] = 1.0;
  if (a.squeeze != 0.0) {
    state = qtag::single_mode_squeeze(a.squeeze, a.truncation) * state;
  }
  if (a.displace != 0.0) {
    state = qtag::single_mode_displacement(a.displace, 1.0, a.truncation) * state;
  }
  qtag::WignerGrid grid;
  grid.x_min = -a.extent;
  grid.x_max = a.extent;
  grid.p_min = -a.extent;
  grid.p_max = a.extent;
  grid.step = a.step;
  qtag::write_wigner_tsv(a.out, grid, qtag::wigner(state, grid));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boosted ensembles of simulated quantum-kernel SVMs for flavour tagging"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "Generate a synthetic event CSV");
  cmd_gen->add_option("--count", gen.count, "Number of events")->check(CLI::PositiveNumber);
  cmd_gen->add_option("--features", gen.features, "Feature count F");
  cmd_gen->add_option("--informative", gen.informative, "Informative feature count");
  cmd_gen->add_option("--separation", gen.separation, "Class separation delta");
  cmd_gen->add_option("--seed", gen.seed, "Generator seed");
  cmd_gen->add_option("--out", gen.out, "Output CSV path")->required();

  GramArgs gram_args;
  auto* cmd_gram = app.add_subcommand("compute-gram", "Precompute a kernel matrix cache");
  cmd_gram->add_option("--data", gram_args.data, "Event CSV path")->required();
  cmd_gram->add_option("--backend", gram_args.backend, "qubit | cv")->required();
  cmd_gram->add_option("--out", gram_args.out, "Output cache path")->required();
  cmd_gram->add_flag("--standardize", gram_args.standardize, "Standardize features first");
  cmd_gram->add_option("--qubits", gram_args.qubits, "Qubit count (qubit backend)");
  cmd_gram->add_option("--depth", gram_args.depth, "Circuit depth (qubit backend)");
  cmd_gram->add_option("--angle-seed", gram_args.angle_seed, "Angle seed (qubit backend)");
  cmd_gram->add_option("--layers", gram_args.layers, "Operation count (cv backend)");
  cmd_gram->add_option("--beta", gram_args.beta, "Displacement scale (cv backend)");
  cmd_gram->add_option("--gamma", gram_args.gamma, "Squeezing scale (cv backend)");
  cmd_gram->add_option("--truncation", gram_args.truncation, "Fock cutoff (cv backend)");
  cmd_gram->add_option("--threads", gram_args.threads, "Worker threads (0 = all cores)");

  std::string config_path, model_dir, output_dir;
  int threads_override = -1;
  auto* cmd_train = app.add_subcommand("train", "Train an ensemble from a JSON config");
  cmd_train->add_option("--config", config_path, "Config JSON path")->required();
  cmd_train->add_option("--out", model_dir, "Model output directory")->required();
  cmd_train->add_option("--threads", threads_override, "Worker threads override");

  std::string eval_data, eval_binning = "static", eval_out;
  auto* cmd_eval = app.add_subcommand("evaluate", "Evaluate a saved ensemble on an event CSV");
  cmd_eval->add_option("--model", model_dir, "Model directory")->required();
  cmd_eval->add_option("--data", eval_data, "Event CSV path")->required();
  cmd_eval->add_option("--binning", eval_binning, "static | equal");
  cmd_eval->add_option("--out", eval_out, "Report TSV path")->required();
  cmd_eval->add_option("--threads", threads_override, "Worker threads override");

  auto* cmd_exp = app.add_subcommand("experiment", "Run a config-driven sweep");
  cmd_exp->add_option("--config", config_path, "Config JSON path")->required();
  cmd_exp->add_option("--output-dir", output_dir, "Overrides output_dir from the config");
  cmd_exp->add_option("--threads", threads_override, "Worker threads override");

  WignerArgs wig;
  auto* cmd_wig = app.add_subcommand("wigner", "Write a Wigner-function TSV");
  cmd_wig->add_option("--truncation", wig.truncation, "Fock cutoff D");
  cmd_wig->add_option("--displace", wig.displace, "Displacement amplitude");
  cmd_wig->add_option("--squeeze", wig.squeeze, "Single-mode squeeze parameter");
  cmd_wig->add_option("--extent", wig.extent, "Grid half-width in x and p");
  cmd_wig->add_option("--step", wig.step, "Grid step");
  cmd_wig->add_option("--out", wig.out, "Output TSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*cmd_gen) {
      run_gen_data(gen);
    } else if (*cmd_gram) {
      run_compute_gram(gram_args);
    } else if (*cmd_train) {
      qtag::ExperimentConfig cfg =
          qtag::parse_experiment_config(load_json_file(config_path), false);
      if (threads_override >= 0) cfg.threads = threads_override;
      qtag::run_train(cfg, model_dir);
    } else if (*cmd_eval) {
      qtag::Dataset raw = qtag::load_events(eval_data);
      qtag::EvaluationResult result =
          qtag::run_evaluate(model_dir, raw, eval_binning,
                             threads_override >= 0 ? threads_override : 0);
      qtag::write_tag_report_tsv(eval_out, result.report);
      std::printf("epsilon_eff\t%.6g\n", result.report.epsilon_eff);
    } else if (*cmd_exp) {
      qtag::ExperimentConfig cfg =
          qtag::parse_experiment_config(load_json_file(config_path), true);
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      if (threads_override >= 0) cfg.threads = threads_override;
      qtag::run_experiment(cfg);
    } else if (*cmd_wig) {
      run_wigner(wig);
    }
  } catch (const qtag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qtag::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return 3;
  } catch (const qtag::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const qtag::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
