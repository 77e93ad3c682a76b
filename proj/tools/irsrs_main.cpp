// irsrs: batch runner for the IRS rate-splitting experiments.
//
//   irsrs run --config exp.cfg [--study rate-region|wsr-vs-snr] [--scheme rs|noma|both]
//             [--trials N] [--seed S] [--out results.csv]
//   irsrs validate --config exp.cfg
//   irsrs codebook --P 4 --Q 5
//
// Exit codes: 0 success, 1 config error, 2 runtime or solver error.

#include "irsrs/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct RunArgs {
  std::string config;
  std::optional<irsrs::Study> study;
  std::optional<irsrs::SchemeChoice> scheme;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

int print_errors(const std::string& what, const std::vector<std::string>& errors) {
  std::cerr << what << ":\n";
  for (const auto& e : errors) std::cerr << "  " << e << '\n';
  return kConfigError;
}

int cmd_run(const RunArgs& a) {
  irsrs::ExperimentSpec spec;
  try {
    spec = irsrs::load_config(a.config);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (a.study) spec.study = *a.study;
  if (a.scheme) spec.scheme = *a.scheme;
  if (a.trials) spec.trials = *a.trials;
  if (a.seed) spec.base.seed = *a.seed;
  if (a.out) spec.output_path = *a.out;
  if (a.threads) spec.threads = *a.threads;
  if (auto errors = irsrs::validate_spec(spec); !errors.empty())
    return print_errors("invalid experiment spec", errors);

  try {
    const auto rows = irsrs::run_experiment(spec);
    irsrs::write_results(rows, spec, spec.output_path);
    int failed = 0;
    for (const auto& r : rows) failed += r.failed;
    std::cout << "wrote " << rows.size() << " rows to " << spec.output_path << " (config "
              << irsrs::config_hash(spec) << ")\n";
    if (failed > 0) std::cout << failed << " infeasible trial(s) excluded; see manifest\n";
  } catch (const irsrs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_validate(const std::string& path) {
  try {
    const auto spec = irsrs::load_config(path);
    if (auto errors = irsrs::validate_spec(spec); !errors.empty())
      return print_errors("invalid experiment spec", errors);
    std::cout << "ok " << irsrs::config_hash(spec) << '\n' << irsrs::canonical_config(spec);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

int cmd_codebook(int p, int q) {
  if (p < 1 || q < 1) {
    std::cerr << "P and Q must be positive\n";
    return kConfigError;
  }
  const auto cb = irsrs::build_codebook(p, q);
  for (Eigen::Index r = 0; r < cb.A.rows(); ++r) {
    for (Eigen::Index c = 0; c < cb.A.cols(); ++c)
      std::printf(c == 0 ? "%.6f" : " %.6f", cb.A(r, c));
    std::printf("\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-aided hierarchical rate-splitting experiments"};
  app.set_version_flag("--version", std::string(irsrs::kToolVersion));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write CSV + manifest");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required();
  const std::map<std::string, irsrs::Study> studies{{"rate-region", irsrs::Study::RateRegion},
                                                    {"wsr-vs-snr", irsrs::Study::WsrVsSnr}};
  const std::map<std::string, irsrs::SchemeChoice> schemes{{"rs", irsrs::SchemeChoice::Rs},
                                                           {"noma", irsrs::SchemeChoice::Noma},
                                                           {"both", irsrs::SchemeChoice::Both}};
  run_cmd->add_option("--study", run.study)->transform(CLI::CheckedTransformer(studies));
  run_cmd->add_option("--scheme", run.scheme)->transform(CLI::CheckedTransformer(schemes));
  run_cmd->add_option("--trials", run.trials)->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed);
  run_cmd->add_option("--out", run.out, "CSV output path");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a config file");
  validate_cmd->add_option("--config", validate_path)->required();

  int p = 0, q = 0;
  auto* codebook_cmd = app.add_subcommand("codebook", "Print the ON-OFF codebook A");
  codebook_cmd->add_option("--P", p, "Codebook columns")->required();
  codebook_cmd->add_option("--Q", q, "Ones-block length")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*run_cmd) return cmd_run(run);
  if (*validate_cmd) return cmd_validate(validate_path);
  if (*codebook_cmd) return cmd_codebook(p, q);
  return kConfigError;
}
