#pragma once

// Monte Carlo studies (rate region over a weight sweep, WSR against SNR),
// the flat key-value experiment config, and the CSV / manifest outputs.

#include "irsrs/model.hpp"
#include "irsrs/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace irsrs {

enum class Study { RateRegion, WsrVsSnr };
enum class SchemeChoice { Rs, Noma, Both };
enum class Csit { Perfect, Imperfect };

std::string_view to_string(Study s);
std::string_view to_string(SchemeChoice s);
std::string_view to_string(Csit c);

/// Bad config content: unknown key, unparsable value, violated invariant.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentSpec {
  NetworkConfig base;
  SolverOptions solver;
  Study study = Study::RateRegion;
  SchemeChoice scheme = SchemeChoice::Both;
  std::vector<double> snr_list_db{0, 5, 10, 15, 20, 25, 30};
  std::vector<double> weight_exponents{-3, -1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1, 3};
  double region_snr_db = 20.0;
  int trials = 100;
  Csit csit = Csit::Perfect;
  std::string output_path = "results.csv";
  int threads = 0;  // 0: hardware concurrency; never affects results
};

struct ResultRow {
  Study study = Study::RateRegion;
  Scheme scheme = Scheme::RateSplitting;
  Csit csit = Csit::Perfect;
  double snr_db = 0.0;
  double weight_near = 1.0;
  double weight_edge = 1.0;
  double mean_rate_near = 0.0;  // averaged over near users and successful trials
  double mean_rate_edge = 0.0;
  double mean_wsr = 0.0;
  int trials = 0;
  double converged_fraction = 0.0;
  std::uint64_t seed_base = 0;
  int failed = 0;  // infeasible trials, excluded from the means (manifest only)

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view kCsvHeader =
    "study,scheme,csit,snr_db,weight_near,weight_edge,mean_rate_near,mean_rate_edge,mean_wsr,"
    "trials,converged_fraction,seed_base";

inline constexpr std::string_view kToolVersion = "irsrs 1.0.0";

/// Parses flat `key = value` text ('#' comments, comma-separated lists).
/// Throws ConfigError on unknown keys, bad values or invalid resulting config.
ExperimentSpec parse_config(std::string_view text);
ExperimentSpec load_config(const std::filesystem::path& path);

/// Every invariant violation of `spec` (network config and sweep settings).
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

/// Canonical `key = value` text of the fully resolved spec; parse_config
/// reads it back to an equivalent spec.
std::string canonical_config(const ExperimentSpec& spec);

/// 64-bit FNV-1a of canonical_config(spec), as 16 lowercase hex digits.
std::string config_hash(const ExperimentSpec& spec);

std::vector<ResultRow> run_rate_region(const ExperimentSpec& spec);
std::vector<ResultRow> run_wsr_vs_snr(const ExperimentSpec& spec);
/// Dispatches on spec.study.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(std::string_view text);

/// Writes the CSV at `path` and the run manifest at manifest_path(path).
/// Throws std::runtime_error naming the path on I/O failure.
void write_results(const std::vector<ResultRow>& rows, const ExperimentSpec& spec,
                   const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& csv_path);

}  // namespace irsrs
