#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mcuf/baselines.hpp"
#include "mcuf/benchmarks.hpp"
#include "mcuf/mcuf.hpp"
#include "mcuf/unscented.hpp"

namespace mcuf {

enum class FilterKind { ukf, ekf, hekf, hukf, mcuf };

struct FilterSpec {
  FilterKind kind = FilterKind::ukf;
  HuberConfig huber;
  McufConfig mcuf;

  bool iterative() const {
    return kind == FilterKind::hekf || kind == FilterKind::hukf || kind == FilterKind::mcuf;
  }
  /// Human-readable name used as the row/column label in reports.
  std::string label() const;
  /// Spec string that parses back to an identical FilterSpec.
  std::string canonical() const;
};

bool operator==(const FilterSpec& a, const FilterSpec& b);

/// Defaults applied to parameters a filter spec leaves out.
struct FilterDefaults {
  double epsilon = 1e-6;
  double gamma = 1.345;
  int max_iterations = 50;
};

/// Parses one spec: `ukf`, `ekf`, `hekf:gamma=1.345`, `hukf:gamma=1.345,eps=1e-6`,
/// `mcuf:sigma=2.0,eps=1e-6,init=ls`. Keys: sigma, eps, gamma, init (ls|prior),
/// maxit.
FilterSpec parse_filter_spec(std::string_view text, const FilterDefaults& defaults = {});

/// Comma-separated list of specs. A `key=value` token without a `:` continues
/// the parameter list of the preceding spec.
std::vector<FilterSpec> parse_filter_list(std::string_view text,
                                          const FilterDefaults& defaults = {});

struct ExperimentConfig {
  Example example = Example::ungm;
  std::string noise_case = "gaussian";
  std::vector<FilterSpec> filters;
  int steps = 500;
  int runs = 100;
  std::uint64_t seed = 20170101;
  UTConfig ut;
  /// Overrides for the filter-side noise covariances (scalar times identity).
  std::optional<double> filter_q;
  std::optional<double> filter_r;
  /// Worker threads for Monte Carlo runs; 0 means hardware concurrency.
  int threads = 1;
  std::filesystem::path output_dir;

  /// Throws ConfigError.
  void validate() const;
};

/// Scenario (model, priors, noise) an experiment config resolves to.
Scenario resolve_scenario(const ExperimentConfig& cfg);

/// Seed of run `run`'s private RNG stream, independent of scheduling.
std::uint64_t run_stream_seed(std::uint64_t master_seed, std::uint64_t run);

using Trajectory = std::vector<Vector>;

struct MseMetrics {
  /// K x n: squared error averaged over runs, per step.
  Matrix mse1;
  /// M x n: squared error averaged over steps, per run.
  Matrix mse2;
  /// n: overall average.
  Vector mse;
};

/// `truth[m][k]` and `estimates[m][k]` are n-vectors; throws ShapeMismatch.
MseMetrics mse_metrics(const std::vector<Trajectory>& truth,
                       const std::vector<Trajectory>& estimates);

struct FilterReport {
  FilterSpec spec;
  std::string label;
  MseMetrics metrics;
  long long steps = 0;
  long long total_iterations = 0;
  /// Steps whose reweighted solve diverged and used the least-squares update.
  long long fallback_steps = 0;
  /// Steps that hit the iteration cap without meeting the stopping rule.
  long long nonconverged_steps = 0;
  /// Steps where the filter threw; the previous belief was carried forward.
  long long failed_steps = 0;
  /// Posterior covariances that were not symmetric PSD.
  long long covariance_violations = 0;
  /// Converged MCUF steps whose final MCC cost fell below the initial one.
  long long mcc_ascent_violations = 0;

  std::optional<double> average_iterations() const;
};

struct BenchmarkReport {
  std::vector<std::string> components;
  int steps = 0;
  int runs = 0;
  std::vector<FilterReport> filters;

  const FilterReport& find(std::string_view label) const;
};

/// Monte Carlo experiment: every filter sees the same simulated measurement
/// sequence in each run. Results do not depend on `threads`.
BenchmarkReport run_experiment(const ExperimentConfig& cfg);

/// Writes summary.tsv, mse1_<component>.tsv and manifest.txt into
/// cfg.output_dir. Throws ConfigError / IoError.
void emit_report(const BenchmarkReport& report, const ExperimentConfig& cfg);

std::string summary_table(const BenchmarkReport& report);
std::string mse1_table(const BenchmarkReport& report, std::size_t component);
/// Key/value manifest; the top-level keys are readable by `bench --config`.
std::string manifest_text(const ExperimentConfig& cfg);

}  // namespace mcuf
