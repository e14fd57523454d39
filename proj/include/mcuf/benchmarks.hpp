#pragma once

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mcuf/core.hpp"

namespace mcuf {

/// Zero-mean Gaussian mixture sum_i w_i N(0, var_i).
struct MixedGaussian {
  struct Component {
    double weight;
    double variance;
  };
  std::vector<Component> components;

  static MixedGaussian normal(double variance) { return MixedGaussian{{{1.0, variance}}}; }

  void validate() const;
  double variance() const;
  std::string describe() const;
};

double sample_mixed_gaussian(const MixedGaussian& dist, std::mt19937_64& rng);

// Univariate nonstationary growth model. `k` is the index of the state being
// produced, so ungm_process(x(k-1), k) = x(k) without noise.
double ungm_process(double x, int k);
double ungm_measure(double x);
double ungm_process_derivative(double x);
double ungm_measure_derivative(double x);

/// Vertically falling body tracked by a ground radar (units: ft, s).
struct FallingBodyParams {
  double rho0 = 2.0;
  double a = 20000.0;
  double g = 32.2;
  double H = 100000.0;
  double b = 100000.0;
  double dT = 0.001;
  int substeps = 100;

  void validate() const;
};

/// One rectangle-rule integration step of length dT.
Eigen::Vector3d falling_body_substep(const Eigen::Vector3d& x, const FallingBodyParams& p);

/// `substeps` integration steps, i.e. one radar interval. Throws
/// NonFiniteState if the integration blows up.
Vector falling_body_process(const Vector& x, const FallingBodyParams& p);
double falling_body_measure(const Vector& x, const FallingBodyParams& p);

/// Jacobian of the full radar-interval map (chain of substep Jacobians).
Matrix falling_body_process_jacobian(const Vector& x, const FallingBodyParams& p);
Matrix falling_body_measure_jacobian(const Vector& x, const FallingBodyParams& p);

enum class Example { ungm, falling_body };

std::string to_string(Example e);
/// Accepts "ungm", "falling-body" and "falling_body".
Example parse_example(std::string_view text);

/// Noise injected into the simulation plus the covariances the filters are
/// told about (the total variance of each noise).
struct NoiseCase {
  std::string name;
  /// Per-component process noise; empty for noise-free dynamics.
  std::optional<MixedGaussian> process;
  MixedGaussian measurement;
  double filter_q = 0.0;
  double filter_r = 1.0;
};

std::vector<std::string> noise_case_names(Example e);
/// Throws ConfigError for unknown names. Hyphens and underscores are
/// interchangeable.
NoiseCase make_noise_case(Example e, std::string_view name);

struct Scenario {
  Example example;
  SystemModel model;
  Vector initial_truth;
  GaussianBelief initial_belief;
  NoiseCase noise;
  std::vector<std::string> components;
  FallingBodyParams falling_body;
};

Scenario make_scenario(Example e, const NoiseCase& noise,
                       const FallingBodyParams& params = FallingBodyParams{});

SystemModel ungm_model(double q_var, double r_var);
SystemModel falling_body_model(const FallingBodyParams& p, double q_var, double r_var);

/// Truth trajectory x(1..K) and measurements y(1..K) for one Monte Carlo run.
struct SimulatedRun {
  std::vector<Vector> truth;
  std::vector<Vector> measurements;
};

SimulatedRun simulate_run(const Scenario& scenario, int steps, std::mt19937_64& rng);

}  // namespace mcuf
