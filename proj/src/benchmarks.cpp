#include "mcuf/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mcuf {

void MixedGaussian::validate() const {
  if (components.empty()) {
    throw InvalidArgument("mixture needs at least one component");
  }
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0) || !(c.variance >= 0.0)) {
      throw InvalidArgument("mixture weights and variances must be non-negative");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("mixture weights must sum to 1");
  }
}

double MixedGaussian::variance() const {
  double v = 0.0;
  for (const auto& c : components) v += c.weight * c.variance;
  return v;
}

std::string MixedGaussian::describe() const {
  std::ostringstream os;
  os.precision(12);
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) os << " + ";
    os << components[i].weight << "*N(0," << components[i].variance << ")";
  }
  return os.str();
}

double sample_mixed_gaussian(const MixedGaussian& dist, std::mt19937_64& rng) {
  const MixedGaussian::Component* chosen = &dist.components.back();
  if (dist.components.size() > 1) {
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    const double u = pick(rng);
    double acc = 0.0;
    for (const auto& c : dist.components) {
      acc += c.weight;
      if (u < acc) {
        chosen = &c;
        break;
      }
    }
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(chosen->variance));
  return normal(rng);
}

double ungm_process(double x, int k) {
  return 0.5 * x + 25.0 * x / (1.0 + x * x) + 8.0 * std::cos(1.2 * (k - 1));
}

double ungm_measure(double x) { return x * x / 20.0; }

double ungm_process_derivative(double x) {
  const double d = 1.0 + x * x;
  return 0.5 + 25.0 * (1.0 - x * x) / (d * d);
}

double ungm_measure_derivative(double x) { return x / 10.0; }

void FallingBodyParams::validate() const {
  if (!(rho0 > 0 && a > 0 && g > 0 && H > 0 && b > 0 && dT > 0 && substeps > 0)) {
    throw InvalidArgument("falling body parameters must be strictly positive");
  }
}

Eigen::Vector3d falling_body_substep(const Eigen::Vector3d& x, const FallingBodyParams& p) {
  const double drag = p.dT * p.rho0 * std::exp(-x[0] / p.a) * x[1] * x[1] * x[2] / 2.0;
  return {x[0] + p.dT * x[1], x[1] + drag - p.dT * p.g, x[2]};
}

namespace {

Eigen::Vector3d as_state3(const Vector& x) {
  if (x.size() != 3) {
    throw DimensionMismatch("falling body state must have 3 components");
  }
  return Eigen::Vector3d(x[0], x[1], x[2]);
}

}  // namespace

Vector falling_body_process(const Vector& x, const FallingBodyParams& p) {
  Eigen::Vector3d s = as_state3(x);
  for (int i = 0; i < p.substeps; ++i) {
    s = falling_body_substep(s, p);
  }
  if (!s.allFinite()) {
    throw NonFiniteState("falling body integration produced a non-finite state");
  }
  return s;
}

double falling_body_measure(const Vector& x, const FallingBodyParams& p) {
  const double dz = x[0] - p.H;
  return std::sqrt(p.b * p.b + dz * dz);
}

Matrix falling_body_process_jacobian(const Vector& x, const FallingBodyParams& p) {
  Eigen::Vector3d s = as_state3(x);
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  for (int i = 0; i < p.substeps; ++i) {
    const double e = std::exp(-s[0] / p.a);
    Eigen::Matrix3d step = Eigen::Matrix3d::Identity();
    step(0, 1) = p.dT;
    step(1, 0) = -p.dT * p.rho0 * e * s[1] * s[1] * s[2] / (2.0 * p.a);
    step(1, 1) = 1.0 + p.dT * p.rho0 * e * s[1] * s[2];
    step(1, 2) = p.dT * p.rho0 * e * s[1] * s[1] / 2.0;
    J = step * J;
    s = falling_body_substep(s, p);
  }
  if (!J.allFinite()) {
    throw NonFiniteState("falling body Jacobian is non-finite");
  }
  return J;
}

Matrix falling_body_measure_jacobian(const Vector& x, const FallingBodyParams& p) {
  Matrix J = Matrix::Zero(1, 3);
  J(0, 0) = (x[0] - p.H) / falling_body_measure(x, p);
  return J;
}

std::string to_string(Example e) {
  return e == Example::ungm ? "ungm" : "falling-body";
}

Example parse_example(std::string_view text) {
  if (text == "ungm") return Example::ungm;
  if (text == "falling-body" || text == "falling_body") return Example::falling_body;
  throw ConfigError("unknown example '" + std::string(text) + "' (expected ungm|falling-body)");
}

std::vector<std::string> noise_case_names(Example e) {
  if (e == Example::ungm) return {"gaussian", "impulsive_measurement", "impulsive_both"};
  return {"gaussian", "impulsive"};
}

NoiseCase make_noise_case(Example e, std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');

  NoiseCase nc;
  nc.name = key;
  if (e == Example::ungm) {
    const MixedGaussian impulsive_r{{{0.8, 1.0}, {0.2, 400.0}}};
    if (key == "gaussian") {
      nc.process = MixedGaussian::normal(1.0);
      nc.measurement = MixedGaussian::normal(1.0);
    } else if (key == "impulsive_measurement") {
      nc.process = MixedGaussian::normal(1.0);
      nc.measurement = impulsive_r;
    } else if (key == "impulsive_both") {
      nc.process = MixedGaussian{{{0.8, 0.1}, {0.2, 10.0}}};
      nc.measurement = impulsive_r;
    } else {
      throw ConfigError("unknown UNGM noise case '" + key + "'");
    }
    nc.filter_q = nc.process->variance();
    nc.filter_r = nc.measurement.variance();
    return nc;
  }

  if (key == "gaussian") {
    nc.measurement = MixedGaussian::normal(10000.0);
  } else if (key == "impulsive") {
    nc.measurement = MixedGaussian{{{0.7, 1000.0}, {0.3, 100000.0}}};
  } else {
    throw ConfigError("unknown falling-body noise case '" + key + "'");
  }
  nc.filter_q = 0.0;
  nc.filter_r = nc.measurement.variance();
  return nc;
}

SystemModel ungm_model(double q_var, double r_var) {
  SystemModel m;
  m.n = 1;
  m.m = 1;
  m.f = [](int k, const Vector& x) { return Vector::Constant(1, ungm_process(x[0], k)); };
  m.h = [](int, const Vector& x) { return Vector::Constant(1, ungm_measure(x[0])); };
  m.jacobian_f = [](int, const Vector& x) {
    return Matrix::Constant(1, 1, ungm_process_derivative(x[0]));
  };
  m.jacobian_h = [](int, const Vector& x) {
    return Matrix::Constant(1, 1, ungm_measure_derivative(x[0]));
  };
  m.Q = Matrix::Constant(1, 1, q_var);
  m.R = Matrix::Constant(1, 1, r_var);
  return m;
}

SystemModel falling_body_model(const FallingBodyParams& p, double q_var, double r_var) {
  p.validate();
  SystemModel m;
  m.n = 3;
  m.m = 1;
  m.f = [p](int, const Vector& x) { return falling_body_process(x, p); };
  m.h = [p](int, const Vector& x) { return Vector::Constant(1, falling_body_measure(x, p)); };
  m.jacobian_f = [p](int, const Vector& x) { return falling_body_process_jacobian(x, p); };
  m.jacobian_h = [p](int, const Vector& x) { return falling_body_measure_jacobian(x, p); };
  m.Q = q_var * Matrix::Identity(3, 3);
  m.R = Matrix::Constant(1, 1, r_var);
  return m;
}

Scenario make_scenario(Example e, const NoiseCase& noise, const FallingBodyParams& params) {
  if (noise.process) noise.process->validate();
  noise.measurement.validate();

  Scenario s;
  s.example = e;
  s.noise = noise;
  s.falling_body = params;
  if (e == Example::ungm) {
    s.model = ungm_model(noise.filter_q, noise.filter_r);
    s.initial_truth = Vector::Zero(1);
    s.initial_belief = GaussianBelief{Vector::Zero(1), Matrix::Identity(1, 1)};
    s.components = {"x"};
  } else {
    s.model = falling_body_model(params, noise.filter_q, noise.filter_r);
    s.initial_truth = Vector{{300000.0, -20000.0, 1.0 / 1000.0}};
    Vector mean{{300000.0, -20000.0, 0.0009}};
    Vector var{{1000000.0, 4000000.0, 1.0 / 1000000.0}};
    s.initial_belief = GaussianBelief{mean, var.asDiagonal().toDenseMatrix()};
    s.components = {"x1", "x2", "x3"};
  }
  s.model.validate();
  return s;
}

SimulatedRun simulate_run(const Scenario& scenario, int steps, std::mt19937_64& rng) {
  SimulatedRun run;
  run.truth.reserve(steps);
  run.measurements.reserve(steps);
  Vector x = scenario.initial_truth;
  for (int k = 1; k <= steps; ++k) {
    x = scenario.model.f(k, x);
    if (scenario.noise.process) {
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] += sample_mixed_gaussian(*scenario.noise.process, rng);
      }
    }
    Vector y = scenario.model.h(k, x);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y[i] += sample_mixed_gaussian(scenario.noise.measurement, rng);
    }
    run.truth.push_back(x);
    run.measurements.push_back(std::move(y));
  }
  return run;
}

}  // namespace mcuf
