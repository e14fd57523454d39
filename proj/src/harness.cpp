#include "mcuf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace mcuf {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string printf_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("filter parameter '" + std::string(key) + "' is not a number: '" +
                      std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("filter parameter '" + std::string(key) + "' is not an integer: '" +
                      std::string(text) + "'");
  }
  return v;
}

FilterKind parse_kind(std::string_view name) {
  if (name == "ukf") return FilterKind::ukf;
  if (name == "ekf") return FilterKind::ekf;
  if (name == "hekf") return FilterKind::hekf;
  if (name == "hukf") return FilterKind::hukf;
  if (name == "mcuf") return FilterKind::mcuf;
  throw ConfigError("unknown filter kind '" + std::string(name) + "'");
}

std::string kind_name(FilterKind k) {
  switch (k) {
    case FilterKind::ukf: return "ukf";
    case FilterKind::ekf: return "ekf";
    case FilterKind::hekf: return "hekf";
    case FilterKind::hukf: return "hukf";
    case FilterKind::mcuf: return "mcuf";
  }
  return "?";
}

}  // namespace

std::string FilterSpec::label() const {
  std::string out;
  switch (kind) {
    case FilterKind::ukf: return "UKF";
    case FilterKind::ekf: return "EKF";
    case FilterKind::hekf:
    case FilterKind::hukf:
      out = kind == FilterKind::hekf ? "HEKF" : "HUKF";
      out += "(gamma=" + shortest(huber.gamma) + ",eps=" + shortest(huber.epsilon);
      if (huber.max_iterations != FilterDefaults{}.max_iterations) {
        out += ",maxit=" + std::to_string(huber.max_iterations);
      }
      return out + ")";
    case FilterKind::mcuf:
      out = "MCUF(sigma=" + shortest(mcuf.sigma.value()) + ",eps=" + shortest(mcuf.epsilon);
      if (mcuf.init == InitMode::prior) out += ",init=prior";
      if (mcuf.max_iterations != FilterDefaults{}.max_iterations) {
        out += ",maxit=" + std::to_string(mcuf.max_iterations);
      }
      return out + ")";
  }
  return out;
}

std::string FilterSpec::canonical() const {
  switch (kind) {
    case FilterKind::ukf:
    case FilterKind::ekf:
      return kind_name(kind);
    case FilterKind::hekf:
    case FilterKind::hukf:
      return kind_name(kind) + ":gamma=" + shortest(huber.gamma) + ",eps=" +
             shortest(huber.epsilon) + ",maxit=" + std::to_string(huber.max_iterations);
    case FilterKind::mcuf:
      return "mcuf:sigma=" + shortest(mcuf.sigma.value()) + ",eps=" + shortest(mcuf.epsilon) +
             ",init=" + (mcuf.init == InitMode::least_squares ? "ls" : "prior") +
             ",maxit=" + std::to_string(mcuf.max_iterations);
  }
  return {};
}

bool operator==(const FilterSpec& a, const FilterSpec& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case FilterKind::ukf:
    case FilterKind::ekf:
      return true;
    case FilterKind::hekf:
    case FilterKind::hukf:
      return a.huber.gamma == b.huber.gamma && a.huber.epsilon == b.huber.epsilon &&
             a.huber.max_iterations == b.huber.max_iterations;
    case FilterKind::mcuf:
      return a.mcuf.sigma.value() == b.mcuf.sigma.value() && a.mcuf.epsilon == b.mcuf.epsilon &&
             a.mcuf.init == b.mcuf.init && a.mcuf.max_iterations == b.mcuf.max_iterations;
  }
  return false;
}

FilterSpec parse_filter_spec(std::string_view text, const FilterDefaults& defaults) {
  text = trim(text);
  const std::size_t colon = text.find(':');
  FilterSpec spec;
  spec.kind = parse_kind(trim(text.substr(0, colon)));
  spec.huber.gamma = defaults.gamma;
  spec.huber.epsilon = defaults.epsilon;
  spec.huber.max_iterations = defaults.max_iterations;
  spec.mcuf.epsilon = defaults.epsilon;
  spec.mcuf.max_iterations = defaults.max_iterations;

  if (colon == std::string_view::npos) {
    if (spec.kind == FilterKind::mcuf) throw ConfigError("mcuf spec needs sigma=<bandwidth>");
    return spec;
  }
  if (!spec.iterative()) {
    throw ConfigError("filter '" + kind_name(spec.kind) + "' takes no parameters");
  }

  bool have_sigma = false;
  for (std::string_view item : split(text.substr(colon + 1), ',')) {
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("filter parameter '" + std::string(item) + "' is not key=value");
    }
    const std::string_view key = trim(item.substr(0, eq));
    const std::string_view value = trim(item.substr(eq + 1));
    const bool is_mcuf = spec.kind == FilterKind::mcuf;
    if (key == "eps" || key == "epsilon") {
      const double eps = parse_number(key, value);
      (is_mcuf ? spec.mcuf.epsilon : spec.huber.epsilon) = eps;
    } else if (key == "maxit") {
      const int it = parse_int(key, value);
      (is_mcuf ? spec.mcuf.max_iterations : spec.huber.max_iterations) = it;
    } else if (key == "sigma" && is_mcuf) {
      try {
        spec.mcuf.sigma = KernelBandwidth(parse_number(key, value));
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      have_sigma = true;
    } else if (key == "init" && is_mcuf) {
      if (value == "ls" || value == "least_squares") {
        spec.mcuf.init = InitMode::least_squares;
      } else if (value == "prior") {
        spec.mcuf.init = InitMode::prior;
      } else {
        throw ConfigError("init must be ls or prior, got '" + std::string(value) + "'");
      }
    } else if (key == "gamma" && !is_mcuf) {
      spec.huber.gamma = parse_number(key, value);
    } else {
      throw ConfigError("unknown parameter '" + std::string(key) + "' for filter " +
                        kind_name(spec.kind));
    }
  }
  if (spec.kind == FilterKind::mcuf && !have_sigma) {
    throw ConfigError("mcuf spec needs sigma=<bandwidth>");
  }
  try {
    if (spec.kind == FilterKind::mcuf) {
      spec.mcuf.validate();
    } else {
      spec.huber.validate();
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

std::vector<FilterSpec> parse_filter_list(std::string_view text, const FilterDefaults& defaults) {
  std::vector<std::string> groups;
  for (std::string_view token : split(text, ',')) {
    if (token.empty()) continue;
    const bool continuation = token.find(':') == std::string_view::npos &&
                              token.find('=') != std::string_view::npos;
    if (continuation) {
      if (groups.empty() || groups.back().find(':') == std::string::npos) {
        throw ConfigError("parameter '" + std::string(token) + "' does not follow a filter spec");
      }
      groups.back() += ",";
      groups.back() += token;
    } else {
      groups.emplace_back(token);
    }
  }
  std::vector<FilterSpec> specs;
  specs.reserve(groups.size());
  for (const auto& g : groups) specs.push_back(parse_filter_spec(g, defaults));
  return specs;
}

void ExperimentConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (filters.empty()) throw ConfigError("no filters configured");
  for (std::size_t i = 0; i < filters.size(); ++i) {
    for (std::size_t j = i + 1; j < filters.size(); ++j) {
      if (filters[i] == filters[j]) {
        throw ConfigError("duplicate filter configuration " + filters[i].label());
      }
    }
  }
  if (filter_q && !(*filter_q >= 0.0)) throw ConfigError("filter Q must be >= 0");
  if (filter_r && !(*filter_r > 0.0)) throw ConfigError("filter R must be > 0");
  const Eigen::Index n = example == Example::ungm ? 1 : 3;
  try {
    scaling_factor(n, ut);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid UT parameters: ") + e.what());
  }
  (void)make_noise_case(example, noise_case);
}

Scenario resolve_scenario(const ExperimentConfig& cfg) {
  NoiseCase noise = make_noise_case(cfg.example, cfg.noise_case);
  if (cfg.filter_q) noise.filter_q = *cfg.filter_q;
  if (cfg.filter_r) noise.filter_r = *cfg.filter_r;
  try {
    return make_scenario(cfg.example, noise);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t run_stream_seed(std::uint64_t master_seed, std::uint64_t run) {
  // splitmix64 over (seed, run); each output feeds a separate mt19937_64.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master_seed) ^ mix(run + 0x632be59bd9b4e019ULL));
}

MseMetrics mse_metrics(const std::vector<Trajectory>& truth,
                       const std::vector<Trajectory>& estimates) {
  const std::size_t runs = truth.size();
  if (runs == 0) throw ShapeMismatch("mse_metrics: no runs");
  if (estimates.size() != runs) throw ShapeMismatch("mse_metrics: run count differs");
  const std::size_t steps = truth.front().size();
  if (steps == 0) throw ShapeMismatch("mse_metrics: no steps");
  const Eigen::Index n = truth.front().front().size();
  for (std::size_t m = 0; m < runs; ++m) {
    if (truth[m].size() != steps || estimates[m].size() != steps) {
      throw ShapeMismatch("mse_metrics: step count differs between runs");
    }
    for (std::size_t k = 0; k < steps; ++k) {
      if (truth[m][k].size() != n || estimates[m][k].size() != n) {
        throw ShapeMismatch("mse_metrics: state dimension differs");
      }
    }
  }

  MseMetrics out;
  out.mse1 = Matrix::Zero(static_cast<Eigen::Index>(steps), n);
  out.mse2 = Matrix::Zero(static_cast<Eigen::Index>(runs), n);
  for (std::size_t m = 0; m < runs; ++m) {
    for (std::size_t k = 0; k < steps; ++k) {
      const Vector sq = (truth[m][k] - estimates[m][k]).array().square();
      out.mse1.row(static_cast<Eigen::Index>(k)) += sq.transpose();
      out.mse2.row(static_cast<Eigen::Index>(m)) += sq.transpose();
    }
  }
  out.mse1 /= static_cast<double>(runs);
  out.mse2 /= static_cast<double>(steps);
  out.mse = out.mse2.colwise().mean().transpose();
  return out;
}

std::optional<double> FilterReport::average_iterations() const {
  if (!spec.iterative()) return std::nullopt;
  const long long solved = steps - failed_steps;
  if (solved <= 0) return std::nullopt;
  return static_cast<double>(total_iterations) / static_cast<double>(solved);
}

const FilterReport& BenchmarkReport::find(std::string_view label) const {
  for (const auto& f : filters) {
    if (f.label == label) return f;
  }
  throw InvalidArgument("no filter labelled '" + std::string(label) + "' in report");
}

namespace {

struct FilterRun {
  Trajectory estimates;
  long long total_iterations = 0;
  long long fallback_steps = 0;
  long long nonconverged_steps = 0;
  long long failed_steps = 0;
  long long covariance_violations = 0;
  long long mcc_ascent_violations = 0;
};

FilterRun run_filter(const FilterSpec& spec, const Scenario& sc, const UTConfig& ut,
                     const std::vector<Vector>& measurements) {
  FilterRun out;
  out.estimates.reserve(measurements.size());
  GaussianBelief belief = sc.initial_belief;

  double cost_first = 0.0;
  double cost_last = 0.0;
  bool seen = false;
  IterationObserver observer;
  if (spec.kind == FilterKind::mcuf) {
    const KernelBandwidth sigma = spec.mcuf.sigma;
    observer = [&, sigma](const RegressionModel& reg, const Vector&, const Vector& prev,
                          const Vector& next) {
      if (!seen) {
        cost_first = mcc_cost(reg.residuals(prev), sigma);
        seen = true;
      }
      cost_last = mcc_cost(reg.residuals(next), sigma);
    };
  }

  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    const Vector& y = measurements[i];
    seen = false;
    try {
      std::optional<FixedPointTrace> trace;
      switch (spec.kind) {
        case FilterKind::ukf:
          belief = ukf_step(belief, sc.model, ut, y, k);
          break;
        case FilterKind::ekf:
          belief = ekf_step(belief, sc.model, y, k);
          break;
        case FilterKind::hekf: {
          FilterStepResult r = hekf_step(belief, sc.model, spec.huber, y, k);
          belief = std::move(r.belief);
          trace = std::move(r.trace);
          break;
        }
        case FilterKind::hukf: {
          FilterStepResult r = hukf_step(belief, sc.model, ut, spec.huber, y, k);
          belief = std::move(r.belief);
          trace = std::move(r.trace);
          break;
        }
        case FilterKind::mcuf: {
          FilterStepResult r = mcuf_step(belief, sc.model, ut, spec.mcuf, y, k, observer);
          belief = std::move(r.belief);
          trace = std::move(r.trace);
          break;
        }
      }
      if (trace) {
        out.total_iterations += trace->iterations;
        if (trace->fell_back) ++out.fallback_steps;
        if (!trace->converged) ++out.nonconverged_steps;
        if (spec.kind == FilterKind::mcuf && trace->converged && !trace->fell_back &&
            cost_last < cost_first - 1e-9) {
          ++out.mcc_ascent_violations;
        }
      }
      if (!is_symmetric_psd(belief.covariance)) ++out.covariance_violations;
    } catch (const Error&) {
      ++out.failed_steps;
    }
    out.estimates.push_back(belief.mean);
  }
  return out;
}

struct RunOutcome {
  Trajectory truth;
  std::vector<FilterRun> filters;
};

}  // namespace

BenchmarkReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Scenario sc = resolve_scenario(cfg);
  const auto runs = static_cast<std::size_t>(cfg.runs);

  std::vector<RunOutcome> outcomes(runs);
  auto do_run = [&](std::size_t m) {
    std::mt19937_64 rng(run_stream_seed(cfg.seed, m));
    SimulatedRun sim = simulate_run(sc, cfg.steps, rng);
    RunOutcome& out = outcomes[m];
    out.filters.reserve(cfg.filters.size());
    for (const FilterSpec& spec : cfg.filters) {
      out.filters.push_back(run_filter(spec, sc, cfg.ut, sim.measurements));
    }
    out.truth = std::move(sim.truth);
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                      : static_cast<unsigned>(cfg.threads);
  threads = std::min<unsigned>(threads, static_cast<unsigned>(runs));
  if (threads <= 1) {
    for (std::size_t m = 0; m < runs; ++m) do_run(m);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t m = next++; m < runs; m = next++) {
            try {
              do_run(m);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  BenchmarkReport report;
  report.components = sc.components;
  report.steps = cfg.steps;
  report.runs = cfg.runs;

  std::vector<Trajectory> truth;
  truth.reserve(runs);
  for (auto& o : outcomes) truth.push_back(std::move(o.truth));

  for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
    FilterReport fr;
    fr.spec = cfg.filters[f];
    fr.label = fr.spec.label();
    std::vector<Trajectory> estimates;
    estimates.reserve(runs);
    for (auto& o : outcomes) {
      FilterRun& r = o.filters[f];
      fr.total_iterations += r.total_iterations;
      fr.fallback_steps += r.fallback_steps;
      fr.nonconverged_steps += r.nonconverged_steps;
      fr.failed_steps += r.failed_steps;
      fr.covariance_violations += r.covariance_violations;
      fr.mcc_ascent_violations += r.mcc_ascent_violations;
      estimates.push_back(std::move(r.estimates));
    }
    fr.steps = static_cast<long long>(runs) * cfg.steps;
    fr.metrics = mse_metrics(truth, estimates);
    report.filters.push_back(std::move(fr));
  }
  return report;
}

std::string summary_table(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "filter";
  for (const auto& c : report.components) os << "\tmse_" << c << "\tmse_" << c << "_display";
  os << "\tavg_iterations\tfallback_steps\tnonconverged_steps\tfailed_steps\n";
  for (const auto& f : report.filters) {
    os << f.label;
    for (Eigen::Index i = 0; i < f.metrics.mse.size(); ++i) {
      os << '\t' << printf_double("%.17g", f.metrics.mse[i]) << '\t'
         << printf_double("%.4g", f.metrics.mse[i]);
    }
    const auto it = f.average_iterations();
    os << '\t' << (it ? printf_double("%.4f", *it) : std::string("-")) << '\t'
       << f.fallback_steps << '\t' << f.nonconverged_steps << '\t' << f.failed_steps << '\n';
  }
  return os.str();
}

std::string mse1_table(const BenchmarkReport& report, std::size_t component) {
  if (component >= report.components.size()) {
    throw InvalidArgument("component index out of range");
  }
  const auto c = static_cast<Eigen::Index>(component);
  std::ostringstream os;
  os << "k";
  for (const auto& f : report.filters) os << '\t' << f.label;
  os << '\n';
  for (int k = 0; k < report.steps; ++k) {
    os << (k + 1);
    for (const auto& f : report.filters) {
      os << '\t' << printf_double("%.17g", f.metrics.mse1(k, c));
    }
    os << '\n';
  }
  return os.str();
}

std::string manifest_text(const ExperimentConfig& cfg) {
  const Scenario sc = resolve_scenario(cfg);
  auto vec_text = [](const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) s += ' ';
      s += shortest(v[i]);
    }
    return s;
  };

  std::ostringstream os;
  os << "# bench manifest: every parameter used by this experiment.\n";
  os << "# Top-level keys can be passed back with `bench --config`.\n";
  os << "example = \"" << to_string(cfg.example) << "\"\n";
  os << "noise-case = \"" << sc.noise.name << "\"\n";
  std::string filters;
  for (const auto& f : cfg.filters) {
    if (!filters.empty()) filters += ',';
    filters += f.canonical();
  }
  os << "filters = \"" << filters << "\"\n";
  os << "steps = " << cfg.steps << '\n';
  os << "runs = " << cfg.runs << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "alpha = " << shortest(cfg.ut.alpha) << '\n';
  os << "beta = " << shortest(cfg.ut.beta) << '\n';
  os << "phi = " << shortest(cfg.ut.phi_for(sc.model.n)) << '\n';
  os << "filter-q = " << shortest(sc.noise.filter_q) << '\n';
  os << "filter-r = " << shortest(sc.noise.filter_r) << '\n';
  os << "\n[resolved]\n";
  os << "state_dimension = " << sc.model.n << '\n';
  os << "measurement_dimension = " << sc.model.m << '\n';
  os << "ut_lambda = " << shortest(scaling_factor(sc.model.n, cfg.ut)) << '\n';
  os << "process_noise = \""
     << (sc.noise.process ? sc.noise.process->describe() : std::string("none")) << "\"\n";
  os << "measurement_noise = \"" << sc.noise.measurement.describe() << "\"\n";
  os << "initial_truth = \"" << vec_text(sc.initial_truth) << "\"\n";
  os << "initial_mean = \"" << vec_text(sc.initial_belief.mean) << "\"\n";
  os << "initial_covariance_diagonal = \"" << vec_text(sc.initial_belief.covariance.diagonal())
     << "\"\n";
  os << "kernel_weight_floor = " << shortest(kMinKernelWeight) << '\n';
  os << "cholesky_jitter = \"1e-12*trace/n, doubled up to 8 times\"\n";
  os << "rng = \"mt19937_64 per run, seeded by splitmix64(seed, run)\"\n";
  if (cfg.example == Example::falling_body) {
    const FallingBodyParams& p = sc.falling_body;
    os << "rho0 = " << shortest(p.rho0) << '\n';
    os << "density_scale_a = " << shortest(p.a) << '\n';
    os << "gravity = " << shortest(p.g) << '\n';
    os << "radar_altitude = " << shortest(p.H) << '\n';
    os << "radar_range = " << shortest(p.b) << '\n';
    os << "integration_step = " << shortest(p.dT) << '\n';
    os << "substeps_per_measurement = " << p.substeps << '\n';
  }
  for (std::size_t i = 0; i < cfg.filters.size(); ++i) {
    os << "filter_label_" << i << " = \"" << cfg.filters[i].label() << "\"\n";
  }
  return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void emit_report(const BenchmarkReport& report, const ExperimentConfig& cfg) {
  cfg.validate();
  if (report.filters.empty()) throw ConfigError("report has no filters");
  if (cfg.output_dir.empty()) throw ConfigError("no output directory configured");

  // Render everything first so a formatting error never leaves partial output.
  const std::string summary = summary_table(report);
  std::vector<std::string> series;
  for (std::size_t c = 0; c < report.components.size(); ++c) {
    series.push_back(mse1_table(report, c));
  }
  const std::string manifest = manifest_text(cfg);

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

  write_file(cfg.output_dir / "summary.tsv", summary);
  for (std::size_t c = 0; c < report.components.size(); ++c) {
    write_file(cfg.output_dir / ("mse1_" + report.components[c] + ".tsv"), series[c]);
  }
  write_file(cfg.output_dir / "manifest.txt", manifest);
}

}  // namespace mcuf
