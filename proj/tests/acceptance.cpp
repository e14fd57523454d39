// Acceptance checks for the filter library and benchmark harness.
// Prints one PASS/FAIL line per criterion; exit status is the number of
// failed criteria (0 when everything holds).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcuf/harness.hpp"

using namespace mcuf;

namespace {

constexpr int kSteps = 500;
constexpr int kRuns = 100;

// 1
constexpr double kImpulsiveRatio = 1.10;
constexpr double kIterLow = 2.0;
constexpr double kIterHigh = 4.5;
constexpr double kTable2Seconds = 60.0;
// 3
constexpr double kEpsSweepSpread = 0.03;
// 5
constexpr double kNearUkf = 0.02;
constexpr double kRobustFactor = 1.5;
constexpr double kAbsoluteSlack = 0.25;
constexpr double kFallingBodySeconds = 300.0;
// 6
constexpr double kGainFormTol = 1e-8;
// 7
constexpr double kHugeSigma = 1e8;
constexpr double kLeastSquaresTol = 1e-6;
// 8
constexpr double kGridTol = 1e-4;
// 9
constexpr double kAffineTol = 1e-10;
constexpr double kWeightSumTol = 1e-12;
// 10
constexpr double kDoubleAverageTol = 1e-10;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TimedReport {
  BenchmarkReport report;
  ExperimentConfig cfg;
  double seconds = 0.0;
};

TimedReport run(Example e, const std::string& noise, const std::string& filters) {
  TimedReport t;
  t.cfg.example = e;
  t.cfg.noise_case = noise;
  t.cfg.filters = parse_filter_list(filters);
  t.cfg.steps = kSteps;
  t.cfg.runs = kRuns;
  const auto t0 = std::chrono::steady_clock::now();
  t.report = run_experiment(t.cfg);
  t.seconds = seconds_since(t0);
  return t;
}

double mse(const BenchmarkReport& r, const std::string& label, int c = 0) {
  return r.find(label).metrics.mse[c];
}

double iters(const BenchmarkReport& r, const std::string& label) {
  return r.find(label).average_iterations().value_or(0.0);
}

std::string mcuf_label(const std::string& sigma, const std::string& eps = "1e-06") {
  return "MCUF(sigma=" + sigma + ",eps=" + eps + ")";
}

const std::string kHekf = "HEKF(gamma=1.345,eps=1e-06)";
const std::string kHukf = "HUKF(gamma=1.345,eps=1e-06)";

Verdict criterion1(const TimedReport& t) {
  Verdict v;
  const double ukf = mse(t.report, "UKF");
  const double mc = mse(t.report, mcuf_label("2"));
  const double it = iters(t.report, mcuf_label("2"));
  v.require(mc < ukf, "MCUF " + fmt("%.4g", mc) + " < UKF " + fmt("%.4g", ukf));
  v.require(ukf / mc >= kImpulsiveRatio,
            "UKF/MCUF " + fmt("%.3f", ukf / mc) + " >= " + fmt("%.2f", kImpulsiveRatio));
  v.require(it >= kIterLow && it <= kIterHigh, "iterations " + fmt("%.3f", it) + " in [" +
                                                   fmt("%.1f", kIterLow) + ", " +
                                                   fmt("%.1f", kIterHigh) + "]");
  v.require(t.seconds < kTable2Seconds, "runtime " + fmt("%.1f", t.seconds) + "s");
  return v;
}

Verdict criterion2(const TimedReport& t) {
  Verdict v;
  const double ukf = mse(t.report, "UKF");
  const std::vector<std::string> sigmas{"2", "3", "5", "10"};
  std::vector<double> m;
  for (const auto& s : sigmas) m.push_back(mse(t.report, mcuf_label(s)));
  bool ukf_best = true;
  for (double x : m) ukf_best = ukf_best && ukf <= x;
  v.require(ukf_best, "UKF " + fmt("%.4g", ukf) + " <= every MCUF");
  bool monotone_down = true, monotone_up = true;
  for (std::size_t i = 1; i < m.size(); ++i) {
    monotone_down = monotone_down && m[i] <= m[i - 1];
    monotone_up = monotone_up && m[i] >= m[i - 1];
  }
  std::string series;
  for (std::size_t i = 0; i < m.size(); ++i) {
    series += (i ? "," : "") + fmt("%.4g", m[i]);
  }
  v.require(!monotone_down && !monotone_up, "non-monotone in sigma (" + series + ")");
  bool worst = true;
  for (std::size_t i = 1; i < m.size(); ++i) worst = worst && m[0] > m[i];
  v.require(worst, "sigma=2 strictly worst");
  return v;
}

Verdict criterion3(const TimedReport& t) {
  Verdict v;
  std::vector<double> it, m;
  for (const auto& f : t.report.filters) {
    it.push_back(f.average_iterations().value_or(0.0));
    m.push_back(f.metrics.mse[0]);
  }
  bool increasing = true;
  std::string series;
  for (std::size_t i = 0; i < it.size(); ++i) {
    if (i) increasing = increasing && it[i] > it[i - 1];
    series += (i ? "," : "") + fmt("%.3f", it[i]);
  }
  v.require(increasing, "iterations strictly increasing (" + series + ")");
  const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
  const double spread = (*hi - *lo) / *lo;
  v.require(spread < kEpsSweepSpread, "MSE spread " + fmt("%.4f", spread) + " < " +
                                          fmt("%.2f", kEpsSweepSpread));
  return v;
}

Verdict criterion4(const TimedReport& t) {
  Verdict v;
  const double ukf = mse(t.report, "UKF");
  const double mc = mse(t.report, mcuf_label("2"));
  v.require(ukf / mc >= kImpulsiveRatio, "UKF " + fmt("%.4g", ukf) + " / MCUF " +
                                             fmt("%.4g", mc) + " = " + fmt("%.3f", ukf / mc) +
                                             " >= " + fmt("%.2f", kImpulsiveRatio));
  return v;
}

Verdict criterion5(const TimedReport& gauss, const TimedReport& impulsive) {
  Verdict v;
  const BenchmarkReport& g = gauss.report;
  const BenchmarkReport& n = impulsive.report;

  const double ukf_g = mse(g, "UKF");
  bool ukf_min = true;
  std::string beaten_by;
  for (const auto& f : g.filters) {
    if (f.metrics.mse[0] < ukf_g) {
      ukf_min = false;
      beaten_by += " " + f.label + "=" + fmt("%.5g", f.metrics.mse[0]);
    }
  }
  v.require(ukf_min, "gaussian: UKF x1 " + fmt("%.5g", ukf_g) + " smallest" +
                         (ukf_min ? "" : " (beaten by" + beaten_by + ")"));
  for (const char* s : {"10", "20"}) {
    const double rel = std::abs(mse(g, mcuf_label(s)) - ukf_g) / ukf_g;
    v.require(rel <= kNearUkf, std::string("gaussian: MCUF sigma=") + s + " within " +
                                   fmt("%.4f", rel) + " of UKF");
  }

  const double ekf_n = mse(n, "EKF");
  const double ukf_n = mse(n, "UKF");
  for (const std::string& label : {kHekf, kHukf, mcuf_label("2")}) {
    const double x = mse(n, label);
    const double factor = std::min(ekf_n, ukf_n) / x;
    v.require(factor >= kRobustFactor,
              "impulsive: " + label + " beats EKF/UKF by " + fmt("%.2f", factor));
  }
  const double mc2 = mse(n, mcuf_label("2"));
  bool mcuf_min = true;
  for (const auto& f : n.filters) mcuf_min = mcuf_min && f.metrics.mse[0] >= mc2;
  v.require(mcuf_min, "impulsive: MCUF sigma=2 has minimum x1 " + fmt("%.5g", mc2));

  const std::map<std::string, double> table5{
      {"EKF", 7.3254e3},          {kHekf, 7.9266e3},          {"UKF", 7.2630e3},
      {kHukf, 7.8343e3},          {mcuf_label("2"), 8.3984e3}, {mcuf_label("3"), 7.4680e3},
      {mcuf_label("5"), 7.2943e3}, {mcuf_label("10"), 7.2674e3}, {mcuf_label("20"), 7.2642e3}};
  const std::map<std::string, double> table7{
      {"EKF", 2.9499e4},          {kHekf, 1.4068e4},          {"UKF", 2.8772e4},
      {kHukf, 1.3996e4},          {mcuf_label("2"), 1.1457e4}, {mcuf_label("3"), 1.7612e4},
      {mcuf_label("5"), 2.3818e4}, {mcuf_label("10"), 2.7448e4}, {mcuf_label("20"), 2.8428e4}};
  auto check_abs = [&](const BenchmarkReport& r, const std::map<std::string, double>& ref,
                       const char* name) {
    double worst = 0.0;
    std::string worst_label;
    for (const auto& [label, value] : ref) {
      const double rel = std::abs(mse(r, label) - value) / value;
      if (rel > worst) {
        worst = rel;
        worst_label = label;
      }
    }
    v.require(worst <= kAbsoluteSlack, std::string(name) + ": worst x1 deviation " +
                                           fmt("%.3f", worst) + " (" + worst_label + ")");
  };
  check_abs(g, table5, "gaussian");
  check_abs(n, table7, "impulsive");

  const double secs = gauss.seconds + impulsive.seconds;
  v.require(secs < kFallingBodySeconds, "runtime " + fmt("%.1f", secs) + "s");
  return v;
}

Verdict criterion6() {
  Verdict v;
  ExperimentConfig cfg;
  cfg.noise_case = "impulsive_measurement";
  const Scenario sc = resolve_scenario(cfg);
  std::mt19937_64 rng(run_stream_seed(cfg.seed, 0));
  const SimulatedRun sim = simulate_run(sc, 100, rng);

  McufConfig mc;
  mc.sigma = KernelBandwidth(2.0);
  double worst = 0.0;
  long long checked = 0;
  const IterationObserver obs = [&](const RegressionModel& reg, const Vector& w, const Vector&,
                                    const Vector& next) {
    const GainFormPair p = gain_form_equivalence(reg, w);
    const double scale = std::max(p.matrix_form.norm(), 1e-300);
    worst = std::max(worst, (p.gain_form - p.matrix_form).norm() / scale);
    worst = std::max(worst, (next - p.matrix_form).norm() / scale);
    ++checked;
  };
  GaussianBelief b = sc.initial_belief;
  for (int k = 1; k <= 100; ++k) {
    b = mcuf_step(b, sc.model, cfg.ut, mc, sim.measurements[k - 1], k, obs).belief;
  }
  v.require(worst <= kGainFormTol, "worst relative gap " + fmt("%.2e", worst) + " over " +
                                       std::to_string(checked) + " iterations");
  return v;
}

// Dense whitening of the stacked regression, independent of build_regression.
void dense_regression(const GaussianBelief& prior, const Matrix& H, const Matrix& R,
                      const Vector& y, const Vector& y_pred, Vector& D, Matrix& W) {
  const Eigen::Index n = prior.dim(), m = y.size();
  Matrix Xi = Matrix::Zero(n + m, n + m);
  Xi.topLeftCorner(n, n) = prior.covariance;
  Xi.bottomRightCorner(m, m) = R;
  const Matrix Sinv = Matrix(Xi.llt().matrixL()).inverse();
  Vector z(n + m);
  z << prior.mean, y - y_pred + H * prior.mean;
  Matrix A(n + m, n);
  A << Matrix::Identity(n, n), H;
  D = Sinv * z;
  W = Sinv * A;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix a(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = nd(rng);
  return a;
}

Matrix random_spd(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = random_matrix(n, n, rng);
  return a * a.transpose() + 0.2 * Matrix::Identity(n, n);
}

Verdict criterion7() {
  Verdict v;
  std::mt19937_64 rng(7007);
  McufConfig mc;
  mc.sigma = KernelBandwidth(kHugeSigma);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 4, m = 1 + trial % 3;
    const GaussianBelief prior{3.0 * random_matrix(n, 1, rng), random_spd(n, rng)};
    const Matrix H = random_matrix(m, n, rng);
    const Matrix R = random_spd(m, rng);
    const Vector y_pred = random_matrix(m, 1, rng);
    const Vector y = y_pred + 5.0 * random_matrix(m, 1, rng);
    const FilterStepResult r = reweighted_measurement_update(
        prior, H, R, y, y_pred, correntropy_weights(mc.sigma),
        ReweightOptions{mc.epsilon, mc.max_iterations, mc.init});
    Vector D;
    Matrix W;
    dense_regression(prior, H, R, y, y_pred, D, W);
    const Vector ls = (W.transpose() * W).ldlt().solve(W.transpose() * D);
    worst = std::max(worst, (r.belief.mean - ls).norm() / std::max(ls.norm(), 1e-300));
  }
  v.require(worst <= kLeastSquaresTol, "worst relative gap " + fmt("%.2e", worst));
  return v;
}

Verdict criterion8() {
  Verdict v;
  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const double sigma = 1.0 + 4.0 * u(rng);
    const GaussianBelief prior{Vector::Constant(1, 20.0 * u(rng) - 10.0),
                               Matrix::Constant(1, 1, 0.2 + 5.0 * u(rng))};
    const Matrix H = Matrix::Constant(1, 1, (u(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + 2.0 * u(rng)));
    const Matrix R = Matrix::Constant(1, 1, 0.2 + 5.0 * u(rng));
    const Vector y_pred = Vector::Constant(1, 4.0 * u(rng) - 2.0);
    const Vector y = y_pred + Vector::Constant(1, 10.0 * u(rng) - 5.0);
    const RegressionModel reg = build_regression(prior, H, R, y, y_pred);
    McufConfig mc;
    mc.sigma = KernelBandwidth(sigma);
    mc.epsilon = 1e-12;
    mc.max_iterations = 1000;
    const FixedPointResult fp = fixed_point_update(reg, mc);

    // State range: prior mean +/- 20 prior standard deviations.
    const double centre = prior.mean[0];
    const double half = 20.0 * std::sqrt(prior.covariance(0, 0));
    const double range = 2.0 * half;
    const int N = 2000001;
    double best_x = centre, best_j = -1.0;
    for (int i = 0; i < N; ++i) {
      const double x = centre - half + range * i / (N - 1);
      double j = 0.0;
      for (int row = 0; row < 2; ++row) {
        const double e = reg.D[row] - reg.W(row, 0) * x;
        j += std::exp(-e * e / (2.0 * sigma * sigma));
      }
      if (j > best_j) {
        best_j = j;
        best_x = x;
      }
    }
    const double gap = std::abs(fp.mean[0] - best_x) / range;
    worst = std::max(worst, gap);
    if (gap > kGridTol) ++failures;
  }
  v.require(failures == 0, std::to_string(failures) + "/50 instances off the grid optimum, " +
                               "worst gap " + fmt("%.2e", worst) + " of range");
  return v;
}

Verdict criterion9() {
  Verdict v;
  std::mt19937_64 rng(9009);
  double worst_mean = 0.0, worst_cov = 0.0, worst_w = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 6, m = 1 + trial % 4;
    const GaussianBelief b{2.0 * random_matrix(n, 1, rng), random_spd(n, rng)};
    const Matrix A = random_matrix(m, n, rng);
    const Vector c = random_matrix(m, 1, rng);
    const SigmaPointSet s = generate_sigma_points(b, UTConfig{});
    const UTMoments mo =
        unscented_moments(s, [&](const Vector& x) { return Vector(A * x + c); }, Matrix());
    const Vector mean = A * b.mean + c;
    const Matrix cov = A * b.covariance * A.transpose();
    worst_mean = std::max(worst_mean, (mo.mean - mean).norm() / std::max(mean.norm(), 1.0));
    worst_cov = std::max(worst_cov, (mo.covariance - cov).norm() / cov.norm());
    worst_w = std::max(worst_w, std::abs(s.wm.sum() - 1.0));
  }
  v.require(worst_mean <= kAffineTol, "mean error " + fmt("%.2e", worst_mean));
  v.require(worst_cov <= kAffineTol, "covariance error " + fmt("%.2e", worst_cov));
  v.require(worst_w <= kWeightSumTol, "weight sum error " + fmt("%.2e", worst_w));
  return v;
}

Verdict criterion10(const std::vector<const TimedReport*>& reports) {
  Verdict v;
  long long violations = 0, failed = 0;
  double worst = 0.0;
  for (const TimedReport* t : reports) {
    for (const auto& f : t->report.filters) {
      violations += f.covariance_violations;
      failed += f.failed_steps;
      for (Eigen::Index c = 0; c < f.metrics.mse.size(); ++c) {
        const double ref = f.metrics.mse[c];
        const double a = f.metrics.mse1.col(c).mean();
        const double b = f.metrics.mse2.col(c).mean();
        worst = std::max({worst, std::abs(a - ref) / ref, std::abs(b - ref) / ref});
      }
    }
  }
  v.require(violations == 0, std::to_string(violations) + " non-PSD posterior covariances");
  v.require(failed == 0, std::to_string(failed) + " failed filter steps");
  v.require(worst <= kDoubleAverageTol, "double-average gap " + fmt("%.2e", worst));

  ExperimentConfig cfg = reports.front()->cfg;
  const std::string reference = summary_table(reports.front()->report);
  bool same = summary_table(run_experiment(cfg)) == reference;
  for (int threads : {2, 4}) {
    cfg.threads = threads;
    same = same && summary_table(run_experiment(cfg)) == reference;
  }
  v.require(same, "identical summary for repeated seed and 1/2/4 threads");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::string> names{
      "UNGM impulsive measurement noise: MCUF beats UKF",
      "UNGM Gaussian noise: UKF best, sigma=2 worst",
      "UNGM threshold sweep",
      "UNGM impulsive process and measurement noise",
      "Falling body, Gaussian and impulsive noise",
      "Matrix form equals gain form at every iteration",
      "Huge bandwidth reduces to least squares",
      "Scalar fixed point maximizes correntropy",
      "Unscented transform exact for affine maps",
      "Structural invariants over benchmark runs"};

  const TimedReport t2 = run(Example::ungm, "impulsive_measurement", "ukf,mcuf:sigma=2,eps=1e-6");
  const TimedReport t1 =
      run(Example::ungm, "gaussian", "ukf,mcuf:sigma=2,mcuf:sigma=3,mcuf:sigma=5,mcuf:sigma=10");
  const TimedReport t3 =
      run(Example::ungm, "impulsive_measurement",
          "mcuf:sigma=2,eps=1e-1,mcuf:sigma=2,eps=1e-2,mcuf:sigma=2,eps=1e-4,"
          "mcuf:sigma=2,eps=1e-6,mcuf:sigma=2,eps=1e-8");
  const TimedReport t4 = run(Example::ungm, "impulsive_both", "ukf,mcuf:sigma=2,eps=1e-6");
  const std::string fb_filters =
      "ekf,hekf,ukf,hukf,mcuf:sigma=2,mcuf:sigma=3,mcuf:sigma=5,mcuf:sigma=10,mcuf:sigma=20";
  const TimedReport t5 = run(Example::falling_body, "gaussian", fb_filters);
  const TimedReport t7 = run(Example::falling_body, "impulsive", fb_filters);

  const std::vector<std::function<Verdict()>> checks{
      [&] { return criterion1(t2); },
      [&] { return criterion2(t1); },
      [&] { return criterion3(t3); },
      [&] { return criterion4(t4); },
      [&] { return criterion5(t5, t7); },
      criterion6,
      criterion7,
      criterion8,
      criterion9,
      [&] { return criterion10({&t2, &t1, &t3, &t4, &t5, &t7}); }};

  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Verdict v;
    try {
      v = checks[i]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("criterion %2zu %s  %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL", names[i].c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, checks.size());
  return failed;
}
