#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mcuf/harness.hpp"

namespace py = pybind11;
using namespace mcuf;

namespace {

UTConfig ut_config(double alpha, double beta, std::optional<double> phi) {
  UTConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.phi = phi;
  return cfg;
}

InitMode parse_init(const std::string& s) {
  if (s == "ls" || s == "least_squares") return InitMode::least_squares;
  if (s == "prior") return InitMode::prior;
  throw InvalidArgument("init must be 'ls' or 'prior'");
}

const char* status_name(const FixedPointTrace& t) {
  if (t.fell_back) return "diverged";
  return t.converged ? "converged" : "iteration_cap";
}

py::dict filter_dict(const FilterReport& f) {
  py::dict d;
  d["label"] = f.label;
  d["spec"] = f.spec.canonical();
  d["mse"] = f.metrics.mse;
  d["mse1"] = f.metrics.mse1;
  d["mse2"] = f.metrics.mse2;
  d["steps"] = f.steps;
  d["total_iterations"] = f.total_iterations;
  d["average_iterations"] = f.average_iterations();
  d["fallback_steps"] = f.fallback_steps;
  d["nonconverged_steps"] = f.nonconverged_steps;
  d["failed_steps"] = f.failed_steps;
  d["covariance_violations"] = f.covariance_violations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Maximum correntropy unscented filter and benchmark harness";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);

  m.def("gaussian_kernel",
        [](double e, double sigma) { return gaussian_kernel(e, KernelBandwidth(sigma)); },
        py::arg("e"), py::arg("sigma"));
  m.def("sample_correntropy",
        [](const std::vector<double>& x, const std::vector<double>& y, double sigma) {
          return sample_correntropy(x, y, KernelBandwidth(sigma));
        },
        py::arg("x"), py::arg("y"), py::arg("sigma"));

  m.def("sigma_points",
        [](const Vector& mean, const Matrix& cov, double alpha, double beta,
           std::optional<double> phi) {
          const SigmaPointSet s =
              generate_sigma_points(GaussianBelief{mean, cov}, ut_config(alpha, beta, phi));
          return py::make_tuple(s.points, s.wm, s.wc);
        },
        py::arg("mean"), py::arg("cov"), py::arg("alpha") = 1.0, py::arg("beta") = 2.0,
        py::arg("phi") = py::none(),
        "Returns (points, wm, wc); points are the columns of an n x (2n+1) matrix.");

  m.def("mcuf_update",
        [](const Vector& mean, const Matrix& cov, const Matrix& H, const Matrix& R,
           const Vector& y, const Vector& y_pred, double sigma, double eps, int maxit,
           const std::string& init) {
          const McufConfig cfg{KernelBandwidth(sigma), eps, maxit, parse_init(init)};
          cfg.validate();
          const FilterStepResult r = reweighted_measurement_update(
              GaussianBelief{mean, cov}, H, R, y, y_pred, correntropy_weights(cfg.sigma),
              ReweightOptions{cfg.epsilon, cfg.max_iterations, cfg.init});
          py::dict d;
          d["mean"] = r.belief.mean;
          d["cov"] = r.belief.covariance;
          d["iterations"] = r.trace.iterations;
          d["status"] = status_name(r.trace);
          return d;
        },
        py::arg("mean"), py::arg("cov"), py::arg("H"), py::arg("R"), py::arg("y"),
        py::arg("y_pred"), py::arg("sigma"), py::arg("eps") = 1e-6, py::arg("maxit") = 50,
        py::arg("init") = "ls",
        "One reweighted measurement update against a linear(ized) measurement slope H.");

  m.def("parse_filters",
        [](const std::string& text) {
          std::vector<std::string> out;
          for (const FilterSpec& s : parse_filter_list(text)) out.push_back(s.canonical());
          return out;
        },
        py::arg("text"));

  m.def("run_experiment",
        [](const std::string& example, const std::string& noise_case, const std::string& filters,
           int steps, int runs, std::uint64_t seed, int threads, std::optional<double> filter_q,
           std::optional<double> filter_r, std::optional<std::filesystem::path> out) {
          ExperimentConfig cfg;
          cfg.example = parse_example(example);
          cfg.noise_case = noise_case;
          cfg.filters = parse_filter_list(filters);
          cfg.steps = steps;
          cfg.runs = runs;
          cfg.seed = seed;
          cfg.threads = threads;
          cfg.filter_q = filter_q;
          cfg.filter_r = filter_r;
          cfg.validate();
          BenchmarkReport report;
          {
            py::gil_scoped_release release;
            report = run_experiment(cfg);
          }
          if (out) {
            cfg.output_dir = *out;
            emit_report(report, cfg);
          }
          py::dict d;
          d["components"] = report.components;
          d["steps"] = report.steps;
          d["runs"] = report.runs;
          py::list fs;
          for (const FilterReport& f : report.filters) fs.append(filter_dict(f));
          d["filters"] = fs;
          d["summary"] = summary_table(report);
          return d;
        },
        py::arg("example"), py::arg("noise_case"), py::arg("filters"), py::arg("steps") = 500,
        py::arg("runs") = 100, py::arg("seed") = 20170101ULL, py::arg("threads") = 1,
        py::arg("filter_q") = py::none(), py::arg("filter_r") = py::none(),
        py::arg("out") = py::none());
}
