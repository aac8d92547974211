#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tightfeed/certificate.hpp"
#include "tightfeed/cli.hpp"
#include "tightfeed/experiments.hpp"
#include "tightfeed/pep.hpp"
#include "tightfeed/rates.hpp"
#include "tightfeed/simulator.hpp"

namespace py = pybind11;
using namespace tightfeed;

namespace {

MethodId method(const std::string& s) { return method_from_string(s); }

py::object maybe(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict rate_dict(const RateReport& r) {
  py::dict d;
  d["method"] = to_string(r.method);
  d["rho"] = r.rho;
  d["eta"] = r.eta_used;
  d["lambda"] = maybe(r.lambda_mult);
  d["nu"] = maybe(r.nu_mult);
  d["a"] = maybe(r.a_coef);
  d["b"] = maybe(r.b_coef);
  return d;
}

py::dict candidate_dict(const LyapunovCandidate& c) {
  py::dict d;
  d["labels"] = c.labels();
  d["P"] = c.P();
  d["p"] = c.p();
  return d;
}

}  // namespace

PYBIND11_MODULE(tightfeed, m) {
  m.doc() = "worst-case contraction rates of compressed gradient methods";

  py::register_exception<Error>(m, "Error");

  m.def("optimal_step_size",
        [](double mu, double L, double eps) { return optimal_step_size(ProblemClass(mu, L), Compression(eps)); },
        py::arg("mu"), py::arg("L"), py::arg("eps"));

  m.def("optimal_rate",
        [](const std::string& meth, double mu, double L, double eps) {
          return rate_dict(optimal_rate(method(meth), ProblemClass(mu, L), Compression(eps)));
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"));

  m.def("class_rate",
        [](const std::string& meth, double mu, double L, double eps, double eta) {
          return worst_case_rate_over_class(method(meth), ProblemClass(mu, L), Compression(eps), eta);
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"), py::arg("eta"),
        "quadratic lower bound max over c in {mu, L}");

  m.def("certificate_residual",
        [](const std::string& meth, double mu, double L, double eps) {
          const ProblemClass pc(mu, L);
          const Compression comp(eps);
          return certificate_residual(build_certificate(method(meth), pc, comp), pc, comp);
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"));

  m.def("worst_case",
        [](const std::string& meth, double mu, double L, double eps, double eta, int K, double v0) {
          const Compression comp(eps);
          const auto r = worst_case_ratio(method(meth), ProblemClass(mu, L), comp, eta,
                                          theorem_lyapunov(method(meth), comp), K, v0);
          py::dict d;
          d["value"] = r.value;
          d["status"] = sdp::to_string(r.status);
          d["gram"] = r.gram;
          return d;
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"), py::arg("eta"), py::arg("K") = 1,
        py::arg("v0") = 1.0, "worst case of the theorem Lyapunov candidate over K steps");

  m.def("search",
        [](const std::string& meth, double mu, double L, double eps, double eta, double tol) {
          const auto b = bisect_optimal_rate(method(meth), ProblemClass(mu, L), Compression(eps), eta, tol);
          py::dict d;
          d["rho"] = b.rho;
          d["converged"] = b.converged;
          d["solves"] = b.solves;
          d["candidate"] = b.candidate ? py::object(candidate_dict(*b.candidate)) : py::none();
          return d;
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"), py::arg("eta"), py::arg("tol") = 1e-6);

  m.def("logdet_simplify",
        [](const std::string& meth, double mu, double L, double eps, double eta, double rho) {
          return candidate_dict(logdet_simplify(method(meth), ProblemClass(mu, L), Compression(eps), eta, rho));
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"), py::arg("eta"), py::arg("rho"));

  m.def("cycle_check",
        [](const std::string& meth, double mu, double L, double eps, double eta, int K) {
          const auto c = cycle_check(method(meth), ProblemClass(mu, L), Compression(eps), eta, K);
          return py::make_tuple(c.is_cycle, c.gap);
        },
        py::arg("method"), py::arg("mu"), py::arg("L"), py::arg("eps"), py::arg("eta"), py::arg("K") = 2);

  m.def("worst_case_trajectory",
        [](const std::string& meth, double c, double eps, double eta, int K) {
          const auto t = worst_case_trajectory(method(meth), c, Compression(eps), eta, K);
          Eigen::VectorXd x(t.size());
          for (size_t k = 0; k < t.size(); ++k) x[k] = t.states[k].components[0][0];
          const auto ratios = empirical_contraction(t, theorem_lyapunov(method(meth), Compression(eps)));
          return py::make_tuple(x, ratios);
        },
        py::arg("method"), py::arg("c"), py::arg("eps"), py::arg("eta"), py::arg("K"),
        "iterates of the one-dimensional worst case and its Lyapunov ratios");

  m.def("sweep",
        [](const std::vector<std::string>& methods, double mu, double L, int eps_res, int eta_res,
           const std::string& mode, bool cycle, int threads) {
          SweepSpec s;
          s.methods.clear();
          for (const auto& x : methods) s.methods.push_back(method(x));
          s.pc = ProblemClass(mu, L);
          s.eps_res = eps_res;
          s.eta_res = eta_res;
          s.mode = sweep_mode_from_string(mode);
          s.cycle_check = cycle;
          s.threads = threads;
          return format_table(to_table(contour_sweep(s)), Format::Csv);
        },
        py::arg("methods"), py::arg("mu"), py::arg("L"), py::arg("eps_res") = 10, py::arg("eta_res") = 10,
        py::arg("mode") = "closed-form", py::arg("cycle") = true, py::arg("threads") = 0, "CSV text of a sweep");

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int code = cli::run(args, out, err);
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "runs the command-line interface; returns (exit code, stdout, stderr)");
}
