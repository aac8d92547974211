#include "tightfeed/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "tightfeed/certificate.hpp"
#include "tightfeed/experiments.hpp"
#include "tightfeed/pep.hpp"
#include "tightfeed/rates.hpp"
#include "tightfeed/simulator.hpp"

namespace tightfeed::cli {

namespace {

using json = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string out;
  std::string format;
  bool verbose = false;
  int threads = 0;

  std::string method = "ef";
  double mu = 0.5, L = 1.0, eps = 0.25;
  std::string eta = "auto";
  double tol = 1e-6;
  int K = 1;

  // pep / search / cycle
  std::string candidate = "theorem";
  double v0 = 1.0;
  double rho = -1.0;
  bool simplify = false;
  std::string dump;

  // sweeps
  std::vector<std::string> methods;
  std::string mode = "pep-search";
  int eps_res = 40, eta_res = 40;
  double eps_lo = 0.01, eps_hi = 0.99, eta_lo = 0.01, eta_hi = -1.0;
  bool full = false;
  bool no_cycle = false;
  std::vector<double> eps_list;
  std::vector<double> kappas{2.0, 4.0, 10.0};
  int K_max = 4;

  // simulate / certify
  int steps = 200;
  double x0 = 1.0;
  double curvature = -1.0;
  std::string compressor = "scalar";
  double theta = 1.0;
  int dim = 1;
  bool worst_case = false;
  int samples = 1000;
};

// option name -> current value, per subcommand, for echoing the resolved configuration
using Echo = std::vector<std::pair<std::string, std::function<json()>>>;

template <class T>
CLI::Option* add(CLI::App* sub, Echo& echo, const std::string& name, T& ref, const std::string& desc) {
  echo.emplace_back(name, [&ref]() { return json(ref); });
  return sub->add_option("--" + name, ref, desc)->capture_default_str();
}

CLI::Option* add_flag(CLI::App* sub, Echo& echo, const std::string& name, bool& ref, const std::string& desc) {
  echo.emplace_back(name, [&ref]() { return json(ref); });
  return sub->add_flag("--" + name, ref, desc);
}

json describe(const std::string& command, const Echo& echo) {
  json j;
  j["command"] = command;
  for (const auto& [name, get] : echo) j[name] = get();
  return j;
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// values from a JSON config fill every option not given on the command line
void merge_config(CLI::App* sub, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot read config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad config json: ") + e.what());
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw std::invalid_argument("config must be a json object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw std::invalid_argument("unknown config key: " + key);
    if (opt->count() > 0 || (value.is_array() && value.empty())) continue;
    opt->clear();
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(scalar_text(v));
    } else {
      opt->add_result(scalar_text(value));
    }
    opt->run_callback();
  }
}

void write_output(const Options& o, std::ostream& out, const std::string& body) {
  if (o.out.empty()) {
    out << body;
    return;
  }
  std::ofstream os(o.out, std::ios::binary);
  if (!os) throw Error("cannot open " + o.out + " for writing");
  os << body;
  if (!os) throw Error("write failed: " + o.out);
}

void write_json(const Options& o, std::ostream& out, const json& j) { write_output(o, out, j.dump(2) + "\n"); }

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
    rows.push_back(r);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json r = json::array();
  for (int i = 0; i < v.size(); ++i) r.push_back(v[i]);
  return r;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  MethodId method;
  ProblemClass pc;
  Compression comp;
};

Context context(const Options& o) {
  return {method_from_string(o.method), ProblemClass(o.mu, o.L), Compression(o.eps)};
}

struct ResolvedEta {
  double eta;
  std::string source;
};

ResolvedEta resolve_eta(const Options& o, const Context& c) {
  if (o.eta != "auto") {
    double v = 0.0;
    try {
      size_t pos = 0;
      v = std::stod(o.eta, &pos);
      if (pos != o.eta.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw std::invalid_argument("--eta must be a number or 'auto', got " + o.eta);
    }
    if (!(v > 0.0)) throw std::invalid_argument("--eta must be positive");
    return {v, "given"};
  }
  if (c.method != MethodId::CGD) return {optimal_step_size(c.pc, c.comp), "closed-form"};
  const auto rows = tuned_rate_curve(c.method, c.pc, {c.comp.epsilon()}, 200, 0.01, o.tol, o.threads);
  return {rows.front().eta_opt, "grid-200"};
}

LyapunovCandidate resolve_candidate(const Options& o, const Context& c) {
  if (o.candidate == "theorem") return theorem_lyapunov(c.method, c.comp);
  if (o.candidate == "functional") return functional_residual_lyapunov(c.method);
  if (o.candidate == "distance") return distance_lyapunov(c.method);
  std::ifstream is(o.candidate);
  if (!is) throw std::invalid_argument("--candidate must be theorem, functional, distance or a json file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("bad candidate json: ") + e.what());
  }
  if (j.contains("candidate")) j = j["candidate"];
  return candidate_from_json(j);
}

void dump_program(const std::string& path, const GramProblem& gp, const sdp::ConicProgram& prog) {
  nlohmann::json j;
  j["gram_problem"] = to_json(gp);
  j["program"] = sdp::to_json(prog);
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << j.dump(2) << "\n";
}

Format table_format(const Options& o) { return o.format.empty() ? Format::Csv : format_from_string(o.format); }

void write_table(const Options& o, std::ostream& out, const Table& t, const json& config) {
  const Format f = table_format(o);
  if (f == Format::Csv) {
    write_output(o, out, format_table(t, f));
    return;
  }
  json j = json::parse(format_table(t, f));
  json wrapped;
  wrapped["config"] = config;
  wrapped["columns"] = j["columns"];
  wrapped["rows"] = j["rows"];
  write_json(o, out, wrapped);
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_rate(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  if (c.method == MethodId::CGD) throw std::invalid_argument("no closed-form rate for cgd; use search");
  const auto eta = resolve_eta(o, c);
  json j;
  j["config"] = config;
  j["eta"] = eta.eta;
  j["eta_source"] = eta.source;
  const double eta_star = optimal_step_size(c.pc, c.comp);
  if (std::abs(eta.eta - eta_star) <= 1e-12 * eta_star) {
    const RateReport r = optimal_rate(c.method, c.pc, c.comp);
    j["rho"] = r.rho;
    j["rho_source"] = "closed-form";
    j["report"] = json::parse(to_json(r).dump());
  } else {
    j["rho"] = worst_case_rate_over_class(c.method, c.pc, c.comp, eta.eta);
    j["rho_source"] = "quadratic-lower-bound";
  }
  j["quadratic_lower_bound"] = worst_case_rate_over_class(c.method, c.pc, c.comp, eta.eta);
  write_json(o, out, j);
  return kOk;
}

int cmd_pep(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  const auto eta = resolve_eta(o, c);
  if (o.K < 1) throw std::invalid_argument("--K must be >= 1");
  const auto cand = resolve_candidate(o, c);
  if (!o.dump.empty()) {
    const auto gp = build_gram_problem(c.method, c.pc, c.comp, eta.eta, o.K, PepMode::WorstCase);
    dump_program(o.dump, gp, worst_case_program(gp, cand, o.v0));
  }
  const auto w = worst_case_ratio(c.method, c.pc, c.comp, eta.eta, cand, o.K, o.v0);
  json j;
  j["config"] = config;
  j["eta"] = eta.eta;
  j["status"] = sdp::to_string(w.status);
  j["value"] = number_or_null(w.value);
  j["ratio"] = number_or_null(w.value / o.v0);
  j["per_step"] = number_or_null(std::pow(w.value / o.v0, 1.0 / o.K));
  j["candidate"] = json::parse(to_json(cand).dump());
  if (w.status == sdp::Status::Optimal) {
    j["gram"] = matrix_json(w.gram);
    j["fvalues"] = vector_json(w.fvalues);
  }
  write_json(o, out, j);
  if (w.status == sdp::Status::Infeasible || w.status == sdp::Status::NumericalFailure) return kSolverFailure;
  return std::isfinite(w.value) && w.value / o.v0 < 1.0 ? kOk : kNotConvergent;
}

int cmd_search(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  const auto eta = resolve_eta(o, c);
  json j;
  j["config"] = config;
  j["eta"] = eta.eta;
  if (o.rho >= 0.0) {
    // single feasibility probe
    const auto r = search_lyapunov(c.method, c.pc, c.comp, eta.eta, o.rho);
    if (!o.dump.empty()) {
      const auto gp = build_gram_problem(c.method, c.pc, c.comp, eta.eta, 1, PepMode::Search);
      dump_program(o.dump, gp, build_search_program(gp, o.rho).prog);
    }
    j["rho"] = o.rho;
    j["verdict"] = sdp::to_string(r.verdict);
    j["relaxation"] = r.relaxation;
    if (r.candidate) j["candidate"] = json::parse(to_json(*r.candidate).dump());
    if (r.lambdas.size()) j["lambdas"] = vector_json(r.lambdas);
    if (r.nus.size()) j["nus"] = vector_json(r.nus);
    write_json(o, out, j);
    return r.verdict == sdp::Verdict::Feasible ? kOk : kNotConvergent;
  }
  const auto b = bisect_optimal_rate(c.method, c.pc, c.comp, eta.eta, o.tol);
  j["rho"] = b.rho;
  j["converged"] = b.converged;
  j["solves"] = b.solves;
  j["undecided"] = b.undecided;
  if (!o.dump.empty()) {
    const auto gp = build_gram_problem(c.method, c.pc, c.comp, eta.eta, 1, PepMode::Search);
    dump_program(o.dump, gp, build_search_program(gp, b.rho).prog);
  }
  if (b.candidate) {
    j["candidate"] = json::parse(to_json(*b.candidate).dump());
    const auto w = worst_case_ratio(c.method, c.pc, c.comp, eta.eta, *b.candidate, 1);
    j["rho_verified"] = number_or_null(w.value);
  }
  if (c.method != MethodId::CGD) j["quadratic_lower_bound"] = worst_case_rate_over_class(c.method, c.pc, c.comp, eta.eta);
  if (o.simplify && b.converged) {
    const auto s = logdet_simplify(c.method, c.pc, c.comp, eta.eta, b.rho + 1e-6);
    j["simplified"] = json::parse(to_json(s).dump());
  }
  write_json(o, out, j);
  return b.converged && b.rho < 1.0 ? kOk : kNotConvergent;
}

SweepSpec sweep_spec(const Options& o) {
  SweepSpec s;
  s.methods.clear();
  if (o.methods.empty()) s.methods.push_back(method_from_string(o.method));
  for (const auto& m : o.methods) s.methods.push_back(method_from_string(m));
  s.pc = ProblemClass(o.mu, o.L);
  s.eps_lo = o.eps_lo;
  s.eps_hi = o.eps_hi;
  s.eps_res = o.full ? 200 : o.eps_res;
  s.eta_lo = o.eta_lo;
  if (o.eta_hi > 0.0) s.eta_hi = o.eta_hi;
  s.eta_res = o.full ? 200 : o.eta_res;
  s.mode = sweep_mode_from_string(o.mode);
  s.cycle_check = !o.no_cycle;
  s.tol = o.tol;
  s.threads = o.threads;
  s.validate();
  return s;
}

int cmd_sweep(const Options& o, const json& config, std::ostream& out, std::ostream& err) {
  const SweepSpec spec = sweep_spec(o);
  const auto rows = contour_sweep(spec);
  if (o.verbose) {
    std::map<std::string, int> counts;
    for (const auto& r : rows) ++counts[to_string(r.status)];
    for (const auto& [k, v] : counts) err << k << ": " << v << "\n";
  }
  write_table(o, out, to_table(rows), config);
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) {
    return r.status == RowStatus::SolverFailure;
  });
  return failed ? kSolverFailure : kOk;
}

int cmd_tuned(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  const std::vector<double> eps = o.eps_list.empty() ? linspace(o.eps_lo, o.eps_hi, o.eps_res) : o.eps_list;
  const int eta_res = o.eta_res < 50 ? 100 : o.eta_res;
  const auto rows = tuned_rate_curve(c.method, c.pc, eps, eta_res, o.eta_lo, o.tol, o.threads);
  write_table(o, out, to_table(rows), config);
  return kOk;
}

int cmd_diff(const Options& o, const json& config, std::ostream& out) {
  std::vector<ProblemClass> pcs;
  for (double k : o.kappas) {
    if (!(k > 1.0)) throw std::invalid_argument("kappa must exceed 1");
    pcs.emplace_back(o.L / k, o.L);
  }
  const auto rows = method_difference_table(pcs, o.eps_res, o.eta_res, o.tol, o.threads);
  write_table(o, out, to_table(rows), config);
  return kOk;
}

int cmd_multistep(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  std::optional<double> eta;
  if (o.eta != "auto") eta = resolve_eta(o, c).eta;
  const auto rows = multistep_curve(c.method, c.pc, c.comp, o.K_max, eta);
  write_table(o, out, to_table(rows), config);
  return kOk;
}

int cmd_simulate(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  const auto eta = resolve_eta(o, c);
  const double curv = o.curvature > 0.0 ? o.curvature : c.pc.mu();
  if (curv < c.pc.mu() || curv > c.pc.L()) throw std::invalid_argument("--curvature must lie in [mu, L]");
  if (o.steps < 0) throw std::invalid_argument("--steps must be >= 0");
  Trajectory traj;
  if (o.worst_case) {
    if (c.method == MethodId::CGD) throw std::invalid_argument("--worst-case needs ef or ef21");
    traj = worst_case_trajectory(c.method, curv, c.comp, eta.eta, o.steps);
  } else {
    if (o.dim < 1) throw std::invalid_argument("--dim must be >= 1");
    Compressor cmp = Compressor::identity();
    if (o.compressor == "scalar") cmp = Compressor::scalar(c.comp, o.theta);
    else if (o.compressor == "top1") cmp = Compressor::top1(c.comp, o.dim);
    else if (o.compressor != "identity") throw std::invalid_argument("unknown compressor " + o.compressor);
    const MethodConfig cfg(c.method, c.pc, c.comp, eta.eta);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(o.dim, o.x0);
    if (o.dim == 1) {
      QuadraticOracle f(curv, c.pc);
      traj = simulate(cfg, f, cmp, initial_state(cfg, f, cmp, x0), o.steps);
    } else {
      const auto h = linspace(c.pc.mu(), c.pc.L(), o.dim);
      DiagonalQuadraticOracle f(Eigen::Map<const Eigen::VectorXd>(h.data(), o.dim));
      traj = simulate(cfg, f, cmp, initial_state(cfg, f, cmp, x0), o.steps);
    }
  }
  const auto cand = resolve_candidate(o, c);
  if (table_format(o) == Format::Csv && !o.format.empty()) {
    write_output(o, out, trajectory_csv(traj, &cand));
    return kOk;
  }
  const auto ratios = empirical_contraction(traj, cand);
  json j;
  j["config"] = config;
  j["eta"] = eta.eta;
  j["curvature"] = curv;
  j["steps"] = static_cast<int>(traj.size()) - 1;
  j["ratios"] = ratios;
  if (!ratios.empty()) j["final_ratio"] = ratios.back();
  if (c.method != MethodId::CGD) j["quadratic_rate"] = quadratic_rate_at(c.method, curv, c.comp, eta.eta);
  write_json(o, out, j);
  return kOk;
}

int cmd_certify(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  if (c.method == MethodId::CGD) throw std::invalid_argument("certificates exist for ef and ef21 only");
  const Certificate cert = build_certificate(c.method, c.pc, c.comp);
  const auto detail = certificate_residual_detail(cert, c.pc, c.comp);
  json j;
  j["config"] = config;
  j["certificate"] = json::parse(to_json(cert, detail.residual).dump());
  j["residual"] = detail.residual;
  j["worst_entry"] = {detail.row, detail.col};
  if (o.samples > 0) {
    const auto s = verify_decrease_on_samples(cert, c.pc, c.comp, o.samples);
    j["samples"] = o.samples;
    j["max_sample_violation"] = s.max_violation;
  }
  const bool ok = detail.residual <= 1e-10;
  j["valid"] = ok;
  write_json(o, out, j);
  return ok ? kOk : kNotConvergent;
}

int cmd_cycle(const Options& o, const json& config, std::ostream& out) {
  const Context c = context(o);
  const auto eta = resolve_eta(o, c);
  const int K = std::max(o.K, 2);
  const auto r = cycle_check(c.method, c.pc, c.comp, eta.eta, K);
  json j;
  j["config"] = config;
  j["eta"] = eta.eta;
  j["cycle_length"] = K;
  j["is_cycle"] = r.is_cycle;
  j["gap"] = r.gap;
  j["threshold"] = kCycleThreshold;
  j["status"] = sdp::to_string(r.status);
  j["normalization"] = "unit initial joint norm";
  write_json(o, out, j);
  return r.is_cycle ? kNotConvergent : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"tightfeed: worst-case rates of compressed gradient methods"};
  app.require_subcommand(1);
  // each subcommand binds its own option set so defaults never leak across them
  std::map<CLI::App*, Options> store;
  std::map<CLI::App*, Echo> echoes;

  auto base = [&](const std::string& name, const std::string& desc, bool eta = true) {
    CLI::App* sub = app.add_subcommand(name, desc);
    Echo& e = echoes[sub];
    Options& o = store[sub];
    sub->add_option("--config", o.config, "json file with option values");
    sub->add_option("--out", o.out, "output path (stdout if empty)");
    sub->add_flag("-v,--verbose", o.verbose, "progress on stderr");
    add(sub, e, "method", o.method, "cgd, ef or ef21")->check(CLI::IsMember({"cgd", "ef", "ef21"}));
    add(sub, e, "mu", o.mu, "strong convexity");
    add(sub, e, "L", o.L, "smoothness");
    add(sub, e, "eps", o.eps, "compression level in [0,1)");
    if (eta) add(sub, e, "eta", o.eta, "step size or 'auto'");
    add(sub, e, "tol", o.tol, "bisection precision");
    add(sub, e, "threads", o.threads, "worker threads (0: TIGHTFEED_THREADS or all cores)");
    return sub;
  };

  CLI::App* rate = base("rate", "closed-form optimal rate");
  CLI::App* pep = base("pep", "worst case of a fixed Lyapunov candidate");
  add(pep, echoes[pep], "K", store[pep].K, "steps");
  add(pep, echoes[pep], "candidate", store[pep].candidate, "theorem, functional, distance or a json file");
  add(pep, echoes[pep], "v0", store[pep].v0, "initial Lyapunov value");
  pep->add_option("--dump-program", store[pep].dump, "write the gram problem and conic program as json");

  CLI::App* search = base("search", "bisection for the best Lyapunov rate");
  add(search, echoes[search], "rho", store[search].rho, "single feasibility probe at this rate (negative: bisect)");
  add_flag(search, echoes[search], "simplify", store[search].simplify, "logdet pass at rho + 1e-6");
  search->add_option("--dump-program", store[search].dump, "write the search program as json");

  auto grid_opts = [&](CLI::App* sub) {
    Echo& e = echoes[sub];
    Options& o = store[sub];
    add(sub, e, "eps-res", o.eps_res, "eps grid points");
    add(sub, e, "eta-res", o.eta_res, "eta grid points");
    add(sub, e, "eps-lo", o.eps_lo, "");
    add(sub, e, "eps-hi", o.eps_hi, "");
    add(sub, e, "eta-lo", o.eta_lo, "");
    add(sub, e, "format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* sweep = base("sweep", "(eps, eta) contour sweep", false);
  grid_opts(sweep);
  add(sweep, echoes[sweep], "methods", store[sweep].methods, "methods to sweep (default: --method)")->delimiter(',');
  add(sweep, echoes[sweep], "mode", store[sweep].mode, "closed-form, pep-fixed or pep-search");
  add(sweep, echoes[sweep], "eta-hi", store[sweep].eta_hi, "upper eta (negative: 2/(L+mu))");
  add_flag(sweep, echoes[sweep], "full", store[sweep].full, "200 x 200 grid");
  add_flag(sweep, echoes[sweep], "no-cycle", store[sweep].no_cycle, "skip cycle detection");

  CLI::App* tuned = base("tuned", "rate at the best step size per eps", false);
  grid_opts(tuned);
  tuned->get_option("--eta-res")->default_val(100);
  add(tuned, echoes[tuned], "eps-list", store[tuned].eps_list, "explicit eps values")->delimiter(',');

  CLI::App* diff = base("diff-table", "max |rho_EF - rho_EF21| per condition number", false);
  grid_opts(diff);
  diff->get_option("--eps-res")->default_val(20);
  diff->get_option("--eta-res")->default_val(20);
  add(diff, echoes[diff], "kappas", store[diff].kappas, "condition numbers")->delimiter(',');

  CLI::App* multi = base("multistep", "K-step worst case of the theorem candidate");
  add(multi, echoes[multi], "K-max", store[multi].K_max, "largest K");
  add(multi, echoes[multi], "format", store[multi].format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* sim = base("simulate", "run a method on a quadratic");
  add(sim, echoes[sim], "steps", store[sim].steps, "iterations");
  add(sim, echoes[sim], "x0", store[sim].x0, "initial point (every coordinate)");
  add(sim, echoes[sim], "curvature", store[sim].curvature, "quadratic curvature (negative: mu)");
  add(sim, echoes[sim], "compressor", store[sim].compressor, "identity, scalar or top1");
  add(sim, echoes[sim], "theta", store[sim].theta, "scalar compressor parameter in [-1, 1]");
  add(sim, echoes[sim], "dim", store[sim].dim, "dimension");
  add(sim, echoes[sim], "candidate", store[sim].candidate, "Lyapunov candidate for the ratios");
  add_flag(sim, echoes[sim], "worst-case", store[sim].worst_case, "the lower-bound trajectory");
  add(sim, echoes[sim], "format", store[sim].format, "json, or csv for the trajectory")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* cert = base("certify", "check the contraction identity", false);
  add(cert, echoes[cert], "samples", store[cert].samples, "random decrease checks");

  CLI::App* cyc = base("cycle", "search for a cycle of length K");
  add(cyc, echoes[cyc], "K", store[cyc].K, "cycle length (at least 2)");
  cyc->get_option("--K")->default_val(2);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kBadArguments;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Options& o = store[sub];
  try {
    if (!o.config.empty()) merge_config(sub, o.config);
    const json config = describe(sub->get_name(), echoes[sub]);
    if (sub == rate) return cmd_rate(o, config, out);
    if (sub == pep) return cmd_pep(o, config, out);
    if (sub == search) return cmd_search(o, config, out);
    if (sub == sweep) return cmd_sweep(o, config, out, err);
    if (sub == tuned) return cmd_tuned(o, config, out);
    if (sub == diff) return cmd_diff(o, config, out);
    if (sub == multi) return cmd_multistep(o, config, out);
    if (sub == sim) return cmd_simulate(o, config, out);
    if (sub == cert) return cmd_certify(o, config, out);
    if (sub == cyc) return cmd_cycle(o, config, out);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kBadArguments;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tightfeed::cli
