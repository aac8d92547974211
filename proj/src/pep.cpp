#include "tightfeed/pep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tightfeed {

using sdp::ConicProgram;
using sdp::Sense;

namespace {

Eigen::MatrixXd sq(const Eigen::RowVectorXd& u) { return u.transpose() * u; }
Eigen::MatrixXd sym(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v) {
  return 0.5 * (u.transpose() * v + v.transpose() * u);
}

// coefficients of Tr(W X) over the stored entries of symmetric variable X
void add_trace(Eigen::VectorXd& row, const Eigen::MatrixXd& W, int first) {
  const int n = static_cast<int>(W.rows());
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      row[first + sdp::svec_index(n, i, j)] += (i == j) ? W(i, i) : W(i, j) + W(j, i);
}

std::vector<std::string> names_with_steps(const std::string& base, int from, int to) {
  std::vector<std::string> out;
  for (int k = from; k <= to; ++k) out.push_back(base + std::to_string(k));
  return out;
}

}  // namespace

Eigen::RowVectorXd BasisLayout::x_row(int i) const {
  return i == star() ? Eigen::RowVectorXd::Zero(dim()) : x.at(i);
}
Eigen::RowVectorXd BasisLayout::g_row(int i) const {
  return i == star() ? Eigen::RowVectorXd::Zero(dim()) : g.at(i);
}

Eigen::MatrixXd BasisLayout::state_rows(int k) const {
  const auto& labels = state_labels(method);
  Eigen::MatrixXd A(labels.size(), dim());
  for (size_t r = 0; r < labels.size(); ++r) {
    const auto& l = labels[r];
    if (l == "x")
      A.row(r) = x.at(k);
    else if (l == "g")
      A.row(r) = g.at(k);
    else if (l == "c")
      A.row(r) = c.at(k);
    else
      A.row(r) = aux.at(k);
  }
  return A;
}

BasisLayout build_layout(MethodId method, int K, double eta, bool exact) {
  if (K < 1) throw std::invalid_argument("layout needs at least one step");
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be positive");
  BasisLayout lay;
  lay.method = method;
  lay.steps = K;
  lay.eta = eta;
  lay.exact = exact;
  auto& sy = lay.symbols;
  sy.push_back("x0");
  for (auto& s : names_with_steps("g", 0, K)) sy.push_back(s);
  const int n_msgs = method == MethodId::EF21 ? K : K + 1;
  if (!exact)
    for (auto& s : names_with_steps("c", 0, n_msgs - 1)) sy.push_back(s);
  if (!exact && method == MethodId::EF) sy.push_back("e0");
  if (!exact && method == MethodId::EF21) sy.push_back("d0");
  const int n = static_cast<int>(sy.size());
  auto unit = [&](const std::string& name) {
    const int i = static_cast<int>(std::find(sy.begin(), sy.end(), name) - sy.begin());
    return Eigen::RowVectorXd(Eigen::RowVectorXd::Unit(n, i));
  };

  for (int k = 0; k <= K; ++k) lay.g.push_back(unit("g" + std::to_string(k)));
  lay.x.push_back(unit("x0"));
  switch (method) {
    case MethodId::CGD:
      for (int k = 0; k <= K; ++k) lay.c.push_back(exact ? Eigen::RowVectorXd(eta * lay.g[k]) : unit("c" + std::to_string(k)));
      for (int k = 0; k < K; ++k) lay.x.push_back(lay.x[k] - lay.c[k]);
      break;
    case MethodId::EF:
      lay.aux.push_back(exact ? Eigen::RowVectorXd::Zero(n) : unit("e0"));
      for (int k = 0; k <= K; ++k) {
        lay.c.push_back(exact ? Eigen::RowVectorXd(lay.aux[k] + eta * lay.g[k]) : unit("c" + std::to_string(k)));
        if (k < K) {
          lay.x.push_back(lay.x[k] - lay.c[k]);
          lay.aux.push_back(lay.aux[k] + eta * lay.g[k] - lay.c[k]);
        }
      }
      break;
    case MethodId::EF21:
      lay.aux.push_back(exact ? lay.g[0] : unit("d0"));
      for (int k = 0; k < K; ++k) {
        lay.c.push_back(exact ? Eigen::RowVectorXd(lay.g[k + 1] - lay.aux[k]) : unit("c" + std::to_string(k)));
        lay.x.push_back(lay.x[k] - eta * lay.aux[k]);
        lay.aux.push_back(lay.aux[k] + lay.c[k]);
      }
      break;
  }
  return lay;
}

std::vector<InterpolationTerm> interpolation_matrices(const BasisLayout& lay, double mu, double L) {
  if (!(mu >= 0.0 && mu < L)) throw std::invalid_argument("interpolation needs 0 <= mu < L");
  const double k = mu / (2.0 * (1.0 - mu / L));
  const int nf = lay.steps + 1;
  std::vector<InterpolationTerm> out;
  for (int i = 0; i < lay.num_points(); ++i)
    for (int j = 0; j < lay.num_points(); ++j) {
      if (i == j) continue;
      const Eigen::RowVectorXd xi = lay.x_row(i), xj = lay.x_row(j), gi = lay.g_row(i), gj = lay.g_row(j);
      InterpolationTerm t;
      t.i = i;
      t.j = j;
      t.M = -sym(gj, xi - xj) - sq(gi - gj) / (2.0 * L) - k * sq(xi - xj - (gi - gj) / L);
      t.m = Eigen::VectorXd::Zero(nf);
      if (i != lay.star()) t.m[i] += 1.0;
      if (j != lay.star()) t.m[j] -= 1.0;
      out.push_back(std::move(t));
    }
  return out;
}

std::vector<InterpolationTerm> interpolation_matrices(const BasisLayout& layout, const ProblemClass& pc) {
  return interpolation_matrices(layout, pc.mu(), pc.L());
}

std::vector<Eigen::MatrixXd> compressor_matrices(const BasisLayout& lay, const Compression& comp) {
  std::vector<Eigen::MatrixXd> out;
  if (lay.exact) return out;
  const double eps = comp.epsilon(), eta = lay.eta;
  for (size_t k = 0; k < lay.c.size(); ++k) {
    Eigen::RowVectorXd u;
    switch (lay.method) {
      case MethodId::CGD:
        u = eta * lay.g[k];
        break;
      case MethodId::EF:
        u = eta * lay.g[k] + lay.aux[k];
        break;
      case MethodId::EF21:
        u = lay.g[k + 1] - lay.aux[k];
        break;
    }
    out.push_back(sq(u - lay.c[k]) - eps * sq(u));
  }
  return out;
}

std::string to_string(PepMode m) {
  switch (m) {
    case PepMode::WorstCase:
      return "worst-case";
    case PepMode::Search:
      return "search";
    default:
      return "cycle";
  }
}

Eigen::MatrixXd GramProblem::lyapunov_difference(const Eigen::MatrixXd& P, double rho) const {
  return AK.transpose() * P * AK - rho * A0.transpose() * P * A0;
}

Eigen::VectorXd GramProblem::lyapunov_difference_f(double p, double rho) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_fvalues());
  v[layout.steps] += p;
  v[0] -= rho * p;
  return v;
}

GramProblem build_gram_problem(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                               int K, PepMode mode) {
  GramProblem gp;
  gp.layout = build_layout(method, K, eta, comp.epsilon() == 0.0);
  gp.mu = pc.mu();
  gp.L = pc.L();
  gp.epsilon = comp.epsilon();
  gp.interp = interpolation_matrices(gp.layout, pc);
  gp.compressors = compressor_matrices(gp.layout, comp);
  gp.A0 = gp.layout.state_rows(0);
  gp.AK = gp.layout.state_rows(K);
  gp.mode = mode;
  return gp;
}

namespace {

std::vector<double> flat(const Eigen::MatrixXd& M) {
  std::vector<double> v;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) v.push_back(M(i, j));
  return v;
}

Eigen::MatrixXd unflat(const nlohmann::json& j, int rows, int cols) {
  auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != rows * cols) throw DimensionError("matrix entry count mismatch");
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) M(i, k) = v[i * cols + k];
  return M;
}

nlohmann::json rows_json(const std::vector<Eigen::RowVectorXd>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  return j;
}

std::vector<Eigen::RowVectorXd> rows_from(const nlohmann::json& j, int n) {
  std::vector<Eigen::RowVectorXd> out;
  for (const auto& r : j) out.push_back(unflat(r, 1, n));
  return out;
}

}  // namespace

nlohmann::json to_json(const GramProblem& gp) {
  const auto& lay = gp.layout;
  const int n = lay.dim();
  nlohmann::json j;
  j["method"] = to_string(lay.method);
  j["steps"] = lay.steps;
  j["eta"] = lay.eta;
  j["exact"] = lay.exact;
  j["mu"] = gp.mu;
  j["L"] = gp.L;
  j["epsilon"] = gp.epsilon;
  j["mode"] = to_string(gp.mode);
  j["symbols"] = lay.symbols;
  j["rows"] = {{"x", rows_json(lay.x)}, {"g", rows_json(lay.g)}, {"c", rows_json(lay.c)}, {"aux", rows_json(lay.aux)}};
  j["interpolation"] = nlohmann::json::array();
  for (const auto& t : gp.interp)
    j["interpolation"].push_back(
        {{"i", t.i}, {"j", t.j}, {"M", flat(t.M)}, {"m", std::vector<double>(t.m.data(), t.m.data() + t.m.size())}});
  j["compressor"] = nlohmann::json::array();
  for (const auto& C : gp.compressors) j["compressor"].push_back(flat(C));
  j["A0"] = flat(gp.A0);
  j["AK"] = flat(gp.AK);
  j["state_labels"] = state_labels(lay.method);
  (void)n;
  return j;
}

GramProblem gram_problem_from_json(const nlohmann::json& j) {
  GramProblem gp;
  auto& lay = gp.layout;
  lay.method = method_from_string(j.at("method").get<std::string>());
  lay.steps = j.at("steps").get<int>();
  lay.eta = j.at("eta").get<double>();
  lay.exact = j.at("exact").get<bool>();
  lay.symbols = j.at("symbols").get<std::vector<std::string>>();
  const int n = lay.dim();
  lay.x = rows_from(j.at("rows").at("x"), n);
  lay.g = rows_from(j.at("rows").at("g"), n);
  lay.c = rows_from(j.at("rows").at("c"), n);
  lay.aux = rows_from(j.at("rows").at("aux"), n);
  gp.mu = j.at("mu").get<double>();
  gp.L = j.at("L").get<double>();
  gp.epsilon = j.at("epsilon").get<double>();
  const std::string mode = j.at("mode").get<std::string>();
  gp.mode = mode == "search" ? PepMode::Search : (mode == "cycle" ? PepMode::Cycle : PepMode::WorstCase);
  for (const auto& t : j.at("interpolation")) {
    InterpolationTerm it;
    it.i = t.at("i").get<int>();
    it.j = t.at("j").get<int>();
    it.M = unflat(t.at("M"), n, n);
    auto m = t.at("m").get<std::vector<double>>();
    it.m = Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
    gp.interp.push_back(std::move(it));
  }
  for (const auto& C : j.at("compressor")) gp.compressors.push_back(unflat(C, n, n));
  const int ell = static_cast<int>(state_labels(lay.method).size());
  gp.A0 = unflat(j.at("A0"), ell, n);
  gp.AK = unflat(j.at("AK"), ell, n);
  return gp;
}

// ---------------------------------------------------------------------------
// worst case

namespace {

struct GramVars {
  int G_first = 0;
  int f_first = 0;
};

GramVars add_gram_constraints(ConicProgram& prog, const GramProblem& gp) {
  GramVars v;
  const int n = gp.layout.dim();
  v.G_first = prog.add_matrix_var(n, "G", true);
  v.f_first = prog.num_vars;
  for (int k = 0; k < gp.num_fvalues(); ++k) prog.add_var("f" + std::to_string(k));
  for (const auto& t : gp.interp) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.num_vars);
    add_trace(row, t.M, v.G_first);
    row.segment(v.f_first, t.m.size()) += t.m;
    prog.add_row(row, Sense::Ge, 0.0);
  }
  for (const auto& C : gp.compressors) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.num_vars);
    add_trace(row, C, v.G_first);
    prog.add_row(row, Sense::Le, 0.0);
  }
  return v;
}

}  // namespace

sdp::ConicProgram worst_case_program(const GramProblem& gp, const LyapunovCandidate& cand, double v0) {
  const Eigen::MatrixXd P = cand.embedded(gp.layout.method);
  ConicProgram prog(0);
  const GramVars v = add_gram_constraints(prog, gp);
  const int K = gp.layout.steps;
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(prog.num_vars);
  add_trace(obj, gp.AK.transpose() * P * gp.AK, v.G_first);
  obj[v.f_first + K] += cand.p();
  prog.objective = -obj;
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(prog.num_vars);
  add_trace(norm, gp.A0.transpose() * P * gp.A0, v.G_first);
  norm[v.f_first] += cand.p();
  prog.add_row(norm, Sense::Eq, v0);
  return prog;
}

WorstCaseResult worst_case_ratio(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                 const LyapunovCandidate& cand, int K, double v0) {
  const GramProblem gp = build_gram_problem(method, pc, comp, eta, K, PepMode::WorstCase);
  const ConicProgram prog = worst_case_program(gp, cand, v0);
  sdp::SolverOptions opts;
  opts.feas_tol = 1e-9;
  opts.gap_tol = 1e-10;
  WorstCaseResult res;
  res.outcome = sdp::solve(prog, opts);
  res.status = res.outcome.status;
  const int n = gp.layout.dim();
  switch (res.status) {
    case sdp::Status::Optimal:
      res.value = -res.outcome.objective;
      res.gram = sdp::matrix_value(res.outcome.x, 0, n);
      res.fvalues = res.outcome.x.segment(sdp::svec_size(n), gp.num_fvalues());
      break;
    case sdp::Status::Unbounded:
      res.value = std::numeric_limits<double>::infinity();
      break;
    case sdp::Status::Infeasible:
      res.value = std::numeric_limits<double>::quiet_NaN();
      break;
    default: {
      // accept a slightly loose solve, otherwise report
      const auto& o = res.outcome;
      if (o.primal_residual <= 1e-7 && o.dual_residual <= 1e-7 &&
          std::abs(o.objective - o.dual_objective) <= 1e-7 * std::max(1.0, std::abs(o.objective))) {
        res.value = -o.objective;
        res.gram = sdp::matrix_value(o.x, 0, n);
        res.fvalues = o.x.segment(sdp::svec_size(n), gp.num_fvalues());
        res.status = sdp::Status::Optimal;
        break;
      }
      throw SolverError("worst-case solve failed: primal residual " + std::to_string(o.primal_residual) +
                        ", dual residual " + std::to_string(o.dual_residual) + ", gap " +
                        std::to_string(o.objective - o.dual_objective) + " after " +
                        std::to_string(o.iterations) + " iterations");
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Lyapunov search

SearchProgram build_search_program(const GramProblem& gp, double rho, const SearchRestriction& r) {
  if (!(rho > 0.0)) throw std::invalid_argument("rate must be positive");
  const auto& full = state_labels(gp.layout.method);
  SearchProgram sp;
  std::vector<int> keep;
  std::vector<std::string> support = r.support;
  // with exact compression c, e and d are fixed combinations of x and g (or zero),
  // so a P over them could vanish on every trajectory
  if (support.empty() && gp.layout.exact) support = {"x", "g"};
  if (support.empty()) {
    sp.labels = full;
    for (size_t i = 0; i < full.size(); ++i) keep.push_back(static_cast<int>(i));
  } else {
    for (size_t i = 0; i < full.size(); ++i)
      if (std::find(support.begin(), support.end(), full[i]) != support.end()) {
        sp.labels.push_back(full[i]);
        keep.push_back(static_cast<int>(i));
      }
    if (keep.size() != support.size()) throw DimensionError("support names unknown state components");
  }
  const int ell = static_cast<int>(keep.size());
  Eigen::MatrixXd A0(ell, gp.layout.dim()), AK(ell, gp.layout.dim());
  for (int a = 0; a < ell; ++a) {
    A0.row(a) = gp.A0.row(keep[a]);
    AK.row(a) = gp.AK.row(keep[a]);
  }

  auto& prog = sp.prog;
  sp.P_first = prog.add_matrix_var(ell, "P", true);
  if (r.allow_p) sp.p_var = prog.add_var("p");
  for (size_t i = 0; i < gp.interp.size(); ++i)
    sp.lambda_vars.push_back(prog.add_var("lambda_" + std::to_string(gp.interp[i].i) + "_" +
                                          std::to_string(gp.interp[i].j)));
  for (size_t i = 0; i < gp.compressors.size(); ++i) sp.nu_vars.push_back(prog.add_var("nu_" + std::to_string(i)));

  auto single = [&](int v) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.num_vars);
    row[v] = 1.0;
    return row;
  };
  if (r.allow_p) prog.add_row(single(sp.p_var), Sense::Ge, 0.0);
  for (int v : sp.lambda_vars) prog.add_row(single(v), Sense::Ge, 0.0);
  for (int v : sp.nu_vars) prog.add_row(single(v), Sense::Ge, 0.0);

  // -(dV_P + sum lambda M - sum nu C) >= 0
  sdp::LmiBlock lmi;
  const int n = gp.layout.dim();
  lmi.dim = n;
  lmi.constant = Eigen::MatrixXd::Zero(n, n);
  for (int b = 0; b < ell; ++b)
    for (int a = b; a < ell; ++a) {
      const Eigen::MatrixXd E = sdp::sym_basis(ell, a, b);
      lmi.terms.emplace_back(sp.P_first + sdp::svec_index(ell, a, b),
                             -(AK.transpose() * E * AK - rho * A0.transpose() * E * A0));
    }
  for (size_t i = 0; i < gp.interp.size(); ++i) lmi.terms.emplace_back(sp.lambda_vars[i], -gp.interp[i].M);
  for (size_t i = 0; i < gp.compressors.size(); ++i) lmi.terms.emplace_back(sp.nu_vars[i], gp.compressors[i]);
  prog.lmis.push_back(std::move(lmi));

  // dv_p + sum lambda m <= 0 on every function-value slot
  const int K = gp.layout.steps;
  for (int s = 0; s < gp.num_fvalues(); ++s) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(prog.num_vars);
    if (r.allow_p) row[sp.p_var] = (s == K ? 1.0 : 0.0) - (s == 0 ? rho : 0.0);
    for (size_t i = 0; i < gp.interp.size(); ++i) row[sp.lambda_vars[i]] = gp.interp[i].m[s];
    prog.add_row(row, Sense::Le, 0.0);
  }
  // Tr P + p = 1
  Eigen::VectorXd tr = Eigen::VectorXd::Zero(prog.num_vars);
  add_trace(tr, Eigen::MatrixXd::Identity(ell, ell), sp.P_first);
  if (r.allow_p) tr[sp.p_var] = 1.0;
  prog.add_row(tr, Sense::Eq, 1.0);
  return sp;
}

static std::optional<LyapunovCandidate> extract_candidate(const SearchProgram& sp, const Eigen::VectorXd& x) {
  const int ell = static_cast<int>(sp.labels.size());
  Eigen::MatrixXd P = sdp::matrix_value(x, sp.P_first, ell);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  P = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  P = 0.5 * (P + P.transpose());
  const double p = sp.p_var >= 0 ? std::max(0.0, x[sp.p_var]) : 0.0;
  if (!(P.trace() + p > 0.0)) return std::nullopt;
  return LyapunovCandidate(sp.labels, P, p);
}

// tighter than the generic 1e-9: the EF21 program needs only ~1e-9 of relaxation
// a few 1e-5 below the optimal rate when eta is small
constexpr double kSearchMargin = 1e-11;

static SearchResult run_search(const GramProblem& gp, double rho, const SearchRestriction& r) {
  const SearchProgram sp = build_search_program(gp, rho, r);
  const sdp::FeasibilityResult fr = sdp::feasibility(sp.prog, kSearchMargin);
  SearchResult res;
  res.verdict = fr.verdict;
  res.relaxation = fr.relaxation;
  if (fr.verdict == sdp::Verdict::Feasible) {
    res.candidate = extract_candidate(sp, fr.point);
    res.lambdas.resize(sp.lambda_vars.size());
    for (size_t i = 0; i < sp.lambda_vars.size(); ++i) res.lambdas[i] = fr.point[sp.lambda_vars[i]];
    res.nus.resize(sp.nu_vars.size());
    for (size_t i = 0; i < sp.nu_vars.size(); ++i) res.nus[i] = fr.point[sp.nu_vars[i]];
  }
  return res;
}

SearchResult search_lyapunov(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                             double rho, const SearchRestriction& r) {
  const GramProblem gp = build_gram_problem(method, pc, comp, eta, 1, PepMode::Search);
  return run_search(gp, rho, r);
}

BisectionResult bisect_optimal_rate(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                    double tol, double lo, double hi) {
  if (!(tol > 0.0) || !(lo >= 0.0) || !(hi > lo)) throw std::invalid_argument("bad bisection bracket");
  const GramProblem gp = build_gram_problem(method, pc, comp, eta, 1, PepMode::Search);
  BisectionResult out;
  auto probe = [&](double rho) {
    ++out.solves;
    SearchResult r = run_search(gp, std::max(rho, 1e-12), {});
    if (r.verdict == sdp::Verdict::Undecided) ++out.undecided;
    return r;
  };
  SearchResult top = probe(hi);
  if (top.verdict != sdp::Verdict::Feasible) {
    out.rho = hi;
    out.converged = false;
    return out;
  }
  out.candidate = top.candidate;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    SearchResult r = probe(mid);
    if (r.verdict == sdp::Verdict::Feasible) {
      hi = mid;
      out.candidate = r.candidate;
    } else {
      lo = mid;
    }
  }
  out.rho = hi;
  out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------
// cycles

CycleResult cycle_check(MethodId method, const ProblemClass& pc, const Compression& comp, double eta, int K) {
  if (K < 2) throw std::invalid_argument("cycle detection needs K >= 2");
  const GramProblem gp = build_gram_problem(method, pc, comp, eta, K, PepMode::Cycle);
  const auto& lay = gp.layout;
  ConicProgram prog(0);
  const GramVars v = add_gram_constraints(prog, gp);
  Eigen::MatrixXd gapQ = sq(lay.x[K] - lay.x[0]);
  Eigen::MatrixXd normQ = sq(lay.x[0]);
  if (method != MethodId::CGD) {
    gapQ += sq(lay.aux[K] - lay.aux[0]);
    normQ += sq(lay.aux[0]);
  }
  Eigen::VectorXd obj = Eigen::VectorXd::Zero(prog.num_vars);
  add_trace(obj, gapQ, v.G_first);
  prog.objective = obj;
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(prog.num_vars);
  add_trace(norm, normQ, v.G_first);
  prog.add_row(norm, Sense::Eq, 1.0);
  sdp::SolverOptions opts;
  opts.feas_tol = 1e-9;
  opts.gap_tol = 1e-9;
  const sdp::SolveOutcome o = sdp::solve(prog, opts);
  CycleResult res;
  res.status = o.status;
  if (o.status == sdp::Status::Optimal ||
      (o.status == sdp::Status::NumericalFailure && o.primal_residual <= 1e-6 && o.dual_residual <= 1e-6)) {
    res.gap = -o.objective;
    res.is_cycle = res.gap > kCycleThreshold;
    res.status = sdp::Status::Optimal;
    return res;
  }
  throw SolverError("cycle solve ended with status " + sdp::to_string(o.status));
}

// ---------------------------------------------------------------------------
// low-rank post-processing

namespace {

std::optional<LyapunovCandidate> reweighted_trace(const GramProblem& gp, double rho, const SearchRestriction& r,
                                                  const LogdetOptions& opts) {
  SearchProgram sp = build_search_program(gp, rho, r);
  const int ell = static_cast<int>(sp.labels.size());
  Eigen::MatrixXd W = Eigen::MatrixXd::Identity(ell, ell);
  double w = 1.0;
  std::optional<LyapunovCandidate> best;
  Eigen::MatrixXd prevP;
  int prev_rank = -1;
  sdp::SolverOptions so;
  so.feas_tol = 1e-10;
  so.gap_tol = 1e-10;
  for (int it = 0; it < opts.max_iter; ++it) {
    sp.prog.objective.setZero();
    add_trace(sp.prog.objective, W, sp.P_first);
    if (sp.p_var >= 0) sp.prog.objective[sp.p_var] = w;
    const sdp::SolveOutcome o = sdp::solve(sp.prog, so);
    if (o.status != sdp::Status::Optimal &&
        !(o.status == sdp::Status::NumericalFailure && o.primal_residual <= 1e-8))
      break;
    if (sdp::constraint_violation(sp.prog, o.x).worst() > 1e-8) break;
    const Eigen::MatrixXd P = sdp::matrix_value(o.x, sp.P_first, ell);
    const double p = sp.p_var >= 0 ? std::max(0.0, o.x[sp.p_var]) : 0.0;
    auto cand = extract_candidate(sp, o.x);
    if (!cand) break;
    best = cand;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
    const double top = std::max(es.eigenvalues().maxCoeff(), p);
    int rank = (p > 1e-6 * top) ? 1 : 0;
    for (int i = 0; i < ell; ++i) rank += es.eigenvalues()[i] > 1e-6 * top;
    const bool stable = prev_rank == rank && prevP.size() && (P - prevP).norm() <= 1e-7;
    prev_rank = rank;
    prevP = P;
    if (stable) break;
    W = (P + opts.delta * Eigen::MatrixXd::Identity(ell, ell)).inverse();
    W = 0.5 * (W + W.transpose()).eval();
    w = 1.0 / (p + opts.delta);
    // keep the objective well scaled
    const double s = std::max(W.cwiseAbs().maxCoeff(), w);
    W /= s;
    w /= s;
  }
  return best;
}

bool feasible_on(const GramProblem& gp, double rho, const SearchRestriction& r) {
  if (r.support.empty() && !r.allow_p) return false;
  return run_search(gp, rho, r).verdict == sdp::Verdict::Feasible;
}

}  // namespace

LyapunovCandidate logdet_simplify(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                  double rho, const LogdetOptions& opts) {
  const GramProblem gp = build_gram_problem(method, pc, comp, eta, 1, PepMode::Search);
  SearchRestriction r;
  auto cand = reweighted_trace(gp, rho, r, opts);
  if (!cand) throw Error("logdet pass found no feasible candidate at rho = " + std::to_string(rho));
  if (!opts.prune) return *cand;

  // drop state components, smallest weight first, while the LMI stays feasible
  r.support = cand->labels();
  if (cand->p() <= 1e-6) {
    SearchRestriction t = r;
    t.allow_p = false;
    if (feasible_on(gp, rho, t)) r.allow_p = false;
  }
  std::vector<int> order(r.support.size());
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd diag = cand->P().diagonal();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] < diag[b]; });
  std::vector<std::string> labels = r.support;
  std::vector<std::string> kept = labels;
  for (int idx : order) {
    SearchRestriction t = r;
    t.support.clear();
    for (const auto& l : kept)
      if (l != labels[idx]) t.support.push_back(l);
    if (t.support.empty()) continue;
    if (feasible_on(gp, rho, t)) kept = t.support;
  }
  r.support = kept;
  auto reduced = reweighted_trace(gp, rho, r, opts);
  if (!reduced) return *cand;
  return *reduced;
}

}  // namespace tightfeed
