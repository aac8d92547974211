#include <cmath>
#include <stdexcept>

#include "tightfeed/sdp.hpp"

namespace tightfeed::sdp {

ConicProgram::ConicProgram(int n) : num_vars(n), objective(Eigen::VectorXd::Zero(n)), names(n) {}

int ConicProgram::add_var(const std::string& name) {
  objective.conservativeResize(num_vars + 1);
  objective[num_vars] = 0.0;
  for (auto& r : rows) {
    r.coeffs.conservativeResize(num_vars + 1);
    r.coeffs[num_vars] = 0.0;
  }
  names.push_back(name);
  return num_vars++;
}

int ConicProgram::add_matrix_var(int n, const std::string& name, bool psd) {
  const int first = num_vars;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) add_var(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
  if (psd) {
    LmiBlock b;
    b.dim = n;
    b.constant = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) b.terms.emplace_back(first + svec_index(n, i, j), sym_basis(n, i, j));
    lmis.push_back(std::move(b));
  }
  return first;
}

void ConicProgram::add_row(Eigen::VectorXd coeffs, Sense s, double rhs) {
  if (coeffs.size() != num_vars) throw std::invalid_argument("row length does not match variable count");
  rows.push_back(Row{std::move(coeffs), s, rhs});
}

void ConicProgram::validate() const {
  if (objective.size() != num_vars) throw std::invalid_argument("objective length mismatch");
  if (!objective.allFinite()) throw std::invalid_argument("objective has non-finite entries");
  for (const auto& r : rows) {
    if (r.coeffs.size() != num_vars) throw std::invalid_argument("row references undeclared variables");
    if (!r.coeffs.allFinite() || !std::isfinite(r.rhs)) throw std::invalid_argument("row has non-finite entries");
  }
  for (const auto& b : lmis) {
    if (b.dim < 1) throw std::invalid_argument("LMI block must have positive dimension");
    auto check = [&](const Eigen::MatrixXd& M) {
      if (M.rows() != b.dim || M.cols() != b.dim) throw std::invalid_argument("LMI matrix has wrong shape");
      if (!M.allFinite()) throw std::invalid_argument("LMI matrix has non-finite entries");
      if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("LMI coefficient matrix is not symmetric");
    };
    check(b.constant);
    for (const auto& [v, M] : b.terms) {
      if (v < 0 || v >= num_vars) throw std::invalid_argument("LMI term references an undeclared variable");
      check(M);
    }
  }
}

int svec_index(int n, int i, int j) {
  if (i < j) std::swap(i, j);
  // column j starts after columns 0..j-1 of lengths n, n-1, ...
  return j * n - j * (j - 1) / 2 + (i - j);
}

int svec_size(int n) { return n * (n + 1) / 2; }

Eigen::MatrixXd matrix_value(const Eigen::VectorXd& x, int first, int n) {
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) M(i, j) = M(j, i) = x[first + svec_index(n, i, j)];
  return M;
}

Eigen::MatrixXd sym_basis(int n, int i, int j) {
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  E(i, j) = 1.0;
  E(j, i) = 1.0;
  return E;
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::Unbounded:
      return "unbounded";
    default:
      return "numerical-failure";
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible:
      return "feasible";
    case Verdict::Infeasible:
      return "infeasible";
    default:
      return "undecided";
  }
}

Violation constraint_violation(const ConicProgram& prog, const Eigen::VectorXd& x) {
  Violation v;
  for (const auto& r : prog.rows) {
    const double ax = r.coeffs.dot(x);
    switch (r.sense) {
      case Sense::Eq:
        v.equality = std::max(v.equality, std::abs(ax - r.rhs));
        break;
      case Sense::Le:
        v.inequality = std::max(v.inequality, ax - r.rhs);
        break;
      case Sense::Ge:
        v.inequality = std::max(v.inequality, r.rhs - ax);
        break;
    }
  }
  for (const auto& b : prog.lmis) {
    Eigen::MatrixXd F = b.constant;
    for (const auto& [i, M] : b.terms) F += x[i] * M;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(F, Eigen::EigenvaluesOnly);
    v.lmi = std::max(v.lmi, -es.eigenvalues().minCoeff());
  }
  return v;
}

ConicProgram phase_one(const ConicProgram& prog) {
  ConicProgram p1 = prog;
  p1.objective.setZero();
  const int t = p1.add_var("phase1_t");
  p1.objective[t] = 1.0;
  for (auto& r : p1.rows) {
    if (r.sense == Sense::Le) r.coeffs[t] = -1.0;
    if (r.sense == Sense::Ge) r.coeffs[t] = 1.0;
  }
  for (auto& b : p1.lmis) b.terms.emplace_back(t, Eigen::MatrixXd::Identity(b.dim, b.dim));
  Eigen::VectorXd lb = Eigen::VectorXd::Zero(p1.num_vars);
  lb[t] = 1.0;
  p1.add_row(lb, Sense::Ge, -1.0);
  return p1;
}

FeasibilityResult feasibility(const ConicProgram& prog, double margin) {
  prog.validate();
  FeasibilityResult res;
  const ConicProgram p1 = phase_one(prog);
  SolverOptions opts;
  opts.feas_tol = 1e-11;
  opts.gap_tol = 1e-12;
  res.phase1 = solve(p1, opts);
  const auto& out = res.phase1;
  if (out.status == Status::Infeasible) {
    // only the equality rows can make phase one infeasible
    res.verdict = Verdict::Infeasible;
    return res;
  }
  if (out.x.size() == p1.num_vars) {
    res.point = out.x.head(prog.num_vars);
    res.relaxation = out.x[p1.num_vars - 1];
    res.dual_bound = out.dual_objective;
    res.violation = constraint_violation(prog, res.point);
    if (res.violation.worst() <= margin) {
      res.verdict = Verdict::Feasible;
      return res;
    }
  }
  if (out.status == Status::Optimal && out.dual_residual <= 1e-9 && res.dual_bound > margin) {
    res.verdict = Verdict::Infeasible;
    return res;
  }
  res.verdict = Verdict::Undecided;
  return res;
}

static std::string sense_name(Sense s) { return s == Sense::Eq ? "eq" : (s == Sense::Le ? "le" : "ge"); }

static Sense sense_from(const std::string& s) {
  if (s == "eq") return Sense::Eq;
  if (s == "le") return Sense::Le;
  if (s == "ge") return Sense::Ge;
  throw std::invalid_argument("unknown row sense " + s);
}

static std::vector<double> row_major(const Eigen::MatrixXd& M) {
  std::vector<double> out;
  out.reserve(M.size());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
  return out;
}

static Eigen::MatrixXd from_row_major(const std::vector<double>& v, int n) {
  if (static_cast<int>(v.size()) != n * n) throw std::invalid_argument("matrix entry count mismatch");
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = v[i * n + j];
  return M;
}

nlohmann::json to_json(const ConicProgram& prog) {
  nlohmann::json j;
  j["num_vars"] = prog.num_vars;
  j["names"] = prog.names;
  j["objective"] = std::vector<double>(prog.objective.data(), prog.objective.data() + prog.objective.size());
  j["rows"] = nlohmann::json::array();
  for (const auto& r : prog.rows) {
    nlohmann::json jr;
    jr["coeffs"] = std::vector<double>(r.coeffs.data(), r.coeffs.data() + r.coeffs.size());
    jr["sense"] = sense_name(r.sense);
    jr["rhs"] = r.rhs;
    j["rows"].push_back(jr);
  }
  j["lmis"] = nlohmann::json::array();
  for (const auto& b : prog.lmis) {
    nlohmann::json jb;
    jb["dim"] = b.dim;
    jb["constant"] = row_major(b.constant);
    jb["terms"] = nlohmann::json::array();
    for (const auto& [v, M] : b.terms) jb["terms"].push_back({{"var", v}, {"matrix", row_major(M)}});
    j["lmis"].push_back(jb);
  }
  return j;
}

ConicProgram program_from_json(const nlohmann::json& j) {
  ConicProgram p(j.at("num_vars").get<int>());
  if (j.contains("names")) p.names = j.at("names").get<std::vector<std::string>>();
  p.names.resize(p.num_vars);
  auto obj = j.at("objective").get<std::vector<double>>();
  if (static_cast<int>(obj.size()) != p.num_vars) throw std::invalid_argument("objective length mismatch");
  p.objective = Eigen::Map<Eigen::VectorXd>(obj.data(), obj.size());
  for (const auto& jr : j.at("rows")) {
    auto c = jr.at("coeffs").get<std::vector<double>>();
    if (static_cast<int>(c.size()) != p.num_vars) throw std::invalid_argument("row length mismatch");
    p.rows.push_back(Row{Eigen::Map<Eigen::VectorXd>(c.data(), c.size()),
                         sense_from(jr.at("sense").get<std::string>()), jr.at("rhs").get<double>()});
  }
  for (const auto& jb : j.at("lmis")) {
    LmiBlock b;
    b.dim = jb.at("dim").get<int>();
    b.constant = from_row_major(jb.at("constant").get<std::vector<double>>(), b.dim);
    for (const auto& jt : jb.at("terms"))
      b.terms.emplace_back(jt.at("var").get<int>(),
                           from_row_major(jt.at("matrix").get<std::vector<double>>(), b.dim));
    p.lmis.push_back(std::move(b));
  }
  p.validate();
  return p;
}

}  // namespace tightfeed::sdp
