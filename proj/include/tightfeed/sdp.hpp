#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tightfeed::sdp {

enum class Sense { Eq, Le, Ge };

// coeffs . x  (sense)  rhs
struct Row {
  Eigen::VectorXd coeffs;
  Sense sense = Sense::Eq;
  double rhs = 0.0;
};

// constant + sum_i x_i * F_i  must be PSD
struct LmiBlock {
  int dim = 0;
  Eigen::MatrixXd constant;
  std::vector<std::pair<int, Eigen::MatrixXd>> terms;
};

// minimize objective . x over free scalars x subject to rows and LMIs.
// A PSD matrix variable is declared through an LMI on its svec entries.
struct ConicProgram {
  int num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<Row> rows;
  std::vector<LmiBlock> lmis;
  std::vector<std::string> names;

  explicit ConicProgram(int n = 0);
  int add_var(const std::string& name = "");
  // adds an n x n symmetric matrix variable; returns the index of its first svec entry
  int add_matrix_var(int n, const std::string& name = "", bool psd = true);
  void add_row(Eigen::VectorXd coeffs, Sense s, double rhs);
  void validate() const;
};

// lower-triangle column-major index of (i, j) in the svec of an n x n matrix
int svec_index(int n, int i, int j);
int svec_size(int n);
// weight of entry (i,j) when matrix variable entries are stored as plain values
Eigen::MatrixXd matrix_value(const Eigen::VectorXd& x, int first, int n);
// E_ij basis matrix of a symmetric variable entry
Eigen::MatrixXd sym_basis(int n, int i, int j);

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };
std::string to_string(Status s);

enum class Backend { InteriorPoint, Splitting };

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  // 0 picks the backend default: 200 interior-point steps, 50000 splitting steps
  int max_iter = 0;
  Backend backend = Backend::InteriorPoint;
};

struct SolveOutcome {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd x;
  // duals: equality rows may be signed, inequality rows are >= 0
  Eigen::VectorXd row_duals;
  std::vector<Eigen::MatrixXd> lmi_duals;
  // value of each LMI at x
  std::vector<Eigen::MatrixXd> lmi_values;
  double objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

SolveOutcome solve(const ConicProgram& prog, const SolverOptions& opts = {});

struct Violation {
  double equality = 0.0;
  double inequality = 0.0;
  double lmi = 0.0;  // minus the smallest LMI eigenvalue, clipped at 0
  double worst() const { return std::max(equality, std::max(inequality, lmi)); }
};

// recomputed from the program data only
Violation constraint_violation(const ConicProgram& prog, const Eigen::VectorXd& x);

enum class Verdict { Feasible, Infeasible, Undecided };
std::string to_string(Verdict v);

struct FeasibilityResult {
  Verdict verdict = Verdict::Undecided;
  Eigen::VectorXd point;
  // phase-one optimum t* (the uniform cone relaxation needed) and its dual lower bound
  double relaxation = 0.0;
  double dual_bound = 0.0;
  Violation violation;
  SolveOutcome phase1;
};

FeasibilityResult feasibility(const ConicProgram& prog, double margin = 1e-9);

// minimize t with every cone constraint relaxed by t*I and t >= -1; t is the last variable
ConicProgram phase_one(const ConicProgram& prog);

nlohmann::json to_json(const ConicProgram& prog);
ConicProgram program_from_json(const nlohmann::json& j);

}  // namespace tightfeed::sdp
