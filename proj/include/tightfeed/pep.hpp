#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tightfeed/core.hpp"
#include "tightfeed/sdp.hpp"

namespace tightfeed {

// Independent symbols of a K-step run plus the coefficient rows of every
// labelled quantity. Point index K+1 denotes the minimizer, whose rows are zero.
struct BasisLayout {
  MethodId method = MethodId::EF;
  int steps = 1;
  double eta = 0.0;
  // exact compression substituted (eps = 0): no compressed-message symbols
  bool exact = false;
  std::vector<std::string> symbols;
  std::vector<Eigen::RowVectorXd> x, g, c, aux;

  int dim() const { return static_cast<int>(symbols.size()); }
  int num_points() const { return steps + 2; }
  int star() const { return steps + 1; }
  // x and g rows of point i (zero for the minimizer)
  Eigen::RowVectorXd x_row(int i) const;
  Eigen::RowVectorXd g_row(int i) const;
  // state rows at step k, in state_labels(method) order
  Eigen::MatrixXd state_rows(int k) const;
};

BasisLayout build_layout(MethodId method, int K, double eta, bool exact = false);

struct InterpolationTerm {
  int i = 0, j = 0;      // point indices, star() for the minimizer
  Eigen::MatrixXd M;     // quadratic part over the symbols
  Eigen::VectorXd m;     // function-value part over f_0..f_K
};

// phi_ij = Tr(M G) + m . f >= 0 for every ordered pair; accepts 0 <= mu < L
std::vector<InterpolationTerm> interpolation_matrices(const BasisLayout& layout, double mu, double L);
std::vector<InterpolationTerm> interpolation_matrices(const BasisLayout& layout, const ProblemClass& pc);

// Tr(C G) <= 0 per compression event
std::vector<Eigen::MatrixXd> compressor_matrices(const BasisLayout& layout, const Compression& comp);

enum class PepMode { WorstCase, Search, Cycle };
std::string to_string(PepMode m);

struct GramProblem {
  BasisLayout layout;
  double mu = 0.0, L = 0.0, epsilon = 0.0;
  std::vector<InterpolationTerm> interp;
  std::vector<Eigen::MatrixXd> compressors;
  Eigen::MatrixXd A0, AK;  // state rows at steps 0 and K
  PepMode mode = PepMode::WorstCase;

  int num_fvalues() const { return layout.steps + 1; }
  // A_K' P A_K - rho A_0' P A_0 for a candidate over the full state
  Eigen::MatrixXd lyapunov_difference(const Eigen::MatrixXd& P, double rho) const;
  // p (e_K - rho e_0) over the function-value slots
  Eigen::VectorXd lyapunov_difference_f(double p, double rho) const;
};

GramProblem build_gram_problem(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                               int K, PepMode mode);

nlohmann::json to_json(const GramProblem& gp);
GramProblem gram_problem_from_json(const nlohmann::json& j);

struct WorstCaseResult {
  double value = 0.0;  // rho_K, +inf when unbounded
  sdp::Status status = sdp::Status::NumericalFailure;
  Eigen::MatrixXd gram;
  Eigen::VectorXd fvalues;
  sdp::SolveOutcome outcome;
};

sdp::ConicProgram worst_case_program(const GramProblem& gp, const LyapunovCandidate& cand, double v0 = 1.0);

// maximize V_K subject to V_0 = v0 over the K-step Gram problem
WorstCaseResult worst_case_ratio(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                 const LyapunovCandidate& cand, int K, double v0 = 1.0);

struct SearchRestriction {
  // state labels allowed in P; empty means all
  std::vector<std::string> support;
  bool allow_p = true;
};

struct SearchProgram {
  sdp::ConicProgram prog;
  std::vector<std::string> labels;
  int P_first = 0;
  int p_var = -1;
  std::vector<int> lambda_vars, nu_vars;
};

SearchProgram build_search_program(const GramProblem& gp, double rho, const SearchRestriction& r = {});

struct SearchResult {
  sdp::Verdict verdict = sdp::Verdict::Undecided;
  std::optional<LyapunovCandidate> candidate;
  Eigen::VectorXd lambdas, nus;
  double relaxation = 0.0;
};

SearchResult search_lyapunov(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                             double rho, const SearchRestriction& r = {});

struct BisectionResult {
  double rho = 0.0;
  bool converged = false;  // false when even rho = hi is infeasible
  std::optional<LyapunovCandidate> candidate;
  int solves = 0;
  int undecided = 0;
};

BisectionResult bisect_optimal_rate(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                    double tol = 1e-6, double lo = 0.0, double hi = 2.0);

struct CycleResult {
  bool is_cycle = false;
  double gap = 0.0;  // optimum of the negated return gap
  sdp::Status status = sdp::Status::NumericalFailure;
};

inline constexpr double kCycleThreshold = -1e-3;

CycleResult cycle_check(MethodId method, const ProblemClass& pc, const Compression& comp, double eta, int K = 2);

struct LogdetOptions {
  int max_iter = 20;
  double delta = 1e-6;
  bool prune = true;
};

LyapunovCandidate logdet_simplify(MethodId method, const ProblemClass& pc, const Compression& comp, double eta,
                                  double rho, const LogdetOptions& opts = {});

}  // namespace tightfeed
