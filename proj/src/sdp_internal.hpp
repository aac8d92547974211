#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tightfeed/sdp.hpp"

namespace tightfeed::sdp::detail {

// min c'x  s.t.  A x = b,  G x + s = h,  s in R+^n_lp x S+^{psd[0]} x ...
struct Standard {
  Eigen::MatrixXd A, G;
  Eigen::VectorXd b, h, c;
  int n_lp = 0;
  std::vector<int> psd;
  std::vector<int> eq_rows, ineq_rows;
  int m() const { return static_cast<int>(h.size()); }
};

Standard to_standard(const ConicProgram& prog);

// scaled svec with sqrt(2) off-diagonal weights (isometric)
Eigen::VectorXd svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);

// fills outcome fields shared by the backends
void finish_outcome(const ConicProgram& prog, const Standard& st, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& z, SolveOutcome& out);

SolveOutcome solve_ipm(const ConicProgram& prog, const SolverOptions& opts);
SolveOutcome solve_splitting(const ConicProgram& prog, const SolverOptions& opts);

}  // namespace tightfeed::sdp::detail
