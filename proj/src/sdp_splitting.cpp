// ADMM on  min c'x  s.t.  Ahat x + s = bhat,  s in {0}^p x K,
// alternating a cached linear solve with cone projections.
#include <cmath>
#include <limits>

#include "sdp_internal.hpp"

namespace tightfeed::sdp::detail {

namespace {

void project(Eigen::VectorXd& v, int p, int n_lp, const std::vector<int>& psd) {
  v.head(p).setZero();
  for (int i = p; i < p + n_lp; ++i) v[i] = std::max(v[i], 0.0);
  int off = p + n_lp;
  for (int d : psd) {
    const int k = svec_size(d);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(smat(v.segment(off, k), d));
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    v.segment(off, k) = svec(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
    off += k;
  }
}

// distance of v from the dual cone {free}^p x K (K self-dual); only the cone part matters
double dual_cone_violation(const Eigen::VectorXd& v, int p, int n_lp, const std::vector<int>& psd) {
  Eigen::VectorXd w = v;
  project(w, p, n_lp, psd);
  Eigen::VectorXd diff = v - w;
  diff.head(p).setZero();
  return diff.norm();
}

}  // namespace

SolveOutcome solve_splitting(const ConicProgram& prog, const SolverOptions& opts) {
  const Standard st = to_standard(prog);
  const int n = static_cast<int>(st.c.size()), p = static_cast<int>(st.b.size()), m = st.m();
  const int N = p + m;
  Eigen::MatrixXd Ah(N, n);
  Ah << st.A, st.G;
  Eigen::VectorXd bh(N);
  bh << st.b, st.h;

  const double rho = 1.0, sigma = 1e-6, relax = 1.6;
  const Eigen::MatrixXd Mx = sigma * Eigen::MatrixXd::Identity(n, n) + rho * Ah.transpose() * Ah;
  const Eigen::LDLT<Eigen::MatrixXd> fact(Mx);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n), s = Eigen::VectorXd::Zero(N), y = Eigen::VectorXd::Zero(N);
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 50000;
  const double nb = std::max(1.0, bh.norm()), nc = std::max(1.0, st.c.norm());
  SolveOutcome out;
  out.status = Status::NumericalFailure;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::VectorXd x_old = x, y_old = y;
    x = fact.solve(sigma * x - st.c - Ah.transpose() * (y + rho * (s - bh)));
    const Eigen::VectorXd ax = relax * (Ah * x) + (1.0 - relax) * (bh - s);
    Eigen::VectorXd v = bh - ax - y / rho;
    project(v, p, st.n_lp, st.psd);
    s = v;
    y += rho * (ax + s - bh);

    if (it % 10 != 0) continue;
    const double pres = (Ah * x + s - bh).norm() / nb;
    const double dres = (st.c + Ah.transpose() * y).norm() / nc;
    const double pcost = st.c.dot(x), dcost = -bh.dot(y);
    const double gap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    if (pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol) {
      out.status = Status::Optimal;
      break;
    }
    // divergence directions
    const Eigen::VectorXd dy = y - y_old;
    const double bdy = bh.dot(dy);
    if (bdy < 0.0 && dy.norm() > 1e-12) {
      const double t = -bdy;
      if ((Ah.transpose() * dy).norm() <= 1e-6 * t && dual_cone_violation(dy, p, st.n_lp, st.psd) <= 1e-6 * t) {
        out.status = Status::Infeasible;
        break;
      }
    }
    const Eigen::VectorXd dx = x - x_old;
    const double cdx = st.c.dot(dx);
    if (cdx < 0.0 && dx.norm() > 1e-12) {
      Eigen::VectorXd w = -(Ah * dx);
      Eigen::VectorXd pw = w;
      project(pw, p, st.n_lp, st.psd);
      if ((w - pw).norm() <= 1e-6 * -cdx) {
        out.status = Status::Unbounded;
        break;
      }
    }
  }
  out.iterations = it;
  // ADMM's y is the multiplier of  Ahat x + s = bhat,  matching the interior-point sign convention
  finish_outcome(prog, st, x, y.head(p), y.tail(m), out);
  out.dual_objective = -bh.dot(y);
  if (out.status == Status::Infeasible) out.objective = std::numeric_limits<double>::infinity();
  if (out.status == Status::Unbounded) out.objective = -std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace tightfeed::sdp::detail
