#include <cmath>

#include "sdp_internal.hpp"

namespace tightfeed::sdp {

namespace detail {

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v[k++] = (i == j) ? M(i, j) : M_SQRT2 * M(i, j);
  return v;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  Eigen::MatrixXd M(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      const double a = (i == j) ? v[k] : v[k] / M_SQRT2;
      M(i, j) = M(j, i) = a;
      ++k;
    }
  return M;
}

Standard to_standard(const ConicProgram& prog) {
  Standard st;
  const int n = prog.num_vars;
  for (size_t r = 0; r < prog.rows.size(); ++r)
    (prog.rows[r].sense == Sense::Eq ? st.eq_rows : st.ineq_rows).push_back(static_cast<int>(r));
  st.n_lp = static_cast<int>(st.ineq_rows.size());
  int m = st.n_lp;
  for (const auto& b : prog.lmis) {
    st.psd.push_back(b.dim);
    m += svec_size(b.dim);
  }
  st.c = prog.objective;
  st.A.resize(st.eq_rows.size(), n);
  st.b.resize(st.eq_rows.size());
  for (size_t k = 0; k < st.eq_rows.size(); ++k) {
    const auto& r = prog.rows[st.eq_rows[k]];
    st.A.row(k) = r.coeffs.transpose();
    st.b[k] = r.rhs;
  }
  st.G = Eigen::MatrixXd::Zero(m, n);
  st.h = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < st.n_lp; ++k) {
    const auto& r = prog.rows[st.ineq_rows[k]];
    const double sgn = r.sense == Sense::Le ? 1.0 : -1.0;
    st.G.row(k) = sgn * r.coeffs.transpose();
    st.h[k] = sgn * r.rhs;
  }
  int off = st.n_lp;
  for (const auto& b : prog.lmis) {
    const int d = svec_size(b.dim);
    st.h.segment(off, d) = svec(b.constant);
    for (const auto& [v, M] : b.terms) st.G.col(v).segment(off, d) -= svec(M);
    off += d;
  }
  return st;
}

void finish_outcome(const ConicProgram& prog, const Standard& st, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& z, SolveOutcome& out) {
  out.x = x;
  out.objective = prog.objective.dot(x);
  out.row_duals = Eigen::VectorXd::Zero(prog.rows.size());
  for (size_t k = 0; k < st.eq_rows.size(); ++k) out.row_duals[st.eq_rows[k]] = y[k];
  for (int k = 0; k < st.n_lp; ++k) out.row_duals[st.ineq_rows[k]] = z[k];
  out.lmi_duals.clear();
  out.lmi_values.clear();
  int off = st.n_lp;
  for (const auto& b : prog.lmis) {
    const int d = svec_size(b.dim);
    out.lmi_duals.push_back(smat(z.segment(off, d), b.dim));
    Eigen::MatrixXd F = b.constant;
    for (const auto& [i, M] : b.terms) F += x[i] * M;
    out.lmi_values.push_back(F);
    off += d;
  }
}

}  // namespace detail

SolveOutcome solve(const ConicProgram& prog, const SolverOptions& opts) {
  prog.validate();
  if (opts.backend == Backend::Splitting) return detail::solve_splitting(prog, opts);
  return detail::solve_ipm(prog, opts);
}

}  // namespace tightfeed::sdp
