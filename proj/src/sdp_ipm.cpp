// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
// and a Mehrotra predictor-corrector, on small dense data.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

#include "sdp_internal.hpp"

namespace tightfeed::sdp::detail {

namespace {

struct PsdScaling {
  int n = 0;
  Eigen::MatrixXd R, Rinv;
  Eigen::VectorXd lambda;
};

struct Scaling {
  Eigen::VectorXd lp_w, lp_lambda;
  std::vector<PsdScaling> psd;
};

class ConeOps {
 public:
  ConeOps(int n_lp, std::vector<int> psd) : n_lp_(n_lp), psd_(std::move(psd)) {
    m_ = n_lp_;
    for (int d : psd_) m_ += svec_size(d);
    degree_ = n_lp_;
    for (int d : psd_) degree_ += d;
  }
  int m() const { return m_; }
  int degree() const { return degree_; }

  Eigen::VectorXd identity() const {
    Eigen::VectorXd e(m_);
    e.head(n_lp_).setOnes();
    int off = n_lp_;
    for (int d : psd_) {
      e.segment(off, svec_size(d)) = svec(Eigen::MatrixXd::Identity(d, d));
      off += svec_size(d);
    }
    return e;
  }

  // smallest "eigenvalue" of v in the cone sense
  double min_eig(const Eigen::VectorXd& v) const {
    double m = std::numeric_limits<double>::infinity();
    if (n_lp_ > 0) m = v.head(n_lp_).minCoeff();
    int off = n_lp_;
    for (int d : psd_) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(smat(v.segment(off, svec_size(d)), d),
                                                        Eigen::EigenvaluesOnly);
      m = std::min(m, es.eigenvalues().minCoeff());
      off += svec_size(d);
    }
    return m;
  }

  bool compute_scaling(const Eigen::VectorXd& s, const Eigen::VectorXd& z, Scaling& W) const {
    W.lp_w = (s.head(n_lp_).array() / z.head(n_lp_).array()).sqrt();
    W.lp_lambda = (s.head(n_lp_).array() * z.head(n_lp_).array()).sqrt();
    W.psd.clear();
    int off = n_lp_;
    for (int d : psd_) {
      const int k = svec_size(d);
      const Eigen::MatrixXd S = smat(s.segment(off, k), d), Z = smat(z.segment(off, k), d);
      Eigen::MatrixXd Ls, Lz;
      if (!factor(S, Ls) || !factor(Z, Lz)) return false;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Eigen::VectorXd sig = svd.singularValues();
      if (!(sig.minCoeff() > 0.0)) return false;
      PsdScaling p;
      p.n = d;
      p.lambda = sig;
      const Eigen::VectorXd isq = sig.array().rsqrt();
      p.R = Ls * svd.matrixV() * isq.asDiagonal();
      p.Rinv = sig.array().sqrt().matrix().asDiagonal() * svd.matrixV().transpose() *
               Ls.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
      W.psd.push_back(std::move(p));
      off += k;
    }
    return true;
  }

  Eigen::VectorXd lambda_vec(const Scaling& W) const {
    Eigen::VectorXd l(m_);
    l.head(n_lp_) = W.lp_lambda;
    int off = n_lp_;
    for (const auto& p : W.psd) {
      l.segment(off, svec_size(p.n)) = svec(p.lambda.asDiagonal().toDenseMatrix());
      off += svec_size(p.n);
    }
    return l;
  }

  // W u
  Eigen::VectorXd scale(const Scaling& W, const Eigen::VectorXd& u) const {
    return apply(W, u, [](const PsdScaling& p, const Eigen::MatrixXd& U) {
      return Eigen::MatrixXd(p.R.transpose() * U * p.R);
    }, [](double w, double v) { return w * v; });
  }
  // W^T u
  Eigen::VectorXd scale_t(const Scaling& W, const Eigen::VectorXd& u) const {
    return apply(W, u, [](const PsdScaling& p, const Eigen::MatrixXd& U) {
      return Eigen::MatrixXd(p.R * U * p.R.transpose());
    }, [](double w, double v) { return w * v; });
  }
  // W^{-1} u
  Eigen::VectorXd unscale(const Scaling& W, const Eigen::VectorXd& u) const {
    return apply(W, u, [](const PsdScaling& p, const Eigen::MatrixXd& U) {
      return Eigen::MatrixXd(p.Rinv.transpose() * U * p.Rinv);
    }, [](double w, double v) { return v / w; });
  }
  // W^{-T} u
  Eigen::VectorXd unscale_t(const Scaling& W, const Eigen::VectorXd& u) const {
    return apply(W, u, [](const PsdScaling& p, const Eigen::MatrixXd& U) {
      return Eigen::MatrixXd(p.Rinv * U * p.Rinv.transpose());
    }, [](double w, double v) { return v / w; });
  }

  // Jordan product u o v
  Eigen::VectorXd jordan(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = u.head(n_lp_).cwiseProduct(v.head(n_lp_));
    int off = n_lp_;
    for (int d : psd_) {
      const int k = svec_size(d);
      const Eigen::MatrixXd U = smat(u.segment(off, k), d), V = smat(v.segment(off, k), d);
      out.segment(off, k) = svec(0.5 * (U * V + V * U));
      off += k;
    }
    return out;
  }

  // lambda o u, lambda diagonal in the scaled frame
  Eigen::VectorXd lambda_prod(const Scaling& W, const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = W.lp_lambda.cwiseProduct(u.head(n_lp_));
    int off = n_lp_;
    for (const auto& p : W.psd) {
      const int k = svec_size(p.n);
      Eigen::MatrixXd U = smat(u.segment(off, k), p.n);
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) U(i, j) *= 0.5 * (p.lambda[i] + p.lambda[j]);
      out.segment(off, k) = svec(U);
      off += k;
    }
    return out;
  }

  // lambda \ u
  Eigen::VectorXd lambda_div(const Scaling& W, const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(m_);
    out.head(n_lp_) = u.head(n_lp_).cwiseQuotient(W.lp_lambda);
    int off = n_lp_;
    for (const auto& p : W.psd) {
      const int k = svec_size(p.n);
      Eigen::MatrixXd U = smat(u.segment(off, k), p.n);
      for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) U(i, j) /= 0.5 * (p.lambda[i] + p.lambda[j]);
      out.segment(off, k) = svec(U);
      off += k;
    }
    return out;
  }

  // largest alpha with lambda + alpha d in the cone (scaled frame)
  double max_step(const Scaling& W, const Eigen::VectorXd& d) const {
    double a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_lp_; ++i)
      if (d[i] < 0.0) a = std::min(a, -W.lp_lambda[i] / d[i]);
    int off = n_lp_;
    for (const auto& p : W.psd) {
      const int k = svec_size(p.n);
      const Eigen::VectorXd isq = p.lambda.array().rsqrt();
      const Eigen::MatrixXd D = isq.asDiagonal() * smat(d.segment(off, k), p.n) * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
      const double mn = es.eigenvalues().minCoeff();
      if (mn < 0.0) a = std::min(a, -1.0 / mn);
      off += k;
    }
    return a;
  }

 private:
  static bool factor(const Eigen::MatrixXd& S, Eigen::MatrixXd& Lout) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() == Eigen::Success) {
      Lout = llt.matrixL();
      if (Lout.diagonal().minCoeff() > 0.0) return true;
    }
    return false;
  }

  template <class F, class G>
  Eigen::VectorXd apply(const Scaling& W, const Eigen::VectorXd& u, F psd_op, G lp_op) const {
    Eigen::VectorXd out(m_);
    for (int i = 0; i < n_lp_; ++i) out[i] = lp_op(W.lp_w[i], u[i]);
    int off = n_lp_;
    for (const auto& p : W.psd) {
      const int k = svec_size(p.n);
      out.segment(off, k) = svec(psd_op(p, smat(u.segment(off, k), p.n)));
      off += k;
    }
    return out;
  }

  int n_lp_;
  std::vector<int> psd_;
  int m_ = 0;
  int degree_ = 0;
};

// KKT system in the scaled frame: with u = W z the block -W^T W becomes -I,
// which keeps the matrix well conditioned as the iterates approach the boundary
class KktSolver {
 public:
  KktSolver(const Standard& st, const ConeOps& cone) : st_(st), cone_(cone) {
    n_ = static_cast<int>(st.c.size());
    p_ = static_cast<int>(st.b.size());
    m_ = st.m();
  }

  void factor_identity() {
    W_ = nullptr;
    build(st_.G);
  }

  void factor(const Scaling& W) {
    W_ = &W;
    Eigen::MatrixXd Gs(m_, n_);
    for (int j = 0; j < n_; ++j) Gs.col(j) = cone_.unscale_t(W, st_.G.col(j));
    build(Gs);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd sol = solve_once(rhs);
    // refine against the unscaled system
    for (int it = 0; it < 3; ++it) {
      const Eigen::VectorXd res = rhs - apply(sol);
      if (res.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) break;
      sol += solve_once(res);
    }
    return sol;
  }

 private:
  Eigen::VectorXd solve_once(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd r = rhs;
    if (W_) r.tail(m_) = cone_.unscale_t(*W_, rhs.tail(m_));
    Eigen::VectorXd sol = lu_.solve(r);
    if (W_) sol.tail(m_) = cone_.unscale(*W_, sol.tail(m_));
    return sol;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    const Eigen::VectorXd x = v.head(n_), y = v.segment(n_, p_), z = v.tail(m_);
    Eigen::VectorXd out(n_ + p_ + m_);
    out.head(n_) = st_.A.transpose() * y + st_.G.transpose() * z;
    out.segment(n_, p_) = st_.A * x;
    const Eigen::VectorXd Hz = W_ ? cone_.scale_t(*W_, cone_.scale(*W_, z)) : z;
    out.tail(m_) = st_.G * x - Hz;
    return out;
  }

  void build(const Eigen::MatrixXd& Gs) {
    const int N = n_ + p_ + m_;
    K_ = Eigen::MatrixXd::Zero(N, N);
    K_.block(0, n_, n_, p_) = st_.A.transpose();
    K_.block(0, n_ + p_, n_, m_) = Gs.transpose();
    K_.block(n_, 0, p_, n_) = st_.A;
    K_.block(n_ + p_, 0, m_, n_) = Gs;
    K_.block(n_ + p_, n_ + p_, m_, m_) = -Eigen::MatrixXd::Identity(m_, m_);
    const double delta = 1e-12;
    Eigen::MatrixXd Kr = K_;
    Kr.diagonal().head(n_).array() += delta;
    Kr.diagonal().segment(n_, p_).array() -= delta;
    lu_.compute(Kr);
  }

  const Standard& st_;
  const ConeOps& cone_;
  const Scaling* W_ = nullptr;
  int n_, p_, m_;
  Eigen::MatrixXd K_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

}  // namespace

SolveOutcome solve_ipm(const ConicProgram& prog, const SolverOptions& opts) {
  const Standard st = to_standard(prog);
  const ConeOps cone(st.n_lp, st.psd);
  const int n = static_cast<int>(st.c.size()), p = static_cast<int>(st.b.size()), m = st.m();
  KktSolver kkt(st, cone);
  SolveOutcome out;

  auto split = [&](const Eigen::VectorXd& v, Eigen::VectorXd& x, Eigen::VectorXd& y, Eigen::VectorXd& z) {
    x = v.head(n);
    y = v.segment(n, p);
    z = v.tail(m);
  };
  auto stack = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    Eigen::VectorXd v(n + p + m);
    v << a, b, c;
    return v;
  };

  const Eigen::VectorXd e = cone.identity();
  Eigen::VectorXd x, y, z, s;
  {
    kkt.factor_identity();
    Eigen::VectorXd xt, yt, zt;
    split(kkt.solve(stack(Eigen::VectorXd::Zero(n), st.b, st.h)), xt, yt, zt);
    x = xt;
    s = -zt;
    split(kkt.solve(stack(-st.c, Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(m))), xt, yt, zt);
    y = yt;
    z = zt;
    const double as = -cone.min_eig(s), az = -cone.min_eig(z);
    if (m > 0) {
      if (as >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + std::max(as, 0.0)) * e;
      if (az >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + std::max(az, 0.0)) * e;
    }
  }
  double tau = 1.0, kappa = 1.0;

  const double nb = std::max(1.0, st.b.size() ? st.b.norm() : 0.0);
  const double nh = std::max(1.0, st.h.size() ? st.h.norm() : 0.0);
  const double nc = std::max(1.0, st.c.norm());
  const int degree = cone.degree();

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 200;
  Scaling W;
  Status status = Status::NumericalFailure;
  int iter = 0;
  // best iterate seen, returned if the method stalls
  double best_err = std::numeric_limits<double>::infinity();
  Eigen::VectorXd bx, by_, bz;
  double btau = 1.0;
  SolveOutcome best;
  static const bool trace = std::getenv("TIGHTFEED_IPM_TRACE") != nullptr;
  for (; iter <= max_iter; ++iter) {
    const Eigen::VectorXd R1 = st.A.transpose() * y + st.G.transpose() * z + st.c * tau;
    const Eigen::VectorXd R2 = st.A * x - st.b * tau;
    const Eigen::VectorXd R3 = st.G * x + s - st.h * tau;
    const double cx = st.c.dot(x), by = st.b.dot(y), hz = st.h.dot(z);
    const double R4 = kappa + cx + by + hz;

    const double pres = std::max(R2.size() ? R2.norm() / tau / nb : 0.0, R3.size() ? R3.norm() / tau / nh : 0.0);
    const double dres = R1.norm() / tau / nc;
    const double pcost = cx / tau, dcost = -(by + hz) / tau;
    const double gap = s.dot(z) / (tau * tau);
    out.primal_residual = pres;
    out.dual_residual = dres;
    out.gap = gap;
    out.objective = pcost;
    out.dual_objective = dcost;
    const double err = std::max({pres, dres, std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost))});
    if (err < best_err) {
      best_err = err;
      bx = x;
      by_ = y;
      bz = z;
      btau = tau;
      best = out;
    }
    if (trace)
      std::fprintf(stderr, "%3d pcost %.9e dcost %.9e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n", iter, pcost,
                   dcost, gap, pres, dres, tau, kappa);

    const double gap_scale = std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
        (gap <= opts.gap_tol * gap_scale || std::abs(pcost - dcost) <= opts.gap_tol * gap_scale)) {
      status = Status::Optimal;
      break;
    }
    // infeasibility certificates on the unnormalized iterates
    if (by + hz < 0.0) {
      const double r = (st.A.transpose() * y + st.G.transpose() * z).norm() / -(by + hz);
      if (r <= opts.feas_tol) {
        status = Status::Infeasible;
        break;
      }
    }
    if (cx < 0.0) {
      const double r = std::max(R2.size() ? (st.A * x).norm() : 0.0, (st.G * x + s).norm()) / -cx;
      if (r <= opts.feas_tol) {
        status = Status::Unbounded;
        break;
      }
    }
    if (iter == max_iter) break;

    if (!cone.compute_scaling(s, z, W)) break;
    const Eigen::VectorXd lam = cone.lambda_vec(W);
    kkt.factor(W);
    Eigen::VectorXd x1, y1, z1;
    split(kkt.solve(stack(-st.c, st.b, st.h)), x1, y1, z1);
    const double den = st.c.dot(x1) + st.b.dot(y1) + st.h.dot(z1) - kappa / tau;
    const double mu = (s.dot(z) + tau * kappa) / (degree + 1);

    Eigen::VectorXd dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
    auto direction = [&](double sigma, const Eigen::VectorXd& dsr, double dk) {
      const double f = 1.0 - sigma;
      const Eigen::VectorXd wl = cone.scale_t(W, cone.lambda_div(W, dsr));
      Eigen::VectorXd x2, y2, z2;
      split(kkt.solve(stack(-f * R1, -f * R2, -f * R3 - wl)), x2, y2, z2);
      const double r4 = -f * R4 - dk / tau;
      dtau = (r4 - st.c.dot(x2) - st.b.dot(y2) - st.h.dot(z2)) / den;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      ds = -f * R3 - st.G * dx + st.h * dtau;
      dkappa = (dk - kappa * dtau) / tau;
    };
    auto step_length = [&]() {
      double a = std::min(cone.max_step(W, cone.unscale_t(W, ds)), cone.max_step(W, cone.scale(W, dz)));
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // predictor
    const Eigen::VectorXd lam2 = cone.jordan(lam, lam);
    direction(0.0, -lam2, -tau * kappa);
    const double a_aff = std::min(1.0, step_length());
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
    // corrector
    const Eigen::VectorXd corr = cone.jordan(cone.unscale_t(W, ds), cone.scale(W, dz));
    const double kcorr = dtau * dkappa;
    direction(sigma, -lam2 + sigma * mu * e - corr, -tau * kappa + sigma * mu - kcorr);
    const double alpha = std::min(1.0, 0.99 * step_length());
    if (!(alpha > 1e-14) || !dx.allFinite()) break;

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    // renormalize the homogeneous iterate to keep numbers bounded
    const double nrm = tau + kappa;
    if (nrm > 1e6 || nrm < 1e-6) {
      x /= nrm;
      y /= nrm;
      z /= nrm;
      s /= nrm;
      tau /= nrm;
      kappa /= nrm;
    }
  }

  out.status = status;
  out.iterations = iter;
  if (status == Status::Infeasible) {
    const double d = -(st.b.dot(y) + st.h.dot(z));
    finish_outcome(prog, st, x / tau, y / d, z / d, out);
    out.objective = std::numeric_limits<double>::infinity();
    return out;
  }
  if (status == Status::Unbounded) {
    const double d = -st.c.dot(x);
    finish_outcome(prog, st, x / d, y / tau, z / tau, out);
    out.objective = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (status == Status::NumericalFailure && best_err < std::numeric_limits<double>::infinity()) {
    const int it = out.iterations;
    out = best;
    out.status = status;
    out.iterations = it;
    x = bx;
    y = by_;
    z = bz;
    tau = btau;
  }
  finish_outcome(prog, st, x / tau, y / tau, z / tau, out);
  out.dual_objective = -(st.b.dot(y) + st.h.dot(z)) / tau;
  return out;
}

}  // namespace tightfeed::sdp::detail
