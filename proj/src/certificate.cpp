#include "tightfeed/certificate.hpp"

#include <cmath>
#include <random>

#include "tightfeed/rates.hpp"

namespace tightfeed {

namespace {

Eigen::MatrixXd sym(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return 0.5 * (u * v.transpose() + v * u.transpose());
}
Eigen::MatrixXd sq(const Eigen::VectorXd& u) { return u * u.transpose(); }

Eigen::VectorXd unit(int n, int i) { return Eigen::VectorXd::Unit(n, i); }

}  // namespace

std::pair<double, Eigen::VectorXd> complete_square(const Eigen::MatrixXd& Q, int pivot) {
  const double a = Q(pivot, pivot);
  if (!(a > 0.0)) throw Error("cannot complete the square on a nonpositive pivot");
  return {a, Q.row(pivot).transpose() / a};
}

CertificateForms certificate_forms(const Certificate& cert, const ProblemClass& pc, const Compression& comp) {
  const double mu = pc.mu(), L = pc.L(), eps = comp.epsilon(), s = comp.sqrt_eps();
  const double eta = cert.eta, k = mu / (2.0 * (1.0 - mu / L));
  CertificateForms out;
  if (cert.method == MethodId::EF) {
    const int n = 4;
    const Eigen::VectorXd x = unit(n, 0), g = unit(n, 1), e = unit(n, 2), c = unit(n, 3);
    const Eigen::VectorXd x1 = x - c, e1 = e + eta * g - c;
    auto V = [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& ee) {
      return Eigen::MatrixXd(sq(xx - ee) + (1.0 / s) * sq(ee));
    };
    // I1 and I2 between x_k and x*, written as <= 0
    const Eigen::MatrixXd q1 = -sym(g, x) + 1.0 / (2.0 * L) * sq(g) + k * sq(x - g / L);
    const Eigen::MatrixXd q2 = 1.0 / (2.0 * L) * sq(g) + k * sq(x - g / L);
    const Eigen::MatrixXd ic = sq(e1) - eps * sq(e + eta * g);
    out.lyapunov_gap = cert.rho * V(x, e) - V(x1, e1);
    out.multiplier_sum = cert.lambda * (q1 + q2) + cert.nu * ic;
    // f_k - f* from I1, f* - f_k from I2
    out.fvalue_sum = cert.lambda * Eigen::Vector3d(1, 0, -1) + cert.lambda * Eigen::Vector3d(-1, 0, 1);
  } else {
    const int n = 5;
    const Eigen::VectorXd x = unit(n, 0), g0 = unit(n, 1), g1 = unit(n, 2), d = unit(n, 3), c = unit(n, 4);
    const Eigen::VectorXd x1 = x - eta * d, d1 = d + c;
    auto V = [&](const Eigen::VectorXd& gg, const Eigen::VectorXd& dd) {
      return Eigen::MatrixXd(sq(gg - dd) + s * sq(gg));
    };
    const Eigen::MatrixXd q1 = sq(g1 - g0) / (2.0 * L) + sym(g0, x1 - x) + k * sq(x - x1 - (g0 - g1) / L);
    const Eigen::MatrixXd q2 = sq(g0 - g1) / (2.0 * L) + sym(g1, x - x1) + k * sq(x1 - x - (g1 - g0) / L);
    const Eigen::MatrixXd ic = sq(g1 - d - c) - eps * sq(g1 - d);
    out.lyapunov_gap = cert.rho * V(g0, d) - V(g1, d1);
    out.multiplier_sum = cert.lambda * (q1 + q2) + cert.nu * ic;
    out.fvalue_sum = cert.lambda * Eigen::Vector3d(1, -1, 0) + cert.lambda * Eigen::Vector3d(-1, 1, 0);
  }
  return out;
}

Certificate build_certificate(MethodId method, const ProblemClass& pc, const Compression& comp) {
  if (method == MethodId::CGD) throw std::invalid_argument("certificates exist for ef and ef21 only");
  if (comp.epsilon() == 0.0) throw std::invalid_argument("certificate undefined at eps = 0");
  const RateReport r = optimal_rate(method, pc, comp);
  Certificate cert;
  cert.method = method;
  cert.eta = r.eta_used;
  cert.rho = r.rho;
  cert.lambda = *r.lambda_mult;
  cert.nu = *r.nu_mult;
  int pivot;
  if (method == MethodId::EF) {
    cert.symbols = {"x", "g", "e", "c"};
    pivot = 2;
  } else {
    cert.symbols = {"x", "g", "g_next", "d", "c"};
    cert.b = r.b_coef;
    pivot = 3;
  }
  const CertificateForms f = certificate_forms(cert, pc, comp);
  const Eigen::MatrixXd Q = f.lyapunov_gap + f.multiplier_sum;
  auto [a, dir] = complete_square(Q, pivot);
  cert.a = a;
  cert.square_coefficients = dir;
  if (!(cert.a > 0.0)) throw Error("certificate has nonpositive a");
  return cert;
}

ResidualDetail certificate_residual_detail(const Certificate& cert, const ProblemClass& pc,
                                           const Compression& comp) {
  const CertificateForms f = certificate_forms(cert, pc, comp);
  const auto& s = cert.square_coefficients;
  if (s.size() != f.lyapunov_gap.rows()) throw DimensionError("square coefficients have the wrong length");
  // rho V_k - V_{k+1} - a |s|^2 must equal -(lambda I1 + lambda I2 + nu I_C)
  const Eigen::MatrixXd diff = f.lyapunov_gap - cert.a * s * s.transpose() + f.multiplier_sum;
  ResidualDetail d;
  Eigen::Index r = 0, c = 0;
  d.residual = diff.cwiseAbs().maxCoeff(&r, &c);
  d.row = static_cast<int>(r);
  d.col = static_cast<int>(c);
  const double fgap = f.fvalue_sum.cwiseAbs().maxCoeff();
  if (fgap > d.residual) {
    d.residual = fgap;
    d.row = -1;
    d.col = -1;
  }
  return d;
}

double certificate_residual(const Certificate& cert, const ProblemClass& pc, const Compression& comp) {
  return certificate_residual_detail(cert, pc, comp).residual;
}

void require_valid_certificate(const Certificate& cert, const ProblemClass& pc, const Compression& comp,
                               double tol) {
  const ResidualDetail d = certificate_residual_detail(cert, pc, comp);
  if (d.residual > tol) {
    std::string where = d.row < 0 ? "function-value slot"
                                  : "entry (" + cert.symbols[d.row] + ", " + cert.symbols[d.col] + ")";
    throw CertificateError("certificate identity fails at " + where + " by " + std::to_string(d.residual), d.row,
                           d.col, d.residual);
  }
}

SampleReport verify_decrease_on_samples(const Certificate& cert, const ProblemClass& pc,
                                        const Compression& comp, int n_samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> curv(pc.mu(), pc.L());
  const double s = comp.sqrt_eps(), eta = cert.eta;
  SampleReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_samples; ++i) {
    const double x = unif(rng), aux = unif(rng), cf = curv(rng), theta = unif(rng);
    const double g = cf * x;
    double v0, v1;
    if (cert.method == MethodId::EF) {
      const double u = aux + eta * g, cu = (1 + theta * s) * u;
      const double x1 = x - cu, e1 = u - cu;
      v0 = (x - aux) * (x - aux) + aux * aux / s;
      v1 = (x1 - e1) * (x1 - e1) + e1 * e1 / s;
    } else {
      const double x1 = x - eta * aux, g1 = cf * x1, u = g1 - aux;
      const double d1 = aux + (1 + theta * s) * u;
      v0 = (g - aux) * (g - aux) + s * g * g;
      v1 = (g1 - d1) * (g1 - d1) + s * g1 * g1;
    }
    const double viol = v1 - cert.rho * v0;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_state = {x, aux, cf, theta};
    }
  }
  if (n_samples <= 0) rep.max_violation = 0.0;
  return rep;
}

nlohmann::json to_json(const Certificate& cert, double residual) {
  nlohmann::json j{{"method", to_string(cert.method)},
                   {"eta", cert.eta},
                   {"rho", cert.rho},
                   {"lambda", cert.lambda},
                   {"nu", cert.nu},
                   {"a", cert.a},
                   {"b", cert.b ? nlohmann::json(*cert.b) : nlohmann::json(nullptr)},
                   {"symbols", cert.symbols},
                   {"square_coefficients",
                    std::vector<double>(cert.square_coefficients.data(),
                                        cert.square_coefficients.data() + cert.square_coefficients.size())},
                   {"residual", residual}};
  return j;
}

}  // namespace tightfeed
