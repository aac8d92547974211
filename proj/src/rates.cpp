#include "tightfeed/rates.hpp"

#include <cmath>

namespace tightfeed {

double recurrence_beta(double c, const Compression& comp, double eta) {
  const double s = comp.sqrt_eps();
  return 1.0 - eta * c - s * (1.0 + eta * c);
}

std::pair<std::complex<double>, std::complex<double>> recurrence_roots(double c, const Compression& comp,
                                                                       double eta) {
  const double beta = recurrence_beta(c, comp, eta);
  const double s = comp.sqrt_eps();
  const double disc = beta * beta + 4.0 * s;
  // disc >= 0 always since s >= 0, so the roots are real
  const double sq = std::sqrt(disc);
  double r1 = 0.5 * (beta + sq);
  double r2 = 0.5 * (beta - sq);
  // stable second root via Vieta when cancellation bites
  if (beta >= 0.0 && r1 != 0.0) r2 = -s / r1;
  if (beta < 0.0 && r2 != 0.0) r1 = -s / r2;
  std::complex<double> a(r1), b(r2);
  if (std::abs(b) > std::abs(a) || (std::abs(b) == std::abs(a) && r2 > r1)) std::swap(a, b);
  return {a, b};
}

std::complex<double> dominant_root(double c, const Compression& comp, double eta) {
  return recurrence_roots(c, comp, eta).first;
}

double quadratic_rate_at(MethodId m, double c, const Compression& comp, double eta) {
  if (m == MethodId::CGD) throw std::invalid_argument("no closed-form quadratic rate for cgd");
  if (!(eta >= 0.0)) throw std::invalid_argument("step size must be nonnegative");
  return std::norm(dominant_root(c, comp, eta));
}

double worst_case_rate_over_class(MethodId m, const ProblemClass& pc, const Compression& comp, double eta) {
  return std::max(quadratic_rate_at(m, pc.mu(), comp, eta), quadratic_rate_at(m, pc.L(), comp, eta));
}

double argmin_class_rate(MethodId m, const ProblemClass& pc, const Compression& comp, double lo, double hi,
                         double tol) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = worst_case_rate_over_class(m, pc, comp, x1);
  double f2 = worst_case_rate_over_class(m, pc, comp, x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = worst_case_rate_over_class(m, pc, comp, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = worst_case_rate_over_class(m, pc, comp, x2);
    }
  }
  return 0.5 * (a + b);
}

double ef_lambda(const ProblemClass& pc, const Compression& comp, double eta) {
  const double mu = pc.mu(), L = pc.L(), s = comp.sqrt_eps();
  const double inner = (L - mu) * (L - mu) + 16.0 * L * mu * s / ((1 + s) * (1 + s));
  return eta / (L + mu) * ((1 - s) * (L - mu) + (1 + s) * std::sqrt(inner));
}

double ef21_lambda(const ProblemClass& pc, const Compression& comp) {
  const double eta = optimal_step_size(pc, comp);
  return comp.sqrt_eps() * ef_lambda(pc, comp, eta) / (eta * eta);
}

static RateReport common_rate(MethodId m, const ProblemClass& pc, const Compression& comp) {
  RateReport r;
  r.method = m;
  r.eta_used = optimal_step_size(pc, comp);
  r.rho = quadratic_rate_at(MethodId::EF, pc.mu(), comp, r.eta_used);
  const double s = comp.sqrt_eps();
  const double lam = ef_lambda(pc, comp, r.eta_used);
  r.rho_formula = s + 0.25 * (1 + s) * (pc.L() - pc.mu()) * lam;
  return r;
}

RateReport ef_optimal_rate(const ProblemClass& pc, const Compression& comp) {
  RateReport r = common_rate(MethodId::EF, pc, comp);
  if (comp.epsilon() == 0.0) return r;
  const double s = comp.sqrt_eps();
  r.lambda_mult = ef_lambda(pc, comp, r.eta_used);
  r.nu_mult = 1.0 / s;
  r.a_coef = (r.rho - s) * (1 + s) / s;
  return r;
}

RateReport ef21_optimal_rate(const ProblemClass& pc, const Compression& comp) {
  RateReport r = common_rate(MethodId::EF21, pc, comp);
  if (comp.epsilon() == 0.0) return r;
  const double s = comp.sqrt_eps(), mu = pc.mu(), L = pc.L(), eta = r.eta_used;
  const double lp = ef21_lambda(pc, comp);
  r.lambda_mult = lp;
  r.nu_mult = 1.0;
  r.b_coef = lp / (L - mu) * (1 - s) / (1 + s);
  r.a_coef = r.rho - comp.epsilon() + lp * eta * eta * L * mu / (L - mu);
  return r;
}

RateReport optimal_rate(MethodId m, const ProblemClass& pc, const Compression& comp) {
  if (m == MethodId::EF) return ef_optimal_rate(pc, comp);
  if (m == MethodId::EF21) return ef21_optimal_rate(pc, comp);
  throw std::invalid_argument("no closed-form optimal rate for cgd");
}

nlohmann::json to_json(const RateReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"method", to_string(r.method)}, {"rho", r.rho},           {"rho_formula", r.rho_formula},
          {"eta", r.eta_used},             {"lambda", opt(r.lambda_mult)}, {"nu", opt(r.nu_mult)},
          {"a", opt(r.a_coef)},            {"b", opt(r.b_coef)}};
}

}  // namespace tightfeed
