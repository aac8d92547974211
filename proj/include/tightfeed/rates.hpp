#pragma once

#include <complex>
#include <optional>

#include "tightfeed/core.hpp"

namespace tightfeed {

struct RateReport {
  MethodId method = MethodId::EF;
  double rho = 0.0;
  double eta_used = 0.0;
  // rho from the printed closed form, kept for cross-checking the root route
  double rho_formula = 0.0;
  std::optional<double> lambda_mult;
  std::optional<double> nu_mult;
  std::optional<double> a_coef;
  std::optional<double> b_coef;
};

// roots of r^2 - beta r - sqrt(eps), dominant first
std::pair<std::complex<double>, std::complex<double>> recurrence_roots(double c, const Compression& comp,
                                                                       double eta);
// larger-modulus root; ties go to the positive one
std::complex<double> dominant_root(double c, const Compression& comp, double eta);

// linear coefficient of the worst-case recurrence
double recurrence_beta(double c, const Compression& comp, double eta);

RateReport ef_optimal_rate(const ProblemClass& pc, const Compression& comp);
RateReport ef21_optimal_rate(const ProblemClass& pc, const Compression& comp);
RateReport optimal_rate(MethodId m, const ProblemClass& pc, const Compression& comp);

double quadratic_rate_at(MethodId m, double c, const Compression& comp, double eta);
double worst_case_rate_over_class(MethodId m, const ProblemClass& pc, const Compression& comp, double eta);

// golden-section minimizer of worst_case_rate_over_class over (lo, hi)
double argmin_class_rate(MethodId m, const ProblemClass& pc, const Compression& comp, double lo, double hi,
                         double tol = 1e-12);

// lambda of the EF certificate (the bracketed formula) at step eta
double ef_lambda(const ProblemClass& pc, const Compression& comp, double eta);
// lambda' of the EF21 certificate at eta*
double ef21_lambda(const ProblemClass& pc, const Compression& comp);

nlohmann::json to_json(const RateReport& r);

}  // namespace tightfeed
