#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tightfeed/core.hpp"

namespace tightfeed {

struct CertificateError : Error {
  CertificateError(const std::string& what, int row, int col, double gap)
      : Error(what), row(row), col(col), gap(gap) {}
  int row, col;
  double gap;
};

struct Certificate {
  MethodId method = MethodId::EF;
  double eta = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  double a = 0.0;
  std::optional<double> b;
  // free symbols of the identity: EF (x, g, e, c); EF21 (x, g, g_next, d, c)
  std::vector<std::string> symbols;
  // linear form inside the completed square, over `symbols`
  Eigen::VectorXd square_coefficients;
};

struct ResidualDetail {
  double residual = 0.0;
  int row = -1, col = -1;  // offending entry; row == -1 for a function-value slot
};

// quadratic-form coefficients of a certificate over its symbols
struct CertificateForms {
  Eigen::MatrixXd lyapunov_gap;    // rho V_k - V_{k+1}
  Eigen::MatrixXd multiplier_sum;  // lambda I1 + lambda I2 + nu I_C
  Eigen::Vector3d fvalue_sum;      // coefficients on (f_k, f_next, f*) of the multiplier sum
};

Certificate build_certificate(MethodId method, const ProblemClass& pc, const Compression& comp);

CertificateForms certificate_forms(const Certificate& cert, const ProblemClass& pc, const Compression& comp);

ResidualDetail certificate_residual_detail(const Certificate& cert, const ProblemClass& pc,
                                           const Compression& comp);
double certificate_residual(const Certificate& cert, const ProblemClass& pc, const Compression& comp);
// throws CertificateError when the residual exceeds tol
void require_valid_certificate(const Certificate& cert, const ProblemClass& pc, const Compression& comp,
                               double tol = 1e-10);

// completes the square of a rank-one PSD form on the given pivot symbol
std::pair<double, Eigen::VectorXd> complete_square(const Eigen::MatrixXd& Q, int pivot);

struct SampleReport {
  double max_violation = 0.0;  // max of V_{k+1} - rho V_k
  std::vector<double> worst_state;  // (x, aux, curvature, theta)
};

SampleReport verify_decrease_on_samples(const Certificate& cert, const ProblemClass& pc,
                                        const Compression& comp, int n_samples, unsigned long long seed = 7);

nlohmann::json to_json(const Certificate& cert, double residual);

}  // namespace tightfeed
