#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "tightfeed/core.hpp"
#include "tightfeed/rates.hpp"

using namespace tightfeed;

namespace {

// spectral radius of the 2x2 companion matrix of r^2 - beta r - s, computed by a general eigensolver
double companion_rate(double c, double eps, double eta) {
  const double s = std::sqrt(eps);
  const double beta = 1.0 - eta * c - s * (1.0 + eta * c);
  Eigen::Matrix2d M;
  M << beta, s, 1.0, 0.0;
  Eigen::EigenSolver<Eigen::Matrix2d> es(M);
  const double r = es.eigenvalues().cwiseAbs().maxCoeff();
  return r * r;
}

double step_direct(double mu, double L, double eps) {
  const double s = std::sqrt(eps);
  return 2.0 / (L + mu) * (1.0 - s) / (1.0 + s);
}

}  // namespace

TEST(ProblemClassTest, RejectsDegenerateAndOrdering) {
  EXPECT_THROW(ProblemClass(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ProblemClass(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(ProblemClass(2.0, 1.0), std::invalid_argument);
  ProblemClass pc(0.1, 1.0);
  EXPECT_DOUBLE_EQ(pc.kappa(), 10.0);
}

TEST(CompressionTest, Range) {
  EXPECT_NO_THROW(Compression(0.0));
  EXPECT_THROW(Compression(1.0), std::invalid_argument);
  EXPECT_THROW(Compression(-0.1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(Compression(0.25).sqrt_eps(), 0.5);
}

TEST(MethodTest, NamesRoundTrip) {
  for (auto m : {MethodId::CGD, MethodId::EF, MethodId::EF21}) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("gd"), std::invalid_argument);
  EXPECT_EQ(state_labels(MethodId::EF), (std::vector<std::string>{"x", "g", "c", "e"}));
  EXPECT_EQ(state_labels(MethodId::EF21), (std::vector<std::string>{"x", "g", "d"}));
  EXPECT_EQ(state_labels(MethodId::CGD), (std::vector<std::string>{"x", "g", "c"}));
}

TEST(MethodConfigTest, RejectsNonPositiveStep) {
  EXPECT_THROW(MethodConfig(MethodId::EF, ProblemClass(0.5, 1), Compression(0.25), 0.0), std::invalid_argument);
}

TEST(StepSizeTest, KnownValues) {
  EXPECT_NEAR(optimal_step_size(ProblemClass(0.5, 1), Compression(0.0)), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(optimal_step_size(ProblemClass(0.5, 1), Compression(0.25)), 4.0 / 9.0, 1e-15);
  EXPECT_NEAR(optimal_step_size(ProblemClass(0.3, 2), Compression(0.6)), step_direct(0.3, 2, 0.6), 1e-15);
}

TEST(StepSizeTest, DecreasingInEpsilon) {
  ProblemClass pc(0.2, 1.0);
  double prev = optimal_step_size(pc, Compression(0.0));
  for (double e = 0.05; e < 1.0; e += 0.05) {
    const double cur = optimal_step_size(pc, Compression(e));
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(optimal_step_size(pc, Compression(1.0 - 1e-12)), 1e-5);
}

TEST(LyapunovCandidateTest, NormalizesAndValidates) {
  Eigen::Matrix2d P;
  P << 1, -1, -1, 3;
  LyapunovCandidate c({"x", "e"}, P, 0.0);
  EXPECT_NEAR(c.P().trace() + c.p(), 1.0, 1e-12);
  EXPECT_NEAR(c.scale(), 0.25, 1e-15);
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  EXPECT_THROW(LyapunovCandidate({"x", "e"}, bad, 0.0), std::invalid_argument);
  EXPECT_THROW(LyapunovCandidate({"x", "e"}, P, -1.0), std::invalid_argument);
  EXPECT_THROW(LyapunovCandidate({"x"}, P, 0.0), DimensionError);
}

TEST(LyapunovCandidateTest, ClosedFormMatrices) {
  // pre-normalization matrices
  const auto ef = ef_closed_form_lyapunov(Compression(0.25));
  Eigen::Matrix2d want;
  want << 1, -1, -1, 3;
  EXPECT_LT((ef.P() / ef.scale() - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ef.labels(), (std::vector<std::string>{"x", "e"}));

  const auto ef21 = ef21_closed_form_lyapunov(Compression(0.25));
  want << 1.5, -1, -1, 1;
  EXPECT_LT((ef21.P() / ef21.scale() - want).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ef21.labels(), (std::vector<std::string>{"g", "d"}));

  const auto ef0 = ef_closed_form_lyapunov(Compression(0.0));
  want << 1, 0, 0, 0;
  EXPECT_LT((ef0.P() - want).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LyapunovCandidateTest, EvaluateExamples) {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1), zero = Eigen::VectorXd::Zero(1);
  const auto ef = ef_closed_form_lyapunov(Compression(0.25));
  StateVector s(MethodId::EF, {one, zero, zero, zero});
  EXPECT_NEAR(evaluate_lyapunov(ef, s, 0.0) / ef.scale(), 1.0, 1e-12);

  const auto ef21 = ef21_closed_form_lyapunov(Compression(0.25));
  StateVector t(MethodId::EF21, {zero, one, one});
  EXPECT_NEAR(evaluate_lyapunov(ef21, t, 0.0) / ef21.scale(), 0.5, 1e-12);

  StateVector z(MethodId::EF, {zero, zero, zero, zero});
  EXPECT_EQ(evaluate_lyapunov(ef, z, 0.0), 0.0);

  const auto cgd = functional_residual_lyapunov(MethodId::CGD);
  StateVector u(MethodId::CGD, {one, one, one});
  EXPECT_NEAR(evaluate_lyapunov(cgd, u, 0.7), 0.7, 1e-15);
  // candidate over EF labels cannot read an EF21 state
  EXPECT_THROW(evaluate_lyapunov(ef, t, 0.0), DimensionError);
}

TEST(LyapunovCandidateTest, SquareIdentities) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (double eps : {0.1, 0.25, 0.7}) {
    const double s = std::sqrt(eps);
    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(3, [&]() { return n(rng); });
      const Eigen::VectorXd e = Eigen::VectorXd::NullaryExpr(3, [&]() { return n(rng); });
      // (x, e) form
      const double lhs = x.squaredNorm() - 2 * x.dot(e) + (1 + 1 / s) * e.squaredNorm();
      EXPECT_NEAR(lhs, (x - e).squaredNorm() + e.squaredNorm() / s, 1e-12 * (1 + std::abs(lhs)));
      // (g, d) form
      const auto& g = x;
      const auto& d = e;
      const double q = (1 + s) * g.squaredNorm() - 2 * g.dot(d) + d.squaredNorm();
      EXPECT_NEAR(q, (g - d).squaredNorm() + s * g.squaredNorm(), 1e-12 * (1 + std::abs(q)));
      // the candidate evaluates the same form
      const auto cand = ef21_closed_form_lyapunov(Compression(eps));
      StateVector st(MethodId::EF21, {Eigen::VectorXd::Zero(3), g, d});
      EXPECT_NEAR(evaluate_lyapunov(cand, st, 0.0) / cand.scale(), q, 1e-11 * (1 + std::abs(q)));
    }
  }
}

TEST(LyapunovCandidateTest, NonnegativeOnRandomStates) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int k = 0; k < 200; ++k) {
    Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(4, 4, [&]() { return n(rng); });
    LyapunovCandidate c(state_labels(MethodId::EF), B * B.transpose(), std::abs(n(rng)));
    std::vector<Eigen::VectorXd> comps;
    for (int i = 0; i < 4; ++i) comps.push_back(Eigen::VectorXd::NullaryExpr(2, [&]() { return n(rng); }));
    EXPECT_GE(evaluate_lyapunov(c, StateVector(MethodId::EF, comps), std::abs(n(rng))), -1e-12);
  }
}

TEST(LyapunovCandidateTest, JsonRoundTrip) {
  const auto c = ef_closed_form_lyapunov(Compression(0.3));
  const auto j = to_json(c);
  EXPECT_TRUE(j.at("normalized").get<bool>());
  EXPECT_EQ(j.at("P").size(), 4u);
  const auto back = candidate_from_json(j);
  EXPECT_EQ(back.labels(), c.labels());
  EXPECT_LT((back.P() - c.P()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(back.p(), c.p());
}

// ---------------------------------------------------------------------------
// closed-form rates

TEST(RatesTest, MatchesCompanionSpectralRadius) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double L = 1.0, mu = 0.02 + 0.9 * u(rng), eps = 0.01 + 0.97 * u(rng);
    const ProblemClass pc(mu, L);
    const Compression comp(eps);
    const double eta = optimal_step_size(pc, comp);
    const auto ef = ef_optimal_rate(pc, comp);
    const auto ef21 = ef21_optimal_rate(pc, comp);
    EXPECT_NEAR(ef.rho, companion_rate(mu, eps, eta), 1e-12);
    EXPECT_NEAR(ef.rho, ef.rho_formula, 1e-12);
    EXPECT_EQ(ef.rho, ef21.rho);
    EXPECT_GT(ef.rho, std::sqrt(eps));
    // balanced roots at eta*
    EXPECT_NEAR(companion_rate(mu, eps, eta), companion_rate(L, eps, eta), 1e-12);
  }
}

TEST(RatesTest, ReferencePoint) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const auto r = ef_optimal_rate(pc, comp);
  EXPECT_NEAR(r.rho, 0.63256, 5e-6);
  EXPECT_NEAR(r.eta_used, 4.0 / 9.0, 1e-15);
  EXPECT_NEAR(*r.nu_mult, 2.0, 1e-15);
  EXPECT_NEAR(*r.a_coef, (r.rho - 0.5) * 1.5 / 0.5, 1e-15);
  EXPECT_NEAR(*r.a_coef, 0.39768, 2e-5);
  EXPECT_NEAR(std::sqrt(quadratic_rate_at(MethodId::EF, 0.5, comp, 4.0 / 9.0)), 0.79533, 5e-6);
  const auto r21 = ef21_optimal_rate(pc, comp);
  EXPECT_NEAR(*r21.nu_mult, 1.0, 1e-15);
  ASSERT_TRUE(r21.b_coef.has_value());
}

TEST(RatesTest, GradientDescentLimit) {
  for (double mu : {0.1, 0.5, 0.9}) {
    const ProblemClass pc(mu, 1.0);
    const double gd = std::pow((1 - mu) / (1 + mu), 2);
    for (auto m : {MethodId::EF, MethodId::EF21}) {
      const auto r = optimal_rate(m, pc, Compression(0.0));
      EXPECT_NEAR(r.rho, gd, 1e-14);
      EXPECT_FALSE(r.lambda_mult.has_value());
      EXPECT_FALSE(r.nu_mult.has_value());
    }
  }
  EXPECT_GT(ef_optimal_rate(ProblemClass(0.5, 1), Compression(0.999999)).rho, 0.999);
}

TEST(RatesTest, LambdaPrimeConsistency) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const ProblemClass pc(0.05 + 0.9 * u(rng), 1.0);
    const Compression comp(0.02 + 0.95 * u(rng));
    const double eta = optimal_step_size(pc, comp);
    const double lam = *ef_optimal_rate(pc, comp).lambda_mult;
    const double lamp = *ef21_optimal_rate(pc, comp).lambda_mult;
    EXPECT_NEAR(lamp * eta * eta, lam * comp.sqrt_eps(), 1e-12 * (1 + lam));
  }
}

TEST(RatesTest, ZeroStepIsRateOne) {
  EXPECT_NEAR(quadratic_rate_at(MethodId::EF, 0.5, Compression(0.25), 0.0), 1.0, 1e-15);
}

TEST(RatesTest, StepSizeIsClassOptimal) {
  for (double mu : {0.1, 0.25, 0.5})
    for (double eps : {0.1, 0.25, 0.5, 0.75}) {
      const ProblemClass pc(mu, 1.0);
      const Compression comp(eps);
      const double eta = optimal_step_size(pc, comp);
      const double at = worst_case_rate_over_class(MethodId::EF, pc, comp, eta);
      EXPECT_NEAR(at, ef_optimal_rate(pc, comp).rho, 1e-12);
      EXPECT_GT(worst_case_rate_over_class(MethodId::EF, pc, comp, 1.01 * eta), at);
      EXPECT_GT(worst_case_rate_over_class(MethodId::EF, pc, comp, 0.99 * eta), at);
      // L-branch above, mu-branch below
      EXPECT_GT(quadratic_rate_at(MethodId::EF, 1.0, comp, 1.01 * eta), quadratic_rate_at(MethodId::EF, mu, comp, 1.01 * eta));
      EXPECT_GT(quadratic_rate_at(MethodId::EF, mu, comp, 0.99 * eta), quadratic_rate_at(MethodId::EF, 1.0, comp, 0.99 * eta));
      EXPECT_NEAR(argmin_class_rate(MethodId::EF, pc, comp, 1e-6, 2.0 / (1 + mu)), eta, 1e-9);
    }
}

TEST(RatesTest, MonotoneInEpsilonAndKappa) {
  for (double mu : {0.1, 0.3, 0.6}) {
    double prev = 0.0;
    for (double eps = 0.0; eps < 0.99; eps += 0.03) {
      const double r = ef_optimal_rate(ProblemClass(mu, 1), Compression(eps)).rho;
      EXPECT_GE(r, prev - 1e-15);
      prev = r;
    }
  }
  for (double eps : {0.1, 0.5, 0.9}) {
    double prev = 0.0;
    for (double kappa = 1.5; kappa < 100; kappa *= 1.5) {
      const double r = ef_optimal_rate(ProblemClass(1 / kappa, 1), Compression(eps)).rho;
      EXPECT_GE(r, prev - 1e-15);
      prev = r;
    }
  }
}

TEST(RatesTest, CgdHasNoClosedForm) {
  EXPECT_THROW(quadratic_rate_at(MethodId::CGD, 0.5, Compression(0.25), 0.4), std::invalid_argument);
}

TEST(RatesTest, JsonCarriesMultipliers) {
  const auto j = to_json(ef21_optimal_rate(ProblemClass(0.5, 1), Compression(0.25)));
  for (const char* k : {"rho", "eta", "lambda", "nu", "a", "b", "method"}) EXPECT_TRUE(j.contains(k)) << k;
}
