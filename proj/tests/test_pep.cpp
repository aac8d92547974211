#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tightfeed/pep.hpp"
#include "tightfeed/rates.hpp"
#include "tightfeed/sdp.hpp"
#include "tightfeed/simulator.hpp"

using namespace tightfeed;
namespace S = tightfeed::sdp;

namespace {

S::SolverOptions backend(S::Backend b) {
  S::SolverOptions o;
  o.backend = b;
  if (b == S::Backend::Splitting) {
    o.feas_tol = 1e-7;
    o.gap_tol = 1e-7;
  }
  return o;
}

double tol_for(S::Backend b) { return b == S::Backend::InteriorPoint ? 1e-7 : 1e-4; }

class SdpBackends : public ::testing::TestWithParam<S::Backend> {};

}  // namespace

TEST(SvecTest, IndexLayout) {
  EXPECT_EQ(S::svec_size(3), 6);
  EXPECT_EQ(S::svec_index(3, 0, 0), 0);
  EXPECT_EQ(S::svec_index(3, 2, 0), 2);
  EXPECT_EQ(S::svec_index(3, 1, 1), 3);
  EXPECT_EQ(S::svec_index(3, 0, 2), S::svec_index(3, 2, 0));
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  Eigen::Matrix2d want;
  want << 1, 2, 2, 3;
  EXPECT_EQ(S::matrix_value(x, 0, 2), want);
}

TEST_P(SdpBackends, LinearBound) {
  S::ConicProgram p(1);
  p.objective << 1.0;
  p.add_row(Eigen::VectorXd::Ones(1), S::Sense::Ge, 3.0);
  auto o = S::solve(p, backend(GetParam()));
  ASSERT_EQ(o.status, S::Status::Optimal);
  EXPECT_NEAR(o.objective, 3.0, tol_for(GetParam()));
  EXPECT_NEAR(o.row_duals[0], 1.0, 1e-3);
}

TEST_P(SdpBackends, OffDiagonalBound) {
  // max t with [[1, t], [t, 1]] PSD
  S::ConicProgram p(1);
  p.objective << -1.0;
  S::LmiBlock b;
  b.dim = 2;
  b.constant = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d F;
  F << 0, 1, 1, 0;
  b.terms.emplace_back(0, F);
  p.lmis.push_back(b);
  auto o = S::solve(p, backend(GetParam()));
  ASSERT_EQ(o.status, S::Status::Optimal);
  EXPECT_NEAR(o.x[0], 1.0, 10 * tol_for(GetParam()));
}

TEST_P(SdpBackends, SmallestEigenvalue) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (int rep = 0; rep < 5; ++rep) {
    const int d = 4;
    Eigen::MatrixXd C = Eigen::MatrixXd::NullaryExpr(d, d, [&]() { return n(rng); });
    C = (C + C.transpose()).eval();
    S::ConicProgram p;
    const int first = p.add_matrix_var(d, "X");
    Eigen::VectorXd tr = Eigen::VectorXd::Zero(p.num_vars);
    for (int j = 0; j < d; ++j)
      for (int i = j; i < d; ++i) {
        const int k = first + S::svec_index(d, i, j);
        p.objective[k] = (i == j ? 1.0 : 2.0) * C(i, j);
        if (i == j) tr[k] = 1.0;
      }
    p.add_row(tr, S::Sense::Eq, 1.0);
    auto o = S::solve(p, backend(GetParam()));
    ASSERT_EQ(o.status, S::Status::Optimal);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    EXPECT_NEAR(o.objective, es.eigenvalues()[0], 10 * tol_for(GetParam()));
  }
}

TEST_P(SdpBackends, NegativeTraceIsInfeasible) {
  S::ConicProgram p;
  p.add_matrix_var(2, "X");
  Eigen::VectorXd tr = Eigen::VectorXd::Zero(p.num_vars);
  tr[S::svec_index(2, 0, 0)] = 1;
  tr[S::svec_index(2, 1, 1)] = 1;
  p.add_row(tr, S::Sense::Eq, -1.0);
  if (GetParam() == S::Backend::InteriorPoint) {
    EXPECT_EQ(S::solve(p, backend(GetParam())).status, S::Status::Infeasible);
  } else {
    EXPECT_NE(S::solve(p, backend(GetParam())).status, S::Status::Optimal);
  }
}

INSTANTIATE_TEST_SUITE_P(Both, SdpBackends, ::testing::Values(S::Backend::InteriorPoint, S::Backend::Splitting));

TEST(SdpTest, UnboundedRay) {
  S::ConicProgram p(1);
  p.objective << -1.0;
  p.add_row(Eigen::VectorXd::Ones(1), S::Sense::Ge, 0.0);
  EXPECT_EQ(S::solve(p).status, S::Status::Unbounded);
}

TEST(SdpTest, FeasibilityVerdicts) {
  S::ConicProgram p;
  p.add_matrix_var(2, "X");
  Eigen::VectorXd tr = Eigen::VectorXd::Zero(p.num_vars);
  tr[S::svec_index(2, 0, 0)] = 1;
  tr[S::svec_index(2, 1, 1)] = 1;
  p.add_row(tr, S::Sense::Eq, -1.0);
  EXPECT_EQ(S::feasibility(p).verdict, S::Verdict::Infeasible);
  p.rows[0].rhs = 1.0;
  const auto f = S::feasibility(p);
  EXPECT_EQ(f.verdict, S::Verdict::Feasible);
  EXPECT_LE(S::constraint_violation(p, f.point).worst(), 1e-9);
}

TEST(SdpTest, ValidationRejectsBadPrograms) {
  S::ConicProgram p(2);
  p.objective << 1, std::nan("");
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(p.add_row(Eigen::VectorXd::Ones(3), S::Sense::Eq, 0), std::invalid_argument);
}

TEST(SdpTest, JsonRoundTripSolvesIdentically) {
  const auto gp = build_gram_problem(MethodId::EF, ProblemClass(0.5, 1), Compression(0.25), 4.0 / 9.0, 1,
                                     PepMode::WorstCase);
  const auto prog = worst_case_program(gp, theorem_lyapunov(MethodId::EF, Compression(0.25)));
  const auto back = S::program_from_json(S::to_json(prog));
  EXPECT_EQ(back.num_vars, prog.num_vars);
  EXPECT_EQ(back.rows.size(), prog.rows.size());
  EXPECT_EQ(back.lmis.size(), prog.lmis.size());
  EXPECT_NEAR(S::solve(back).objective, S::solve(prog).objective, 1e-12);
  const auto gp2 = gram_problem_from_json(to_json(gp));
  EXPECT_EQ(gp2.interp.size(), gp.interp.size());
  EXPECT_LT((gp2.A0 - gp.A0).cwiseAbs().maxCoeff(), 1e-15);
}

// ---------------------------------------------------------------------------
// performance estimation

TEST(PepTest, LayoutShapes) {
  const auto l = build_layout(MethodId::EF, 2, 0.4);
  EXPECT_EQ(l.num_points(), 4);
  EXPECT_EQ(l.state_rows(0).rows(), 4);
  EXPECT_EQ(l.state_rows(0).cols(), l.dim());
  EXPECT_TRUE(l.x_row(l.star()).isZero());
  const auto gp = build_gram_problem(MethodId::EF, ProblemClass(0.1, 1), Compression(0.3), 0.4, 2,
                                     PepMode::WorstCase);
  // every ordered pair of distinct points
  EXPECT_EQ(gp.interp.size(), 4u * 3u);
  EXPECT_EQ(gp.compressors.size(), 3u);
}

TEST(PepTest, InterpolationHoldsOnQuadraticRun) {
  // lift a simulated one-dimensional run into the Gram basis and check every inequality
  const ProblemClass pc(0.2, 1.0);
  const Compression comp(0.3);
  const double eta = 0.5;
  const auto l = build_layout(MethodId::EF21, 2, eta);
  const auto terms = interpolation_matrices(l, pc);
  const auto comps = compressor_matrices(l, comp);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    // the basis symbols are free: any assignment is a valid run of some instance only if it solves
    // the method equations, so realize one with a diagonal quadratic in two dimensions
    Eigen::Vector2d h(0.2 + 0.8 * (u(rng) + 1) / 2, 0.2 + 0.8 * (u(rng) + 1) / 2);
    DiagonalQuadraticOracle q(h);
    const double th = u(rng);
    auto C = Compressor::scalar(comp, th);
    MethodConfig cfg(MethodId::EF21, pc, comp, eta);
    auto t = simulate(cfg, q, C, initial_state(cfg, q, C, Eigen::Vector2d(u(rng), u(rng))), 2);
    // solve for the symbol vectors from the state rows: stack rows of all steps and least-squares
    Eigen::MatrixXd Arows(0, l.dim());
    Eigen::MatrixXd vals(0, 2);
    for (int k = 0; k <= 2; ++k) {
      const Eigen::MatrixXd R = l.state_rows(k);
      Eigen::MatrixXd V(R.rows(), 2);
      for (int i = 0; i < R.rows(); ++i) V.row(i) = t.states[k].components[i].transpose();
      Arows.conservativeResize(Arows.rows() + R.rows(), Eigen::NoChange);
      Arows.bottomRows(R.rows()) = R;
      vals.conservativeResize(vals.rows() + R.rows(), Eigen::NoChange);
      vals.bottomRows(R.rows()) = V;
    }
    const Eigen::MatrixXd Z = Arows.colPivHouseholderQr().solve(vals);
    ASSERT_LT((Arows * Z - vals).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd G = Z * Z.transpose();
    Eigen::VectorXd f(3);
    for (int k = 0; k <= 2; ++k) f[k] = t.fval_gaps[k];
    for (const auto& term : terms) EXPECT_GE((term.M.cwiseProduct(G)).sum() + term.m.dot(f), -1e-10);
    for (const auto& Cm : comps) EXPECT_LE((Cm.cwiseProduct(G)).sum(), 1e-10);
  }
}

TEST(PepTest, WorstCaseMatchesClosedForm) {
  for (auto [mu, eps] : {std::pair{0.5, 0.25}, std::pair{0.1, 0.5}, std::pair{0.25, 0.8}}) {
    const ProblemClass pc(mu, 1.0);
    const Compression comp(eps);
    const double eta = optimal_step_size(pc, comp);
    const double rho = ef_optimal_rate(pc, comp).rho;
    for (auto m : {MethodId::EF, MethodId::EF21}) {
      const auto r = worst_case_ratio(m, pc, comp, eta, theorem_lyapunov(m, comp), 1);
      ASSERT_EQ(r.status, S::Status::Optimal) << to_string(m);
      EXPECT_NEAR(r.value, rho, 1e-6) << to_string(m) << " " << mu << " " << eps;
    }
  }
}

TEST(PepTest, WorstCaseDominatesQuadraticRate) {
  const ProblemClass pc(0.2, 1.0);
  const Compression comp(0.4);
  for (double eta : {0.2, 0.5, 0.9}) {
    const auto r = worst_case_ratio(MethodId::EF, pc, comp, eta, theorem_lyapunov(MethodId::EF, comp), 1);
    ASSERT_EQ(r.status, S::Status::Optimal);
    // the quadratic lower bound is attained asymptotically, so compare one step of the worst trajectory
    for (double c : {0.2, 1.0}) {
      auto w = worst_case_trajectory(MethodId::EF, c, comp, eta, 60);
      const auto ratios = empirical_contraction(w, theorem_lyapunov(MethodId::EF, comp));
      for (double q : ratios) EXPECT_LE(q, r.value + 1e-7);
    }
  }
}

TEST(PepTest, Homogeneity) {
  const ProblemClass pc(0.3, 1.0);
  const Compression comp(0.36);
  const double eta = 0.6;
  const auto cand = theorem_lyapunov(MethodId::EF21, comp);
  const auto a = worst_case_ratio(MethodId::EF21, pc, comp, eta, cand, 1, 1.0);
  const auto b = worst_case_ratio(MethodId::EF21, pc, comp, eta, cand, 1, 4.0);
  ASSERT_EQ(a.status, S::Status::Optimal);
  ASSERT_EQ(b.status, S::Status::Optimal);
  EXPECT_NEAR(b.value, 4.0 * a.value, 1e-6);
}

TEST(PepTest, BackendsAgreeOnWorstCase) {
  const auto gp = build_gram_problem(MethodId::EF, ProblemClass(0.5, 1), Compression(0.25), 4.0 / 9.0, 1,
                                     PepMode::WorstCase);
  const auto prog = worst_case_program(gp, theorem_lyapunov(MethodId::EF, Compression(0.25)));
  const auto ipm = S::solve(prog);
  S::SolverOptions o;
  o.backend = S::Backend::Splitting;
  o.feas_tol = o.gap_tol = 1e-7;
  const auto adm = S::solve(prog, o);
  ASSERT_EQ(ipm.status, S::Status::Optimal);
  EXPECT_NEAR(adm.objective, ipm.objective, 1e-3);
}

TEST(PepTest, SearchVerdicts) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const double eta = 4.0 / 9.0;
  for (auto m : {MethodId::EF, MethodId::EF21}) {
    const auto hi = search_lyapunov(m, pc, comp, eta, 0.99);
    EXPECT_EQ(hi.verdict, S::Verdict::Feasible);
    ASSERT_TRUE(hi.candidate.has_value());
    EXPECT_NEAR(hi.candidate->P().trace() + hi.candidate->p(), 1.0, 1e-9);
    EXPECT_EQ(search_lyapunov(m, pc, comp, eta, 0.5).verdict, S::Verdict::Infeasible);
  }
}

TEST(PepTest, BisectionRecoversClosedForm) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const double rho = ef_optimal_rate(pc, comp).rho;
  for (auto m : {MethodId::EF, MethodId::EF21}) {
    const auto b = bisect_optimal_rate(m, pc, comp, 4.0 / 9.0);
    ASSERT_TRUE(b.converged);
    EXPECT_NEAR(b.rho, rho, 1e-5);
    EXPECT_EQ(b.undecided, 0);
  }
}

TEST(PepTest, BisectionGradientDescentLimit) {
  const ProblemClass pc(0.1, 1.0);
  const double gd = std::pow(0.9 / 1.1, 2);
  for (auto m : {MethodId::CGD, MethodId::EF, MethodId::EF21}) {
    const auto b = bisect_optimal_rate(m, pc, Compression(0.0), 2.0 / 1.1);
    ASSERT_TRUE(b.converged);
    EXPECT_NEAR(b.rho, gd, 1e-5) << to_string(m);
  }
}

TEST(PepTest, BisectionDivergentStep) {
  const auto b = bisect_optimal_rate(MethodId::CGD, ProblemClass(0.1, 1), Compression(0.5), 1.9);
  EXPECT_TRUE(!b.converged || b.rho >= 1.0);
}

TEST(PepTest, CycleDetection) {
  const ProblemClass pc(0.1, 1.0);
  const Compression comp(0.9);
  EXPECT_TRUE(cycle_check(MethodId::EF, pc, comp, 1.8).is_cycle);
  const Compression mid(0.5);
  EXPECT_FALSE(cycle_check(MethodId::EF, pc, mid, optimal_step_size(pc, mid)).is_cycle);
  EXPECT_FALSE(cycle_check(MethodId::EF21, pc, Compression(0.0), 2.0 / 1.1).is_cycle);
}

TEST(PepTest, LogdetRecoversStructure) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const double rho = ef_optimal_rate(pc, comp).rho + 1e-6;
  const auto c = logdet_simplify(MethodId::EF, pc, comp, 4.0 / 9.0, rho);
  const auto ref = ef_closed_form_lyapunov(comp);
  EXPECT_LT((c.embedded(MethodId::EF) - ref.embedded(MethodId::EF)).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(c.p(), 0.0, 1e-6);
}
