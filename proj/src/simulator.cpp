#include "tightfeed/simulator.hpp"

#include <cmath>
#include <sstream>

#include "tightfeed/rates.hpp"

namespace tightfeed {

Compressor Compressor::identity() {
  return Compressor(0.0, [](const Eigen::VectorXd& v) { return v; }, "identity");
}

Compressor Compressor::scalar(const Compression& comp, double theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [-1, 1]");
  const double f = 1.0 + theta * comp.sqrt_eps();
  return Compressor(comp.epsilon(), [f](const Eigen::VectorXd& v) { return Eigen::VectorXd(f * v); },
                    "scalar");
}

Compressor Compressor::top1(const Compression& comp, int d) {
  if (d < 1) throw std::invalid_argument("top-1 needs d >= 1");
  if (comp.epsilon() < 1.0 - 1.0 / d - 1e-15)
    throw std::invalid_argument("top-1 in dimension d is only contractive for eps >= 1 - 1/d");
  return Compressor(comp.epsilon(),
                    [](const Eigen::VectorXd& v) {
                      Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
                      Eigen::Index i = 0;
                      v.cwiseAbs().maxCoeff(&i);
                      out[i] = v[i];
                      return out;
                    },
                    "top1");
}

Compressor Compressor::custom(const Compression& comp, Map map, std::string name) {
  return Compressor(comp.epsilon(), std::move(map), std::move(name));
}

bool Compressor::satisfies_contract(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd out = map_(v);
  const double lhs = (v - out).squaredNorm(), rhs = eps_ * v.squaredNorm();
  return lhs <= rhs + 1e-12 * std::max(1.0, v.squaredNorm());
}

Eigen::VectorXd Compressor::operator()(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = map_(v);
#ifndef NDEBUG
  const double lhs = (v - out).squaredNorm(), rhs = eps_ * v.squaredNorm();
  if (lhs > rhs + 1e-12 * std::max(1.0, v.squaredNorm()))
    throw Error("compressor " + name_ + " violates its contraction bound");
#endif
  return out;
}

QuadraticOracle::QuadraticOracle(double c) : c_(c) {
  if (!(c > 0.0)) throw std::invalid_argument("curvature must be positive");
}

QuadraticOracle::QuadraticOracle(double c, const ProblemClass& pc) : QuadraticOracle(c) {
  if (c < pc.mu() || c > pc.L()) throw std::invalid_argument("curvature outside [mu, L]");
}

DiagonalQuadraticOracle::DiagonalQuadraticOracle(Eigen::VectorXd h) : h_(std::move(h)) {
  if (h_.size() < 1 || h_.minCoeff() <= 0.0) throw std::invalid_argument("curvatures must be positive");
}

StateVector initial_state(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp,
                          const Eigen::VectorXd& x0) {
  const Eigen::VectorXd g = oracle.gradient(x0);
  switch (cfg.method) {
    case MethodId::CGD:
      return StateVector(cfg.method, {x0, g, comp(cfg.eta * g)});
    case MethodId::EF: {
      const Eigen::VectorXd e = Eigen::VectorXd::Zero(x0.size());
      return StateVector(cfg.method, {x0, g, comp(e + cfg.eta * g), e});
    }
    case MethodId::EF21:
      return StateVector(cfg.method, {x0, g, comp(g)});
  }
  throw Error("unreachable");
}

StateVector step(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp, const StateVector& s) {
  if (s.method != cfg.method) throw DimensionError("state labels do not match the configured method");
  const double eta = cfg.eta;
  switch (cfg.method) {
    case MethodId::CGD: {
      Eigen::VectorXd x = s.components[0] - s.components[2];
      Eigen::VectorXd g = oracle.gradient(x);
      Eigen::VectorXd c = comp(eta * g);
      return StateVector(cfg.method, {x, g, c});
    }
    case MethodId::EF: {
      const auto& c0 = s.components[2];
      Eigen::VectorXd x = s.components[0] - c0;
      Eigen::VectorXd e = s.components[3] + eta * s.components[1] - c0;
      Eigen::VectorXd g = oracle.gradient(x);
      Eigen::VectorXd c = comp(e + eta * g);
      return StateVector(cfg.method, {x, g, c, e});
    }
    case MethodId::EF21: {
      const auto& d0 = s.components[2];
      Eigen::VectorXd x = s.components[0] - eta * d0;
      Eigen::VectorXd g = oracle.gradient(x);
      Eigen::VectorXd d = d0 + comp(g - d0);
      return StateVector(cfg.method, {x, g, d});
    }
  }
  throw Error("unreachable");
}

Trajectory simulate(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp,
                    const StateVector& initial, int K) {
  if (K < 0) throw std::invalid_argument("step count must be nonnegative");
  Trajectory t;
  t.method = cfg.method;
  t.states.reserve(K + 1);
  t.states.push_back(initial);
  t.fval_gaps.push_back(oracle.value(initial.components[0]) - oracle.optimal_value());
  for (int k = 0; k < K; ++k) {
    t.states.push_back(step(cfg, oracle, comp, t.states.back()));
    t.fval_gaps.push_back(oracle.value(t.states.back().components[0]) - oracle.optimal_value());
  }
  return t;
}

Trajectory worst_case_trajectory(MethodId method, double c, const Compression& comp, double eta, int K) {
  if (method == MethodId::CGD) throw std::invalid_argument("worst-case recurrence is defined for ef and ef21");
  if (K < 0) throw std::invalid_argument("step count must be nonnegative");
  if (!(c > 0.0) || !(eta > 0.0)) throw std::invalid_argument("curvature and step size must be positive");
  const double s = comp.sqrt_eps();
  const double beta = recurrence_beta(c, comp, eta);
  std::vector<double> x(K + 2);
  x[0] = 1.0;
  // e0 = 0 (EF) and d0 = (1+s) c x0 (EF21) give the same first step
  x[1] = x[0] - (1.0 + s) * eta * c * x[0];
  for (int k = 0; k + 2 < K + 2; ++k) x[k + 2] = beta * x[k + 1] + s * x[k];

  Trajectory t;
  t.method = method;
  auto v = [](double a) { return Eigen::VectorXd::Constant(1, a); };
  for (int k = 0; k <= K; ++k) {
    const double g = c * x[k];
    if (method == MethodId::EF) {
      const double e = (1.0 - eta * c * (1.0 + s)) / (1.0 + s) * x[k] - x[k + 1] / (1.0 + s);
      const double msg = x[k] - x[k + 1];
      t.states.emplace_back(method, std::vector<Eigen::VectorXd>{v(x[k]), v(g), v(msg), v(e)});
    } else {
      const double d = (x[k] - x[k + 1]) / eta;
      t.states.emplace_back(method, std::vector<Eigen::VectorXd>{v(x[k]), v(g), v(d)});
    }
    t.fval_gaps.push_back(0.5 * c * x[k] * x[k]);
  }
  return t;
}

std::vector<double> empirical_contraction(const Trajectory& traj, const LyapunovCandidate& cand) {
  constexpr double kFloor = 1e-300;
  std::vector<double> out;
  for (size_t k = 0; k + 1 < traj.size(); ++k) {
    const double vk = evaluate_lyapunov(cand, traj.states[k], traj.fval_gaps[k]);
    if (vk < kFloor) break;
    const double vn = evaluate_lyapunov(cand, traj.states[k + 1], traj.fval_gaps[k + 1]);
    out.push_back(vn / vk);
  }
  return out;
}

static std::string join(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v[i];
  }
  return os.str();
}

std::string trajectory_csv(const Trajectory& traj, const LyapunovCandidate* cand) {
  std::ostringstream os;
  os.precision(17);
  os << "k,x,g,c_or_d,e" << (cand ? ",V" : "") << "\n";
  for (size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    os << k << ',' << join(s.get("x")) << ',' << join(s.get("g")) << ',';
    os << join(s.method == MethodId::EF21 ? s.get("d") : s.get("c")) << ',';
    if (s.has("e")) os << join(s.get("e"));
    if (cand) os << ',' << evaluate_lyapunov(*cand, s, traj.fval_gaps[k]);
    os << "\n";
  }
  return os.str();
}

}  // namespace tightfeed
