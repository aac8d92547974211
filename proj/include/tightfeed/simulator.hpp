#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tightfeed/core.hpp"

namespace tightfeed {

class Compressor {
 public:
  using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  static Compressor identity();
  // C(v) = (1 + theta sqrt(eps)) v
  static Compressor scalar(const Compression& comp, double theta);
  // keeps the largest-magnitude coordinate; needs eps >= 1 - 1/d
  static Compressor top1(const Compression& comp, int d);
  static Compressor custom(const Compression& comp, Map map, std::string name);

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const;
  bool satisfies_contract(const Eigen::VectorXd& v) const;
  double epsilon() const { return eps_; }
  const std::string& name() const { return name_; }

 private:
  Compressor(double eps, Map map, std::string name) : eps_(eps), map_(std::move(map)), name_(std::move(name)) {}
  double eps_;
  Map map_;
  std::string name_;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  // f(x*) with x* = 0
  virtual double optimal_value() const { return 0.0; }
};

class QuadraticOracle : public Oracle {
 public:
  explicit QuadraticOracle(double c);
  QuadraticOracle(double c, const ProblemClass& pc);
  double value(const Eigen::VectorXd& x) const override { return 0.5 * c_ * x.squaredNorm(); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override { return c_ * x; }
  double curvature() const { return c_; }

 private:
  double c_;
};

// f(x) = 1/2 sum_i h_i x_i^2, for exploratory runs in d >= 2
class DiagonalQuadraticOracle : public Oracle {
 public:
  explicit DiagonalQuadraticOracle(Eigen::VectorXd h);
  double value(const Eigen::VectorXd& x) const override { return 0.5 * x.dot(h_.cwiseProduct(x)); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override { return h_.cwiseProduct(x); }

 private:
  Eigen::VectorXd h_;
};

struct Trajectory {
  MethodId method = MethodId::EF;
  std::vector<StateVector> states;
  std::vector<double> fval_gaps;
  size_t size() const { return states.size(); }
};

StateVector initial_state(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp,
                          const Eigen::VectorXd& x0);

StateVector step(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp, const StateVector& s);

Trajectory simulate(const MethodConfig& cfg, const Oracle& oracle, const Compressor& comp,
                    const StateVector& initial, int K);

Trajectory worst_case_trajectory(MethodId method, double c, const Compression& comp, double eta, int K);

std::vector<double> empirical_contraction(const Trajectory& traj, const LyapunovCandidate& cand);

// columns k,x,g,c_or_d,e[,V]; multi-dimensional entries are ';'-joined
std::string trajectory_csv(const Trajectory& traj, const LyapunovCandidate* cand = nullptr);

}  // namespace tightfeed
