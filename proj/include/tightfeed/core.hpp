#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace tightfeed {

inline constexpr double kTolPsd = 1e-9;
inline constexpr double kTolNorm = 1e-10;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};

class ProblemClass {
 public:
  ProblemClass(double mu, double L);
  double mu() const { return mu_; }
  double L() const { return L_; }
  double kappa() const { return L_ / mu_; }

 private:
  double mu_;
  double L_;
};

class Compression {
 public:
  explicit Compression(double epsilon);
  double epsilon() const { return eps_; }
  double sqrt_eps() const;

 private:
  double eps_;
};

enum class MethodId { CGD, EF, EF21 };

std::string to_string(MethodId m);
MethodId method_from_string(const std::string& s);

// component labels of the method state, in storage order
const std::vector<std::string>& state_labels(MethodId m);

struct MethodConfig {
  MethodConfig(MethodId method, ProblemClass pc, Compression comp, double eta);
  MethodId method;
  ProblemClass pc;
  Compression comp;
  double eta;
};

// Shifted coordinates: x* = 0 and every auxiliary fixed point is 0.
struct StateVector {
  StateVector(MethodId method, std::vector<Eigen::VectorXd> components);
  MethodId method;
  std::vector<Eigen::VectorXd> components;

  int dim() const { return static_cast<int>(components.front().size()); }
  const Eigen::VectorXd& get(const std::string& label) const;
  Eigen::VectorXd& get(const std::string& label);
  bool has(const std::string& label) const;
};

class LyapunovCandidate {
 public:
  // P is rescaled so that Tr(P) + p = 1
  LyapunovCandidate(std::vector<std::string> labels, Eigen::MatrixXd P, double p);

  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::MatrixXd& P() const { return P_; }
  double p() const { return p_; }
  // scale applied during normalization (normalized = raw * scale)
  double scale() const { return scale_; }

  // P embedded into the full state ordering of a method
  Eigen::MatrixXd embedded(MethodId m) const;

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd P_;
  double p_;
  double scale_;
};

double optimal_step_size(const ProblemClass& pc, const Compression& comp);

double evaluate_lyapunov(const LyapunovCandidate& cand, const StateVector& state,
                         double fval_gap);

LyapunovCandidate ef_closed_form_lyapunov(const Compression& comp);
LyapunovCandidate ef21_closed_form_lyapunov(const Compression& comp);
// p = 1, P = 0 over the full state
LyapunovCandidate functional_residual_lyapunov(MethodId m);
// ||x - x*||^2 over the full state
LyapunovCandidate distance_lyapunov(MethodId m);
// the candidate the theorems use for each method
LyapunovCandidate theorem_lyapunov(MethodId m, const Compression& comp);

nlohmann::json to_json(const LyapunovCandidate& cand);
LyapunovCandidate candidate_from_json(const nlohmann::json& j);

}  // namespace tightfeed
