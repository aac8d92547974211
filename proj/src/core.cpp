#include "tightfeed/core.hpp"

#include <algorithm>
#include <cmath>

namespace tightfeed {

ProblemClass::ProblemClass(double mu, double L) : mu_(mu), L_(L) {
  if (!(mu > 0.0) || !(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("problem class needs 0 < mu < L");
  if (!(mu < L)) throw std::invalid_argument("problem class needs mu < L strictly");
}

Compression::Compression(double epsilon) : eps_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("compression level must lie in [0, 1)");
}

double Compression::sqrt_eps() const { return std::sqrt(eps_); }

std::string to_string(MethodId m) {
  switch (m) {
    case MethodId::CGD:
      return "cgd";
    case MethodId::EF:
      return "ef";
    case MethodId::EF21:
      return "ef21";
  }
  return "?";
}

MethodId method_from_string(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "cgd") return MethodId::CGD;
  if (t == "ef") return MethodId::EF;
  if (t == "ef21") return MethodId::EF21;
  throw std::invalid_argument("unknown method '" + s + "'");
}

const std::vector<std::string>& state_labels(MethodId m) {
  static const std::vector<std::string> cgd{"x", "g", "c"};
  static const std::vector<std::string> ef{"x", "g", "c", "e"};
  static const std::vector<std::string> ef21{"x", "g", "d"};
  switch (m) {
    case MethodId::CGD:
      return cgd;
    case MethodId::EF:
      return ef;
    default:
      return ef21;
  }
}

MethodConfig::MethodConfig(MethodId method_, ProblemClass pc_, Compression comp_, double eta_)
    : method(method_), pc(pc_), comp(comp_), eta(eta_) {
  if (!(eta_ > 0.0) || !std::isfinite(eta_)) throw std::invalid_argument("step size must be positive");
}

StateVector::StateVector(MethodId m, std::vector<Eigen::VectorXd> comps)
    : method(m), components(std::move(comps)) {
  if (components.size() != state_labels(m).size())
    throw DimensionError("state has " + std::to_string(components.size()) +
                         " components, method " + to_string(m) + " needs " +
                         std::to_string(state_labels(m).size()));
  const auto d = components.front().size();
  if (d < 1) throw DimensionError("state dimension must be at least 1");
  for (const auto& c : components)
    if (c.size() != d) throw DimensionError("state components differ in dimension");
}

static int label_index(MethodId m, const std::string& label) {
  const auto& labels = state_labels(m);
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return -1;
  return static_cast<int>(it - labels.begin());
}

bool StateVector::has(const std::string& label) const { return label_index(method, label) >= 0; }

const Eigen::VectorXd& StateVector::get(const std::string& label) const {
  int i = label_index(method, label);
  if (i < 0) throw DimensionError("state of " + to_string(method) + " has no component " + label);
  return components[i];
}

Eigen::VectorXd& StateVector::get(const std::string& label) {
  int i = label_index(method, label);
  if (i < 0) throw DimensionError("state of " + to_string(method) + " has no component " + label);
  return components[i];
}

LyapunovCandidate::LyapunovCandidate(std::vector<std::string> labels, Eigen::MatrixXd P, double p)
    : labels_(std::move(labels)), P_(std::move(P)), p_(p), scale_(1.0) {
  const auto n = static_cast<Eigen::Index>(labels_.size());
  if (P_.rows() != n || P_.cols() != n)
    throw DimensionError("P must be " + std::to_string(n) + "x" + std::to_string(n));
  for (size_t i = 0; i < labels_.size(); ++i)
    for (size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j]) throw DimensionError("duplicate label " + labels_[i]);
  if (!P_.allFinite() || !std::isfinite(p_)) throw std::invalid_argument("candidate has non-finite entries");
  const double asym = (P_ - P_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, P_.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("P must be symmetric");
  P_ = 0.5 * (P_ + P_.transpose());
  const double total = P_.trace() + p_;
  if (!(total > 0.0)) throw std::invalid_argument("Tr(P) + p must be positive");
  scale_ = 1.0 / total;
  P_ *= scale_;
  p_ *= scale_;
  if (p_ < 0.0) {
    if (p_ < -kTolPsd) throw std::invalid_argument("p must be nonnegative");
    p_ = 0.0;
  }
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kTolPsd)
      throw std::invalid_argument("P is not positive semidefinite");
  }
}

Eigen::MatrixXd LyapunovCandidate::embedded(MethodId m) const {
  const auto& full = state_labels(m);
  const int n = static_cast<int>(full.size());
  std::vector<int> idx;
  for (const auto& l : labels_) {
    int i = label_index(m, l);
    if (i < 0) throw DimensionError("candidate label " + l + " is not a state component of " + to_string(m));
    idx.push_back(i);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (size_t a = 0; a < idx.size(); ++a)
    for (size_t b = 0; b < idx.size(); ++b) out(idx[a], idx[b]) = P_(a, b);
  return out;
}

double optimal_step_size(const ProblemClass& pc, const Compression& comp) {
  const double s = comp.sqrt_eps();
  return 2.0 / (pc.L() + pc.mu()) * (1.0 - s) / (1.0 + s);
}

double evaluate_lyapunov(const LyapunovCandidate& cand, const StateVector& state, double fval_gap) {
  const auto& labels = cand.labels();
  std::vector<const Eigen::VectorXd*> comps;
  for (const auto& l : labels) comps.push_back(&state.get(l));
  double v = 0.0;
  for (size_t a = 0; a < comps.size(); ++a)
    for (size_t b = 0; b < comps.size(); ++b) v += cand.P()(a, b) * comps[a]->dot(*comps[b]);
  return v + cand.p() * fval_gap;
}

LyapunovCandidate ef_closed_form_lyapunov(const Compression& comp) {
  Eigen::Matrix2d P;
  if (comp.epsilon() == 0.0) {
    P << 1, 0, 0, 0;
  } else {
    P << 1, -1, -1, 1 + 1 / comp.sqrt_eps();
  }
  return LyapunovCandidate({"x", "e"}, P, 0.0);
}

LyapunovCandidate ef21_closed_form_lyapunov(const Compression& comp) {
  Eigen::Matrix2d P;
  if (comp.epsilon() == 0.0) {
    P << 1, 0, 0, 0;
  } else {
    P << 1 + comp.sqrt_eps(), -1, -1, 1;
  }
  return LyapunovCandidate({"g", "d"}, P, 0.0);
}

LyapunovCandidate functional_residual_lyapunov(MethodId m) {
  const auto& l = state_labels(m);
  return LyapunovCandidate(l, Eigen::MatrixXd::Zero(l.size(), l.size()), 1.0);
}

LyapunovCandidate distance_lyapunov(MethodId m) {
  const auto& l = state_labels(m);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(l.size(), l.size());
  P(0, 0) = 1.0;
  return LyapunovCandidate(l, P, 0.0);
}

LyapunovCandidate theorem_lyapunov(MethodId m, const Compression& comp) {
  switch (m) {
    case MethodId::EF:
      return ef_closed_form_lyapunov(comp);
    case MethodId::EF21:
      return ef21_closed_form_lyapunov(comp);
    default:
      return functional_residual_lyapunov(m);
  }
}

nlohmann::json to_json(const LyapunovCandidate& cand) {
  nlohmann::json j;
  j["labels"] = cand.labels();
  std::vector<double> rows;
  for (int i = 0; i < cand.P().rows(); ++i)
    for (int k = 0; k < cand.P().cols(); ++k) rows.push_back(cand.P()(i, k));
  j["P"] = rows;
  j["p"] = cand.p();
  j["normalized"] = true;
  return j;
}

LyapunovCandidate candidate_from_json(const nlohmann::json& j) {
  auto labels = j.at("labels").get<std::vector<std::string>>();
  auto flat = j.at("P").get<std::vector<double>>();
  const size_t n = labels.size();
  if (flat.size() != n * n) throw DimensionError("P has wrong number of entries");
  Eigen::MatrixXd P(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t k = 0; k < n; ++k) P(i, k) = flat[i * n + k];
  return LyapunovCandidate(labels, P, j.at("p").get<double>());
}

}  // namespace tightfeed
