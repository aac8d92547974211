#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tightfeed/core.hpp"

namespace tightfeed {

enum class SweepMode { ClosedForm, PepFixed, PepSearch };
std::string to_string(SweepMode m);
SweepMode sweep_mode_from_string(const std::string& s);

enum class RowStatus { Converged, Divergent, Cycle, SolverFailure };
std::string to_string(RowStatus s);
RowStatus row_status_from_string(const std::string& s);

struct SweepSpec {
  std::vector<MethodId> methods{MethodId::EF};
  ProblemClass pc{0.1, 1.0};
  double eps_lo = 0.01, eps_hi = 0.99;
  int eps_res = 40;
  double eta_lo = 0.01;
  std::optional<double> eta_hi;  // defaults to 2/(L+mu)
  int eta_res = 40;
  SweepMode mode = SweepMode::PepSearch;
  bool cycle_check = true;
  double tol = 1e-6;
  int threads = 0;  // 0: TIGHTFEED_THREADS or hardware concurrency

  double eta_upper() const;
  std::vector<double> eps_grid() const;
  std::vector<double> eta_grid() const;
  void validate() const;
};

struct SweepRow {
  MethodId method = MethodId::EF;
  double mu = 0.0, L = 0.0, eps = 0.0, eta = 0.0;
  std::optional<double> rho;  // present iff converged or divergent; +inf when no rate below the bracket
  RowStatus status = RowStatus::SolverFailure;
  std::string note;           // not serialized

  bool operator==(const SweepRow& o) const;
};

// linspace with n >= 1 points (n == 1 gives lo)
std::vector<double> linspace(double lo, double hi, int n);

// resolved worker count: explicit > 0, else TIGHTFEED_THREADS, else hardware
int worker_count(int requested = 0);

// runs fn(i) for i in [0, n) on a bounded pool; exceptions are caught per item
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

// one grid point under a sweep mode
SweepRow evaluate_point(MethodId method, const ProblemClass& pc, double eps, double eta, SweepMode mode,
                        bool cycle_check = true, double tol = 1e-6);

// rows ordered by (method, eps, eta)
std::vector<SweepRow> contour_sweep(const SweepSpec& spec);

struct TunedRow {
  MethodId method = MethodId::EF;
  double eps = 0.0;
  double eta_opt = 0.0;
  double rho_opt = 0.0;
  std::optional<double> eta_closed;  // EF / EF21 only
  int failures = 0;
};

// minimizes the searched rate over an eta grid on [eta_lo, 2/(L+mu)]
std::vector<TunedRow> tuned_rate_curve(MethodId method, const ProblemClass& pc, const std::vector<double>& eps_grid,
                                       int eta_res, double eta_lo = 0.01, double tol = 1e-6, int threads = 0);

struct DiffRow {
  double mu = 0.0, L = 0.0;
  double max_diff = 0.0;
  int compared = 0;  // points convergent for both methods
  int excluded = 0;
};

std::vector<DiffRow> method_difference_table(const std::vector<ProblemClass>& pcs, int eps_res, int eta_res,
                                             double tol = 1e-6, int threads = 0);

struct MultistepRow {
  int K = 1;
  double rho_K = 0.0;
  double rho_pow_K = 0.0;
};

// fixed theorem candidate at eta*, K = 1..K_max; CGD uses the one-step value as its reference rate
std::vector<MultistepRow> multistep_curve(MethodId method, const ProblemClass& pc, const Compression& comp,
                                          int K_max, std::optional<double> eta = std::nullopt);

// generic output table
using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  bool operator==(const Table& o) const = default;
};

enum class Format { Csv, Json };
Format format_from_string(const std::string& s);

Table to_table(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_rows_from_table(const Table& t);
Table to_table(const std::vector<TunedRow>& rows);
Table to_table(const std::vector<DiffRow>& rows);
Table to_table(const std::vector<MultistepRow>& rows);

std::string format_table(const Table& t, Format f);
Table parse_table(const std::string& text, Format f);
// throws Error on I/O failure
void emit(const Table& t, Format f, const std::string& path);
Table read_table(const std::string& path, Format f);

}  // namespace tightfeed
