#include "tightfeed/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tightfeed/pep.hpp"
#include "tightfeed/rates.hpp"

namespace tightfeed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const std::string& cell_string(const Cell& c, const std::string& what) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  throw Error("expected text in column " + what);
}

double cell_double(const Cell& c, const std::string& what) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  throw Error("expected a number in column " + what);
}

Cell optional_cell(const std::optional<double>& v) {
  if (v) return *v;
  return std::monostate{};
}

}  // namespace

std::string to_string(SweepMode m) {
  switch (m) {
    case SweepMode::ClosedForm: return "closed-form";
    case SweepMode::PepFixed: return "pep-fixed";
    case SweepMode::PepSearch: return "pep-search";
  }
  return "?";
}

SweepMode sweep_mode_from_string(const std::string& s) {
  if (s == "closed-form") return SweepMode::ClosedForm;
  if (s == "pep-fixed" || s == "pep-fixed-lyapunov") return SweepMode::PepFixed;
  if (s == "pep-search") return SweepMode::PepSearch;
  throw std::invalid_argument("unknown sweep mode: " + s);
}

std::string to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Converged: return "converged";
    case RowStatus::Divergent: return "divergent";
    case RowStatus::Cycle: return "cycle";
    case RowStatus::SolverFailure: return "solver-failure";
  }
  return "?";
}

RowStatus row_status_from_string(const std::string& s) {
  if (s == "converged") return RowStatus::Converged;
  if (s == "divergent") return RowStatus::Divergent;
  if (s == "cycle") return RowStatus::Cycle;
  if (s == "solver-failure") return RowStatus::SolverFailure;
  throw std::invalid_argument("unknown row status: " + s);
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("grid resolution must be >= 1");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double SweepSpec::eta_upper() const { return eta_hi ? *eta_hi : 2.0 / (pc.L() + pc.mu()); }
std::vector<double> SweepSpec::eps_grid() const { return linspace(eps_lo, eps_hi, eps_res); }
std::vector<double> SweepSpec::eta_grid() const { return linspace(eta_lo, eta_upper(), eta_res); }

void SweepSpec::validate() const {
  if (methods.empty()) throw std::invalid_argument("sweep needs at least one method");
  if (!(eps_lo >= 0.0) || !(eps_hi < 1.0) || eps_lo > eps_hi) throw std::invalid_argument("eps range must lie in [0,1)");
  if (!(eta_lo > 0.0) || eta_lo > eta_upper()) throw std::invalid_argument("eta range must be positive and ordered");
  if (eps_res < 1 || eta_res < 1) throw std::invalid_argument("grid resolution must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (mode == SweepMode::ClosedForm)
    for (auto m : methods)
      if (m == MethodId::CGD) throw std::invalid_argument("closed-form mode has no CGD rate");
}

bool SweepRow::operator==(const SweepRow& o) const {
  return method == o.method && mu == o.mu && L == o.L && eps == o.eps && eta == o.eta && rho == o.rho &&
         status == o.status;
}

int worker_count(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("TIGHTFEED_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v > 0) n = static_cast<int>(v);
    }
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n, 1, 256);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int w = std::min(worker_count(threads), std::max(n, 1));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        // fn records its own failures
      }
    }
  };
  if (w <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (int t = 0; t < w; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

SweepRow evaluate_point(MethodId method, const ProblemClass& pc, double eps, double eta, SweepMode mode,
                        bool cycle_check_flag, double tol) {
  SweepRow row;
  row.method = method;
  row.mu = pc.mu();
  row.L = pc.L();
  row.eps = eps;
  row.eta = eta;
  try {
    const Compression comp(eps);
    double rho = kInf;
    switch (mode) {
      case SweepMode::ClosedForm:
        rho = worst_case_rate_over_class(method, pc, comp, eta);
        break;
      case SweepMode::PepFixed: {
        const auto w = worst_case_ratio(method, pc, comp, eta, theorem_lyapunov(method, comp), 1);
        if (w.status == sdp::Status::Infeasible) throw SolverError("worst-case program infeasible");
        rho = w.value;
        break;
      }
      case SweepMode::PepSearch: {
        const auto b = bisect_optimal_rate(method, pc, comp, eta, tol);
        if (b.converged) {
          rho = b.rho;
          // second pass: the found candidate's own worst case
          try {
            const auto w = worst_case_ratio(method, pc, comp, eta, *b.candidate, 1);
            if (w.status == sdp::Status::Optimal && std::isfinite(w.value)) rho = w.value;
          } catch (const SolverError& e) {
            row.note = e.what();
          }
        }
        break;
      }
    }
    row.rho = rho;
    row.status = rho < 1.0 ? RowStatus::Converged : RowStatus::Divergent;
    if (row.status == RowStatus::Divergent && cycle_check_flag && mode != SweepMode::ClosedForm) {
      const auto c = cycle_check(method, pc, comp, eta);
      if (c.is_cycle) {
        row.status = RowStatus::Cycle;
        row.rho.reset();
      }
    }
  } catch (const std::exception& e) {
    row.rho.reset();
    row.status = RowStatus::SolverFailure;
    row.note = e.what();
  }
  return row;
}

std::vector<SweepRow> contour_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto eps = spec.eps_grid();
  const auto eta = spec.eta_grid();
  const int per = static_cast<int>(eps.size() * eta.size());
  const int n = per * static_cast<int>(spec.methods.size());
  std::vector<SweepRow> rows(n);
  parallel_for(n, spec.threads, [&](int i) {
    const int mi = i / per, r = i % per;
    const int ei = r / static_cast<int>(eta.size()), hi = r % static_cast<int>(eta.size());
    rows[i] = evaluate_point(spec.methods[mi], spec.pc, eps[ei], eta[hi], spec.mode, spec.cycle_check, spec.tol);
  });
  return rows;
}

std::vector<TunedRow> tuned_rate_curve(MethodId method, const ProblemClass& pc, const std::vector<double>& eps_grid,
                                       int eta_res, double eta_lo, double tol, int threads) {
  if (eta_res < 50) throw std::invalid_argument("eta resolution must be >= 50");
  SweepSpec spec;
  spec.methods = {method};
  spec.pc = pc;
  spec.eta_lo = eta_lo;
  spec.eta_res = eta_res;
  spec.tol = tol;
  const auto eta = spec.eta_grid();
  const int ne = static_cast<int>(eta.size());
  const int n = static_cast<int>(eps_grid.size()) * ne;
  std::vector<SweepRow> pts(n);
  parallel_for(n, threads, [&](int i) {
    pts[i] = evaluate_point(method, pc, eps_grid[i / ne], eta[i % ne], SweepMode::PepSearch, false, tol);
  });
  std::vector<TunedRow> out;
  for (size_t k = 0; k < eps_grid.size(); ++k) {
    TunedRow row;
    row.method = method;
    row.eps = eps_grid[k];
    row.rho_opt = kInf;
    row.eta_opt = eta.front();
    for (int j = 0; j < ne; ++j) {
      const auto& p = pts[k * ne + j];
      if (!p.rho) {
        ++row.failures;
        continue;
      }
      if (*p.rho < row.rho_opt) {
        row.rho_opt = *p.rho;
        row.eta_opt = p.eta;
      }
    }
    if (method != MethodId::CGD) row.eta_closed = optimal_step_size(pc, Compression(eps_grid[k]));
    out.push_back(row);
  }
  return out;
}

std::vector<DiffRow> method_difference_table(const std::vector<ProblemClass>& pcs, int eps_res, int eta_res,
                                             double tol, int threads) {
  std::vector<DiffRow> out;
  for (const auto& pc : pcs) {
    SweepSpec spec;
    spec.methods = {MethodId::EF, MethodId::EF21};
    spec.pc = pc;
    spec.eps_res = eps_res;
    spec.eta_res = eta_res;
    spec.cycle_check = false;
    spec.tol = tol;
    spec.threads = threads;
    const auto rows = contour_sweep(spec);
    const size_t per = rows.size() / 2;
    DiffRow d;
    d.mu = pc.mu();
    d.L = pc.L();
    for (size_t i = 0; i < per; ++i) {
      const auto& a = rows[i];
      const auto& b = rows[per + i];
      const bool ok = a.status == RowStatus::Converged && b.status == RowStatus::Converged;
      if (!ok) {
        ++d.excluded;
        continue;
      }
      ++d.compared;
      d.max_diff = std::max(d.max_diff, std::abs(*a.rho - *b.rho));
    }
    out.push_back(d);
  }
  return out;
}

std::vector<MultistepRow> multistep_curve(MethodId method, const ProblemClass& pc, const Compression& comp,
                                          int K_max, std::optional<double> eta) {
  if (K_max < 1) throw std::invalid_argument("K_max must be >= 1");
  const double eta_star = optimal_step_size(pc, comp);
  const double step = eta ? *eta : eta_star;
  const auto cand = theorem_lyapunov(method, comp);
  std::vector<MultistepRow> out;
  double ref = 0.0;
  for (int K = 1; K <= K_max; ++K) {
    const auto w = worst_case_ratio(method, pc, comp, step, cand, K);
    if (w.status != sdp::Status::Optimal) throw SolverError("multi-step worst case did not solve at K=" + std::to_string(K));
    if (K == 1) {
      const bool closed = method != MethodId::CGD && std::abs(step - eta_star) <= 1e-12 * eta_star;
      ref = closed ? optimal_rate(method, pc, comp).rho : w.value;
    }
    out.push_back({K, w.value, std::pow(ref, K)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// tables

Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw std::invalid_argument("unknown format: " + s);
}

Table to_table(const std::vector<SweepRow>& rows) {
  Table t;
  t.columns = {"method", "mu", "L", "eps", "eta", "rho", "status"};
  for (const auto& r : rows)
    t.rows.push_back({to_string(r.method), r.mu, r.L, r.eps, r.eta, optional_cell(r.rho), to_string(r.status)});
  return t;
}

std::vector<SweepRow> sweep_rows_from_table(const Table& t) {
  const std::vector<std::string> want{"method", "mu", "L", "eps", "eta", "rho", "status"};
  if (t.columns != want) throw Error("not a sweep table");
  std::vector<SweepRow> out;
  for (const auto& c : t.rows) {
    if (c.size() != want.size()) throw Error("sweep row has " + std::to_string(c.size()) + " fields");
    SweepRow r;
    r.method = method_from_string(cell_string(c[0], "method"));
    r.mu = cell_double(c[1], "mu");
    r.L = cell_double(c[2], "L");
    r.eps = cell_double(c[3], "eps");
    r.eta = cell_double(c[4], "eta");
    if (!std::holds_alternative<std::monostate>(c[5])) r.rho = cell_double(c[5], "rho");
    r.status = row_status_from_string(cell_string(c[6], "status"));
    out.push_back(r);
  }
  return out;
}

Table to_table(const std::vector<TunedRow>& rows) {
  Table t;
  t.columns = {"method", "eps", "eta_opt", "rho_opt", "eta_closed", "failures"};
  for (const auto& r : rows)
    t.rows.push_back({to_string(r.method), r.eps, r.eta_opt, r.rho_opt, optional_cell(r.eta_closed),
                      static_cast<double>(r.failures)});
  return t;
}

Table to_table(const std::vector<DiffRow>& rows) {
  Table t;
  t.columns = {"mu", "L", "kappa", "max_diff", "compared", "excluded"};
  for (const auto& r : rows)
    t.rows.push_back({r.mu, r.L, r.L / r.mu, r.max_diff, static_cast<double>(r.compared),
                      static_cast<double>(r.excluded)});
  return t;
}

Table to_table(const std::vector<MultistepRow>& rows) {
  Table t;
  t.columns = {"K", "rho_K", "rho_pow_K"};
  for (const auto& r : rows) t.rows.push_back({static_cast<double>(r.K), r.rho_K, r.rho_pow_K});
  return t;
}

std::string format_table(const Table& t, Format f) {
  if (f == Format::Csv) {
    std::ostringstream os;
    for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) os << ",";
        if (const auto* d = std::get_if<double>(&row[i])) {
          os << format_double(*d);
        } else if (const auto* s = std::get_if<std::string>(&row[i])) {
          if (s->find_first_of(",\n\"") != std::string::npos) throw Error("csv cell needs quoting: " + *s);
          os << *s;
        }
      }
      os << "\n";
    }
    return os.str();
  }
  nlohmann::ordered_json j;
  j["columns"] = t.columns;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (size_t i = 0; i < row.size() && i < t.columns.size(); ++i) {
      const auto& c = row[i];
      if (const auto* d = std::get_if<double>(&c)) {
        // json has no infinities; they travel as text
        if (std::isfinite(*d)) o[t.columns[i]] = *d;
        else o[t.columns[i]] = format_double(*d);
      } else if (const auto* s = std::get_if<std::string>(&c)) {
        o[t.columns[i]] = *s;
      } else {
        o[t.columns[i]] = nullptr;
      }
    }
    j["rows"].push_back(o);
  }
  return j.dump(2) + "\n";
}

Table parse_table(const std::string& text, Format f) {
  Table t;
  if (f == Format::Csv) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw Error("empty csv");
    auto split = [](const std::string& l) {
      std::vector<std::string> out;
      std::string cur;
      std::istringstream ls(l);
      while (std::getline(ls, cur, ',')) out.push_back(trim(cur));
      if (!l.empty() && l.back() == ',') out.push_back("");
      return out;
    };
    t.columns = split(trim(line));
    while (std::getline(is, line)) {
      if (trim(line).empty()) continue;
      const auto fields = split(line);
      if (fields.size() != t.columns.size())
        throw Error("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(t.columns.size()));
      std::vector<Cell> row;
      for (const auto& s : fields) {
        if (s.empty()) row.emplace_back(std::monostate{});
        else if (auto d = parse_double(s)) row.emplace_back(*d);
        else row.emplace_back(s);
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad json table: ") + e.what());
  }
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& o : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : t.columns) {
      const auto& v = o.at(c);
      if (v.is_null()) row.emplace_back(std::monostate{});
      else if (v.is_number()) row.emplace_back(v.get<double>());
      else {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "-inf" || s == "nan") row.emplace_back(*parse_double(s));
        else row.emplace_back(s);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void emit(const Table& t, Format f, const std::string& path) {
  const std::string body = format_table(t, f);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << body;
  os.flush();
  if (!os) throw Error("write failed: " + path);
}

Table read_table(const std::string& path, Format f) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_table(ss.str(), f);
}

}  // namespace tightfeed
