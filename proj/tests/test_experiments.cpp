#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tightfeed/cli.hpp"
#include "tightfeed/experiments.hpp"
#include "tightfeed/rates.hpp"

using namespace tightfeed;
using nlohmann::json;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = tightfeed::cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tightfeed_test_" + name)).string();
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(GridTest, Linspace) {
  EXPECT_EQ(linspace(0, 1, 1), std::vector<double>{0.0});
  const auto g = linspace(0.01, 0.99, 40);
  ASSERT_EQ(g.size(), 40u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.back(), 0.99);
  EXPECT_THROW(linspace(0, 1, 0), std::invalid_argument);
}

TEST(GridTest, SpecDefaultsAndValidation) {
  SweepSpec s;
  s.pc = ProblemClass(0.1, 1.0);
  EXPECT_NEAR(s.eta_upper(), 2.0 / 1.1, 1e-15);
  EXPECT_EQ(s.eps_grid().size(), 40u);
  s.methods = {MethodId::CGD};
  s.mode = SweepMode::ClosedForm;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.mode = SweepMode::PepSearch;
  s.eps_res = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(GridTest, WorkerCount) {
  EXPECT_EQ(worker_count(3), 3);
  EXPECT_GE(worker_count(0), 1);
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](int i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(SweepTest, ClosedFormRowsMatchRates) {
  SweepSpec s;
  s.methods = {MethodId::EF, MethodId::EF21};
  s.pc = ProblemClass(0.2, 1.0);
  s.eps_res = 3;
  s.eta_res = 4;
  s.mode = SweepMode::ClosedForm;
  const auto rows = contour_sweep(s);
  ASSERT_EQ(rows.size(), 24u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.rho.has_value());
    EXPECT_EQ(*r.rho, worst_case_rate_over_class(r.method, s.pc, Compression(r.eps), r.eta));
    EXPECT_EQ(r.status, *r.rho < 1 ? RowStatus::Converged : RowStatus::Divergent);
  }
  EXPECT_EQ(rows.front().method, MethodId::EF);
  EXPECT_EQ(rows.back().method, MethodId::EF21);
  EXPECT_LE(rows[0].eta, rows[1].eta);
}

TEST(SweepTest, SearchAgreesWithClosedFormAtOptimalStep) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const double eta = optimal_step_size(pc, comp);
  const auto row = evaluate_point(MethodId::EF21, pc, 0.25, eta, SweepMode::PepSearch, false);
  ASSERT_EQ(row.status, RowStatus::Converged);
  EXPECT_NEAR(*row.rho, ef_optimal_rate(pc, comp).rho, 1e-5);
  const auto fixed = evaluate_point(MethodId::EF, pc, 0.25, eta, SweepMode::PepFixed, false);
  EXPECT_NEAR(*fixed.rho, *row.rho, 1e-5);
}

TEST(SweepTest, CycleRowsCarryNoRate) {
  const auto row = evaluate_point(MethodId::EF, ProblemClass(0.1, 1), 0.9, 1.8, SweepMode::PepSearch, true);
  EXPECT_EQ(row.status, RowStatus::Cycle);
  EXPECT_FALSE(row.rho.has_value());
}

TEST(TableTest, SweepRoundTripCsvAndJson) {
  std::vector<SweepRow> rows(3);
  rows[0] = {MethodId::EF, 0.1, 1.0, 0.25, 0.3, 0.8, RowStatus::Converged, ""};
  rows[1] = {MethodId::EF21, 0.1, 1.0, 0.5, 1.0 / 3.0, std::numeric_limits<double>::infinity(), RowStatus::Divergent,
             ""};
  rows[2] = {MethodId::CGD, 0.1, 1.0, 0.9, 1.8, std::nullopt, RowStatus::Cycle, "x"};
  const Table t = to_table(rows);
  for (auto f : {Format::Csv, Format::Json}) {
    const std::string path = tmp_path(f == Format::Csv ? "rt.csv" : "rt.json");
    emit(t, f, path);
    const Table back = read_table(path, f);
    EXPECT_EQ(back, t);
    EXPECT_EQ(sweep_rows_from_table(back), rows);
    std::remove(path.c_str());
  }
}

TEST(TableTest, CsvShape) {
  const Table empty = to_table(std::vector<SweepRow>{});
  const std::string csv = format_table(empty, Format::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv, "method,mu,L,eps,eta,rho,status\n");
  std::vector<SweepRow> one{{MethodId::EF, 0.1, 1.0, 0.25, 0.3, std::nullopt, RowStatus::SolverFailure, ""}};
  const std::string line = format_table(to_table(one), Format::Csv);
  const std::string second = line.substr(line.find('\n') + 1);
  EXPECT_EQ(std::count(second.begin(), second.end(), ','), 6);
  EXPECT_NE(second.find(",,solver-failure"), std::string::npos);
}

TEST(TableTest, JsonShape) {
  std::vector<SweepRow> one{{MethodId::EF, 0.1, 1.0, 0.25, 0.3, 0.5, RowStatus::Converged, ""}};
  const json j = json::parse(format_table(to_table(one), Format::Json));
  EXPECT_EQ(j.at("rows").size(), 1u);
  EXPECT_EQ(j.at("rows")[0].at("status"), "converged");
  EXPECT_EQ(j.at("rows")[0].at("rho"), 0.5);
}

TEST(TableTest, EmitToBadPathThrows) {
  EXPECT_THROW(emit(Table{{"a"}, {}}, Format::Csv, "/nonexistent-dir/x.csv"), Error);
}

TEST(MultistepTest, PowersOfOneStepRate) {
  const ProblemClass pc(0.5, 1.0);
  const Compression comp(0.25);
  const auto rows = multistep_curve(MethodId::EF, pc, comp, 3);
  ASSERT_EQ(rows.size(), 3u);
  const double rho = ef_optimal_rate(pc, comp).rho;
  for (const auto& r : rows) {
    EXPECT_NEAR(r.rho_pow_K, std::pow(rho, r.K), 1e-14);
    EXPECT_LE(r.rho_K, r.rho_pow_K + 1e-6);
  }
}

TEST(TunedTest, EfArgminNearClosedForm) {
  const ProblemClass pc(0.5, 1.0);
  const auto rows = tuned_rate_curve(MethodId::EF, pc, {0.25}, 50);
  ASSERT_EQ(rows.size(), 1u);
  const double cell = (2.0 / 1.5 - 0.01) / 49;
  EXPECT_LE(std::abs(rows[0].eta_opt - *rows[0].eta_closed), cell + 1e-12);
  EXPECT_GE(rows[0].rho_opt, ef_optimal_rate(pc, Compression(0.25)).rho - 1e-5);
}

// ---------------------------------------------------------------------------
// command line

TEST(CliTest, RateExample) {
  const auto r = run_cli({"rate", "--method", "ef", "--mu", "0.5", "--L", "1", "--eps", "0.25", "--eta", "auto"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j.at("rho").get<double>(), 0.63256, 5e-6);
  EXPECT_NEAR(j.at("eta").get<double>(), 4.0 / 9.0, 1e-15);
  EXPECT_EQ(j.at("config").at("command"), "rate");
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({"rate", "--method", "cgd", "--eta", "0.5"}).code, 2);
  EXPECT_EQ(run_cli({"rate", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"rate", "--mu", "2", "--L", "1"}).code, 2);
  EXPECT_EQ(run_cli({"rate", "--eps", "1"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"certify", "--method", "ef21"}).code, 0);
  EXPECT_EQ(run_cli({"cycle", "--method", "ef", "--mu", "0.1", "--eps", "0.9", "--eta", "1.8"}).code, 1);
  EXPECT_EQ(run_cli({"search", "--method", "ef", "--mu", "0.1", "--eps", "0.5", "--eta", "1.8"}).code, 1);
}

TEST(CliTest, SearchReportsRate) {
  const auto r = run_cli({"search", "--method", "ef21", "--mu", "0.5", "--eps", "0.25", "--eta", "auto"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j.at("rho").get<double>(), 0.6325556, 1e-5);
}

TEST(CliTest, ConfigRerunIsIdentical) {
  const std::string a = tmp_path("a.csv"), b = tmp_path("b.csv"), cfg = tmp_path("cfg.json");
  const auto first = run_cli({"sweep", "--method", "ef", "--mu", "0.2", "--mode", "closed-form", "--eps-res", "3",
                          "--eta-res", "3", "--out", a});
  ASSERT_EQ(first.code, 0) << first.err;
  // rebuild the run from the echoed configuration
  const auto j = run_cli({"sweep", "--method", "ef", "--mu", "0.2", "--mode", "closed-form", "--eps-res", "3",
                      "--eta-res", "3", "--format", "json"});
  ASSERT_EQ(j.code, 0);
  json conf = json::parse(j.out).at("config");
  conf.erase("command");
  conf["format"] = "csv";
  std::ofstream(cfg) << conf.dump();
  ASSERT_EQ(run_cli({"sweep", "--config", cfg, "--out", b}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  for (const auto& p : {a, b, cfg}) std::remove(p.c_str());
}

TEST(CliTest, ConfigRejectsUnknownKeys) {
  const std::string cfg = tmp_path("bad.json");
  std::ofstream(cfg) << R"({"method": "ef", "nonsense": 1})";
  EXPECT_EQ(run_cli({"rate", "--config", cfg}).code, 2);
  std::remove(cfg.c_str());
}

TEST(CliTest, SimulateCsv) {
  const auto r = run_cli({"simulate", "--method", "ef", "--steps", "5", "--worst-case", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
}
