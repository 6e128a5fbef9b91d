#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "ehd/bench.hpp"
#include "support.hpp"

using namespace ehd;
using ehd::testing::fixtures_dir;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ehd_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// The first ten planted fixtures, copied into a fresh dataset directory.
fs::path ten_fixtures() {
  const fs::path root = scratch_dir("ten") / "planted";
  fs::create_directories(root);
  std::size_t copied = 0;
  for (const auto& f : bench::discover_fixtures(fixtures_dir() / "planted")) {
    if (copied == 10) break;
    fs::copy(f.dir, root / f.name, fs::copy_options::recursive);
    ++copied;
  }
  return root;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.ends_with(".timing.json")) continue;
    out[name] = io::read_text(e.path());
  }
  return out;
}

bench::BenchOptions options(const fs::path& fixtures, const fs::path& out, unsigned jobs) {
  bench::BenchOptions o;
  o.fixtures = fixtures;
  o.out = out;
  o.jobs = jobs;
  o.solvers = {SolverKind::kBrute, SolverKind::kGreedy, SolverKind::kLocal};
  return o;
}

}  // namespace

TEST(Discover, DirectoryAndSingleFixture) {
  const auto all = bench::discover_fixtures(fixtures_dir() / "planted");
  ASSERT_GE(all.size(), 10u);
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end(),
                             [](const auto& a, const auto& b) { return a.name < b.name; }));
  EXPECT_EQ(all.front().dataset, "planted");
  const auto one = bench::discover_fixtures(fixtures_dir() / "planted" / "two_event");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].name, "two_event");
  EXPECT_EQ(one[0].dataset, "planted");
  EXPECT_THROW(bench::discover_fixtures(fixtures_dir() / "nowhere"), ValidationError);
}

TEST(Bench, WritesOneReportPerPairAndResumes) {
  const fs::path fixtures = ten_fixtures();
  const fs::path out = scratch_dir("resume") / "run";
  const bench::BenchSummary first = bench::run_bench(options(fixtures, out, 2));
  EXPECT_EQ(first.written, 30u);
  const auto before = read_tree(out);
  EXPECT_EQ(before.size(), 30u);
  std::map<std::string, fs::file_time_type> stamps;
  for (const auto& e : fs::directory_iterator(out)) stamps[e.path().string()] = fs::last_write_time(e);

  const bench::BenchSummary second = bench::run_bench(options(fixtures, out, 2));
  EXPECT_EQ(second.written, 0u);
  EXPECT_EQ(second.skipped_existing, 30u);
  for (const auto& e : fs::directory_iterator(out)) {
    EXPECT_EQ(fs::last_write_time(e), stamps.at(e.path().string()));
  }
}

TEST(Bench, JobCountDoesNotChangeReports) {
  const fs::path fixtures = ten_fixtures();
  const fs::path a = scratch_dir("jobs1"), b = scratch_dir("jobs4");
  bench::run_bench(options(fixtures, a, 1));
  bench::run_bench(options(fixtures, b, 4));
  EXPECT_EQ(read_tree(a), read_tree(b));
}

TEST(Bench, ReportsMatchShippedOracles) {
  const fs::path out = scratch_dir("oracle");
  bench::BenchOptions o = options(fixtures_dir() / "planted", out, 2);
  o.solvers = {SolverKind::kBrute};
  bench::run_bench(o);
  for (const auto& f : bench::discover_fixtures(fixtures_dir() / "planted")) {
    EXPECT_EQ(io::read_text(out / bench::report_file_name(f, SolverKind::kBrute)),
              io::read_text(f.dir / "oracle.json"))
        << f.name;
  }
}

TEST(Bench, UnwritableOutput) {
  const fs::path dir = scratch_dir("unwritable");
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(bench::run_bench(options(fixtures_dir() / "planted", dir / "file", 1)), ValidationError);
}

TEST(Report, AggregatesPlantedRun) {
  const fs::path out = scratch_dir("aggregate");
  bench::run_bench(options(fixtures_dir() / "planted", out, 2));
  const bench::LoadedRun run = bench::load_run(out);
  EXPECT_TRUE(run.skipped.empty());
  const bench::MetricsTable table = bench::aggregate(run.reports);
  ASSERT_EQ(table.rows.size(), 3u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.dataset, "planted");
    EXPECT_EQ(row.feasibility_rate, 1.0);
    EXPECT_EQ(row.rationality_rate, 1.0);
    ASSERT_TRUE(row.precision && row.recall);
    EXPECT_GE(*row.recall, 0.0);
    EXPECT_LE(*row.recall, 1.0);
    EXPECT_GT(row.mean_wall_time_s, 0.0);
  }
  EXPECT_EQ(table.rows[0].solver, "brute");
}

TEST(Report, RandomRunHasNoGroundTruthColumns) {
  const fs::path out = scratch_dir("random");
  bench::BenchOptions o = options(fixtures_dir() / "random", out, 2);
  o.solvers = {SolverKind::kFaOnly, SolverKind::kCaOnly};
  bench::run_bench(o);
  const auto table = bench::aggregate(bench::load_run(out).reports);
  ASSERT_EQ(table.rows.size(), 2u);
  for (const auto& row : table.rows) {
    EXPECT_FALSE(row.precision.has_value());
    EXPECT_GE(row.feasibility_rate, 0.0);
    EXPECT_LE(row.feasibility_rate, 1.0);
  }
}

TEST(Report, CorruptAndEmptyRuns) {
  const fs::path out = scratch_dir("corrupt");
  bench::BenchOptions o = options(fixtures_dir() / "planted" / "two_event", out, 1);
  bench::run_bench(o);
  std::ofstream(out / "garbage.json") << "{\"solver\": ";
  std::ofstream(out / "notes.txt") << "ignored";
  const bench::LoadedRun run = bench::load_run(out);
  EXPECT_EQ(run.reports.size(), 3u);
  ASSERT_EQ(run.skipped.size(), 1u);
  EXPECT_EQ(run.skipped[0].rfind("garbage.json", 0), 0u);

  const fs::path empty = scratch_dir("empty");
  const bench::LoadedRun none = bench::load_run(empty);
  EXPECT_TRUE(none.reports.empty());
  EXPECT_TRUE(bench::aggregate(none.reports).rows.empty());
  EXPECT_EQ(bench::to_csv({}), std::string(bench::kCsvHeader) + "\n");
  EXPECT_THROW(bench::load_run(empty / "missing"), ValidationError);
}

TEST(Csv, RoundTripIsExact) {
  const fs::path out = scratch_dir("csv");
  bench::run_bench(options(fixtures_dir() / "planted", out, 2));
  const bench::MetricsTable table = bench::aggregate(bench::load_run(out).reports);
  const bench::MetricsTable back = bench::parse_csv(bench::to_csv(table));
  ASSERT_EQ(back.rows.size(), table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) EXPECT_EQ(back.rows[i], table.rows[i]);
}

TEST(Csv, NonFiniteAndMissingFields) {
  bench::MetricsRow row;
  row.solver = "ca-only";
  row.dataset = "adversarial";
  row.instances = 2;
  row.mean_size_ratio = 1.0 / 3.0;
  row.mean_c1_margin = std::nan("");
  row.mean_c2_margin = -std::numeric_limits<double>::infinity();
  row.recall = 0.1;
  const bench::MetricsTable table{{row}};
  const std::string text = bench::to_csv(table);
  const bench::MetricsTable back = bench::parse_csv(text);
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_TRUE(std::isnan(back.rows[0].mean_c1_margin));
  EXPECT_EQ(back.rows[0].mean_c2_margin, row.mean_c2_margin);
  EXPECT_EQ(back.rows[0].mean_size_ratio, row.mean_size_ratio);
  EXPECT_FALSE(back.rows[0].precision.has_value());
  EXPECT_EQ(back.rows[0].recall, 0.1);
  EXPECT_EQ(bench::to_csv(back), text);
  EXPECT_THROW(bench::parse_csv("wrong,header\n"), ValidationError);
  EXPECT_THROW(bench::parse_csv(std::string(bench::kCsvHeader) + "\na,b,1\n"), ValidationError);
}

TEST(PlotData, OneFilePerSolver) {
  const fs::path out = scratch_dir("plot");
  bench::run_bench(options(fixtures_dir() / "planted", out, 2));
  const auto run = bench::load_run(out);
  const auto files = bench::write_plot_data(run.reports, out / "plots");
  ASSERT_EQ(files.size(), 3u);
  const std::string text = io::read_text(out / "plots" / "plot_greedy.csv");
  EXPECT_EQ(text.rfind("index,dataset,instance,c1_margin,c2_margin\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')),
            1 + bench::discover_fixtures(fixtures_dir() / "planted").size());
}
