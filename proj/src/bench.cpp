#include "ehd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

namespace ehd::bench {

namespace fs = std::filesystem;

namespace {

fs::path normalized(const fs::path& p) {
  fs::path abs = fs::absolute(p).lexically_normal();
  return abs.has_filename() ? abs : abs.parent_path();
}

bool is_fixture_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / "model.json") && fs::is_regular_file(dir / "instance.json");
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view field) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ValidationError("bad number in CSV: \"" + std::string(field) + "\"");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double mean_of_finite(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

fs::path timing_path(const fs::path& report) {
  fs::path p = report;
  p.replace_extension(".timing.json");
  return p;
}

}  // namespace

std::vector<Fixture> discover_fixtures(const fs::path& root) {
  if (!fs::is_directory(root)) throw ValidationError("fixture path is not a directory: " + root.string());
  std::vector<Fixture> out;
  if (is_fixture_dir(root)) {
    const fs::path abs = normalized(root);
    out.push_back({abs.parent_path().filename().string(), abs.filename().string(), root});
    return out;
  }
  const std::string dataset = normalized(root).filename().string();
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && is_fixture_dir(entry.path())) {
      out.push_back({dataset, entry.path().filename().string(), entry.path()});
    }
  }
  std::sort(out.begin(), out.end(), [](const Fixture& a, const Fixture& b) { return a.name < b.name; });
  return out;
}

std::string report_file_name(const Fixture& fixture, SolverKind solver) {
  return fixture.name + "__" + std::string(solver_name(solver)) + ".json";
}

BenchSummary run_bench(const BenchOptions& options) {
  options.config.validate();
  const std::vector<Fixture> fixtures = discover_fixtures(options.fixtures);
  std::error_code ec;
  fs::create_directories(options.out, ec);
  if (ec || !fs::is_directory(options.out)) {
    throw ValidationError("cannot create output directory " + options.out.string());
  }

  std::vector<std::pair<const Fixture*, SolverKind>> tasks;
  for (const Fixture& f : fixtures) {
    for (SolverKind s : options.solvers) tasks.emplace_back(&f, s);
  }

  BenchSummary summary;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> written{0};
  std::atomic<std::size_t> skipped{0};
  std::mutex error_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const auto [fixture, solver] = tasks[i];
      const fs::path target = options.out / report_file_name(*fixture, solver);
      if (fs::exists(target)) {
        skipped.fetch_add(1);
        continue;
      }
      try {
        const io::ModelFile model_file = io::read_model(fixture->dir / "model.json");
        const auto model = model_file.build();
        const io::InstanceFile inst =
            io::read_instance(fixture->dir / "instance.json", model->mark_count());
        SolverOptions solver_options = options.solver_options;
        solver_options.threads = 1;
        const SolveReport report =
            run_solver(solver, *model, inst.instance, options.config, solver_options);
        const io::ReportMeta meta{fixture->dataset, fixture->name, inst.ground_truth};
        if (options.record_timing) {
          io::write_text_atomic(timing_path(target),
                                io::json{{"wall_time_s", report.wall_time_s}}.dump() + "\n");
        }
        io::write_text_atomic(target, io::report_to_json(report, options.config, meta, false).dump(2) + "\n");
        written.fetch_add(1);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(1, tasks.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  summary.written = written.load();
  summary.skipped_existing = skipped.load();
  return summary;
}

LoadedRun load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError("run directory not found: " + run_dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const fs::path& p = entry.path();
    const std::string name = p.filename().string();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    if (name.size() >= 12 && name.ends_with(".timing.json")) continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());

  LoadedRun run;
  for (const fs::path& p : files) {
    try {
      io::StoredReport r = io::report_from_json(io::read_json(p));
      if (!r.wall_time_s && fs::exists(timing_path(p))) {
        r.wall_time_s = io::read_json(timing_path(p)).at("wall_time_s").get<double>();
      }
      run.reports.push_back(std::move(r));
    } catch (const std::exception& e) {
      run.skipped.push_back(p.filename().string() + ": " + e.what());
    }
  }
  std::sort(run.reports.begin(), run.reports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.meta.dataset, a.meta.instance, a.solver) <
           std::tie(b.meta.dataset, b.meta.instance, b.solver);
  });
  return run;
}

MetricsTable aggregate(const std::vector<io::StoredReport>& reports) {
  std::map<std::pair<std::string, std::string>, std::vector<const io::StoredReport*>> groups;
  for (const auto& r : reports) groups[{r.solver, r.meta.dataset}].push_back(&r);

  MetricsTable table;
  for (const auto& [key, members] : groups) {
    MetricsRow row;
    row.solver = key.first;
    row.dataset = key.second;
    row.instances = members.size();
    const double n = static_cast<double>(members.size());
    std::vector<double> c1, c2;
    double precision = 0.0, recall = 0.0;
    std::size_t with_truth = 0;
    for (const io::StoredReport* r : members) {
      const std::size_t history = r->partition.d.universe();
      row.mean_size_ratio += history == 0 ? 0.0
                                          : static_cast<double>(r->partition.d.size()) /
                                                static_cast<double>(history);
      row.feasibility_rate += r->ppl.feasible() ? 1.0 : 0.0;
      row.rationality_rate += r->ppl.rational ? 1.0 : 0.0;
      c1.push_back(r->ppl.c1_margin);
      c2.push_back(r->ppl.c2_margin);
      row.mean_evaluations += static_cast<double>(r->evaluations);
      row.mean_wall_time_s += r->wall_time_s.value_or(0.0);
      if (r->meta.ground_truth) {
        ++with_truth;
        std::size_t hit = 0;
        for (std::size_t i : r->partition.d.indices()) hit += r->meta.ground_truth->contains(i) ? 1 : 0;
        const std::size_t chosen = r->partition.d.size();
        const std::size_t truth = r->meta.ground_truth->size();
        precision += chosen == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(chosen);
        recall += truth == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(truth);
      }
    }
    row.mean_size_ratio /= n;
    row.feasibility_rate /= n;
    row.rationality_rate /= n;
    row.mean_c1_margin = mean_of_finite(c1);
    row.mean_c2_margin = mean_of_finite(c2);
    row.mean_evaluations /= n;
    row.mean_wall_time_s /= n;
    if (with_truth > 0) {
      row.precision = precision / static_cast<double>(with_truth);
      row.recall = recall / static_cast<double>(with_truth);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const MetricsTable& table) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const MetricsRow& r : table.rows) {
    out << r.solver << ',' << r.dataset << ',' << r.instances << ','
        << format_real(r.mean_size_ratio) << ',' << format_real(r.feasibility_rate) << ','
        << format_real(r.rationality_rate) << ',' << format_real(r.mean_c1_margin) << ','
        << format_real(r.mean_c2_margin) << ','
        << (r.precision ? format_real(*r.precision) : "") << ','
        << (r.recall ? format_real(*r.recall) : "") << ','
        << format_real(r.mean_evaluations) << ',' << format_real(r.mean_wall_time_s) << '\n';
  }
  return out.str();
}

MetricsTable parse_csv(std::string_view text) {
  MetricsTable table;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw ValidationError("unexpected metrics CSV header");
      header = false;
      continue;
    }
    const auto f = split_fields(line);
    if (f.size() != 12) throw ValidationError("metrics CSV row has the wrong number of fields");
    MetricsRow r;
    r.solver = std::string(f[0]);
    r.dataset = std::string(f[1]);
    r.instances = static_cast<std::size_t>(parse_real(f[2]));
    r.mean_size_ratio = parse_real(f[3]);
    r.feasibility_rate = parse_real(f[4]);
    r.rationality_rate = parse_real(f[5]);
    r.mean_c1_margin = parse_real(f[6]);
    r.mean_c2_margin = parse_real(f[7]);
    if (!f[8].empty()) r.precision = parse_real(f[8]);
    if (!f[9].empty()) r.recall = parse_real(f[9]);
    r.mean_evaluations = parse_real(f[10]);
    r.mean_wall_time_s = parse_real(f[11]);
    table.rows.push_back(std::move(r));
  }
  return table;
}

std::vector<fs::path> write_plot_data(const std::vector<io::StoredReport>& reports,
                                      const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::map<std::string, std::vector<const io::StoredReport*>> by_solver;
  for (const auto& r : reports) by_solver[r.solver].push_back(&r);
  std::vector<fs::path> written;
  for (const auto& [solver, members] : by_solver) {
    std::ostringstream out;
    out << "index,dataset,instance,c1_margin,c2_margin\n";
    for (std::size_t i = 0; i < members.size(); ++i) {
      const auto* r = members[i];
      out << i << ',' << r->meta.dataset << ',' << r->meta.instance << ','
          << format_real(r->ppl.c1_margin) << ',' << format_real(r->ppl.c2_margin) << '\n';
    }
    const fs::path path = out_dir / ("plot_" + solver + ".csv");
    io::write_text_atomic(path, out.str());
    written.push_back(path);
  }
  return written;
}

}  // namespace ehd::bench
