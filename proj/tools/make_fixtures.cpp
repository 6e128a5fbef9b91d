// Regenerates the fixture tree: planted instances, random small instances and
// the two baseline counterexamples, each with its exhaustive-search oracle.
//
//   ehd_make_fixtures --out fixtures

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "ehd/io.hpp"
#include "ehd/simulation.hpp"
#include "ehd/solver.hpp"

namespace fs = std::filesystem;
using ehd::io::json;

namespace {

std::string numbered(const std::string& stem, std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return stem + "_" + digits;
}

void write_json(const fs::path& path, const json& j) {
  ehd::io::write_text_atomic(path, j.dump(2) + "\n");
}

// Writes model.json, instance.json and oracle.json; returns the oracle.
ehd::SolveReport write_fixture(const fs::path& dir, const std::string& dataset,
                               const ehd::HawkesParams& params, const ehd::Instance& instance,
                               const std::optional<ehd::IndexSubset>& truth,
                               const ehd::EhdConfig& config) {
  fs::create_directories(dir);
  const ehd::HawkesModel model(params);
  const ehd::SolveReport oracle = ehd::brute_force_solve(model, instance, config);
  write_json(dir / "model.json", ehd::io::model_to_json({ehd::io::ModelFile::Kind::kHawkes, params}));
  write_json(dir / "instance.json", ehd::io::instance_to_json(instance, truth));
  const ehd::io::ReportMeta meta{dataset, dir.filename().string(), truth};
  write_json(dir / "oracle.json", ehd::io::report_to_json(oracle, config, meta, false));
  return oracle;
}

bool within(const ehd::IndexSubset& inner, const ehd::IndexSubset& outer) {
  for (std::size_t i : inner.indices()) {
    if (!outer.contains(i)) return false;
  }
  return true;
}

// Counts, per explanation size, the subsets meeting each constraint set.
json enumeration_certificate(const ehd::HawkesModel& model, const ehd::Instance& instance,
                             const ehd::EhdConfig& config) {
  const std::size_t n = instance.history().size();
  ehd::PerplexityEvaluator evaluator(model, instance);
  std::vector<std::size_t> both(n + 1), factual(n + 1), counterfactual(n + 1);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const auto d = ehd::IndexSubset::from_mask(mask, n);
    const ehd::PplReport r =
        ehd::evaluate_partition(evaluator, ehd::Partition::from_explanation(d), config);
    both[d.size()] += r.feasible() ? 1 : 0;
    factual[d.size()] += r.c2_satisfied ? 1 : 0;
    counterfactual[d.size()] += r.c1_satisfied ? 1 : 0;
  }
  return {{"feasible_by_size", both},
          {"factual_by_size", factual},
          {"counterfactual_by_size", counterfactual}};
}

void write_planted(const fs::path& root, std::size_t count, const ehd::EhdConfig& config) {
  const fs::path base = root / "planted";
  {
    // Two-event case: mark 0 excites, mark 1 does not.
    ehd::HawkesParams p;
    p.mu = {0.05, 0.05};
    p.alpha = Eigen::MatrixXd::Zero(2, 2);
    p.alpha(0, 0) = 0.6;
    p.beta = 1.0;
    const ehd::Instance inst(ehd::EventSequence({{0, 0.0}, {1, 0.1}}, {0.0, 0.5}),
                             ehd::EventSequence({{0, 0.8}, {0, 1.5}}, {0.5, 3.0}));
    write_fixture(base / "two_event", "planted", p, inst, ehd::IndexSubset({0}, 2), config);
  }
  std::size_t written = 0;
  for (std::uint64_t seed = 1; written < count; ++seed) {
    const std::size_t marks = 2 + seed % 3;
    const std::size_t history = 4 + seed % 7;
    const std::size_t target = 2 + seed % 3;
    const double fraction = seed % 2 == 0 ? 0.5 : 0.34;
    const ehd::PlantedInstance planted =
        ehd::make_planted_instance(marks, history, target, fraction, seed);
    const ehd::HawkesModel model(planted.model);
    const ehd::SolveReport oracle = ehd::brute_force_solve(model, planted.instance, config);
    if (!within(oracle.partition.d, planted.ground_truth)) continue;
    write_fixture(base / numbered("planted", written), "planted", planted.model, planted.instance,
                  planted.ground_truth, config);
    ++written;
  }
}

void write_random(const fs::path& root, std::size_t count, const ehd::EhdConfig& config) {
  ehd::RandomInstanceOptions options;
  options.max_history = 12;
  for (std::size_t i = 0; i < count; ++i) {
    const ehd::RandomInstance r = ehd::make_random_instance(1000 + i, options);
    write_fixture(root / "random" / numbered("random", i), "random", r.model, r.instance,
                  std::nullopt, config);
  }
}

// Seeded search for an instance whose single-constraint baseline answer is
// irrational while the exhaustive EHD answer is feasible and rational. Each
// random instance is also tried with its base rates scaled down.
void write_counterexample(const fs::path& root, ehd::SolverKind baseline,
                          const ehd::EhdConfig& config) {
  ehd::RandomInstanceOptions options;
  options.max_history = 6;
  const std::string name{ehd::solver_name(baseline)};
  for (std::uint64_t seed = 1; seed < 100000; ++seed) {
    const ehd::RandomInstance r = ehd::make_random_instance(seed, options);
    for (double scale : {1.0, 0.2, 0.05, 0.01}) {
      ehd::HawkesParams params = r.model;
      for (double& mu : params.mu) mu *= scale;
      const ehd::HawkesModel model(params);
      const ehd::SolveReport base = ehd::run_solver(baseline, model, r.instance, config);
      if (base.ppl.rational) continue;
      const ehd::SolveReport exact = ehd::brute_force_solve(model, r.instance, config);
      if (!exact.ppl.feasible() || !exact.ppl.rational) continue;
      const fs::path dir = root / "adversarial" / name;
      write_fixture(dir, "adversarial", params, r.instance, std::nullopt, config);
      json cert = enumeration_certificate(model, r.instance, config);
      cert["search_seed"] = seed;
      cert["base_rate_scale"] = scale;
      cert["baseline"] =
          ehd::io::report_to_json(base, config, {"adversarial", name, std::nullopt}, false);
      write_json(dir / "certificate.json", cert);
      std::cout << name << " counterexample found at seed " << seed << ", scale " << scale << "\n";
      return;
    }
  }
  throw ehd::ValidationError("no counterexample found for " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the fixture tree"};
  fs::path out = "fixtures";
  std::size_t planted = 20, random = 20;
  app.add_option("--out", out, "output root");
  app.add_option("--planted", planted, "number of generated planted fixtures");
  app.add_option("--random", random, "number of random fixtures");
  CLI11_PARSE(app, argc, argv);

  try {
    const ehd::EhdConfig config;  // 0.9 / 0.5
    write_planted(out, planted, config);
    write_random(out, random, config);
    write_counterexample(out, ehd::SolverKind::kFaOnly, config);
    write_counterexample(out, ehd::SolverKind::kCaOnly, config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
