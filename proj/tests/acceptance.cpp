// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Every check is recomputed from scratch; the last one repeats the others
// with a different thread count and compares digests of everything they
// produced.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "ehd/bench.hpp"
#include "ehd/fitting.hpp"
#include "ehd/io.hpp"
#include "ehd/simulation.hpp"
#include "ehd/solver.hpp"
#include "support.hpp"

using namespace ehd;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kSweepSeconds = 120.0;
constexpr double kFitSeconds = 60.0;
constexpr double kGapSlack = 1e-9;
constexpr double kCompensatorTol = 1e-6;
constexpr double kGradientTol = 1e-4;
constexpr double kDensityTol = 1e-4;
constexpr double kLocalMatchShare = 0.9;
constexpr int kKsMinPasses = 95;
constexpr double kFitRelTol = 0.2;
constexpr double kRecallFloor = 0.8;

struct Outcome {
  bool pass{false};
  std::string detail;
  std::string digest;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string report_text(const SolveReport& r, const EhdConfig& c, const std::string& name) {
  return io::report_to_json(r, c, {"acceptance", name, std::nullopt}, false).dump() + "\n";
}

const SolverKind kAllSolvers[] = {SolverKind::kBrute, SolverKind::kGreedy, SolverKind::kLocal,
                                  SolverKind::kFaOnly, SolverKind::kCaOnly};

struct SweepCase {
  RandomInstance instance;
  EhdConfig config;
};

std::vector<SweepCase> sweep_cases() {
  std::vector<SweepCase> out;
  Rng rng(20240601);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const RandomInstance r = make_random_instance(seed);
    for (int j = 0; j < 5; ++j) {
      EhdConfig c;
      c.epsilon_l = rng.uniform(0.01, 0.98);
      c.epsilon_d = rng.uniform(c.epsilon_l + 0.005, 0.995);
      out.push_back({r, c});
    }
  }
  return out;
}

Outcome existence_sweep(unsigned threads) {
  SolverOptions opts;
  opts.threads = threads;
  const auto start = Clock::now();
  std::size_t feasible = 0, total = 0;
  std::string digest;
  for (const SweepCase& c : sweep_cases()) {
    const HawkesModel model(c.instance.model);
    const SolveReport r = brute_force_solve(model, c.instance.instance, c.config, opts);
    feasible += r.ppl.feasible() ? 1 : 0;
    ++total;
    digest += report_text(r, c.config, std::to_string(total));
  }
  const double elapsed = seconds_since(start);
  std::ostringstream d;
  d << feasible << "/" << total << " exhaustive answers feasible in " << elapsed << " s (limit "
    << kSweepSeconds << " s)";
  return {feasible == total && elapsed < kSweepSeconds, d.str(), digest};
}

Outcome feasible_implies_rational(unsigned threads) {
  SolverOptions opts;
  opts.threads = threads;
  std::size_t checked = 0, violations = 0, index = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::string digest;
  for (const SweepCase& c : sweep_cases()) {
    const HawkesModel model(c.instance.model);
    const double need = std::log(c.config.epsilon_d / c.config.epsilon_l);
    for (SolverKind kind : kAllSolvers) {
      const SolveReport r = run_solver(kind, model, c.instance.instance, c.config, opts);
      digest += report_text(r, c.config, std::to_string(index++));
      if (!r.ppl.feasible()) continue;
      ++checked;
      const double gap = r.ppl.log_ppl_l - r.ppl.log_ppl_d - need;
      worst = std::min(worst, gap);
      if (!(gap >= -kGapSlack) || !r.ppl.rational) ++violations;
    }
  }
  std::ostringstream d;
  d << checked << " feasible solver outputs, " << violations << " below the required gap"
    << " (smallest excess " << worst << ")";
  return {violations == 0 && checked > 0, d.str(), digest};
}

struct LoadedFixture {
  bench::Fixture fixture;
  io::ModelFile model;
  io::InstanceFile instance;
};

std::vector<LoadedFixture> shipped_fixtures() {
  std::vector<LoadedFixture> out;
  for (const char* dataset : {"planted", "random", "adversarial"}) {
    for (const auto& f : bench::discover_fixtures(testing::fixtures_dir() / dataset)) {
      io::ModelFile m = io::read_model(f.dir / "model.json");
      io::InstanceFile i = io::read_instance(f.dir / "instance.json", m.params.mark_count());
      out.push_back({f, std::move(m), std::move(i)});
    }
  }
  return out;
}

Outcome oracle_minimality(unsigned threads) {
  SolverOptions opts;
  opts.threads = threads;
  const EhdConfig config;
  std::size_t fixtures = 0, exhaustive = 0, minimal = 0, ordered = 0, matched = 0;
  std::string digest;
  for (const LoadedFixture& f : shipped_fixtures()) {
    const auto model = f.model.build();
    const Instance& inst = f.instance.instance;
    const SolveReport brute = brute_force_solve(*model, inst, config, opts);
    const SolveReport greedy = greedy_solve(*model, inst, config, opts);
    const SolveReport local = local_search_solve(*model, inst, config, opts.local_search_budget, opts);
    ++fixtures;
    if (inst.history().size() <= 12) {
      ++exhaustive;
      const auto counts = testing::feasible_count_by_size(f.model.params, inst, config);
      bool none_smaller = counts[brute.size()] > 0;
      for (std::size_t k = 0; k < brute.size(); ++k) none_smaller = none_smaller && counts[k] == 0;
      minimal += none_smaller ? 1 : 0;
    }
    ordered += greedy.size() >= brute.size() && local.size() >= brute.size() ? 1 : 0;
    matched += local.size() == brute.size() ? 1 : 0;
    digest += report_text(brute, config, f.fixture.name) + report_text(greedy, config, f.fixture.name) +
              report_text(local, config, f.fixture.name);
  }
  const double share = static_cast<double>(matched) / static_cast<double>(fixtures);
  std::ostringstream d;
  d << minimal << "/" << exhaustive << " exhaustively minimal, " << ordered << "/" << fixtures
    << " heuristics no smaller, local matches size on " << matched << "/" << fixtures
    << " (need " << kLocalMatchShare * 100 << "%)";
  return {exhaustive > 0 && minimal == exhaustive && ordered == fixtures && share >= kLocalMatchShare,
          d.str(), digest};
}

HawkesParams random_params(Rng& rng, std::size_t m) {
  HawkesParams p;
  p.mu.resize(m);
  p.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    p.mu[k] = rng.uniform(0.05, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (rng.uniform() < 0.7) p.alpha(k, j) = rng.uniform(0.02, 0.6 / static_cast<double>(m));
    }
  }
  p.beta = rng.uniform(0.3, 3.0);
  return p;
}

std::vector<Event> random_events(Rng& rng, std::size_t m, std::size_t n, double& t) {
  std::vector<Event> events;
  for (std::size_t i = 0; i < n; ++i) {
    t += rng.exponential(1.0);
    events.push_back({static_cast<Mark>(rng.below(m)), t});
  }
  return events;
}

Outcome numerical_kernels(unsigned threads) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  Rng rng(4242);
  std::string digest;

  double worst_comp = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t m = 1 + rng.below(3);
    const HawkesParams p = random_params(rng, m);
    const HawkesModel model(p);
    double t = 0.0;
    const auto events = random_events(rng, m, rng.below(8), t);
    const double a = rng.uniform(0.0, t + 1.0);
    const double b = a + rng.uniform(0.1, 8.0);
    std::vector<double> cuts{a};
    for (const Event& e : events) {
      if (e.time > a && e.time < b) cuts.push_back(e.time);
    }
    cuts.push_back(b);
    double numeric = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      numeric += gauss_kronrod<double, 31>::integrate(
          [&](double s) {
            double sum = 0.0;
            for (Mark k = 0; k < m; ++k) sum += testing::naive_intensity(p, events, k, s);
            return sum;
          },
          cuts[i], cuts[i + 1], 15, 1e-13);
    }
    const double closed = compensator(model, EventSequence(events, {0.0, std::max(t, b) + 1.0}), a, b);
    worst_comp = std::max(worst_comp, testing::relative_error(closed, numeric));
    digest += real(closed);
  }

  double worst_grad = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    const std::size_t m = 1 + rng.below(3);
    const HawkesParams truth = random_params(rng, m);
    std::vector<EventSequence> data;
    for (int i = 0; i < 3; ++i) data.push_back(simulate(truth, {0.0, 40.0}, rng.next()));
    HawkesParams q = truth;
    for (double& mu : q.mu) mu *= rng.uniform(0.6, 1.4);
    q.alpha *= rng.uniform(0.6, 1.4);
    q.beta *= rng.uniform(0.6, 1.4);
    const ParameterLayout layout(q);
    const Eigen::VectorXd theta = layout.pack(q);
    const Eigen::VectorXd g = nll_objective(q, data, threads).gradient;
    Eigen::VectorXd fd(theta.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      fd[i] = (nll_objective(layout.unpack(up), data).value -
               nll_objective(layout.unpack(down), data).value) / (2.0 * h);
    }
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    worst_grad = std::max(worst_grad, (g - fd).cwiseAbs().maxCoeff() / scale);
    for (Eigen::Index i = 0; i < g.size(); ++i) digest += real(g[i]);
  }

  double worst_mass = 0.0;
  exp_sinh<double> integrator;
  for (int draw = 0; draw < 50; ++draw) {
    const std::size_t m = 1 + rng.below(3);
    const HawkesModel model(random_params(rng, m));
    double t = 0.0;
    const auto events = random_events(rng, m, rng.below(6), t);
    const EventSequence cond(events, {0.0, t + 100.0});
    const double tl = cond.last_time_or_start();
    const double mass = integrator.integrate(
        [&](double s) {
          if (!(tl + s > tl)) return 0.0;
          double sum = 0.0;
          for (Mark k = 0; k < m; ++k) sum += next_event_density(model, cond, k, tl + s);
          return sum;
        },
        0.0, std::numeric_limits<double>::infinity());
    worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
    digest += real(mass);
  }

  std::ostringstream d;
  d << "compensator rel err " << worst_comp << " (<= " << kCompensatorTol << "), gradient rel err "
    << worst_grad << " (<= " << kGradientTol << "), density mass err " << worst_mass << " (<= "
    << kDensityTol << ")";
  return {worst_comp <= kCompensatorTol && worst_grad <= kGradientTol && worst_mass <= kDensityTol,
          d.str(), digest};
}

Outcome simulation_fidelity(unsigned) {
  std::string digest;
  const HawkesParams p = testing::hawkes({0.3, 0.2}, {{0.3, 0.2}, {0.1, 0.4}}, 1.2);
  const HawkesModel model(p);
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const EventSequence s = simulate(p, {0.0, 500.0}, seed);
    const KsResult ks = ks_test_unit_exponential(time_rescale(model, s));
    passes += ks.p_value >= 0.01 ? 1 : 0;
    digest += real(ks.statistic);
  }
  const double horizon = 10000.0;
  const EventSequence s = simulate(poisson_params({0.2}), {0.0, horizon}, 1);
  const double rate = static_cast<double>(s.size()) / horizon;
  const double z = (rate - 0.2) / std::sqrt(0.2 / horizon);
  digest += std::to_string(s.size());
  std::ostringstream d;
  d << passes << "/100 seeds pass KS at 0.01 (need " << kKsMinPasses << "), Poisson rate " << rate
    << " is " << z << " SE from 0.2";
  return {passes >= kKsMinPasses && std::abs(z) <= 3.0, d.str(), digest};
}

Outcome mle_recovery(unsigned threads) {
  const HawkesParams truth = testing::hawkes({0.2}, {{0.5}}, 1.0);
  const auto start = Clock::now();
  std::vector<EventSequence> data;
  for (std::uint64_t i = 0; i < 200; ++i) data.push_back(simulate(truth, {0.0, 100.0}, 1000 + i));
  FitConfig config;
  config.threads = threads;
  const FitResult fit = fit_mle(data, 1, config, 7);
  const double elapsed = seconds_since(start);
  const double e_mu = testing::relative_error(fit.params.mu[0], 0.2);
  const double e_alpha = testing::relative_error(fit.params.alpha(0, 0), 0.5);
  const double e_beta = testing::relative_error(fit.params.beta, 1.0);
  std::ostringstream d;
  d << "mu " << fit.params.mu[0] << ", alpha " << fit.params.alpha(0, 0) << ", beta "
    << fit.params.beta << " (rel err " << e_mu << ", " << e_alpha << ", " << e_beta
    << "; limit " << kFitRelTol << ") in " << elapsed << " s (limit " << kFitSeconds << " s)";
  const std::string digest = real(fit.params.mu[0]) + real(fit.params.alpha(0, 0)) + real(fit.params.beta);
  return {e_mu <= kFitRelTol && e_alpha <= kFitRelTol && e_beta <= kFitRelTol && elapsed < kFitSeconds,
          d.str(), digest};
}

Outcome irrational_baselines(unsigned threads) {
  SolverOptions opts;
  opts.threads = threads;
  const EhdConfig config;
  std::ostringstream d;
  std::string digest;
  bool pass = true;
  std::size_t seen = 0;
  for (const auto& f : bench::discover_fixtures(testing::fixtures_dir() / "adversarial")) {
    const io::ModelFile m = io::read_model(f.dir / "model.json");
    const io::InstanceFile inst = io::read_instance(f.dir / "instance.json", m.params.mark_count());
    const auto model = m.build();
    const auto kind = parse_solver(f.name);
    if (!kind) {
      pass = false;
      continue;
    }
    const SolveReport base = run_solver(*kind, *model, inst.instance, config, opts);
    const SolveReport exact = brute_force_solve(*model, inst.instance, config, opts);
    const bool ok = !base.ppl.rational && exact.ppl.feasible() && exact.ppl.rational;
    pass = pass && ok;
    ++seen;
    d << (seen > 1 ? "; " : "") << f.name << " rational=" << (base.ppl.rational ? "yes" : "no")
      << ", exhaustive rational=" << (exact.ppl.rational ? "yes" : "no");
    digest += report_text(base, config, f.name) + report_text(exact, config, f.name);
  }
  return {pass && seen == 2, d.str(), digest};
}

Outcome planted_recovery(unsigned threads) {
  SolverOptions opts;
  opts.threads = threads;
  const EhdConfig config;
  double recall = 0.0;
  std::size_t feasible = 0;
  std::string digest;
  const std::size_t count = 50;
  for (std::uint64_t seed = 1; seed <= count; ++seed) {
    const PlantedInstance pi = make_planted_instance(2 + seed % 3, 4 + seed % 7, 2 + seed % 3,
                                                     seed % 2 == 0 ? 0.5 : 0.34, 9000 + seed);
    const HawkesModel model(pi.model);
    const SolveReport r = greedy_solve(model, pi.instance, config, opts);
    std::size_t hit = 0;
    for (std::size_t i : r.partition.d.indices()) hit += pi.ground_truth.contains(i) ? 1 : 0;
    recall += static_cast<double>(hit) / static_cast<double>(pi.ground_truth.size());
    feasible += r.ppl.feasible() ? 1 : 0;
    digest += report_text(r, config, std::to_string(seed));
  }
  recall /= static_cast<double>(count);
  std::ostringstream d;
  d << "greedy mean recall " << recall << " (need " << kRecallFloor << "), " << feasible << "/"
    << count << " feasible";
  return {recall >= kRecallFloor && feasible == count, d.str(), digest};
}

// Bench run over the shipped fixtures; returns file name -> contents.
std::map<std::string, std::string> bench_tree(unsigned jobs, const std::string& tag) {
  const fs::path out = fs::temp_directory_path() / ("ehd_acceptance_" + tag);
  fs::remove_all(out);
  std::map<std::string, std::string> tree;
  for (const char* dataset : {"planted", "random", "adversarial"}) {
    bench::BenchOptions o;
    o.fixtures = testing::fixtures_dir() / dataset;
    o.out = out / dataset;
    o.jobs = jobs;
    o.solvers.assign(std::begin(kAllSolvers), std::end(kAllSolvers));
    bench::run_bench(o);
    for (const auto& e : fs::directory_iterator(o.out)) {
      const std::string name = e.path().filename().string();
      if (!name.ends_with(".timing.json")) tree[std::string(dataset) + "/" + name] = io::read_text(e.path());
    }
  }
  fs::remove_all(out);
  return tree;
}

void print(int index, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << index << "] " << name << ": " << o.detail << "\n";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome(unsigned)>>> criteria = {
      {"every instance has a feasible explanation", existence_sweep},
      {"feasible explanations are rational", feasible_implies_rational},
      {"oracle minimality and heuristic sizes", oracle_minimality},
      {"numerical kernels", numerical_kernels},
      {"simulation fidelity", simulation_fidelity},
      {"maximum-likelihood recovery", mle_recovery},
      {"single-constraint baselines can be irrational", irrational_baselines},
      {"planted recovery by greedy search", planted_recovery},
  };

  bool all = true;
  std::vector<std::string> digests;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second(1);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), ""};
    }
    print(static_cast<int>(i + 1), criteria[i].first, o);
    all = all && o.pass;
    digests.push_back(o.digest);
  }

  Outcome det;
  try {
    std::size_t same_run = 0, same_threads = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      same_run += criteria[i].second(1).digest == digests[i] ? 1 : 0;
      same_threads += criteria[i].second(4).digest == digests[i] ? 1 : 0;
    }
    const bool bench_same = bench_tree(1, "jobs1") == bench_tree(4, "jobs4");
    const std::size_t n = criteria.size();
    std::ostringstream d;
    d << same_run << "/" << n << " criteria identical on rerun, " << same_threads << "/" << n
      << " identical with 4 threads, bench reports " << (bench_same ? "identical" : "differ")
      << " between 1 and 4 jobs";
    det = {same_run == n && same_threads == n && bench_same, d.str(), ""};
  } catch (const std::exception& e) {
    det = {false, std::string("threw: ") + e.what(), ""};
  }
  print(9, "determinism across runs and thread counts", det);
  all = all && det.pass;
  return all ? 0 : 1;
}
