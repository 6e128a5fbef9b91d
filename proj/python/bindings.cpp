#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ehd/fitting.hpp"
#include "ehd/io.hpp"
#include "ehd/perplexity.hpp"
#include "ehd/simulation.hpp"
#include "ehd/solver.hpp"

namespace py = pybind11;
using namespace ehd;

namespace {

using EventList = std::vector<std::pair<Mark, double>>;

std::vector<Event> to_events(const EventList& raw) {
  std::vector<Event> out;
  out.reserve(raw.size());
  for (const auto& [m, t] : raw) out.push_back({m, t});
  return out;
}

EventList from_events(const EventSequence& s) {
  EventList out;
  out.reserve(s.size());
  for (const Event& e : s.events()) out.emplace_back(e.mark, e.time);
  return out;
}

HawkesParams make_params(std::vector<double> mu, Eigen::MatrixXd alpha, double beta) {
  HawkesParams p{std::move(mu), std::move(alpha), beta};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_ehd, m) {
  m.doc() = "Minimal rational explanations of event histories for MTPP models";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<EventSequence>(m, "EventSequence")
      .def(py::init([](const EventList& events, double t0, double t_end) {
             return EventSequence(to_events(events), {t0, t_end});
           }),
           py::arg("events"), py::arg("t0"), py::arg("t_end"))
      .def_property_readonly("events", &from_events)
      .def_property_readonly("t0", [](const EventSequence& s) { return s.window().start; })
      .def_property_readonly("t_end", [](const EventSequence& s) { return s.window().end; })
      .def("__len__", &EventSequence::size)
      .def("__eq__", [](const EventSequence& a, const EventSequence& b) { return a == b; });

  py::class_<Instance>(m, "Instance")
      .def(py::init<EventSequence, EventSequence>(), py::arg("history"), py::arg("target"))
      .def_property_readonly("history", &Instance::history)
      .def_property_readonly("target", &Instance::target);

  m.def("split_instance", &split_instance, py::arg("sequence"), py::arg("split_time"));

  py::class_<MtppModel>(m, "MtppModel").def_property_readonly("mark_count", &MtppModel::mark_count);

  py::class_<HawkesModel, MtppModel>(m, "HawkesModel")
      .def(py::init([](std::vector<double> mu, Eigen::MatrixXd alpha, double beta) {
             return HawkesModel(make_params(std::move(mu), std::move(alpha), beta));
           }),
           py::arg("mu"), py::arg("alpha"), py::arg("beta"))
      .def_property_readonly("mu", [](const HawkesModel& h) { return h.params().mu; })
      .def_property_readonly("alpha", [](const HawkesModel& h) { return h.params().alpha; })
      .def_property_readonly("beta", [](const HawkesModel& h) { return h.params().beta; })
      .def_property_readonly("spectral_radius",
                             [](const HawkesModel& h) { return h.params().spectral_radius(); });

  py::class_<PoissonModel, MtppModel>(m, "PoissonModel")
      .def(py::init<std::vector<double>>(), py::arg("rates"))
      .def_property_readonly("rates", &PoissonModel::rates);

  m.def("intensity_at", &intensity_at, py::arg("model"), py::arg("conditioning"), py::arg("mark"),
        py::arg("t"));
  m.def("compensator", &compensator, py::arg("model"), py::arg("conditioning"), py::arg("a"),
        py::arg("b"));
  m.def("next_event_density",
        [](const MtppModel& model, const EventSequence& cond, Mark mark, double t) {
          return next_event_density(model, cond, mark, t);
        },
        py::arg("model"), py::arg("conditioning"), py::arg("mark"), py::arg("t"));
  m.def("sequence_nll", &sequence_nll, py::arg("model"), py::arg("conditioning"),
        py::arg("sequence"));
  m.def("predict_next",
        [](const MtppModel& model, const EventSequence& cond) {
          const Prediction p = predict_next(model, cond);
          return py::make_tuple(p.t_bar, p.m_bar);
        },
        py::arg("model"), py::arg("conditioning"),
        "Expected next event time and most probable mark at that time.");

  m.def("simulate",
        [](const HawkesModel& model, double t0, double t_end, std::uint64_t seed) {
          return simulate(model.params(), {t0, t_end}, seed);
        },
        py::arg("model"), py::arg("t0"), py::arg("t_end"), py::arg("seed"));

  m.def("fit_mle",
        [](const std::vector<EventSequence>& data, std::size_t marks, bool poisson,
           std::size_t max_iterations, std::uint64_t seed) {
          FitConfig config;
          config.fit_excitation = !poisson;
          config.max_iterations = max_iterations;
          const FitResult fit = fit_mle(data, marks, config, seed);
          py::dict out;
          out["model"] = HawkesModel(fit.params);
          out["initial_nll"] = fit.initial_nll;
          out["final_nll"] = fit.final_nll;
          out["iterations"] = fit.iterations;
          out["converged"] = fit.converged;
          return out;
        },
        py::arg("sequences"), py::arg("marks"), py::arg("poisson") = false,
        py::arg("max_iterations") = 500, py::arg("seed") = 0);

  m.def("log_perplexity",
        [](const MtppModel& model, const Instance& inst, const std::vector<std::size_t>& subset) {
          return log_perplexity(model, inst, IndexSubset(subset, inst.history().size())).value;
        },
        py::arg("model"), py::arg("instance"), py::arg("subset"));

  py::class_<SolveReport>(m, "SolveReport")
      .def_property_readonly("d", [](const SolveReport& r) { return r.partition.d.indices(); })
      .def_property_readonly("l", [](const SolveReport& r) { return r.partition.l.indices(); })
      .def_property_readonly("solver", [](const SolveReport& r) { return r.solver; })
      .def_property_readonly("log_ppl_full", [](const SolveReport& r) { return r.ppl.log_ppl_full; })
      .def_property_readonly("log_ppl_d", [](const SolveReport& r) { return r.ppl.log_ppl_d; })
      .def_property_readonly("log_ppl_l", [](const SolveReport& r) { return r.ppl.log_ppl_l; })
      .def_property_readonly("c1_margin", [](const SolveReport& r) { return r.ppl.c1_margin; })
      .def_property_readonly("c2_margin", [](const SolveReport& r) { return r.ppl.c2_margin; })
      .def_property_readonly("feasible", [](const SolveReport& r) { return r.ppl.feasible(); })
      .def_property_readonly("rational", [](const SolveReport& r) { return r.ppl.rational; })
      .def_property_readonly("optimal", [](const SolveReport& r) { return r.optimal; })
      .def_property_readonly("evaluations", [](const SolveReport& r) { return r.evaluations; })
      .def("to_json", [](const SolveReport& r, double epsilon_d, double epsilon_l) {
             return io::report_to_json(r, {epsilon_d, epsilon_l, 0.0}, {}, false).dump();
           },
           py::arg("epsilon_d") = 0.9, py::arg("epsilon_l") = 0.5);

  m.def("explain",
        [](const MtppModel& model, const Instance& inst, const std::string& solver,
           double epsilon_d, double epsilon_l, unsigned threads, std::size_t budget) {
          const auto kind = parse_solver(solver);
          if (!kind) throw ValidationError("unknown solver \"" + solver + "\"");
          SolverOptions options;
          options.threads = threads;
          options.local_search_budget = budget;
          const EhdConfig config{epsilon_d, epsilon_l, 0.0};
          py::gil_scoped_release release;
          return run_solver(*kind, model, inst, config, options);
        },
        py::arg("model"), py::arg("instance"), py::arg("solver") = "brute",
        py::arg("epsilon_d") = 0.9, py::arg("epsilon_l") = 0.5, py::arg("threads") = 1,
        py::arg("budget") = 2000);

  m.def("make_planted_instance",
        [](std::size_t marks, std::size_t history_len, std::size_t target_len, double fraction,
           std::uint64_t seed) {
          PlantedInstance p = make_planted_instance(marks, history_len, target_len, fraction, seed);
          return py::make_tuple(HawkesModel(p.model), p.instance, p.ground_truth.indices());
        },
        py::arg("marks"), py::arg("history_len"), py::arg("target_len"),
        py::arg("influence_fraction"), py::arg("seed"));

  m.def("load_model", [](const std::filesystem::path& p) {
    io::ModelFile f = io::read_model(p);
    if (f.kind == io::ModelFile::Kind::kPoisson) {
      return py::cast(PoissonModel(f.params.mu));
    }
    return py::cast(HawkesModel(f.params));
  }, py::arg("path"));
  m.def("load_instance", [](const std::filesystem::path& p) {
    io::InstanceFile f = io::read_instance(p);
    py::object truth = py::none();
    if (f.ground_truth) truth = py::cast(f.ground_truth->indices());
    return py::make_tuple(f.instance, truth);
  }, py::arg("path"));
}
