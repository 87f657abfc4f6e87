#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "prewet/cli.hpp"
#include "prewet/error.hpp"
#include "prewet/experiments.hpp"
#include "prewet/sampler.hpp"
#include "prewet/spectral.hpp"
#include "prewet/stats.hpp"
#include "prewet/transfer.hpp"

namespace py = pybind11;
using namespace prewet;

namespace {

// Sweep configs and reports cross the boundary as JSON-compatible dicts so
// Python sees the same schema as summary.json.
py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

BridgeSpec make_spec(const StepDistribution& step, const Potential& potential, double lambda, int length,
                     int start, std::optional<int> end, std::optional<int> truncation, double tail_tolerance) {
  BridgeSpec s;
  s.step = step;
  s.potential = potential;
  s.lambda = lambda;
  s.length = length;
  s.start = start;
  s.end = end;
  s.truncation = truncation.value_or(default_truncation(step, potential, lambda, length, start, end));
  s.tail_tolerance = tail_tolerance;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_prewet, m) {
  m.doc() = "Exact transfer, spectral and sampling tools for area-tilted random-walk bridges";
  m.attr("__version__") = PREWET_VERSION;

  static py::exception<Error> error_type(m, "PrewetError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<StepDistribution>(m, "StepDistribution")
      .def_static("from_pmf", &StepDistribution::from_pmf, py::arg("support"), py::arg("probs"),
                  py::arg("name") = "custom")
      .def_static("lazy", &StepDistribution::lazy_simple)
      .def_static("geometric", &StepDistribution::two_sided_geometric, py::arg("q"), py::arg("x_max"))
      .def_static("gaussian", &StepDistribution::discrete_gaussian, py::arg("s"), py::arg("x_max"))
      .def_property_readonly("support", &StepDistribution::support)
      .def_property_readonly("probs", &StepDistribution::probs)
      .def_property_readonly("variance", &StepDistribution::variance)
      .def_property_readonly("aperiodicity_constant", &StepDistribution::aperiodicity_constant)
      .def_property_readonly("name", &StepDistribution::name)
      .def("__call__", &StepDistribution::operator());

  py::class_<Potential>(m, "Potential")
      .def_static("linear", &Potential::linear)
      .def_static("power", &Potential::power, py::arg("beta"))
      .def_static("table", &Potential::table, py::arg("values"))
      .def("__call__", &Potential::operator())
      .def("growth_bound", &Potential::growth_bound)
      .def("__repr__", &Potential::describe);

  m.def("solve_H", &solve_H, py::arg("potential"), py::arg("gamma"), py::arg("lam"));
  m.def("canonical_scale", &canonical_scale, py::arg("potential"), py::arg("lam"));

  py::class_<BridgeSpec>(m, "BridgeSpec")
      .def(py::init(&make_spec), py::arg("step") = StepDistribution::lazy_simple(),
           py::arg("potential") = Potential::linear(), py::arg("lam") = 0.0, py::arg("length") = 1,
           py::arg("start") = 0, py::arg("end") = std::optional<int>(0),
           py::arg("truncation") = std::nullopt, py::arg("tail_tolerance") = 1e-9)
      .def_readonly("lam", &BridgeSpec::lambda)
      .def_readonly("length", &BridgeSpec::length)
      .def_readonly("start", &BridgeSpec::start)
      .def_readonly("end", &BridgeSpec::end)
      .def_readonly("truncation", &BridgeSpec::truncation)
      .def("hash", &BridgeSpec::hash);

  py::class_<AreaStatistics>(m, "AreaStatistics")
      .def_readonly("mean_area", &AreaStatistics::mean_area)
      .def_readonly("bucket", &AreaStatistics::bucket)
      .def_readonly("upper_threshold", &AreaStatistics::upper_threshold)
      .def_readonly("lower_threshold", &AreaStatistics::lower_threshold)
      .def_readonly("upper_probability", &AreaStatistics::upper_probability)
      .def_readonly("lower_probability", &AreaStatistics::lower_probability)
      .def_readonly("upper_error", &AreaStatistics::upper_error)
      .def_readonly("lower_error", &AreaStatistics::lower_error);

  py::class_<TransferTables>(m, "TransferTables")
      .def_property_readonly("spec", &TransferTables::spec)
      .def_property_readonly("log_partition", &TransferTables::log_partition)
      .def_property_readonly("partition", &TransferTables::partition)
      .def("log_partition_at", &TransferTables::log_partition_at)
      .def("marginal", [](const TransferTables& t, int k) { return marginal(t, k).pmf; })
      .def("mean", [](const TransferTables& t, int k) { return marginal(t, k).mean(); })
      .def("tail_probability", &tail_probability)
      .def("covariance", &covariance)
      .def("covariance_row", &covariance_row)
      .def(
          "area_statistics",
          [](const TransferTables& t, double delta, std::optional<double> scale) {
            return area_statistics(t, delta, {.scale = scale});
          },
          py::arg("delta"), py::arg("scale") = std::nullopt);

  m.def(
      "build_tables",
      [](const BridgeSpec& s, bool check_truncation) { return build_tables(s, {.check_truncation = check_truncation}); },
      py::arg("spec"), py::arg("check_truncation") = true);
  m.def("partition_ratio", [](const BridgeSpec& a, const BridgeSpec& b) { return partition_ratio(a, b); });

  py::class_<TransferOperator>(m, "TransferOperator")
      .def_readonly("eigenvalue", &TransferOperator::eigenvalue)
      .def_readonly("right", &TransferOperator::right)
      .def_readonly("left", &TransferOperator::left)
      .def_readonly("converged", &TransferOperator::converged)
      .def("stationary", [](const TransferOperator& op) { return stationary(op).endpoint; })
      .def("bulk", [](const TransferOperator& op) { return stationary(op).bulk; })
      .def("spectral_gap", [](const TransferOperator& op) { return spectral_gap(op).gap; })
      .def("tv_relaxation", [](const TransferOperator& op, int start, int n_max) {
        return tv_relaxation(op, start, n_max);
      });
  m.def("build_operator", [](const BridgeSpec& s) { return build_operator(s); });

  m.def(
      "exact_samples",
      [](const TransferTables& t, int count, std::uint64_t seed, std::uint64_t first_stream) {
        std::vector<std::vector<int>> out;
        out.reserve(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
          Rng rng(seed, first_stream + static_cast<std::uint64_t>(i));
          out.push_back(exact_sample(t, rng).heights);
        }
        return out;
      },
      py::arg("tables"), py::arg("count"), py::arg("seed") = 20240601, py::arg("first_stream") = 0);
  m.def(
      "heatbath",
      [](const BridgeSpec& s, int sweeps, std::uint64_t seed) {
        Rng rng(seed, 0);
        return mcmc_heatbath(s, sweeps, rng).observable;
      },
      py::arg("spec"), py::arg("sweeps"), py::arg("seed") = 20240601);

  m.def(
      "run_experiment",
      [](const std::string& command, const py::object& config) {
        auto cfg = cli::decode_config(command, from_python(config), std::nullopt);
        experiments::Report r;
        py::gil_scoped_release release;
        if (command == "oracle-check") r = experiments::oracle_suite(cfg.suite);
        else if (command == "scaling") r = experiments::height_scaling(cfg.sweep);
        else if (command == "tails") r = experiments::tail_exponent(cfg.sweep);
        else if (command == "area") r = experiments::area_law(cfg.sweep, cfg.delta);
        else if (command == "correlations") r = experiments::correlation_length(cfg.sweep);
        else if (command == "relaxation") r = experiments::relaxation(cfg.sweep);
        else if (command == "moments") r = experiments::moment_scaling(cfg.sweep, cfg.moment_order);
        else if (command == "couple") r = experiments::coupling(cfg.sweep);
        else throw Error(Errc::config_error, "no experiment named '" + command + "'");
        py::gil_scoped_acquire acquire;
        return to_python(cli::report_to_json(r));
      },
      py::arg("command"), py::arg("config") = py::dict());

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "prewet");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
