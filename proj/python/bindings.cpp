// Thin bindings: rationals cross the boundary as "p/q" strings and configs as
// JSON text; the Python package turns them into Fraction and dict.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "htree/acceptance.hpp"
#include "htree/experiment.hpp"
#include "htree/hom.hpp"
#include "htree/monotone.hpp"
#include "htree/tree.hpp"

namespace py = pybind11;
using namespace htree;

namespace {

std::string rat(const Rational& q) { return q.str(); }

py::dict record_dict(const ExperimentRecord& rec) {
  py::dict d;
  d["command"] = rec.command;
  d["config"] = rec.config.dump();
  d["columns"] = rec.columns;
  d["rows"] = rec.rows;
  d["summary"] = rec.summary;
  d["pass"] = rec.pass;
  d["csv"] = to_csv(rec);
  d["json"] = to_json(rec);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  static py::exception<Error> error_type(m, "HtreeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::reinterpret_borrow<py::object>(error_type.ptr());
      py::object exc = type(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = to_string(e.code());
      exc.attr("exit_code") = exit_code(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def("commands", &experiment_commands);
  m.def("default_config", [](const std::string& cmd) { return default_config(cmd).dump(); });
  m.def(
      "resolve_config",
      [](const std::string& cmd, const std::string& file_json, const std::vector<std::pair<std::string, std::string>>& flags) {
        return resolve_config(cmd, file_json.empty() ? Json() : Json::parse(file_json), flags).dump();
      },
      py::arg("command"), py::arg("config_json") = "", py::arg("flags") = std::vector<std::pair<std::string, std::string>>{});
  m.def("run_experiment", [](const std::string& cmd, const std::string& cfg_json) {
    ExperimentRecord rec;
    {
      py::gil_scoped_release release;
      rec = run_experiment(cmd, Json::parse(cfg_json));
    }
    return record_dict(rec);
  });

  m.def(
      "exact_marginal",
      [](const std::string& region_json, Vertex x) {
        const TreeRegion region = build_undirected(load_region_spec(region_json));
        const IntPMF p = exact_marginal(region, x).marginal;
        std::vector<std::pair<Height, std::string>> out;
        for (std::size_t i = 0; i < p.size(); ++i) out.emplace_back(p.at_index(i), rat(p.exact(p.at_index(i))));
        return out;
      },
      py::arg("region_json"), py::arg("vertex") = 0);

  m.def("monotone_count", [](int d, int n, Height k) { return build_counting_table(d, n, k).total().str(); });
  m.def("child_zero_probability",
        [](int d, int n, Height k) { return rat(child_zero_probability(build_counting_table(d, n, k))); });
  m.def("child_zero_lower_bound", [](int d, int n, Height k) { return rat(child_zero_lower_bound(d, n, k)); });

  m.def(
      "lambda_bracket",
      [](double tol) {
        const auto c = lambda_root(tol);
        return std::make_pair(rat(c.lower), rat(c.upper));
      },
      py::arg("tol") = 1e-9);
  m.def("reference_variance_bound", &reference_variance_bound);

  m.def(
      "run_acceptance",
      [](std::uint64_t seed, int only, const std::string& fixture_dir) {
        AcceptanceOptions opt;
        opt.seed = seed;
        opt.only = only;
        opt.fixture_dir = fixture_dir.empty() ? default_fixture_dir() : fixture_dir;
        AcceptanceReport rep;
        {
          py::gil_scoped_release release;
          rep = run_acceptance(opt);
        }
        py::list out;
        for (const auto& c : rep.criteria) {
          py::dict d;
          d["id"] = c.id;
          d["name"] = c.name;
          d["pass"] = c.pass;
          d["detail"] = c.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 20240601, py::arg("only") = 0, py::arg("fixture_dir") = "");
}
