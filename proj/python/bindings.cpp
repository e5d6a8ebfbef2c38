#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vinefx/bicop.hpp"
#include "vinefx/errors.hpp"
#include "vinefx/ga.hpp"
#include "vinefx/harness.hpp"
#include "vinefx/model.hpp"
#include "vinefx/scenarios.hpp"

namespace py = pybind11;
using namespace vinefx;
using namespace pybind11::literals;

namespace {

py::object
to_python(const nlohmann::json& j)
{
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json
from_python(const py::object& o)
{
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

FittedBicop
copula(const std::string& family, double theta, double theta2)
{
  auto c = make_bicop(family_from_name(family), theta, theta2);
  c.validate();
  return c;
}

ScenarioSet
scenario_set(const std::vector<std::string>& names, const Eigen::MatrixXd& values)
{
  return make_scenarios(names, values);
}

} // namespace

PYBIND11_MODULE(_vinefx, m)
{
  m.doc() = "Vine copula scenarios and currency overlay optimisation";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "VinefxError", PyExc_ValueError);

  m.def("h_func", [](const std::string& f, double theta, double theta2, double u, double v) {
    return h_func(copula(f, theta, theta2), u, v);
  }, py::arg("family"), py::arg("theta"), py::arg("theta2") = 0.0, py::arg("u"), py::arg("v"));
  m.def("inv_h", [](const std::string& f, double theta, double theta2, double w, double v) {
    return inv_h(copula(f, theta, theta2), w, v);
  }, py::arg("family"), py::arg("theta"), py::arg("theta2") = 0.0, py::arg("w"), py::arg("v"));
  m.def("copula_density", [](const std::string& f, double theta, double theta2, double u, double v) {
    return density(copula(f, theta, theta2), u, v);
  }, py::arg("family"), py::arg("theta"), py::arg("theta2") = 0.0, py::arg("u"), py::arg("v"));
  m.def("kendall_tau", [](const std::string& f, double theta, double theta2) {
    return model_tau(copula(f, theta, theta2));
  }, py::arg("family"), py::arg("theta"), py::arg("theta2") = 0.0);

  m.def("cvar", [](const std::vector<double>& losses, std::vector<double> probabilities, double beta) {
    if (probabilities.empty())
      probabilities.assign(losses.size(), 1.0 / static_cast<double>(losses.size()));
    const auto r = cvar_objective(losses, probabilities, beta);
    return py::make_tuple(r.alpha, r.cvar);
  }, py::arg("losses"), py::arg("probabilities") = std::vector<double>{}, py::arg("beta") = 0.95,
     "Returns (VaR, CVaR) of a discrete loss distribution.");

  m.def("generate_scenarios", [](const std::string& panel, const std::string& method, std::size_t n,
                                 std::uint64_t seed, const std::string& base) {
    const auto adj = adjust_returns(load_panel(panel, base));
    const auto s = generate_scenarios(method_from_name(method), adj, n, seed);
    return py::make_tuple(s.names, s.values);
  }, py::arg("panel"), py::arg("method") = "rvc", py::arg("n") = 1000, py::arg("seed") = 1,
     py::arg("base_currency") = "USD",
     "Carry-adjusts a panel CSV and draws scenarios. Returns (names, N x d array).");

  m.def("optimize", [](const std::string& instance, const std::vector<std::string>& names,
                       const Eigen::MatrixXd& values, const py::object& config) {
    const Config cfg = Config::from_json(config.is_none() ? nlohmann::json::object() : from_python(config));
    const Instance inst = apply_config(read_instance(instance), cfg);
    GAConfig g = cfg.ga;
    g.seed = cfg.seed;
    ScenarioSet scen = scenario_set(names, values);
    GAResult r;
    {
      py::gil_scoped_release release;
      r = run_ga(inst, scen, g);
    }
    return to_python(to_json(inst, r.solution, r.evaluation));
  }, py::arg("instance"), py::arg("names"), py::arg("values"), py::arg("config") = py::none(),
     "Runs the GA on an instance file and a scenario matrix; returns the solution document.");

  m.def("frontier", [](const std::string& instance, const std::vector<std::string>& names,
                       const Eigen::MatrixXd& values, const std::vector<double>& mu_grid, const py::object& config) {
    const Config cfg = Config::from_json(config.is_none() ? nlohmann::json::object() : from_python(config));
    const Instance inst = apply_config(read_instance(instance), cfg);
    GAConfig g = cfg.ga;
    g.seed = cfg.seed;
    std::vector<FrontierPoint> pts;
    {
      py::gil_scoped_release release;
      pts = frontier(inst, scenario_set(names, values), mu_grid.empty() ? cfg.mu_grid : mu_grid, g);
    }
    py::list out;
    for (const auto& p : pts)
      out.append(py::dict("mu"_a = p.mu, "achieved_return"_a = p.achieved_return, "cvar"_a = p.cvar,
                          "equity_share"_a = p.equity_share, "fx_exposure"_a = p.fx_exposure,
                          "total_overlay"_a = p.total_overlay, "status"_a = std::string(status_name(p.status))));
    return out;
  }, py::arg("instance"), py::arg("names"), py::arg("values"), py::arg("mu_grid") = std::vector<double>{},
     py::arg("config") = py::none());
}
