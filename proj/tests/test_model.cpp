#include <doctest.h>

#include "fixtures.hpp"
#include "vinefx/errors.hpp"
#include "vinefx/model.hpp"

#include <cmath>
#include <numeric>

using namespace vinefx;

namespace {

Instance
costless(double mu = 0.0)
{
  nlohmann::json j = { { "currencies", { "USD", "EUR" } },
                       { "assets", { { { "name", "eq.USD" }, { "price", 10.0 } }, { { "name", "eq.EUR" } } } },
                       { "costs", { { "fixed", 0.0 }, { "variable_major", 0.0 }, { "variable_other", 0.0 } } },
                       { "params", { { "mu", mu }, { "c_min", 0.0 }, { "initial_cash", 1000.0 } } } };
  return instance_from_json(j);
}

ScenarioSet
one_scenario(double usd_asset, double eur_asset, double eur)
{
  Eigen::MatrixXd v(1, 4);
  v << usd_asset, eur_asset, eur, 0.0;
  return make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v);
}

std::vector<double>
uniform_probs(std::size_t n)
{
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

} // namespace

TEST_CASE("scenario prices")
{
  const auto inst = costless();
  const auto zero = scenario_prices(inst, one_scenario(0, 0, 0));
  CHECK(zero.asset(0, 0) == 10.0);
  CHECK(zero.asset(0, 1) == 1.0);
  CHECK(zero.forward.cwiseAbs().maxCoeff() == 0.0);

  const auto p = scenario_prices(inst, one_scenario(0.0, 0.01, 0.005));
  CHECK(p.asset(0, 1) == doctest::Approx(1.015).epsilon(1e-14));

  // both legs move together: the forward does not change value
  Eigen::MatrixXd v(1, 4);
  v << 0.0, 0.0, 0.02, 0.02;
  CHECK(scenario_prices(inst, make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v)).forward(0, 0) == 0.0);

  Eigen::MatrixXd w(1, 2);
  w << 0.0, 0.0;
  CHECK_THROWS_AS(scenario_prices(inst, make_scenarios({ "eq.USD", "EUR" }, w)), MissingColumn);
}

TEST_CASE("zero trades leave cash and violate nothing")
{
  const auto inst = costless();
  const auto r = evaluate_first_stage(inst, StageDecision::zeros(inst));
  CHECK(r.cash == 1000.0);
  CHECK(r.costs == 0.0);
  CHECK(r.margin == 0.0);
  CHECK(r.residuals.total() == 0.0);
}

TEST_CASE("hand-built instance residuals")
{
  const auto h = testing::hand_case();
  const auto r = evaluate_first_stage(h.inst, h.d);
  CHECK(r.costs == doctest::Approx(h.costs).epsilon(1e-12));
  CHECK(r.margin == doctest::Approx(h.margin).epsilon(1e-12));
  CHECK(r.cash == doctest::Approx(h.cash).epsilon(1e-12));
  CHECK(r.exposure(0) == doctest::Approx(220.0).epsilon(1e-12));
  CHECK(r.exposure(1) == doctest::Approx(500.0).epsilon(1e-12));
  for (const auto& [name, want] : h.residuals) {
    INFO(name);
    CHECK(std::abs(r.residuals.get(name) - want) < 1e-12);
  }

  const auto p = scenario_prices(h.inst, h.scenario);
  const auto rr = evaluate_recourse(h.inst, r, &h.recourse, p.asset.row(0), p.forward.row(0));
  CHECK(rr.cash == doctest::Approx(h.recourse_cash).epsilon(1e-12));
  CHECK(rr.wealth == doctest::Approx(h.recourse_wealth).epsilon(1e-12));
  for (const auto& [name, want] : h.recourse_residuals) {
    INFO(name);
    CHECK(std::abs(rr.residuals.get(name) - want) < 1e-12);
  }
}

TEST_CASE("currency flag without a trade")
{
  const auto inst = costless();
  auto d = StageDecision::zeros(inst);
  d.buy_asset(0) = 10;
  d.x_asset(0) = 1;
  d.z << 1, 1;
  CHECK(evaluate_first_stage(inst, d).residuals.get("currency_activity") == 1.0);
}

TEST_CASE("buying and selling the same asset")
{
  const auto inst = costless();
  auto d = StageDecision::zeros(inst);
  d.buy_asset(0) = d.sell_asset(0) = 5;
  d.x_asset(0) = d.y_asset(0) = 1;
  const auto r = evaluate_first_stage(inst, d);
  CHECK(r.residuals.get("buy_or_sell_asset") == 1.0);
  CHECK(r.units(0) == 0.0);
}

TEST_CASE("recourse trades")
{
  const auto inst = costless();
  auto d = StageDecision::zeros(inst);
  d.buy_asset(0) = 50; // 500 at P0 = 10
  d.x_asset(0) = 1;
  const auto first = evaluate_first_stage(inst, d);
  REQUIRE(first.cash == 500.0);

  const auto p = scenario_prices(inst, one_scenario(0.1, 0.0, 0.0));
  const Eigen::RowVectorXd pa = p.asset.row(0), pf = p.forward.row(0);

  // sell 20 at 11 and buy 220 of eq.EUR at 1: the cash balance is unchanged
  auto rd = StageDecision::zeros(inst);
  rd.sell_asset(0) = 20;
  rd.y_asset(0) = 1;
  rd.buy_asset(1) = 220;
  rd.x_asset(1) = 1;
  const auto rr = evaluate_recourse(inst, first, &rd, pa, pf);
  CHECK(rr.cash == doctest::Approx(500.0).epsilon(1e-14));
  CHECK(rr.residuals.get("cash_balance") == 0.0);
  CHECK(rr.wealth == doctest::Approx(1050.0).epsilon(1e-14));

  // overspending is a node deficit
  rd.buy_asset(1) = 900;
  const auto over = evaluate_recourse(inst, first, &rd, pa, pf);
  CHECK(over.residuals.get("cash_balance") == doctest::Approx((900.0 - 220.0 - 500.0) / 1000.0));

  auto both = StageDecision::zeros(inst);
  both.buy_asset(1) = both.sell_asset(1) = 100;
  both.x_asset(1) = both.y_asset(1) = 1;
  CHECK(evaluate_recourse(inst, first, &both, pa, pf).residuals.get("buy_or_sell_asset") == 1.0);
}

TEST_CASE("terminal wealth")
{
  const auto inst = costless();
  const auto scen = one_scenario(0.1, -0.2, 0.05);
  Solution cash{ StageDecision::zeros(inst), {} };
  CHECK(evaluate(inst, cash, scen).wealth[0] == 1000.0);

  Solution all_in{ StageDecision::zeros(inst), {} };
  all_in.first.buy_asset(0) = 100;
  all_in.first.x_asset(0) = 1;
  const auto ev = evaluate(inst, all_in, scen);
  CHECK(ev.wealth[0] == doctest::Approx(1100.0).epsilon(1e-14));
  CHECK(ev.expected_return == doctest::Approx(0.1).epsilon(1e-14));

  // flat prices and costless trades keep W0
  all_in.first.buy_asset(1) = 0;
  CHECK(evaluate(inst, all_in, one_scenario(0, 0, 0)).wealth[0] == doctest::Approx(1000.0).epsilon(1e-14));

  // a long EUR forward earns the EUR move on its notional
  Solution fwd{ StageDecision::zeros(inst), {} };
  fwd.first.buy_fwd(0) = 200;
  fwd.first.x_fwd(0) = 1;
  const bool eur_long = inst.forwards[0].long_currency == "EUR";
  CHECK(evaluate(inst, fwd, scen).wealth[0] == doctest::Approx(1000.0 + (eur_long ? 10.0 : -10.0)));
}

TEST_CASE("cvar on hand examples")
{
  std::vector<double> l(100);
  std::iota(l.begin(), l.end(), 1.0);
  const auto r = cvar_objective(l, uniform_probs(100), 0.95);
  CHECK(r.alpha == 95.0);
  CHECK(r.cvar == doctest::Approx(98.0).epsilon(1e-14));

  const std::vector<double> flat(40, 0.3);
  CHECK(cvar_objective(flat, uniform_probs(40), 0.95).cvar == doctest::Approx(0.3).epsilon(1e-14));

  CHECK(cvar_objective(l, uniform_probs(100), 1e-9).cvar == doctest::Approx(50.5).epsilon(1e-8));

  CHECK_THROWS_AS(cvar_objective(std::vector<double>{}, std::vector<double>{}, 0.95), EmptyScenarios);
  CHECK_THROWS_AS(cvar_objective(l, uniform_probs(100), 1.0), InvalidParameter);
}

TEST_CASE("cvar minimises the auxiliary function")
{
  Rng rng(5);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 20 + static_cast<std::size_t>(rep) * 7;
    std::vector<double> l(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      l[i] = nd(rng);
      p[i] = rep % 2 ? 0.5 + uniform01(rng) : 1.0;
    }
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& x : p)
      x /= s;
    double best = std::numeric_limits<double>::infinity();
    for (double a : l)
      best = std::min(best, cvar_auxiliary(l, p, 0.9, a));
    CHECK(cvar_objective(l, p, 0.9).cvar == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("expected return and target residual")
{
  const std::vector<double> p{ 0.5, 0.5 };
  CHECK(expected_return(std::vector<double>{ 1000, 1000 }, p, 1000) == 0.0);
  CHECK(expected_return(std::vector<double>{ 1100, 900 }, p, 1000) == doctest::Approx(0.0).scale(1.0));
  CHECK(target_residual(0.008, 0.01) == doctest::Approx(0.002).epsilon(1e-12));
  CHECK(target_residual(0.012, 0.01) == 0.0);
}

TEST_CASE("penalised fitness")
{
  CHECK(penalty_weight(0.5) == 1000.0);
  CHECK(penalty_weight(-3.0) == 3000.0);

  const auto inst = costless(-1.0);
  Eigen::MatrixXd v(4, 4);
  v << 0.02, -0.01, 0.01, 0, -0.05, 0.03, 0.0, 0, 0.01, 0.0, -0.02, 0, 0.03, 0.01, 0.01, 0;
  const auto scen = make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v);

  Solution ok{ StageDecision::zeros(inst), {} };
  ok.first.buy_asset(0) = 30;
  ok.first.x_asset(0) = 1;
  ok.first.z(0) = 1;
  const auto good = evaluate(inst, ok, scen);
  REQUIRE(good.feasible());
  CHECK(good.fitness == good.risk.cvar);

  Solution bad = ok;
  bad.first.buy_asset(1) = bad.first.sell_asset(1) = 100;
  bad.first.x_asset(1) = bad.first.y_asset(1) = 1;
  const auto ev = evaluate(inst, bad, scen);
  CHECK(ev.violation == 1.0);
  CHECK(ev.fitness == doctest::Approx(ev.risk.cvar + ev.penalty_weight).epsilon(1e-14));
  CHECK(ev.fitness > good.fitness);
}

TEST_CASE("unreachable target only")
{
  const auto inst = costless(0.5);
  Eigen::MatrixXd v(2, 4);
  v << 0.01, 0.0, 0.0, 0, -0.01, 0.0, 0.0, 0;
  const auto ev = evaluate(inst, Solution{ StageDecision::zeros(inst), {} },
                           make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v));
  CHECK(ev.only_target_violated());
  CHECK(ev.target_residual == 0.5);
}

TEST_CASE("instance json round trip")
{
  const auto h = testing::hand_case();
  const auto back = instance_from_json(to_json(h.inst));
  CHECK(back.currencies == h.inst.currencies);
  CHECK(back.forwards.size() == 1);
  const auto a = evaluate_first_stage(h.inst, h.d), b = evaluate_first_stage(back, h.d);
  CHECK(a.cash == b.cash);
  CHECK(a.residuals.total() == b.residuals.total());
  CHECK_THROWS_AS(instance_from_json(nlohmann::json{ { "assets", nlohmann::json::array() } }), InvalidParameter);
}
