// Shared oracles for the unit and acceptance tests.
#pragma once

#include "vinefx/bicop.hpp"
#include "vinefx/ga.hpp"
#include "vinefx/model.hpp"
#include "vinefx/random.hpp"
#include "vinefx/rvine.hpp"
#include "vinefx/scenarios.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace vinefx::testing {

/// F(a | b) from the tree-1 edge joining a and b, whichever argument order
/// the edge stores.
inline double
cond_cdf(const VineEdge& e, int a, int b, const double* u)
{
  if (e.first == a && e.second == b)
    return h_func(e.copula, u[a], u[b]);
  if (e.first == b && e.second == a)
    return h_func_first(e.copula, u[b], u[a]);
  throw std::logic_error("edge does not join the requested pair");
}

/// Three-variable vine density written out by hand:
/// c_ab(u_a, u_b) c_bc(u_b, u_c) c_ac|b(F(a|b), F(c|b)).
inline double
hand_chain_3(const RVineSpec& spec, const double* u)
{
  const auto trees = spec.trees();
  const auto& t1 = trees.at(0);
  const auto& e2 = trees.at(1).at(0);
  const int b = e2.conditioning.at(0);
  double log_c = 0.0;
  for (const auto& e : t1)
    log_c += std::log(density(e.copula, u[e.first], u[e.second]));
  auto edge_with = [&](int x) -> const VineEdge& {
    for (const auto& e : t1)
      if ((e.first == x && e.second == b) || (e.first == b && e.second == x))
        return e;
    throw std::logic_error("missing tree-1 edge");
  };
  const double fa = cond_cdf(edge_with(e2.first), e2.first, b, u);
  const double fc = cond_cdf(edge_with(e2.second), e2.second, b, u);
  return log_c + std::log(density(e2.copula, fa, fc));
}

/// The two-asset, two-currency, one-forward instance of the GA oracle.
/// Twenty normal scenarios drawn from `seed`.
struct TinyProblem
{
  Instance inst;
  ScenarioSet scenarios;
};

inline TinyProblem
tiny_problem(std::uint64_t seed)
{
  nlohmann::json j = { { "currencies", { "USD", "EUR" } },
                       { "assets", { { { "name", "eq.USD" } }, { { "name", "eq.EUR" } } } },
                       { "params", { { "mu", 0.006 }, { "c_min", 0.0 } } } };
  TinyProblem p{ instance_from_json(j), {} };
  Rng rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd v(20, 4);
  for (int r = 0; r < 20; ++r) {
    v(r, 0) = 0.008 + 0.04 * nd(rng);
    v(r, 1) = 0.006 + 0.05 * nd(rng);
    v(r, 2) = 0.002 + 0.03 * nd(rng);
    v(r, 3) = 0.0;
  }
  p.scenarios = make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v);
  return p;
}

struct GridOptimum
{
  double fitness = 0.0;
  double w_usd = 0.0, w_eur = 0.0, forward = 0.0;
};

/// Exhaustive search: asset weights on the 5% simplex (remainder in cash)
/// times forward positions from -100% to +100% of h0 in 5% steps. The
/// budget left after fixed costs, margin and forward costs is split by the
/// weights, net of the variable buying cost.
inline GridOptimum
grid_optimum(const TinyProblem& p)
{
  const Instance& inst = p.inst;
  const double h0 = inst.initial_cash;
  const auto& fc = inst.forwards.at(0).costs;
  GridOptimum best{ std::numeric_limits<double>::infinity() };
  for (int i = 0; i <= 20; ++i)
    for (int k = 0; k <= 20 - i; ++k)
      for (int qi = -20; qi <= 20; ++qi) {
        const double w1 = i * 0.05, w2 = k * 0.05, q = qi * 0.05 * h0;
        Solution s;
        s.first = StageDecision::zeros(inst);
        double fixed = 0.0;
        if (i > 0)
          fixed += inst.assets[0].costs.fixed_buy * h0;
        if (k > 0)
          fixed += inst.assets[1].costs.fixed_buy * h0;
        if (qi != 0)
          fixed += (qi > 0 ? fc.fixed_buy : fc.fixed_sell) * h0;
        const double budget = h0 - fixed - (inst.margin + (qi > 0 ? fc.var_buy : fc.var_sell)) * std::abs(q);
        s.first.buy_asset(0) = w1 * budget / (1 + inst.assets[0].costs.var_buy) / inst.assets[0].price;
        s.first.x_asset(0) = i > 0;
        s.first.buy_asset(1) = w2 * budget / (1 + inst.assets[1].costs.var_buy) / inst.assets[1].price;
        s.first.x_asset(1) = k > 0;
        if (qi > 0) {
          s.first.buy_fwd(0) = q;
          s.first.x_fwd(0) = 1;
        } else if (qi < 0) {
          s.first.sell_fwd(0) = -q;
          s.first.y_fwd(0) = 1;
        }
        const auto ev = evaluate(inst, s, p.scenarios);
        if (ev.fitness < best.fitness)
          best = { ev.fitness, w1, w2, qi * 0.05 };
      }
  return best;
}

/// Two assets (eq.USD at 10, eq.EUR at 20), one EUR/USD forward, h0 1000.
/// The decision buys 40 eq.USD, 15 eq.EUR and 200 of the forward, sets the
/// forward sell flag without a size and flags both currencies.
struct HandCase
{
  Instance inst;
  StageDecision d;
  double costs, margin, cash;
  std::vector<std::pair<std::string, double>> residuals;

  // Recourse at one scenario: eq.USD +10%, EUR +5%, everything else flat.
  // Sells 10 eq.USD and flags USD only.
  ScenarioSet scenario;
  StageDecision recourse;
  double recourse_cash, recourse_wealth;
  std::vector<std::pair<std::string, double>> recourse_residuals;
};

inline HandCase
hand_case()
{
  nlohmann::json j = {
    { "currencies", { "USD", "EUR" } },
    { "assets", { { { "name", "eq.USD" }, { "price", 10.0 } }, { { "name", "eq.EUR" }, { "price", 20.0 } } } },
    { "forwards", { { { "long", "EUR" }, { "short", "USD" } } } },
    { "costs", { { "fixed", 1e-4 }, { "variable_major", 1e-3 }, { "variable_other", 1e-3 } } },
    { "params",
      { { "initial_cash", 1000.0 },
        { "margin", 0.1 },
        { "c_min", 0.1 },
        { "c_max", 0.45 },
        { "overlay_limit", 0.25 },
        { "max_currencies", 1 },
        { "max_forwards", 1 },
        { "min_holding", 0.05 },
        { "max_holding", 0.35 },
        { "min_trade", 0.01 } } }
  };
  HandCase h{ instance_from_json(j), {}, 0, 0, 0, {}, {}, {}, 0, 0, {} };
  h.d = StageDecision::zeros(h.inst);
  h.d.buy_asset << 40, 15;
  h.d.x_asset << 1, 1;
  h.d.buy_fwd << 200;
  h.d.x_fwd << 1;
  h.d.y_fwd << 1;
  h.d.z << 1, 1;

  // costs: 0.1 fixed per trade flag (4 flags) + 0.1% of 400, 300 and 200
  h.costs = 4 * 0.1 + 0.4 + 0.3 + 0.2;
  h.margin = 0.1 * 200;
  h.cash = 1000 - 400 - 300 - h.costs - h.margin;
  // exposure USD 400 - 200 + 20, EUR 300 + 200; total overlay 200
  h.residuals = { { "cash_balance", 0.0 },
                  { "overlay_limit", (200 - 0.25 * (220 + 500)) / 1000.0 },
                  { "currency_exposure", 500 / 1000.0 - 0.45 },
                  { "holding_bounds", 400 / 1000.0 - 0.35 },
                  { "buy_or_sell_asset", 0.0 },
                  { "buy_or_sell_forward", 1.0 },
                  { "trade_size_asset", 0.0 },
                  { "trade_size_forward", 10 / 1000.0 },
                  { "currency_activity", 0.0 },
                  { "currency_cardinality", 1.0 },
                  { "forward_cardinality", 1.0 },
                  { "binary_domain", 0.0 } };

  Eigen::MatrixXd v(1, 4);
  v << 0.10, 0.0, 0.05, 0.0;
  h.scenario = make_scenarios({ "eq.USD", "eq.EUR", "EUR", "USD" }, v);
  h.recourse = StageDecision::zeros(h.inst);
  h.recourse.sell_asset << 10, 0;
  h.recourse.y_asset << 1, 0;
  h.recourse.z << 1, 0;
  // prices 11 and 20 * 1.05 = 21; the forward gains 5% of 200
  const double sale = 10 * 11.0, cost = 0.1 + 0.001 * sale;
  h.recourse_cash = h.cash + sale - cost;
  h.recourse_wealth = 30 * 11.0 + 15 * 21.0 + 10.0 + h.margin + h.recourse_cash;
  // exposure USD 330 - 200 + 20, EUR 315 + 200, as fractions of the node wealth
  const double W = h.recourse_wealth;
  h.recourse_residuals = { { "cash_balance", 0.0 },
                           { "overlay_limit", (200 - 0.25 * (150 + 515)) / 1000.0 },
                           { "currency_exposure", 515 / W - 0.45 },
                           { "holding_bounds", 0.0 },
                           { "buy_or_sell_asset", 0.0 },
                           { "buy_or_sell_forward", 0.0 },
                           { "trade_size_asset", 0.0 },
                           { "trade_size_forward", 0.0 },
                           { "currency_activity", 0.0 },
                           { "currency_cardinality", 0.0 },
                           { "forward_cardinality", 0.0 },
                           { "binary_domain", 0.0 } };
  return h;
}

inline GAConfig
tiny_ga(std::uint64_t seed)
{
  GAConfig c;
  c.population = 200;
  c.generations = 200;
  c.seed = seed;
  c.recourse = RecourseMode::NoRecourseTrades;
  return c;
}

} // namespace vinefx::testing
