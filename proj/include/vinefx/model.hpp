#pragma once

#include "vinefx/overlay.hpp"
#include "vinefx/scenarios.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vinefx {

/// Transaction costs of one instrument. Fixed costs are fractions of the
/// initial wealth W0 charged per trade; variable costs are fractions of the
/// traded value.
struct Costs
{
  double fixed_buy = 1e-5;
  double fixed_sell = 1e-5;
  double var_buy = 1e-4;
  double var_sell = 1e-4;
};

struct AssetSpec
{
  std::string name; // scenario column, e.g. "equity.JPY"
  std::string currency;
  double price = 1.0;         // P0 in base currency
  double initial_units = 0.0; // a0
  double min_holding = 1e-4;  // fraction of portfolio value, when held
  double max_holding = 1.0;
  double min_trade = 1e-3; // fraction of W0
  Costs costs;
  std::size_t currency_index = 0;
};

/// Forward pair: buys `long_currency`, sells `short_currency`. Positions are
/// base-currency notionals with unit price.
struct ForwardSpec
{
  std::string long_currency;
  std::string short_currency;
  double price = 1.0;
  double initial_units = 0.0;
  double min_trade = 1e-3;
  Costs costs;
  std::size_t long_index = 0;
  std::size_t short_index = 0;

  std::string name() const { return long_currency + "/" + short_currency; }
};

struct Instance
{
  std::vector<std::string> currencies; // base currency first
  std::vector<AssetSpec> assets;
  std::vector<ForwardSpec> forwards;

  double mu = 0.0;
  double beta = 0.95;
  std::vector<double> c_min; // per currency, fraction of portfolio value
  std::vector<double> c_max;
  double overlay_limit = 1.0; // V_u
  std::size_t max_currencies = 0; // K_C
  std::size_t max_forwards = 0;   // K_G
  double margin = 0.1;            // M
  double initial_cash = 100000.0; // h0
  double initial_wealth = 0.0;    // W0; 0 means h0 + value of initial holdings

  const std::string& base_currency() const { return currencies.front(); }
  std::size_t currency_count() const { return currencies.size(); }
  /// W0 as used for normalisation and returns.
  double wealth0() const;
  /// Trade-size cap B = 10 W0 / min P0 (in units).
  double big_b() const;
  TernaryMatrix ternary() const;

  /// Resolves currency indices and fills per-currency defaults, then checks
  /// every invariant. Throws InvalidParameter.
  void finalize();
  void validate() const;
};

/// Costs defaults: 0.01% variable for the major currencies, 0.05% otherwise.
Costs
default_costs(const std::string& currency);

/// Builds a validated instance from its JSON document (see README).
Instance
instance_from_json(const nlohmann::json& j);

nlohmann::json
to_json(const Instance& inst);

Instance
read_instance(const std::filesystem::path& path);

/// Trades of one stage. Binaries hold 0 or 1.
struct StageDecision
{
  Eigen::VectorXd buy_asset, sell_asset, x_asset, y_asset;
  Eigen::VectorXd buy_fwd, sell_fwd, x_fwd, y_fwd;
  Eigen::VectorXd z;

  static StageDecision zeros(const Instance& inst);
  bool is_zero() const;
};

/// Full decision: first stage plus per-scenario recourse. An empty
/// `recourse` means no recourse trades in any scenario.
struct Solution
{
  StageDecision first;
  std::vector<StageDecision> recourse;
};

/// Per-scenario prices: asset prices P^r and the value change per unit of
/// every forward pair.
struct ScenarioPrices
{
  Eigen::MatrixXd asset;   // N x A
  Eigen::MatrixXd forward; // N x K
};

/// P^r = P0 (1 + adjusted asset return + adjusted return of its currency);
/// forward change = P0_k (adjusted long-leg return - adjusted short-leg
/// return). Throws MissingColumn.
ScenarioPrices
scenario_prices(const Instance& inst, const ScenarioSet& scenarios);

/// Single-scenario form: `returns` maps column names to adjusted returns.
ScenarioPrices
scenario_prices(const Instance& inst,
                const std::vector<std::string>& names,
                const Eigen::RowVectorXd& returns);

/// Named constraint violations (each >= 0, already normalised).
struct Residuals
{
  std::vector<std::pair<std::string, double>> items;

  double get(const std::string& name) const;
  void add(const std::string& name, double v);
  double total() const;
};

struct FirstStageReport
{
  Eigen::VectorXd units;     // a
  Eigen::VectorXd fwd_units; // q (units)
  Eigen::VectorXd fwd_value; // q o P0_k
  Eigen::MatrixXd F;
  double margin = 0.0;
  double cash = 0.0; // free cash after trades, costs and margin
  double costs = 0.0;
  Eigen::VectorXd asset_value_by_currency;
  Eigen::VectorXd exposure; // c_j
  double total_overlay = 0.0;
  Residuals residuals;
};

FirstStageReport
evaluate_first_stage(const Instance& inst, const StageDecision& d);

struct RecourseReport
{
  Eigen::VectorXd units;
  Eigen::VectorXd fwd_units;
  Eigen::MatrixXd F;
  double margin = 0.0;
  double cash = 0.0;
  double costs = 0.0;
  Eigen::VectorXd exposure;
  double total_overlay = 0.0;
  double wealth = 0.0;
  Residuals residuals;
};

/// Recourse at one scenario. `asset_prices` and `forward_change` are the
/// scenario's row of ScenarioPrices; `d` may be null for no trades.
RecourseReport
evaluate_recourse(const Instance& inst,
                  const FirstStageReport& first,
                  const StageDecision* d,
                  const Eigen::RowVectorXd& asset_prices,
                  const Eigen::RowVectorXd& forward_change);

/// W^r: asset value + first-stage forward mark-to-market + margin + cash.
double
wealth(const Instance& inst,
       const FirstStageReport& first,
       const StageDecision* d,
       const Eigen::RowVectorXd& asset_prices,
       const Eigen::RowVectorXd& forward_change);

struct CvarResult
{
  double alpha = 0.0;
  double cvar = 0.0;
  std::vector<double> shortfall; // e^r
};

/// VaR is the smallest loss whose cumulative probability reaches beta;
/// CVaR = alpha + sum p e / (1 - beta). Throws EmptyScenarios.
CvarResult
cvar_objective(std::span<const double> losses, std::span<const double> probabilities, double beta);

/// Rockafellar-Uryasev auxiliary function at a given alpha.
double
cvar_auxiliary(std::span<const double> losses,
               std::span<const double> probabilities,
               double beta,
               double alpha);

double
expected_return(std::span<const double> wealth, std::span<const double> probabilities, double w0);

inline double
target_residual(double expected, double mu)
{
  return std::max(0.0, mu - expected);
}

struct Evaluation
{
  FirstStageReport first;
  std::vector<double> wealth;
  std::vector<double> losses;
  CvarResult risk;
  double expected_return = 0.0;
  double target_residual = 0.0;
  Residuals first_residuals;
  Residuals recourse_residuals; // summed over scenarios
  double penalty_weight = 0.0;
  double violation = 0.0; // normalised total including the target
  double fitness = 0.0;

  bool feasible() const { return violation == 0.0; }
  /// True when only the return target is violated.
  bool only_target_violated() const;
};

/// Penalty weight w = 1e3 max(1, |cvar|).
double
penalty_weight(double cvar);

/// Evaluates every stage and scenario; fitness = cvar + w * violation.
Evaluation
evaluate(const Instance& inst,
         const Solution& sol,
         const ScenarioSet& scenarios,
         const ScenarioPrices& prices);

Evaluation
evaluate(const Instance& inst, const Solution& sol, const ScenarioSet& scenarios);

inline double
penalized_fitness(const Instance& inst, const Solution& sol, const ScenarioSet& scenarios)
{
  return evaluate(inst, sol, scenarios).fitness;
}

/// Solution document: first-stage decisions by instrument name, implied
/// positions, risk figures and the residual report.
nlohmann::json
to_json(const Instance& inst, const Solution& sol, const Evaluation& ev);

/// Reads the first-stage decisions back from a solution document.
Solution
solution_from_json(const Instance& inst, const nlohmann::json& j);

} // namespace vinefx
