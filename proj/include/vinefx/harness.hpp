#pragma once

#include "vinefx/ga.hpp"
#include "vinefx/model.hpp"
#include "vinefx/panel.hpp"
#include "vinefx/scenarios.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vinefx {

inline constexpr const char* kVersion = "0.1.0";

/// Panel CSV: a `period` column, return series, and `rate.<CCY>` interest
/// rate columns. Throws ParseError (with line), NonNumericCell,
/// MissingRateSeries.
ReturnPanel
load_panel(const std::filesystem::path& path, const std::string& base_currency);

ReturnPanel
panel_from_csv(const std::string& text, const std::string& base_currency);

/// Flat run configuration. Unknown keys and wrongly typed values raise
/// ConfigError naming the key. Model keys left unset keep the instance's
/// own values.
struct Config
{
  std::uint64_t seed = 1;
  ScenarioMethod method = ScenarioMethod::RVC;
  std::size_t n_scenarios = 1000;
  std::string base_currency = "USD";
  GAConfig ga;
  std::vector<double> mu_grid;
  std::vector<std::size_t> stability_sizes{ 500, 1000, 2000 };
  std::vector<std::uint64_t> stability_seeds{ 1, 2, 3, 4, 5 };
  std::vector<double> stability_targets;
  /// Model overrides, keyed like the instance `params` section plus the
  /// cost keys `fixed_cost`, `variable_cost_major`, `variable_cost_other`.
  nlohmann::json model = nlohmann::json::object();

  static Config from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

Config
read_config(const std::filesystem::path& path);

/// 0.55%, 0.60%, ..., 1.60% per month.
std::vector<double>
default_mu_grid();

/// Instance with the config's model overrides applied.
Instance
apply_config(const Instance& inst, const Config& cfg);

enum class PointStatus
{
  Solved,
  Infeasible,
  TargetUnreachable
};

std::string_view
status_name(PointStatus s);

struct FrontierPoint
{
  double mu = 0.0;
  double achieved_return = 0.0;
  double cvar = 0.0;
  double equity_share = 0.0; // value in assets labelled equity*, over W0
  double fx_exposure = 0.0;  // non-base currency exposure, over W0
  double total_overlay = 0.0;
  PointStatus status = PointStatus::Infeasible;
  std::string message;
  Solution solution;
};

/// GA seed of one frontier point; depends only on the base seed and mu.
std::uint64_t
point_seed(std::uint64_t seed, double mu);

/// Solves the instance at every target. Per-point failures are recorded in
/// the status and never abort the sweep.
std::vector<FrontierPoint>
frontier(const Instance& instance,
         const ScenarioSet& scenarios,
         const std::vector<double>& mu_grid,
         const GAConfig& config);

std::string
frontier_to_csv(const std::vector<FrontierPoint>& points);

/// Fixed allocation: weight per asset and per forward pair, as fractions of
/// initial wealth. Cash earns nothing.
struct Allocation
{
  std::vector<std::string> assets;
  std::vector<double> asset_weights;
  std::vector<std::pair<std::string, std::string>> forwards; // (long, short)
  std::vector<double> forward_weights;
  std::vector<std::string> asset_currencies;
};

Allocation
allocation_from(const Instance& inst, const Solution& sol);

struct BacktestReport
{
  std::vector<std::string> periods;
  std::vector<double> returns;
  std::vector<double> wealth; // starts from 100
  double final_wealth = 100.0;
  double mean_return = 0.0;
  /// Mean of the returns strictly below the 5% quantile, as a positive
  /// loss; 0 when no return lies below it.
  double cvar = 0.0;
  std::optional<double> ratio; // mean_return / cvar
};

/// Applies the allocation to every period of the (raw) panel through the
/// carry-adjusted returns. Throws MissingColumn.
BacktestReport
backtest(const Allocation& alloc, const ReturnPanel& panel);

/// Type-7 (linear interpolation) empirical quantile.
double
empirical_quantile(std::vector<double> x, double q);

std::string
backtest_to_csv(const BacktestReport& r);

nlohmann::json
to_json(const BacktestReport& r);

std::string
stability_to_csv(const std::vector<StabilityRow>& rows);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string
file_digest(const std::filesystem::path& path);

/// Run manifest: command, CLI arguments, version, effective config, input
/// and output files with their digests. Contains no timestamps.
nlohmann::json
make_manifest(const std::string& command,
              const std::vector<std::string>& args,
              const Config& cfg,
              const nlohmann::json& inputs,
              const std::vector<std::string>& outputs);

} // namespace vinefx
