#pragma once

#include "vinefx/bicop.hpp"
#include "vinefx/panel.hpp"
#include "vinefx/rvine.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vinefx {

enum class ScenarioMethod
{
  RVC,
  MVN
};

std::string_view
method_name(ScenarioMethod m);

/// Accepts "rvc" / "mvn" (any case); throws InvalidParameter otherwise.
ScenarioMethod
method_from_name(std::string_view name);

/// N joint per-period return realisations, one column per panel series.
struct ScenarioSet
{
  std::vector<std::string> names;
  Eigen::MatrixXd values; // N x d
  std::vector<double> probabilities;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  std::optional<std::size_t> find(const std::string& name) const;
  /// Column by name; throws MissingColumn.
  Eigen::VectorXd column(const std::string& name) const;
  /// Throws EmptyScenarios, DimensionMismatch, or Error on non-finite
  /// values or probabilities that do not sum to one.
  void validate() const;
};

/// Wraps a value matrix with uniform probabilities 1/N.
ScenarioSet
make_scenarios(std::vector<std::string> names, Eigen::MatrixXd values);

/// Carry adjustment: asset columns become r^a - i, currency columns r^c + i,
/// each with the rate of its own currency. Rate series are dropped from the
/// result (they are folded into the returns).
ReturnPanel
adjust_returns(const ReturnPanel& panel);

/// Kernel marginals, sequentially fitted R-vine, inverse-Rosenblatt sampling
/// and marginal inversion. Constant columns (for example a flat base-currency
/// rate) are reproduced exactly. `fitted` receives the vine when non-null.
ScenarioSet
generate_rvc(const ReturnPanel& adjusted,
             std::size_t n,
             const std::vector<CopulaFamily>& candidates,
             std::uint64_t seed,
             RVineSpec* fitted = nullptr);

/// Multivariate normal draws with the panel's sample mean and covariance.
ScenarioSet
generate_mvn(const ReturnPanel& adjusted, std::size_t n, std::uint64_t seed);

ScenarioSet
generate_scenarios(ScenarioMethod method,
                   const ReturnPanel& adjusted,
                   std::size_t n,
                   std::uint64_t seed);

/// CSV with a leading `scenario_id` column (1-based).
std::string
scenarios_to_csv(const ScenarioSet& s);

ScenarioSet
scenarios_from_csv(const std::string& text);

void
write_scenarios(const std::filesystem::path& path, const ScenarioSet& s);

ScenarioSet
read_scenarios(const std::filesystem::path& path);

// ---- in-sample stability ----------------------------------------------

struct Instance;
struct GAConfig;

struct StabilityRow
{
  std::size_t size = 0;
  /// Statistics over the return-target grid of the seed-averaged CVaR.
  double average = 0.0;
  double std = 0.0;
  double range = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// Standard deviation across seeds, averaged over the targets.
  double seed_std = 0.0;
  std::size_t solved = 0;
  std::vector<std::string> failures;
};

struct StabilityOptions
{
  std::vector<std::size_t> sizes{ 500, 1000, 2000 };
  std::vector<double> targets;
  std::vector<std::uint64_t> seeds{ 1 };
  ScenarioMethod method = ScenarioMethod::RVC;
};

/// For every scenario size and seed, generates scenarios, solves the
/// instance at every target and summarises the optimal CVaR. Failures are
/// recorded per row and never abort the sweep. Standard deviations use the
/// sample convention and are 0 for a single observation.
std::vector<StabilityRow>
stability_report(const ReturnPanel& adjusted,
                 const Instance& instance,
                 const GAConfig& config,
                 const StabilityOptions& options);

} // namespace vinefx
