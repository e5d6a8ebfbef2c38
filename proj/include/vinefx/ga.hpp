#pragma once

#include "vinefx/model.hpp"
#include "vinefx/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vinefx {

enum class RecourseMode
{
  Full,            // per-scenario recourse genes
  NoRecourseTrades // first-stage genes only
};

std::string_view
recourse_mode_name(RecourseMode m);

/// Accepts "full" / "no-recourse-trades"; throws InvalidParameter.
RecourseMode
recourse_mode_from_name(std::string_view name);

struct GAConfig
{
  std::size_t population = 500;     // Theta
  std::size_t generations = 500;    // Gamma
  double selection_fraction = 0.1;  // Delta
  double crossover_rate = 0.8;      // Lambda
  std::size_t elite = 0;  // 0: 5% of the population, at least one
  double sigma0 = 0.2;    // initial mutation step, fraction of the gene range
  std::uint64_t seed = 1;
  RecourseMode recourse = RecourseMode::Full;
  std::size_t threads = 0;

  /// Throws InvalidParameter.
  void validate() const;

  std::size_t elite_count() const;
  std::size_t parent_count() const;
  std::size_t crossover_count() const;
  std::size_t mutant_count() const;
};

/// Flat real chromosome. Each stage holds, in order: asset buys, asset
/// sells, asset buy flags, asset sell flags, the same four blocks for the
/// forwards, and the currency flags. Full recourse mode appends one stage
/// block per scenario.
class Encoding
{
public:
  Encoding(const Instance& inst, std::size_t scenarios, RecourseMode mode);

  std::size_t stage_length() const { return stage_; }
  std::size_t length() const { return static_cast<std::size_t>(lower_.size()); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  bool is_binary(std::size_t gene) const;

  /// Binary genes threshold at 0.5; a trade whose flag is off decodes to 0.
  Solution decode(const Eigen::VectorXd& genes) const;
  Eigen::VectorXd encode(const Solution& sol) const;

  /// Randomly weighted portfolio: 98% of the initial cash split over the
  /// assets and cash by a flat Dirichlet draw, buy flags set where bought.
  /// Forward sizes are uniform up to the overlay limit; forward and currency
  /// flags are Bernoulli(0.5). No recourse trades.
  Eigen::VectorXd random_individual(Rng& rng) const;

  /// Scales the first-stage asset buys and forward sizes down until the
  /// first-stage cash balance is nonnegative. Leaves budget-feasible
  /// chromosomes untouched.
  void restore_budget(Eigen::VectorXd& genes) const;

private:
  StageDecision decode_stage(const Eigen::VectorXd& g, Eigen::Index offset) const;
  void encode_stage(const StageDecision& d, Eigen::VectorXd& g, Eigen::Index offset) const;

  const Instance* inst_;
  std::size_t A_, K_, C_, stage_, scenarios_;
  RecourseMode mode_;
  Eigen::VectorXd lower_, upper_;
};

/// Rank scaling: the i-th best individual gets 1/sqrt(i) (1-based), ties
/// broken by index.
std::vector<double>
rank_scale(const std::vector<double>& fitness);

/// Stochastic uniform selection over the scaled values: `count` equally
/// spaced pointers with a random start inside the first step.
std::vector<std::size_t>
select_stochastic_uniform(const std::vector<double>& scaled, std::size_t count, Rng& rng);

/// Gene-wise mean of two parents. Throws LengthMismatch.
Eigen::VectorXd
crossover_arithmetic(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Step of length sigma along a random unit direction in range-normalised
/// coordinates, then clipped to the bounds.
Eigen::VectorXd
mutate_adaptive_feasible(const Eigen::VectorXd& individual,
                         double sigma,
                         const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper,
                         Rng& rng);

/// sigma * 1.1 after an improving generation, * 0.97 otherwise; kept in
/// [1e-6, 1].
double
adapt_sigma(double sigma, bool improved);

struct TraceRow
{
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct GAResult
{
  Solution solution;
  Evaluation evaluation;
  Eigen::VectorXd genes;
  std::vector<TraceRow> trace;
  std::size_t evaluations = 0;
};

/// Elitism, stochastic uniform parent selection, arithmetic
/// crossover and adaptive feasible mutation. Returns the best individual
/// ever seen. Results do not depend on the thread count.
GAResult
run_ga(const Instance& inst, const ScenarioSet& scenarios, const GAConfig& config);

std::string
trace_to_csv(const std::vector<TraceRow>& trace);

} // namespace vinefx
