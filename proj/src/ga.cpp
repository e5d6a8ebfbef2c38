#include "vinefx/ga.hpp"

#include "vinefx/errors.hpp"
#include "vinefx/io.hpp"
#include "vinefx/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vinefx {

namespace {

double
standard_normal(Rng& rng)
{
  static const boost::math::normal_distribution<double> n;
  return boost::math::quantile(n, uniform_open(rng));
}

double
flag(double g)
{
  return g >= 0.5 ? 1.0 : 0.0;
}

} // namespace

std::string_view
recourse_mode_name(RecourseMode m)
{
  return m == RecourseMode::Full ? "full" : "no-recourse-trades";
}

RecourseMode
recourse_mode_from_name(std::string_view name)
{
  if (name == "full")
    return RecourseMode::Full;
  if (name == "no-recourse-trades")
    return RecourseMode::NoRecourseTrades;
  throw InvalidParameter("unknown recourse mode '" + std::string(name) + "'");
}

void
GAConfig::validate() const
{
  if (population < 2)
    throw InvalidParameter("population must be at least 2");
  if (generations < 1)
    throw InvalidParameter("generations must be at least 1");
  if (!(selection_fraction > 0.0 && selection_fraction <= 1.0))
    throw InvalidParameter("selection_fraction must lie in (0, 1]");
  if (!(crossover_rate > 0.0 && crossover_rate < 1.0))
    throw InvalidParameter("crossover_rate must lie in (0, 1)");
  if (elite_count() >= population)
    throw InvalidParameter("elite count must be at least 1 and below the population");
  if (!(sigma0 >= 0.0 && sigma0 <= 1.0))
    throw InvalidParameter("sigma0 must lie in [0, 1]");
}

std::size_t
GAConfig::elite_count() const
{
  if (elite > 0)
    return elite;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(population))));
}

std::size_t
GAConfig::parent_count() const
{
  const double n = std::round(selection_fraction * static_cast<double>(population - 1));
  return std::max<std::size_t>(2, static_cast<std::size_t>(n));
}

std::size_t
GAConfig::crossover_count() const
{
  const std::size_t rest = population - elite_count();
  const auto n = static_cast<std::size_t>(std::round(crossover_rate * static_cast<double>(rest)));
  return std::min(n, rest);
}

std::size_t
GAConfig::mutant_count() const
{
  return population - elite_count() - crossover_count();
}

Encoding::Encoding(const Instance& inst, std::size_t scenarios, RecourseMode mode)
  : inst_(&inst)
  , A_(inst.assets.size())
  , K_(inst.forwards.size())
  , C_(inst.currency_count())
  , stage_(4 * A_ + 4 * K_ + C_)
  , scenarios_(scenarios)
  , mode_(mode)
{
  const std::size_t blocks = mode == RecourseMode::Full ? 1 + scenarios : 1;
  const auto L = static_cast<Eigen::Index>(stage_ * blocks);
  lower_ = Eigen::VectorXd::Zero(L);
  upper_ = Eigen::VectorXd::Ones(L);
  const double w0 = inst.wealth0();
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto off = static_cast<Eigen::Index>(b * stage_);
    const auto a = static_cast<Eigen::Index>(A_), k = static_cast<Eigen::Index>(K_);
    for (Eigen::Index i = 0; i < a; ++i) {
      const double cap = w0 / inst.assets[static_cast<std::size_t>(i)].price;
      upper_(off + i) = cap;
      upper_(off + a + i) = cap;
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const double cap = w0 / inst.forwards[static_cast<std::size_t>(j)].price;
      upper_(off + 4 * a + j) = cap;
      upper_(off + 4 * a + k + j) = cap;
    }
  }
}

bool
Encoding::is_binary(std::size_t gene) const
{
  const std::size_t g = gene % stage_;
  if (g < 2 * A_)
    return false;
  if (g < 4 * A_)
    return true;
  return g - 4 * A_ >= 2 * K_;
}

StageDecision
Encoding::decode_stage(const Eigen::VectorXd& g, Eigen::Index off) const
{
  const auto a = static_cast<Eigen::Index>(A_), k = static_cast<Eigen::Index>(K_);
  const auto c = static_cast<Eigen::Index>(C_);
  StageDecision d;
  d.x_asset = g.segment(off + 2 * a, a).unaryExpr(&flag);
  d.y_asset = g.segment(off + 3 * a, a).unaryExpr(&flag);
  d.buy_asset = g.segment(off, a).cwiseProduct(d.x_asset);
  d.sell_asset = g.segment(off + a, a).cwiseProduct(d.y_asset);
  const Eigen::Index f = off + 4 * a;
  d.x_fwd = g.segment(f + 2 * k, k).unaryExpr(&flag);
  d.y_fwd = g.segment(f + 3 * k, k).unaryExpr(&flag);
  d.buy_fwd = g.segment(f, k).cwiseProduct(d.x_fwd);
  d.sell_fwd = g.segment(f + k, k).cwiseProduct(d.y_fwd);
  d.z = g.segment(f + 4 * k, c).unaryExpr(&flag);
  return d;
}

void
Encoding::encode_stage(const StageDecision& d, Eigen::VectorXd& g, Eigen::Index off) const
{
  const auto a = static_cast<Eigen::Index>(A_), k = static_cast<Eigen::Index>(K_);
  const auto c = static_cast<Eigen::Index>(C_);
  g.segment(off, a) = d.buy_asset;
  g.segment(off + a, a) = d.sell_asset;
  g.segment(off + 2 * a, a) = d.x_asset;
  g.segment(off + 3 * a, a) = d.y_asset;
  const Eigen::Index f = off + 4 * a;
  g.segment(f, k) = d.buy_fwd;
  g.segment(f + k, k) = d.sell_fwd;
  g.segment(f + 2 * k, k) = d.x_fwd;
  g.segment(f + 3 * k, k) = d.y_fwd;
  g.segment(f + 4 * k, c) = d.z;
}

Solution
Encoding::decode(const Eigen::VectorXd& genes) const
{
  if (static_cast<std::size_t>(genes.size()) != length())
    throw LengthMismatch("chromosome length does not match the encoding");
  Solution sol;
  sol.first = decode_stage(genes, 0);
  if (mode_ == RecourseMode::Full) {
    sol.recourse.reserve(scenarios_);
    for (std::size_t r = 0; r < scenarios_; ++r)
      sol.recourse.push_back(decode_stage(genes, static_cast<Eigen::Index>((r + 1) * stage_)));
  }
  return sol;
}

Eigen::VectorXd
Encoding::encode(const Solution& sol) const
{
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length()));
  encode_stage(sol.first, g, 0);
  if (mode_ == RecourseMode::Full) {
    for (std::size_t r = 0; r < scenarios_; ++r) {
      const auto off = static_cast<Eigen::Index>((r + 1) * stage_);
      if (r < sol.recourse.size())
        encode_stage(sol.recourse[r], g, off);
    }
  }
  return g;
}

void
Encoding::restore_budget(Eigen::VectorXd& g) const
{
  const auto a = static_cast<Eigen::Index>(A_);
  const auto k = static_cast<Eigen::Index>(K_);
  auto cash_at = [&](double s) {
    Eigen::VectorXd t = g.head(static_cast<Eigen::Index>(stage_));
    t.head(a) *= s;
    t.segment(4 * a, 2 * k) *= s;
    return evaluate_first_stage(*inst_, decode_stage(t, 0)).cash;
  };
  if (cash_at(1.0) >= 0.0)
    return;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cash_at(mid) >= 0.0 ? lo : hi) = mid;
  }
  g.head(a) *= lo;
  g.segment(4 * a, 2 * k) *= lo;
}

Eigen::VectorXd
Encoding::random_individual(Rng& rng) const
{
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(length()));
  // Cash is one more Dirichlet component, so the population spans the
  // whole allocation simplex.
  std::vector<double> w(A_ + 1);
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log(uniform_open(rng));
    total += x;
  }
  const double budget = 0.98 * inst_->initial_cash;
  const auto a = static_cast<Eigen::Index>(A_);
  for (Eigen::Index i = 0; i < a; ++i) {
    const double units = budget * w[static_cast<std::size_t>(i)] / total /
                         inst_->assets[static_cast<std::size_t>(i)].price;
    g(i) = std::min(units, upper_(i));
    g(2 * a + i) = units > 0.0 ? 1.0 : 0.0;
  }
  const auto k = static_cast<Eigen::Index>(K_);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double cap = inst_->overlay_limit * upper_(4 * a + j);
    g(4 * a + j) = cap * uniform01(rng);
    g(4 * a + k + j) = cap * uniform01(rng);
    g(4 * a + 2 * k + j) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    g(4 * a + 3 * k + j) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
  }
  const Eigen::Index zoff = 4 * a + 4 * k;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(C_); ++j)
    g(zoff + j) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
  return g;
}

std::vector<double>
rank_scale(const std::vector<double>& fitness)
{
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
  std::vector<double> scaled(fitness.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    scaled[order[r]] = 1.0 / std::sqrt(static_cast<double>(r + 1));
  return scaled;
}

std::vector<std::size_t>
select_stochastic_uniform(const std::vector<double>& scaled, std::size_t count, Rng& rng)
{
  if (scaled.empty() || count == 0)
    throw InvalidParameter("selection needs candidates and a positive count");
  const double total = std::accumulate(scaled.begin(), scaled.end(), 0.0);
  if (!(total > 0.0))
    throw InvalidParameter("scaled values must have a positive sum");
  const double step = total / static_cast<double>(count);
  double pointer = uniform01(rng) * step;
  std::vector<std::size_t> picks;
  picks.reserve(count);
  std::size_t i = 0;
  double edge = scaled[0];
  for (std::size_t c = 0; c < count; ++c) {
    while (pointer >= edge && i + 1 < scaled.size())
      edge += scaled[++i];
    picks.push_back(i);
    pointer += step;
  }
  return picks;
}

Eigen::VectorXd
crossover_arithmetic(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
  if (a.size() != b.size())
    throw LengthMismatch("parents differ in length");
  return 0.5 * (a + b);
}

Eigen::VectorXd
mutate_adaptive_feasible(const Eigen::VectorXd& individual,
                         double sigma,
                         const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper,
                         Rng& rng)
{
  const auto n = individual.size();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i) = standard_normal(rng);
  const double norm = d.norm();
  if (sigma == 0.0 || norm == 0.0)
    return individual;
  const Eigen::VectorXd range = upper - lower;
  Eigen::VectorXd out = individual + (sigma / norm) * d.cwiseProduct(range);
  return out.cwiseMax(lower).cwiseMin(upper);
}

double
adapt_sigma(double sigma, bool improved)
{
  return std::clamp(sigma * (improved ? 1.1 : 0.97), 1e-6, 1.0);
}

GAResult
run_ga(const Instance& inst, const ScenarioSet& scenarios, const GAConfig& config)
{
  config.validate();
  scenarios.validate();
  const Encoding enc(inst, scenarios.size(), config.recourse);
  const ScenarioPrices prices = scenario_prices(inst, scenarios);
  const std::size_t P = config.population;

  std::vector<Eigen::VectorXd> pop(P);
  std::vector<double> fit(P);
  std::size_t evaluations = 0;

  auto evaluate_range = [&](std::size_t from) {
    parallel_for(
      P - from,
      [&](std::size_t t) {
        const std::size_t i = from + t;
        fit[i] = evaluate(inst, enc.decode(pop[i]), scenarios, prices).fitness;
        if (!std::isfinite(fit[i]))
          fit[i] = std::numeric_limits<double>::max();
      },
      config.threads);
    evaluations += P - from;
  };

  for (std::size_t i = 0; i < P; ++i) {
    Rng rng(substream_seed(config.seed, 0, i));
    pop[i] = enc.random_individual(rng);
    enc.restore_budget(pop[i]);
  }
  evaluate_range(0);

  auto best_index = [&] {
    return static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  };
  std::size_t bi = best_index();
  Eigen::VectorXd best = pop[bi];
  double best_fit = fit[bi];
  double sigma = config.sigma0;

  GAResult result;
  result.trace.reserve(config.generations);
  const std::size_t n_parents = config.parent_count();
  const std::size_t n_cross = config.crossover_count();
  const std::size_t n_elite = config.elite_count();

  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; });

    Rng sel_rng(substream_seed(config.seed, gen, 0xffffffffULL));
    const auto parents = select_stochastic_uniform(rank_scale(fit), n_parents, sel_rng);

    std::vector<Eigen::VectorXd> next(P);
    std::vector<double> next_fit(P);
    for (std::size_t e = 0; e < n_elite; ++e) {
      next[e] = pop[order[e]];
      next_fit[e] = fit[order[e]];
    }
    for (std::size_t i = n_elite; i < P; ++i) {
      Rng rng(substream_seed(config.seed, gen, i));
      auto pick = [&] {
        return parents[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(parents.size()))];
      };
      if (i < n_elite + n_cross) {
        const std::size_t a = pick();
        std::size_t b = pick();
        for (int tries = 0; b == a && tries < 8; ++tries)
          b = pick();
        next[i] = crossover_arithmetic(pop[a], pop[b]);
      } else {
        next[i] = mutate_adaptive_feasible(pop[pick()], sigma, enc.lower(), enc.upper(), rng);
      }
      enc.restore_budget(next[i]);
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    evaluate_range(n_elite);

    bi = best_index();
    const bool improved = fit[bi] < best_fit;
    if (improved) {
      best_fit = fit[bi];
      best = pop[bi];
    }
    sigma = adapt_sigma(sigma, improved);

    double mean = 0.0;
    for (double f : fit)
      mean += f / static_cast<double>(P);
    result.trace.push_back({ gen, best_fit, mean });
  }

  result.genes = best;
  result.solution = enc.decode(best);
  result.evaluation = evaluate(inst, result.solution, scenarios, prices);
  result.evaluations = evaluations;
  return result;
}

std::string
trace_to_csv(const std::vector<TraceRow>& trace)
{
  std::string out = "generation,best_fitness,mean_fitness\n";
  for (const auto& t : trace)
    out += std::to_string(t.generation) + "," + format_number(t.best_fitness) + "," +
           format_number(t.mean_fitness) + "\n";
  return out;
}

} // namespace vinefx
