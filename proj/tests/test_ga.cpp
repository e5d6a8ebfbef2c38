#include <doctest.h>

#include "fixtures.hpp"
#include "vinefx/errors.hpp"
#include "vinefx/ga.hpp"

#include <cmath>

using namespace vinefx;

namespace {

bool
same_stage(const StageDecision& a, const StageDecision& b)
{
  return a.buy_asset == b.buy_asset && a.sell_asset == b.sell_asset && a.x_asset == b.x_asset &&
         a.y_asset == b.y_asset && a.buy_fwd == b.buy_fwd && a.sell_fwd == b.sell_fwd && a.x_fwd == b.x_fwd &&
         a.y_fwd == b.y_fwd && a.z == b.z;
}

std::vector<std::size_t>
counts(const std::vector<std::size_t>& picks, std::size_t n)
{
  std::vector<std::size_t> c(n, 0);
  for (auto i : picks)
    ++c[i];
  return c;
}

} // namespace

TEST_CASE("config validation")
{
  GAConfig c;
  CHECK(c.elite_count() == 25);
  c.population = 10;
  CHECK(c.elite_count() == 1);
  c.validate();
  c.elite = 10;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c.elite = 2;
  CHECK(c.elite_count() + c.crossover_count() + c.mutant_count() == c.population);
  c.crossover_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  CHECK(recourse_mode_from_name(recourse_mode_name(RecourseMode::NoRecourseTrades)) ==
        RecourseMode::NoRecourseTrades);
}

TEST_CASE("rank scaling")
{
  const auto s = rank_scale({ 3.0, 1.0, 2.0, 1.0 });
  CHECK(s[1] == 1.0);
  CHECK(s[3] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(s[2] == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(s[0] == doctest::Approx(0.5));
}

TEST_CASE("stochastic uniform selection")
{
  Rng rng(1);
  const auto eq = counts(select_stochastic_uniform(std::vector<double>(7, 1.0), 20, rng), 7);
  CHECK(*std::max_element(eq.begin(), eq.end()) - *std::min_element(eq.begin(), eq.end()) <= 1);

  const auto one = counts(select_stochastic_uniform({ 0.0, 0.0, 2.5, 0.0 }, 9, rng), 4);
  CHECK(one[2] == 9);

  const std::vector<double> w{ 0.5, 0.25, 0.15, 0.1 };
  std::vector<double> freq(4, 0.0);
  const int reps = 10000;
  for (int r = 0; r < reps; ++r)
    for (auto i : select_stochastic_uniform(w, 3, rng))
      freq[i] += 1.0 / (3.0 * reps);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(freq[i] - w[i]) < 0.02);
}

TEST_CASE("arithmetic crossover")
{
  const Eigen::Vector3d a(0.2, 1.0, 5.0), b(0.6, 3.0, 5.0);
  CHECK(crossover_arithmetic(a, a) == a);
  CHECK(crossover_arithmetic(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 2.0))(0) == 1.0);
  const Eigen::VectorXd c = crossover_arithmetic(a, b);
  CHECK(((c.array() >= a.cwiseMin(b).array()) && (c.array() <= a.cwiseMax(b).array())).all());
  CHECK_THROWS_AS(crossover_arithmetic(a, Eigen::VectorXd::Zero(2)), LengthMismatch);
}

TEST_CASE("adaptive feasible mutation")
{
  Rng rng(3);
  const Eigen::VectorXd lo = Eigen::VectorXd::Zero(6), hi = Eigen::VectorXd::Constant(6, 4.0);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(6, 2.0);
  CHECK(mutate_adaptive_feasible(x, 0.0, lo, hi, rng) == x);

  double mean = 0.0;
  for (int r = 0; r < 500; ++r) {
    const Eigen::VectorXd y = mutate_adaptive_feasible(x, 0.05, lo, hi, rng);
    mean += ((y - x).array() / (hi - lo).array()).matrix().norm() / 500.0;
  }
  CHECK(std::abs(mean - 0.05) < 0.005);

  for (int r = 0; r < 200; ++r) {
    const Eigen::VectorXd y = mutate_adaptive_feasible(Eigen::VectorXd::Constant(6, 3.9), 0.8, lo, hi, rng);
    CHECK(((y.array() >= lo.array()) && (y.array() <= hi.array())).all());
  }
  CHECK(adapt_sigma(0.1, true) == doctest::Approx(0.11));
  CHECK(adapt_sigma(0.1, false) == doctest::Approx(0.097));
  CHECK(adapt_sigma(1.0, true) == 1.0);
}

TEST_CASE("decode and encode agree")
{
  const auto p = testing::tiny_problem(2);
  for (auto mode : { RecourseMode::Full, RecourseMode::NoRecourseTrades }) {
    const Encoding enc(p.inst, p.scenarios.size(), mode);
    Rng rng(4);
    for (int r = 0; r < 20; ++r) {
      Eigen::VectorXd g(enc.length());
      for (Eigen::Index i = 0; i < g.size(); ++i)
        g(i) = enc.lower()(i) + uniform01(rng) * (enc.upper()(i) - enc.lower()(i));
      const auto s = enc.decode(g);
      const auto back = enc.decode(enc.encode(s));
      CHECK(same_stage(s.first, back.first));
      CHECK(s.recourse.size() == back.recourse.size());
      // a trade whose flag is off decodes to zero
      for (Eigen::Index i = 0; i < s.first.x_asset.size(); ++i)
        if (s.first.x_asset(i) == 0.0)
          CHECK(s.first.buy_asset(i) == 0.0);
    }
  }
}

TEST_CASE("budget restoration")
{
  const auto p = testing::tiny_problem(3);
  const Encoding enc(p.inst, p.scenarios.size(), RecourseMode::NoRecourseTrades);
  Rng rng(6);
  const double w0 = p.inst.wealth0();
  for (int r = 0; r < 30; ++r) {
    Eigen::VectorXd g = enc.random_individual(rng);
    g.head(2).array() += 3.0 * w0 * uniform01(rng);
    g = g.cwiseMin(enc.upper());
    enc.restore_budget(g);
    CHECK(evaluate_first_stage(p.inst, enc.decode(g).first).cash >= -1e-9 * w0);
    const Eigen::VectorXd kept = g;
    enc.restore_budget(g);
    CHECK(g == kept);
  }
}

TEST_CASE("ga run properties")
{
  const auto p = testing::tiny_problem(4);
  GAConfig c;
  c.population = 40;
  c.generations = 30;
  c.seed = 9;
  c.recourse = RecourseMode::NoRecourseTrades;
  c.threads = 1;
  const auto a = run_ga(p.inst, p.scenarios, c);
  REQUIRE(a.trace.size() == 30);
  for (std::size_t g = 1; g < a.trace.size(); ++g)
    CHECK(a.trace[g].best_fitness <= a.trace[g - 1].best_fitness);
  CHECK(a.evaluation.fitness == a.trace.back().best_fitness);
  CHECK(a.evaluations == 40 + 30 * (40 - c.elite_count()));

  c.threads = 3;
  const auto b = run_ga(p.inst, p.scenarios, c);
  CHECK(a.genes == b.genes);
  CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
}

TEST_CASE("trivial instance converges")
{
  // one asset that gains 5% in every scenario: invest everything
  nlohmann::json j = { { "currencies", { "USD" } },
                       { "assets", { { { "name", "eq.USD" } } } },
                       { "params", { { "mu", 0.0 }, { "c_min", 0.0 } } } };
  const auto inst = instance_from_json(j);
  Eigen::MatrixXd v(10, 2);
  v.col(0).setConstant(0.05);
  v.col(1).setZero();
  const auto scen = make_scenarios({ "eq.USD", "USD" }, v);
  GAConfig c;
  c.population = 50;
  c.generations = 50;
  c.recourse = RecourseMode::NoRecourseTrades;
  const auto r = run_ga(inst, scen, c);
  CHECK(r.evaluation.feasible());
  CHECK(r.evaluation.risk.cvar < -0.045);
}
