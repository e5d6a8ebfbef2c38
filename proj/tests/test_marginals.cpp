#include <doctest.h>

#include "vinefx/errors.hpp"
#include "vinefx/marginals.hpp"
#include "vinefx/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace vinefx;

namespace {

std::vector<double>
normal_draws(std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x)
    v = nd(rng);
  return x;
}

// Rule of thumb recomputed from scratch: 2.345 * min(sd, IQR/1.349) * m^-1/5
double
oracle_bandwidth(std::vector<double> x)
{
  const double m = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x)
    mean += v / m;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (m - 1.0));
  std::sort(x.begin(), x.end());
  auto q = [&](double p) {
    const double h = (m - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - std::floor(h)) * (x[hi] - x[lo]);
  };
  return 2.345 * std::min(sd, (q(0.75) - q(0.25)) / 1.349) * std::pow(m, -0.2);
}

} // namespace

TEST_CASE("bandwidth matches the rule of thumb")
{
  const auto x = normal_draws(120, 11);
  const auto model = fit_kde(x);
  CHECK(model.bandwidth() == doctest::Approx(oracle_bandwidth(x)).epsilon(1e-12));
  CHECK(model.bandwidth() > 0.0);
}

TEST_CASE("grid and cdf table invariants")
{
  const auto x = normal_draws(200, 3);
  const auto model = fit_kde(x);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const double h = model.bandwidth();
  REQUIRE(model.grid().size() == MarginalModel::grid_size);
  CHECK(model.grid().front() == doctest::Approx(*mn - 3 * h));
  CHECK(model.grid().back() == doctest::Approx(*mx + 3 * h));
  const auto& c = model.cdf_table();
  CHECK(std::is_sorted(c.begin(), c.end()));
  CHECK(std::abs(c.front()) < 1e-9);
  CHECK(std::abs(c.back() - 1.0) < 1e-9);
}

TEST_CASE("constant sample is degenerate")
{
  std::vector<double> x(30, 0.01);
  CHECK_THROWS_AS(fit_kde(x), DegenerateSample);
}

TEST_CASE("too few samples are rejected")
{
  std::vector<double> x{ 1, 2, 3 };
  CHECK_THROWS(fit_kde(x));
}

TEST_CASE("symmetric sample gives a symmetric density")
{
  auto x = normal_draws(60, 5);
  const auto n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    x.push_back(-x[i]);
  const auto model = fit_kde(x);
  const auto& g = model.grid();
  const auto& f = model.density();
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(std::abs(f[i] - f[g.size() - 1 - i]) < 1e-9);
  CHECK(model.cdf(0.0) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(model.inv_cdf(0.5)) < 2 * model.grid_step());
}

TEST_CASE("cdf boundaries and ranks")
{
  const auto x = normal_draws(150, 8);
  const auto model = fit_kde(x);
  CHECK(model.cdf(model.grid().front() - 1.0) == 0.0);
  CHECK(model.inv_cdf(0.0) == doctest::Approx(model.grid().front()));

  // smoothed cdf stays near the empirical cdf at the sample points
  auto sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    worst = std::max(worst, std::abs(model.cdf(sorted[i]) - (i + 0.5) / m));
  CHECK(worst < 0.1);
}

TEST_CASE("inverse cdf round trip")
{
  const auto x = normal_draws(150, 9);
  const auto model = fit_kde(x);
  for (int k = 0; k < 100; ++k) {
    const double v = -2.0 + 4.0 * k / 99.0;
    CHECK(std::abs(model.inv_cdf(model.cdf(v)) - v) < model.grid_step());
  }
}

TEST_CASE("pit of own fit is near uniform")
{
  const auto x = normal_draws(120, 21);
  Eigen::MatrixXd v(120, 2);
  for (int i = 0; i < 120; ++i)
    v(i, 0) = v(i, 1) = x[static_cast<std::size_t>(i)];
  const auto u = pit_transform({ "a.USD", "b.USD" }, v);
  CHECK(u.u.col(0).mean() == doctest::Approx(0.5).epsilon(0.1));
  CHECK((u.u.col(0) - u.u.col(1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(u.u.col(0).mean() - 0.5) < 0.05);
}

TEST_CASE("empty panel")
{
  CHECK_THROWS_AS(pit_transform({}, Eigen::MatrixXd(0, 0)), EmptyPanel);
}
