#include <doctest.h>

#include "fixtures.hpp"
#include "vinefx/errors.hpp"
#include "vinefx/rvine.hpp"

#include <cmath>
#include <set>

using namespace vinefx;

namespace {

Eigen::MatrixXd
column_sample(const RVineSpec& spec, std::size_t n, std::uint64_t seed)
{
  return sample(spec, n, seed, 1);
}

double
col_tau(const Eigen::MatrixXd& u, Eigen::Index a, Eigen::Index b)
{
  const Eigen::VectorXd x = u.col(a), y = u.col(b);
  return empirical_tau(std::span<const double>(x.data(), x.size()), std::span<const double>(y.data(), y.size()));
}

RVineSpec
fixed_three()
{
  RVineSpec s = make_dvine(3, make_bicop(CopulaFamily::Clayton, 1.5));
  s.set_pair(1, 0, make_bicop(CopulaFamily::Gumbel, 1.4));
  s.set_pair(2, 1, make_bicop(CopulaFamily::Frank, -3.0));
  s.validate();
  return s;
}

} // namespace

TEST_CASE("two-variable vine is the bivariate fit")
{
  Rng rng(3);
  const auto pairs = simulate(make_bicop(CopulaFamily::Gumbel, 2.0), 800, rng);
  Eigen::MatrixXd u(800, 2);
  std::vector<double> a, b;
  for (int i = 0; i < 800; ++i) {
    u(i, 0) = pairs[static_cast<std::size_t>(i)].first;
    u(i, 1) = pairs[static_cast<std::size_t>(i)].second;
    a.push_back(u(i, 0));
    b.push_back(u(i, 1));
  }
  const auto spec = select_and_fit(u, parametric_families());
  REQUIRE(spec.edge_count() == 1);
  const auto e = spec.trees()[0][0];
  const auto direct = e.first == 0 ? select_family(a, b, parametric_families())
                                   : select_family(b, a, parametric_families());
  CHECK(e.copula.family == direct.family);
  CHECK(e.copula.theta == doctest::Approx(direct.theta).epsilon(1e-9));
  const double p[2] = { 0.3, 0.6 };
  CHECK(log_density(spec, p) ==
        doctest::Approx(e.first == 0 ? vinefx::log_density(e.copula, 0.3, 0.6)
                                     : vinefx::log_density(e.copula, 0.6, 0.3)));
}

TEST_CASE("three-variable vine has two trees and three edges")
{
  const auto spec = fixed_three();
  const auto t = spec.trees();
  CHECK(t.size() == 2);
  CHECK(t[0].size() == 2);
  CHECK(t[1].size() == 1);
  CHECK(t[1][0].conditioning.size() == 1);
  CHECK(spec.edge_count() == 3);
}

TEST_CASE("log density matches the hand-expanded chain")
{
  const auto spec = fixed_three();
  const double pts[5][3] = {
    { 0.2, 0.3, 0.4 }, { 0.5, 0.5, 0.5 }, { 0.9, 0.1, 0.6 }, { 0.15, 0.85, 0.35 }, { 0.7, 0.65, 0.95 }
  };
  for (const auto& p : pts)
    CHECK(std::abs(log_density(spec, p) - testing::hand_chain_3(spec, p)) < 1e-10);
}

TEST_CASE("independence vine has zero log density")
{
  const auto spec = make_dvine(4);
  const double p[4] = { 0.1, 0.7, 0.3, 0.99 };
  CHECK(log_density(spec, p) == 0.0);
  const auto u = column_sample(spec, 4000, 5);
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index b = a + 1; b < 4; ++b)
      CHECK(std::abs(col_tau(u, a, b)) < 2.0 / std::sqrt(4000.0));
}

TEST_CASE("star structure is recovered")
{
  // variable 0 drives the others
  Rng rng(9);
  const int n = 1500;
  Eigen::MatrixXd u(n, 4);
  const auto c = make_bicop(CopulaFamily::Gaussian, 0.92);
  for (int i = 0; i < n; ++i) {
    const double v0 = uniform_open(rng);
    u(i, 0) = v0;
    for (int j = 1; j < 4; ++j)
      u(i, j) = inv_h_first(c, uniform_open(rng), v0);
  }
  REQUIRE(col_tau(u, 0, 1) > 0.6);
  const auto spec = select_and_fit(u, { CopulaFamily::Gaussian, CopulaFamily::Frank });
  const auto trees = spec.trees();
  for (const auto& e : trees[0])
    CHECK((e.first == 0 || e.second == 0));
}

TEST_CASE("sampling is deterministic and matches model tau")
{
  RVineSpec spec = make_dvine(2, make_bicop(CopulaFamily::Gaussian, 0.8));
  const auto a = sample(spec, 100000, 42);
  const auto b = sample(spec, 100000, 42);
  CHECK((a.array() == b.array()).all());
  CHECK(std::abs(col_tau(a, 0, 1) - model_tau(make_bicop(CopulaFamily::Gaussian, 0.8))) < 0.01);
  const auto c = sample(spec, 1000, 42, 1);
  CHECK((c.array() == a.topRows(1000).array()).all());
}

TEST_CASE("structure invariants and json round trip")
{
  Rng rng(13);
  Eigen::MatrixXd u(600, 5);
  for (int i = 0; i < 600; ++i) {
    const double f = uniform_open(rng);
    for (int j = 0; j < 5; ++j)
      u(i, j) = 0.5 * f + 0.5 * uniform_open(rng);
  }
  const auto spec = select_and_fit(u, parametric_families());
  CHECK(spec.is_valid());
  std::set<int> diag;
  for (std::size_t i = 0; i < 5; ++i)
    diag.insert(spec.structure(i, i));
  CHECK(diag == std::set<int>{ 1, 2, 3, 4, 5 });
  const auto t = spec.trees();
  for (std::size_t k = 0; k < t.size(); ++k)
    CHECK(t[k].size() == 4 - k);
  const auto back = rvine_from_json(to_json(spec));
  CHECK(back == spec);
}

TEST_CASE("malformed structure is rejected")
{
  RVineSpec s = make_dvine(3);
  s.set_structure(0, 0, 2);
  CHECK_FALSE(s.is_valid());
  CHECK_THROWS_AS(s.validate(), InvalidParameter);
}
