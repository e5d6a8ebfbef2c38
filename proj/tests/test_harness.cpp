#include <doctest.h>

#include "fixtures.hpp"
#include "vinefx/errors.hpp"
#include "vinefx/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace vinefx;
namespace fs = std::filesystem;

namespace {

std::string
panel_text(int periods, const std::vector<double>& eq, double rate = 0.0)
{
  std::string s = "period,eq.USD,bond.USD,rate.USD\n";
  for (int t = 0; t < periods; ++t)
    s += std::to_string(t + 1) + "," + std::to_string(eq[static_cast<std::size_t>(t) % eq.size()]) + ",0.001," +
         std::to_string(rate) + "\n";
  return s;
}

Allocation
single(const std::string& asset, double w)
{
  Allocation a;
  a.assets = { asset };
  a.asset_weights = { w };
  a.asset_currencies = { "USD" };
  return a;
}

fs::path
temp_file(const std::string& name, const std::string& text)
{
  const auto p = fs::temp_directory_path() / ("vinefx_test_" + name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

} // namespace

TEST_CASE("panel loading")
{
  // the base currency enters as an implicit zero series
  const auto three = panel_from_csv("period,eq.USD,rate.USD\n1,0.01,0.002\n2,0.03,0.002\n", "USD");
  CHECK(three.cols() == 2);
  CHECK(three.find("USD").has_value());

  const auto p = panel_from_csv(panel_text(5, { 0.01, -0.02 }), "USD");
  CHECK(p.cols() == 3);
  CHECK(p.rows() == 5);
  CHECK(p.values(1, *p.find("eq.USD")) == doctest::Approx(-0.02));

  const std::string jpy = "period,eq.JPY,rate.USD\n1,0.01,0.0\n";
  try {
    panel_from_csv(jpy, "USD");
    FAIL("expected MissingRateSeries");
  } catch (const MissingRateSeries& e) {
    CHECK(e.currency() == "JPY");
  }

  std::string blank = panel_text(8, { 0.01 });
  // line 7 is the sixth data row
  std::size_t at = 0;
  for (int n = 0; n < 6; ++n)
    at = blank.find('\n', at) + 1;
  blank.replace(blank.find(',', at) + 1, 8, "");
  try {
    panel_from_csv(blank, "USD");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
  CHECK_THROWS_AS(panel_from_csv("eq.USD,rate.USD\n0.1,0\n", "USD"), ParseError);
  CHECK_THROWS_AS(load_panel("/nonexistent/panel.csv", "USD"), std::exception);
}

TEST_CASE("config parsing")
{
  const auto c = Config::from_json(nlohmann::json::object());
  CHECK(c.mu_grid.size() == 22);
  CHECK(c.mu_grid.front() == doctest::Approx(0.0055));
  CHECK(c.mu_grid.back() == doctest::Approx(0.016));

  try {
    Config::from_json({ { "populaton", 10 } });
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "populaton");
  }
  try {
    Config::from_json({ { "seed", "one" } });
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "seed");
  }
  CHECK_THROWS_AS(Config::from_json({ { "method", "copula" } }), ConfigError);

  const auto d = Config::from_json({ { "population", 30 }, { "mu", 0.004 }, { "margin", 0.2 } });
  CHECK(d.ga.population == 30);
  const auto inst = apply_config(testing::tiny_problem(1).inst, d);
  CHECK(inst.mu == 0.004);
  CHECK(inst.margin == 0.2);
  CHECK(Config::from_json(d.to_json()).to_json() == d.to_json());
}

TEST_CASE("backtest")
{
  // all cash stays at 100
  const auto flat = backtest(single("eq.USD", 0.0), panel_from_csv(panel_text(12, { 0.03, -0.05 }), "USD"));
  for (double w : flat.wealth)
    CHECK(w == 100.0);
  CHECK_FALSE(flat.ratio.has_value());

  const auto updown = backtest(single("eq.USD", 1.0), panel_from_csv(panel_text(2, { 0.1, -0.1 }), "USD"));
  CHECK(updown.final_wealth == doctest::Approx(99.0).epsilon(1e-14));

  std::vector<double> r(41);
  std::mt19937_64 g(3);
  std::normal_distribution<double> nd(0.005, 0.04);
  for (auto& x : r)
    x = nd(g);
  const auto rep = backtest(single("eq.USD", 0.7), panel_from_csv(panel_text(41, r, 0.002), "USD"));
  REQUIRE(rep.wealth.size() == 41);
  double logsum = 0.0;
  for (double x : rep.returns)
    logsum += std::log1p(x);
  CHECK(std::abs(std::log(rep.final_wealth / 100.0) - logsum) < 1e-12);
  CHECK(rep.ratio.has_value());
  CHECK_THROWS_AS(backtest(single("eq.GBP", 1.0), panel_from_csv(panel_text(3, r), "USD")), MissingColumn);
}

TEST_CASE("empirical quantile")
{
  CHECK(empirical_quantile({ 3, 1, 2, 4 }, 0.5) == 2.5);
  CHECK(empirical_quantile({ 1, 2, 3, 4, 5 }, 0.05) == doctest::Approx(1.2));
  CHECK(empirical_quantile({ 7 }, 0.3) == 7.0);
}

TEST_CASE("frontier")
{
  const auto p = testing::tiny_problem(5);
  GAConfig c;
  c.population = 30;
  c.generations = 15;
  c.recourse = RecourseMode::NoRecourseTrades;
  const auto a = frontier(p.inst, p.scenarios, { 0.002, 0.004, 0.5 }, c);
  const auto b = frontier(p.inst, p.scenarios, { 0.5, 0.004, 0.002 }, c);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].mu == b[2 - i].mu);
    CHECK(a[i].cvar == b[2 - i].cvar);
    CHECK(a[i].status == b[2 - i].status);
  }
  CHECK(a[2].status == PointStatus::TargetUnreachable);
  for (const auto& pt : a)
    if (pt.status == PointStatus::Solved)
      CHECK(pt.achieved_return >= pt.mu - 1e-9);
  const auto csv = frontier_to_csv(a);
  CHECK(csv.rfind("mu,achieved_return,cvar,equity_share,fx_exposure,total_overlay,status\n", 0) == 0);
  CHECK(csv.find("target-unreachable") != std::string::npos);
}

TEST_CASE("allocation weights")
{
  const auto h = testing::hand_case();
  const auto al = allocation_from(h.inst, Solution{ h.d, {} });
  CHECK(al.asset_weights[0] == doctest::Approx(0.4));
  CHECK(al.asset_weights[1] == doctest::Approx(0.3));
  CHECK(al.forward_weights[0] == doctest::Approx(0.2));
}

TEST_CASE("manifest")
{
  const auto in = temp_file("in.txt", "abc");
  CHECK(file_digest(in) == "e71fa2190541574b");
  const Config cfg;
  const nlohmann::json inputs = { { "panel", in.string() } };
  const auto m1 = make_manifest("gen-scenarios", { "--n", "5" }, cfg, inputs, { in.string() });
  const auto m2 = make_manifest("gen-scenarios", { "--n", "5" }, cfg, inputs, { in.string() });
  CHECK(m1.dump() == m2.dump());
  CHECK(m1.at("command") == "gen-scenarios");
  CHECK(m1.dump().find("time") == std::string::npos);
  fs::remove(in);
}
