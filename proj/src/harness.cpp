#include "vinefx/harness.hpp"

#include "vinefx/errors.hpp"
#include "vinefx/io.hpp"
#include "vinefx/parallel.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace vinefx {

using nlohmann::json;

namespace {

const std::set<std::string> kMajor{ "USD", "EUR", "GBP", "JPY" };

const std::set<std::string> kModelNumbers{ "mu",          "beta",        "margin",      "overlay_limit",
                                           "initial_cash", "initial_wealth", "min_holding", "max_holding",
                                           "min_trade",   "fixed_cost",  "variable_cost_major",
                                           "variable_cost_other" };
const std::set<std::string> kModelCounts{ "max_currencies", "max_forwards" };
const std::set<std::string> kModelBounds{ "c_min", "c_max" };

std::uint64_t
as_count(const json& v, const std::string& key)
{
  if (v.is_number_unsigned())
    return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError(key, "expected a nonnegative integer");
}

double
as_number(const json& v, const std::string& key)
{
  if (!v.is_number())
    throw ConfigError(key, "expected a number");
  return v.get<double>();
}

std::string
as_string(const json& v, const std::string& key)
{
  if (!v.is_string())
    throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

template<typename T, typename Fn>
std::vector<T>
as_list(const json& v, const std::string& key, Fn&& item)
{
  if (!v.is_array())
    throw ConfigError(key, "expected a list");
  std::vector<T> out;
  for (const auto& x : v)
    out.push_back(static_cast<T>(item(x, key)));
  return out;
}

std::string
lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool
is_equity(const std::string& name)
{
  return lower(name.substr(0, name.rfind('.'))).rfind("eq", 0) == 0;
}

std::uint64_t
fnv1a(const std::string& s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

ReturnPanel
panel_from_csv(const std::string& text, const std::string& base_currency)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(1, "empty panel file");
  auto header = split_csv_line(line);
  if (header.empty() || header.front() != "period")
    throw ParseError(1, "first column must be 'period'");

  std::vector<std::string> names;
  std::vector<std::size_t> series_cols, rate_cols;
  std::vector<std::string> rate_ccy;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("rate.", 0) == 0) {
      const auto ccy = h.substr(5);
      if (!is_currency_code(ccy))
        throw ParseError(1, "bad rate column '" + h + "'");
      rate_cols.push_back(c);
      rate_ccy.push_back(ccy);
    } else {
      if (!classify_series(h))
        throw ParseError(1, "cannot infer the currency of column '" + h + "'");
      names.push_back(h);
      series_cols.push_back(c);
    }
  }
  if (names.empty())
    throw EmptyPanel();

  std::vector<std::string> periods;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
    if (cells[0].empty())
      throw ParseError(lineno, "blank period label");
    periods.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(parse_cell(cells[c], lineno, header[c]));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw EmptyPanel();

  const auto T = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd values(T, static_cast<Eigen::Index>(names.size()));
  std::map<std::string, Eigen::VectorXd> rates;
  for (const auto& ccy : rate_ccy)
    rates[ccy] = Eigen::VectorXd(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& row = rows[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < series_cols.size(); ++k)
      values(t, static_cast<Eigen::Index>(k)) = row[series_cols[k] - 1];
    for (std::size_t k = 0; k < rate_cols.size(); ++k)
      rates[rate_ccy[k]](t) = row[rate_cols[k] - 1];
  }
  auto panel = make_panel(std::move(periods), names, std::move(values), std::move(rates), base_currency);
  for (const auto& ccy : panel.currencies())
    if (!panel.rates.count(ccy))
      throw MissingRateSeries(ccy);
  panel.validate();
  return panel;
}

ReturnPanel
load_panel(const std::filesystem::path& path, const std::string& base_currency)
{
  return panel_from_csv(read_text(path), base_currency);
}

std::vector<double>
default_mu_grid()
{
  std::vector<double> g;
  for (int k = 0; k < 22; ++k)
    g.push_back((55.0 + 5.0 * k) / 10000.0);
  return g;
}

Config
Config::from_json(const json& j)
{
  if (!j.is_object())
    throw ConfigError("<root>", "config must be a JSON object");
  Config c;
  c.mu_grid = default_mu_grid();
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "seed")
        c.seed = as_count(v, key);
      else if (key == "method")
        c.method = method_from_name(as_string(v, key));
      else if (key == "n_scenarios")
        c.n_scenarios = as_count(v, key);
      else if (key == "base_currency")
        c.base_currency = as_string(v, key);
      else if (key == "population")
        c.ga.population = as_count(v, key);
      else if (key == "generations")
        c.ga.generations = as_count(v, key);
      else if (key == "selection_fraction")
        c.ga.selection_fraction = as_number(v, key);
      else if (key == "crossover_rate")
        c.ga.crossover_rate = as_number(v, key);
      else if (key == "elite")
        c.ga.elite = as_count(v, key);
      else if (key == "sigma0")
        c.ga.sigma0 = as_number(v, key);
      else if (key == "recourse_mode")
        c.ga.recourse = recourse_mode_from_name(as_string(v, key));
      else if (key == "threads")
        c.ga.threads = as_count(v, key);
      else if (key == "mu_grid")
        c.mu_grid = as_list<double>(v, key, as_number);
      else if (key == "stability_sizes")
        c.stability_sizes = as_list<std::size_t>(v, key, as_count);
      else if (key == "stability_seeds")
        c.stability_seeds = as_list<std::uint64_t>(v, key, as_count);
      else if (key == "stability_targets")
        c.stability_targets = as_list<double>(v, key, as_number);
      else if (kModelNumbers.count(key))
        c.model[key] = as_number(v, key);
      else if (kModelCounts.count(key))
        c.model[key] = as_count(v, key);
      else if (kModelBounds.count(key)) {
        if (v.is_object()) {
          for (const auto& [ccy, x] : v.items())
            as_number(x, key + "." + ccy);
        } else {
          as_number(v, key);
        }
        c.model[key] = v;
      } else
        throw ConfigError(key, "unknown key");
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(key, e.what());
    }
  }
  if (c.mu_grid.empty())
    throw ConfigError("mu_grid", "must not be empty");
  if (c.n_scenarios < 1)
    throw ConfigError("n_scenarios", "must be at least 1");
  try {
    c.ga.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("ga", e.what());
  }
  c.ga.seed = c.seed;
  return c;
}

json
Config::to_json() const
{
  json j = model;
  j["seed"] = seed;
  j["method"] = std::string(method_name(method));
  j["n_scenarios"] = n_scenarios;
  j["base_currency"] = base_currency;
  j["population"] = ga.population;
  j["generations"] = ga.generations;
  j["selection_fraction"] = ga.selection_fraction;
  j["crossover_rate"] = ga.crossover_rate;
  j["elite"] = ga.elite;
  j["sigma0"] = ga.sigma0;
  j["recourse_mode"] = std::string(recourse_mode_name(ga.recourse));
  j["threads"] = ga.threads;
  j["mu_grid"] = mu_grid;
  j["stability_sizes"] = stability_sizes;
  j["stability_seeds"] = stability_seeds;
  j["stability_targets"] = stability_targets;
  return j;
}

Config
read_config(const std::filesystem::path& path)
{
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return Config::from_json(j);
}

Instance
apply_config(const Instance& base, const Config& cfg)
{
  Instance inst = base;
  const json& m = cfg.model;
  auto num = [&](const char* key, double& field) {
    if (m.contains(key))
      field = m.at(key).get<double>();
  };
  num("mu", inst.mu);
  num("beta", inst.beta);
  num("margin", inst.margin);
  num("overlay_limit", inst.overlay_limit);
  num("initial_cash", inst.initial_cash);
  num("initial_wealth", inst.initial_wealth);
  if (m.contains("max_currencies"))
    inst.max_currencies = m.at("max_currencies").get<std::size_t>();
  if (m.contains("max_forwards"))
    inst.max_forwards = m.at("max_forwards").get<std::size_t>();
  for (auto& a : inst.assets) {
    num("min_holding", a.min_holding);
    num("max_holding", a.max_holding);
    num("min_trade", a.min_trade);
  }
  for (auto& g : inst.forwards)
    num("min_trade", g.min_trade);

  auto set_costs = [&](Costs& c, bool major) {
    if (m.contains("fixed_cost"))
      c.fixed_buy = c.fixed_sell = m.at("fixed_cost").get<double>();
    const char* vk = major ? "variable_cost_major" : "variable_cost_other";
    if (m.contains(vk))
      c.var_buy = c.var_sell = m.at(vk).get<double>();
  };
  for (auto& a : inst.assets)
    set_costs(a.costs, kMajor.count(a.currency) > 0);
  for (auto& g : inst.forwards)
    set_costs(g.costs, kMajor.count(g.long_currency) && kMajor.count(g.short_currency));

  for (const char* key : { "c_min", "c_max" }) {
    if (!m.contains(key))
      continue;
    auto& target = std::string(key) == "c_min" ? inst.c_min : inst.c_max;
    const auto& v = m.at(key);
    if (v.is_number()) {
      std::fill(target.begin(), target.end(), v.get<double>());
    } else {
      for (const auto& [ccy, x] : v.items()) {
        const auto it = std::find(inst.currencies.begin(), inst.currencies.end(), ccy);
        if (it == inst.currencies.end())
          throw ConfigError(std::string(key) + "." + ccy, "unknown currency");
        target[static_cast<std::size_t>(it - inst.currencies.begin())] = x.get<double>();
      }
    }
  }
  try {
    inst.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("model", e.what());
  }
  return inst;
}

std::string_view
status_name(PointStatus s)
{
  switch (s) {
    case PointStatus::Solved:
      return "solved";
    case PointStatus::TargetUnreachable:
      return "target-unreachable";
    default:
      return "infeasible";
  }
}

std::uint64_t
point_seed(std::uint64_t seed, double mu)
{
  return substream_seed(seed, std::bit_cast<std::uint64_t>(mu));
}

std::vector<FrontierPoint>
frontier(const Instance& instance,
         const ScenarioSet& scenarios,
         const std::vector<double>& mu_grid,
         const GAConfig& config)
{
  if (mu_grid.empty())
    throw InvalidParameter("frontier needs at least one target");
  std::vector<FrontierPoint> points(mu_grid.size());
  const double w0 = instance.wealth0();
  parallel_for(
    mu_grid.size(),
    [&](std::size_t p) {
      auto& pt = points[p];
      pt.mu = mu_grid[p];
      try {
        Instance inst = instance;
        inst.mu = pt.mu;
        GAConfig cfg = config;
        cfg.seed = point_seed(config.seed, pt.mu);
        cfg.threads = 1;
        const auto res = run_ga(inst, scenarios, cfg);
        const auto& ev = res.evaluation;
        pt.solution = res.solution;
        pt.achieved_return = ev.expected_return;
        pt.cvar = ev.risk.cvar;
        for (std::size_t i = 0; i < inst.assets.size(); ++i)
          if (is_equity(inst.assets[i].name))
            pt.equity_share += ev.first.units(static_cast<Eigen::Index>(i)) * inst.assets[i].price / w0;
        for (Eigen::Index j = 1; j < ev.first.exposure.size(); ++j)
          pt.fx_exposure += ev.first.exposure(j) / w0;
        pt.total_overlay = ev.first.total_overlay / w0;
        if (ev.feasible() && ev.expected_return >= pt.mu - 1e-9)
          pt.status = PointStatus::Solved;
        else if (ev.target_residual > 0.0)
          pt.status = PointStatus::TargetUnreachable;
        else
          pt.status = PointStatus::Infeasible;
      } catch (const std::exception& e) {
        pt.status = PointStatus::Infeasible;
        pt.message = e.what();
      }
    },
    config.threads);
  return points;
}

std::string
frontier_to_csv(const std::vector<FrontierPoint>& points)
{
  std::string out = "mu,achieved_return,cvar,equity_share,fx_exposure,total_overlay,status\n";
  for (const auto& p : points)
    out += format_number(p.mu) + "," + format_number(p.achieved_return) + "," + format_number(p.cvar) + "," +
           format_number(p.equity_share) + "," + format_number(p.fx_exposure) + "," +
           format_number(p.total_overlay) + "," + std::string(status_name(p.status)) + "\n";
  return out;
}

Allocation
allocation_from(const Instance& inst, const Solution& sol)
{
  const auto fs = evaluate_first_stage(inst, sol.first);
  const double w0 = inst.wealth0();
  Allocation a;
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    a.assets.push_back(inst.assets[i].name);
    a.asset_currencies.push_back(inst.assets[i].currency);
    a.asset_weights.push_back(fs.units(static_cast<Eigen::Index>(i)) * inst.assets[i].price / w0);
  }
  for (std::size_t k = 0; k < inst.forwards.size(); ++k) {
    a.forwards.emplace_back(inst.forwards[k].long_currency, inst.forwards[k].short_currency);
    a.forward_weights.push_back(fs.fwd_value(static_cast<Eigen::Index>(k)) / w0);
  }
  return a;
}

double
empirical_quantile(std::vector<double> x, double q)
{
  if (x.empty())
    throw EmptyScenarios();
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

BacktestReport
backtest(const Allocation& alloc, const ReturnPanel& panel)
{
  const ReturnPanel adj = adjust_returns(panel);
  auto column = [&](const std::string& name) -> Eigen::VectorXd {
    const auto j = adj.find(name);
    if (!j)
      throw MissingColumn(name);
    return adj.values.col(static_cast<Eigen::Index>(*j));
  };
  auto currency = [&](const std::string& ccy) -> Eigen::VectorXd {
    if (ccy == adj.base_currency && !adj.find(ccy))
      return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(adj.rows()));
    return column(ccy);
  };

  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(adj.rows()));
  for (std::size_t i = 0; i < alloc.assets.size(); ++i) {
    if (alloc.asset_weights[i] == 0.0)
      continue;
    r += alloc.asset_weights[i] * (column(alloc.assets[i]) + currency(alloc.asset_currencies[i]));
  }
  for (std::size_t k = 0; k < alloc.forwards.size(); ++k) {
    if (alloc.forward_weights[k] == 0.0)
      continue;
    r += alloc.forward_weights[k] * (currency(alloc.forwards[k].first) - currency(alloc.forwards[k].second));
  }

  BacktestReport rep;
  rep.periods = panel.periods;
  double w = 100.0;
  for (Eigen::Index t = 0; t < r.size(); ++t) {
    w *= 1.0 + r(t);
    rep.returns.push_back(r(t));
    rep.wealth.push_back(w);
  }
  rep.final_wealth = w;
  double sum = 0.0;
  for (double x : rep.returns)
    sum += x;
  rep.mean_return = rep.returns.empty() ? 0.0 : sum / static_cast<double>(rep.returns.size());
  if (!rep.returns.empty()) {
    const double q = empirical_quantile(rep.returns, 0.05);
    double tail = 0.0;
    std::size_t n = 0;
    for (double x : rep.returns)
      if (x < q) {
        tail += x;
        ++n;
      }
    rep.cvar = n ? -tail / static_cast<double>(n) : 0.0;
  }
  if (rep.cvar != 0.0)
    rep.ratio = rep.mean_return / rep.cvar;
  return rep;
}

std::string
backtest_to_csv(const BacktestReport& r)
{
  std::string out = "period,wealth,return\n";
  for (std::size_t t = 0; t < r.returns.size(); ++t) {
    const std::string label = t < r.periods.size() ? r.periods[t] : std::to_string(t + 1);
    out += label + "," + format_number(r.wealth[t]) + "," + format_number(r.returns[t]) + "\n";
  }
  return out;
}

json
to_json(const BacktestReport& r)
{
  return { { "periods", r.returns.size() },
           { "final_wealth", r.final_wealth },
           { "mean_return", r.mean_return },
           { "historical_cvar", r.cvar },
           { "return_to_cvar", r.ratio ? json(*r.ratio) : json(nullptr) } };
}

std::string
stability_to_csv(const std::vector<StabilityRow>& rows)
{
  std::string out = "size,average,std,range,min,max,seed_std,solved,failures\n";
  for (const auto& r : rows)
    out += std::to_string(r.size) + "," + format_number(r.average) + "," + format_number(r.std) + "," +
           format_number(r.range) + "," + format_number(r.min) + "," + format_number(r.max) + "," +
           format_number(r.seed_std) + "," + std::to_string(r.solved) + "," +
           std::to_string(r.failures.size()) + "\n";
  return out;
}

std::string
file_digest(const std::filesystem::path& path)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(read_text(path))));
  return buf;
}

json
make_manifest(const std::string& command,
              const std::vector<std::string>& args,
              const Config& cfg,
              const json& inputs,
              const std::vector<std::string>& outputs)
{
  auto entry = [](const std::string& p) {
    json e = { { "path", p } };
    if (std::filesystem::exists(p))
      e["fnv1a64"] = file_digest(p);
    return e;
  };
  json in = json::object();
  for (const auto& [name, path] : inputs.items())
    in[name] = entry(path.get<std::string>());
  json out = json::array();
  for (const auto& p : outputs)
    out.push_back(entry(p));
  return { { "command", command }, { "args", args },   { "version", kVersion },
           { "config", cfg.to_json() }, { "inputs", in }, { "outputs", out } };
}

} // namespace vinefx
