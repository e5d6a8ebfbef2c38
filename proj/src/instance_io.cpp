#include "vinefx/errors.hpp"
#include "vinefx/io.hpp"
#include "vinefx/model.hpp"
#include "vinefx/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace vinefx {

using nlohmann::json;

namespace {

const std::set<std::string> kMajor{ "USD", "EUR", "GBP", "JPY" };

std::size_t
currency_index(const Instance& inst, const std::string& ccy)
{
  const auto it = std::find(inst.currencies.begin(), inst.currencies.end(), ccy);
  if (it == inst.currencies.end())
    throw InvalidParameter("unknown currency '" + ccy + "'");
  return static_cast<std::size_t>(it - inst.currencies.begin());
}

template<typename T>
T
get_or(const json& j, const char* key, T fallback)
{
  if (!j.is_object() || !j.contains(key))
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidParameter(std::string("field '") + key + "' has the wrong type");
  }
}

Costs
costs_from(const json& j, Costs c)
{
  c.fixed_buy = get_or(j, "fixed_buy", c.fixed_buy);
  c.fixed_sell = get_or(j, "fixed_sell", c.fixed_sell);
  c.var_buy = get_or(j, "var_buy", c.var_buy);
  c.var_sell = get_or(j, "var_sell", c.var_sell);
  return c;
}

json
costs_to(const Costs& c)
{
  return { { "fixed_buy", c.fixed_buy },
           { "fixed_sell", c.fixed_sell },
           { "var_buy", c.var_buy },
           { "var_sell", c.var_sell } };
}

// Scalar or per-currency object.
std::vector<double>
per_currency(const json& params, const char* key, const Instance& inst, double fallback)
{
  std::vector<double> out(inst.currency_count(), fallback);
  if (!params.contains(key))
    return out;
  const auto& v = params.at(key);
  if (v.is_number()) {
    std::fill(out.begin(), out.end(), v.get<double>());
  } else if (v.is_object()) {
    for (const auto& [ccy, x] : v.items()) {
      if (!x.is_number())
        throw InvalidParameter(std::string("field '") + key + "." + ccy + "' must be a number");
      out[currency_index(inst, ccy)] = x.get<double>();
    }
  } else {
    throw InvalidParameter(std::string("field '") + key + "' must be a number or an object");
  }
  return out;
}

json
vec_json(const Eigen::VectorXd& v)
{
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd
vec_from(const json& j, const char* key, Eigen::Index n)
{
  if (!j.contains(key))
    return Eigen::VectorXd::Zero(n);
  const auto v = j.at(key).get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n)
    throw DimensionMismatch(std::string("field '") + key + "' has the wrong length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

json
stage_json(const Instance& inst, const StageDecision& d)
{
  json assets = json::array();
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    assets.push_back({ { "name", inst.assets[i].name },
                       { "buy", d.buy_asset(ii) },
                       { "sell", d.sell_asset(ii) },
                       { "x", d.x_asset(ii) },
                       { "y", d.y_asset(ii) } });
  }
  json fwds = json::array();
  for (std::size_t k = 0; k < inst.forwards.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    fwds.push_back({ { "name", inst.forwards[k].name() },
                     { "buy", d.buy_fwd(kk) },
                     { "sell", d.sell_fwd(kk) },
                     { "x", d.x_fwd(kk) },
                     { "y", d.y_fwd(kk) } });
  }
  return { { "assets", assets }, { "forwards", fwds }, { "z", vec_json(d.z) } };
}

json
residuals_json(const Residuals& r)
{
  json out = json::object();
  for (const auto& [k, v] : r.items)
    out[k] = v;
  return out;
}

} // namespace

Costs
default_costs(const std::string& currency)
{
  Costs c;
  c.fixed_buy = c.fixed_sell = 1e-5;
  c.var_buy = c.var_sell = kMajor.count(currency) ? 1e-4 : 5e-4;
  return c;
}

double
Instance::wealth0() const
{
  if (initial_wealth > 0.0)
    return initial_wealth;
  double w = initial_cash;
  for (const auto& a : assets)
    w += a.initial_units * a.price;
  for (const auto& g : forwards)
    w += margin * std::abs(g.initial_units) * g.price;
  return w;
}

double
Instance::big_b() const
{
  double pmin = 1.0;
  bool any = false;
  for (const auto& a : assets) {
    pmin = any ? std::min(pmin, a.price) : a.price;
    any = true;
  }
  for (const auto& g : forwards) {
    pmin = any ? std::min(pmin, g.price) : g.price;
    any = true;
  }
  return 10.0 * wealth0() / pmin;
}

TernaryMatrix
Instance::ternary() const
{
  std::vector<std::pair<int, int>> pairs;
  for (const auto& g : forwards)
    pairs.emplace_back(static_cast<int>(g.long_index), static_cast<int>(g.short_index));
  return pair_matrix(currencies.size(), std::move(pairs));
}

void
Instance::finalize()
{
  for (auto& a : assets) {
    if (a.currency.empty()) {
      const auto info = classify_series(a.name);
      if (!info)
        throw InvalidParameter("cannot infer the currency of asset '" + a.name + "'");
      a.currency = info->currency;
    }
    a.currency_index = currency_index(*this, a.currency);
  }
  for (auto& g : forwards) {
    g.long_index = currency_index(*this, g.long_currency);
    g.short_index = currency_index(*this, g.short_currency);
  }
  if (c_min.empty())
    c_min.assign(currencies.size(), 1e-4);
  if (c_max.empty())
    c_max.assign(currencies.size(), 1.0);
  validate();
}

void
Instance::validate() const
{
  auto fail = [](const std::string& what) { throw InvalidParameter(what); };
  if (currencies.empty())
    fail("at least one currency is required");
  if (std::set<std::string>(currencies.begin(), currencies.end()).size() != currencies.size())
    fail("currencies must be unique");
  if (assets.empty())
    fail("at least one asset is required");
  if (!(beta > 0.0 && beta < 1.0))
    fail("beta must lie in (0, 1)");
  if (!(margin >= 0.0 && margin <= 1.0))
    fail("margin must lie in [0, 1]");
  if (!(overlay_limit >= 0.0 && overlay_limit <= 1.0))
    fail("overlay_limit must lie in [0, 1]");
  if (!(initial_cash >= 0.0) || !std::isfinite(mu))
    fail("initial_cash must be nonnegative and mu finite");
  if (!(wealth0() > 0.0))
    fail("initial wealth must be positive");
  const std::size_t C = currencies.size();
  if (forwards.size() > C * (C - 1) / 2)
    fail("more forward pairs than currency pairs");
  if (c_min.size() != C || c_max.size() != C)
    fail("exposure bounds need one value per currency");
  for (std::size_t j = 0; j < C; ++j)
    if (!(c_min[j] >= 0.0 && c_min[j] <= c_max[j]))
      fail("exposure bounds of " + currencies[j] + " are not ordered");
  std::set<std::string> names;
  for (const auto& a : assets) {
    if (!names.insert(a.name).second)
      fail("duplicate asset '" + a.name + "'");
    if (!(a.price > 0.0))
      fail("asset '" + a.name + "' needs a positive price");
    if (!(a.min_holding >= 0.0 && a.min_holding <= a.max_holding))
      fail("holding bounds of '" + a.name + "' are not ordered");
    if (!(a.min_trade >= 0.0) || a.initial_units < 0.0)
      fail("asset '" + a.name + "' has a negative trade size or initial position");
    if (a.currency_index >= C || currencies[a.currency_index] != a.currency)
      fail("asset '" + a.name + "' has an unresolved currency");
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& g : forwards) {
    if (g.long_index == g.short_index)
      fail("forward '" + g.name() + "' needs two different currencies");
    if (!pairs.insert(std::minmax(g.long_index, g.short_index)).second)
      fail("duplicate forward pair '" + g.name() + "'");
    if (!(g.price > 0.0) || !(g.min_trade >= 0.0))
      fail("forward '" + g.name() + "' needs a positive price and nonnegative trade size");
  }
}

Instance
instance_from_json(const json& j)
{
  if (!j.is_object())
    throw InvalidParameter("instance document must be an object");
  Instance inst;
  try {
    inst.currencies = j.at("currencies").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw InvalidParameter("field 'currencies' must be a list of currency codes");
  }
  if (j.contains("base_currency")) {
    const auto base = j.at("base_currency").get<std::string>();
    const auto it = std::find(inst.currencies.begin(), inst.currencies.end(), base);
    if (it == inst.currencies.end())
      throw InvalidParameter("base currency '" + base + "' is not listed");
    std::rotate(inst.currencies.begin(), it, it + 1);
  }
  if (inst.currencies.empty())
    throw InvalidParameter("at least one currency is required");

  const json costs = j.value("costs", json::object());
  const json params = j.value("params", json::object());
  const double fixed = get_or(costs, "fixed", 1e-5);
  const double major = get_or(costs, "variable_major", 1e-4);
  const double other = get_or(costs, "variable_other", 5e-4);
  auto base_costs = [&](const std::string& ccy) {
    Costs c;
    c.fixed_buy = c.fixed_sell = fixed;
    c.var_buy = c.var_sell = kMajor.count(ccy) ? major : other;
    return c;
  };

  const double min_holding = get_or(params, "min_holding", 1e-4);
  const double max_holding = get_or(params, "max_holding", 1.0);
  const double min_trade = get_or(params, "min_trade", 1e-3);

  if (!j.contains("assets") || !j.at("assets").is_array())
    throw InvalidParameter("field 'assets' must be a list");
  for (const auto& ja : j.at("assets")) {
    AssetSpec a;
    a.name = get_or<std::string>(ja, "name", "");
    if (a.name.empty())
      throw InvalidParameter("every asset needs a name");
    a.currency = get_or<std::string>(ja, "currency", "");
    if (a.currency.empty()) {
      const auto info = classify_series(a.name);
      if (!info)
        throw InvalidParameter("cannot infer the currency of asset '" + a.name + "'");
      a.currency = info->currency;
    }
    a.price = get_or(ja, "price", 1.0);
    a.initial_units = get_or(ja, "initial_units", 0.0);
    a.min_holding = get_or(ja, "min_holding", min_holding);
    a.max_holding = get_or(ja, "max_holding", max_holding);
    a.min_trade = get_or(ja, "min_trade", min_trade);
    a.costs = costs_from(ja.value("costs", json::object()), base_costs(a.currency));
    inst.assets.push_back(a);
  }

  const auto add_forward = [&](const std::string& lng, const std::string& sht, const json& jf) {
    ForwardSpec g;
    g.long_currency = lng;
    g.short_currency = sht;
    g.price = get_or(jf, "price", 1.0);
    g.initial_units = get_or(jf, "initial_units", 0.0);
    g.min_trade = get_or(jf, "min_trade", min_trade);
    Costs c = base_costs(kMajor.count(lng) && kMajor.count(sht) ? "USD" : "");
    g.costs = costs_from(jf.value("costs", json::object()), c);
    inst.forwards.push_back(g);
  };
  const json fwd = j.value("forwards", json("all"));
  if (fwd.is_string() && fwd.get<std::string>() == "all") {
    const auto T = build_ternary(std::max<std::size_t>(inst.currencies.size(), 2));
    if (inst.currencies.size() >= 2)
      for (const auto& [l, s] : T.pairs)
        add_forward(inst.currencies[static_cast<std::size_t>(l)],
                    inst.currencies[static_cast<std::size_t>(s)], json::object());
  } else if (fwd.is_array()) {
    for (const auto& jf : fwd)
      add_forward(get_or<std::string>(jf, "long", ""), get_or<std::string>(jf, "short", ""), jf);
  } else {
    throw InvalidParameter("field 'forwards' must be \"all\" or a list");
  }

  inst.mu = get_or(params, "mu", 0.0);
  inst.beta = get_or(params, "beta", 0.95);
  inst.overlay_limit = get_or(params, "overlay_limit", 1.0);
  inst.margin = get_or(params, "margin", 0.1);
  inst.initial_cash = get_or(params, "initial_cash", 100000.0);
  inst.initial_wealth = get_or(params, "initial_wealth", 0.0);
  inst.max_currencies = get_or(params, "max_currencies", inst.currencies.size());
  inst.max_forwards = get_or(params, "max_forwards", inst.forwards.size());
  inst.c_min = per_currency(params, "c_min", inst, 1e-4);
  inst.c_max = per_currency(params, "c_max", inst, 1.0);
  inst.finalize();
  return inst;
}

json
to_json(const Instance& inst)
{
  json assets = json::array();
  for (const auto& a : inst.assets)
    assets.push_back({ { "name", a.name },
                       { "currency", a.currency },
                       { "price", a.price },
                       { "initial_units", a.initial_units },
                       { "min_holding", a.min_holding },
                       { "max_holding", a.max_holding },
                       { "min_trade", a.min_trade },
                       { "costs", costs_to(a.costs) } });
  json fwds = json::array();
  for (const auto& g : inst.forwards)
    fwds.push_back({ { "long", g.long_currency },
                     { "short", g.short_currency },
                     { "price", g.price },
                     { "initial_units", g.initial_units },
                     { "min_trade", g.min_trade },
                     { "costs", costs_to(g.costs) } });
  json cmin = json::object(), cmax = json::object();
  for (std::size_t j = 0; j < inst.currencies.size(); ++j) {
    cmin[inst.currencies[j]] = inst.c_min[j];
    cmax[inst.currencies[j]] = inst.c_max[j];
  }
  return { { "currencies", inst.currencies },
           { "base_currency", inst.base_currency() },
           { "assets", assets },
           { "forwards", fwds },
           { "params",
             { { "mu", inst.mu },
               { "beta", inst.beta },
               { "c_min", cmin },
               { "c_max", cmax },
               { "overlay_limit", inst.overlay_limit },
               { "max_currencies", inst.max_currencies },
               { "max_forwards", inst.max_forwards },
               { "margin", inst.margin },
               { "initial_cash", inst.initial_cash },
               { "initial_wealth", inst.initial_wealth } } } };
}

Instance
read_instance(const std::filesystem::path& path)
{
  return instance_from_json(read_json(path));
}

json
to_json(const Instance& inst, const Solution& sol, const Evaluation& ev)
{
  const auto& f = ev.first;
  json holdings = json::object();
  for (std::size_t i = 0; i < inst.assets.size(); ++i)
    holdings[inst.assets[i].name] = f.units(static_cast<Eigen::Index>(i));
  json positions = json::object();
  for (std::size_t k = 0; k < inst.forwards.size(); ++k)
    positions[inst.forwards[k].name()] = f.fwd_units(static_cast<Eigen::Index>(k));
  json exposure = json::object();
  for (std::size_t j = 0; j < inst.currencies.size(); ++j)
    exposure[inst.currencies[j]] = f.exposure(static_cast<Eigen::Index>(j)) / inst.wealth0();

  return { { "first_stage", stage_json(inst, sol.first) },
           { "recourse_trades", !sol.recourse.empty() },
           { "holdings", holdings },
           { "forward_positions", positions },
           { "currency_exposure", exposure },
           { "margin", f.margin },
           { "cash", f.cash },
           { "total_overlay", f.total_overlay / inst.wealth0() },
           { "alpha", ev.risk.alpha },
           { "cvar", ev.risk.cvar },
           { "expected_return", ev.expected_return },
           { "target", inst.mu },
           { "fitness", ev.fitness },
           { "penalty_weight", ev.penalty_weight },
           { "violation", ev.violation },
           { "feasible", ev.feasible() },
           { "residuals",
             { { "first_stage", residuals_json(ev.first_residuals) },
               { "recourse", residuals_json(ev.recourse_residuals) },
               { "target", ev.target_residual } } } };
}

Solution
solution_from_json(const Instance& inst, const json& j)
{
  if (!j.contains("first_stage"))
    throw InvalidParameter("solution document lacks 'first_stage'");
  const auto& fs = j.at("first_stage");
  Solution sol;
  sol.first = StageDecision::zeros(inst);
  auto& d = sol.first;
  for (const auto& ja : fs.value("assets", json::array())) {
    const auto name = ja.at("name").get<std::string>();
    const auto it = std::find_if(inst.assets.begin(), inst.assets.end(),
                                 [&](const AssetSpec& a) { return a.name == name; });
    if (it == inst.assets.end())
      throw MissingColumn(name);
    const auto i = static_cast<Eigen::Index>(it - inst.assets.begin());
    d.buy_asset(i) = ja.value("buy", 0.0);
    d.sell_asset(i) = ja.value("sell", 0.0);
    d.x_asset(i) = ja.value("x", 0.0);
    d.y_asset(i) = ja.value("y", 0.0);
  }
  for (const auto& jf : fs.value("forwards", json::array())) {
    const auto name = jf.at("name").get<std::string>();
    const auto it = std::find_if(inst.forwards.begin(), inst.forwards.end(),
                                 [&](const ForwardSpec& g) { return g.name() == name; });
    if (it == inst.forwards.end())
      throw MissingColumn(name);
    const auto k = static_cast<Eigen::Index>(it - inst.forwards.begin());
    d.buy_fwd(k) = jf.value("buy", 0.0);
    d.sell_fwd(k) = jf.value("sell", 0.0);
    d.x_fwd(k) = jf.value("x", 0.0);
    d.y_fwd(k) = jf.value("y", 0.0);
  }
  d.z = vec_from(fs, "z", static_cast<Eigen::Index>(inst.currency_count()));
  return sol;
}

} // namespace vinefx
