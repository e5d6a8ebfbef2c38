#include "vinefx/model.hpp"

#include "vinefx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinefx {

namespace {

constexpr double kCashTolerance = 1e-9;

double
pos(double v)
{
  return v > 0.0 ? v : 0.0;
}

double
binary_gap(double v)
{
  if (v < 0.0 || v > 1.0)
    return std::min(std::abs(v), std::abs(v - 1.0));
  return std::min(v, 1.0 - v);
}

void
check_stage(const Instance& inst, const StageDecision& d)
{
  const auto A = static_cast<Eigen::Index>(inst.assets.size());
  const auto K = static_cast<Eigen::Index>(inst.forwards.size());
  const auto C = static_cast<Eigen::Index>(inst.currency_count());
  if (d.buy_asset.size() != A || d.sell_asset.size() != A || d.x_asset.size() != A ||
      d.y_asset.size() != A || d.buy_fwd.size() != K || d.sell_fwd.size() != K ||
      d.x_fwd.size() != K || d.y_fwd.size() != K || d.z.size() != C)
    throw DimensionMismatch("stage decision does not match the instance dimensions");
}

// Cash flows of one stage's trades at the given prices.
struct Flows
{
  double proceeds = 0.0;  // asset sales
  double outlays = 0.0;   // asset purchases
  double costs = 0.0;
};

Flows
trade_flows(const Instance& inst, const StageDecision& d, const Eigen::RowVectorXd& prices)
{
  const double w0 = inst.wealth0();
  Flows f;
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto& a = inst.assets[i];
    const double buy = d.buy_asset(ii) * d.x_asset(ii) * prices(ii);
    const double sell = d.sell_asset(ii) * d.y_asset(ii) * prices(ii);
    f.outlays += buy;
    f.proceeds += sell;
    f.costs += a.costs.fixed_buy * w0 * d.x_asset(ii) + a.costs.var_buy * buy;
    f.costs += a.costs.fixed_sell * w0 * d.y_asset(ii) + a.costs.var_sell * sell;
  }
  for (std::size_t k = 0; k < inst.forwards.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const auto& g = inst.forwards[k];
    const double buy = d.buy_fwd(kk) * d.x_fwd(kk) * g.price;
    const double sell = d.sell_fwd(kk) * d.y_fwd(kk) * g.price;
    f.costs += g.costs.fixed_buy * w0 * d.x_fwd(kk) + g.costs.var_buy * buy;
    f.costs += g.costs.fixed_sell * w0 * d.y_fwd(kk) + g.costs.var_sell * sell;
  }
  return f;
}

// Residual families that depend only on the trades of a stage.
void
trade_residuals(const Instance& inst,
                const StageDecision& d,
                const Eigen::RowVectorXd& prices,
                Residuals& out)
{
  const double w0 = inst.wealth0();
  const double B = inst.big_b();
  double both_a = 0.0, both_f = 0.0, size_a = 0.0, size_f = 0.0, domain = 0.0;
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double p = prices(ii);
    const double tmin = inst.assets[i].min_trade * w0;
    const double b = d.buy_asset(ii), s = d.sell_asset(ii);
    both_a += pos(d.x_asset(ii) + d.y_asset(ii) - 1.0);
    size_a += pos(tmin * d.x_asset(ii) - b * p) / w0 + pos(b - B) * p / w0 + pos(-b) * p / w0;
    size_a += pos(tmin * d.y_asset(ii) - s * p) / w0 + pos(s - B) * p / w0 + pos(-s) * p / w0;
    domain += binary_gap(d.x_asset(ii)) + binary_gap(d.y_asset(ii));
  }
  for (std::size_t k = 0; k < inst.forwards.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double p = inst.forwards[k].price;
    const double tmin = inst.forwards[k].min_trade * w0;
    const double b = d.buy_fwd(kk), s = d.sell_fwd(kk);
    both_f += pos(d.x_fwd(kk) + d.y_fwd(kk) - 1.0);
    size_f += pos(tmin * d.x_fwd(kk) - b * p) / w0 + pos(b - B) * p / w0 + pos(-b) * p / w0;
    size_f += pos(tmin * d.y_fwd(kk) - s * p) / w0 + pos(s - B) * p / w0 + pos(-s) * p / w0;
    domain += binary_gap(d.x_fwd(kk)) + binary_gap(d.y_fwd(kk));
  }

  double activity = 0.0, zsum = 0.0;
  for (std::size_t j = 0; j < inst.currency_count(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    double trades = 0.0;
    for (std::size_t i = 0; i < inst.assets.size(); ++i)
      if (inst.assets[i].currency_index == j)
        trades += d.x_asset(static_cast<Eigen::Index>(i)) + d.y_asset(static_cast<Eigen::Index>(i));
    activity += pos(d.z(jj) - trades);
    zsum += d.z(jj);
    domain += binary_gap(d.z(jj));
  }
  const double fwd_trades = d.x_fwd.sum() + d.y_fwd.sum();

  out.add("buy_or_sell_asset", both_a);
  out.add("buy_or_sell_forward", both_f);
  out.add("trade_size_asset", size_a);
  out.add("trade_size_forward", size_f);
  out.add("currency_activity", activity);
  out.add("currency_cardinality", pos(zsum - static_cast<double>(inst.max_currencies)));
  out.add("forward_cardinality", pos(fwd_trades - static_cast<double>(inst.max_forwards)));
  out.add("binary_domain", domain);
}

// Exposure, holding and overlay-limit residuals of a portfolio state.
// `scale` is the portfolio value the fractions refer to.
void
position_residuals(const Instance& inst,
                   const Eigen::VectorXd& units,
                   const Eigen::RowVectorXd& prices,
                   const Eigen::VectorXd& exposure,
                   const Eigen::VectorXd& z,
                   double overlay,
                   double scale,
                   Residuals& out)
{
  const double w0 = inst.wealth0();
  const double denom = scale > 0.0 ? scale : w0;
  double exp_res = 0.0;
  for (Eigen::Index j = 0; j < exposure.size(); ++j) {
    const auto js = static_cast<std::size_t>(j);
    const double frac = exposure(j) / denom;
    exp_res += pos(inst.c_min[js] * z(j) - frac) + pos(frac - inst.c_max[js]);
  }
  double hold = 0.0;
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double frac = units(ii) * prices(ii) / denom;
    hold += pos(-frac) + pos(frac - inst.assets[i].max_holding);
    if (units(ii) > 0.0)
      hold += pos(inst.assets[i].min_holding - frac);
  }
  const double sum_c = exposure.sum();
  out.add("overlay_limit", pos(overlay - inst.overlay_limit * sum_c) / w0);
  out.add("currency_exposure", exp_res);
  out.add("holding_bounds", hold);
}

Eigen::RowVectorXd
first_prices(const Instance& inst)
{
  Eigen::RowVectorXd p(static_cast<Eigen::Index>(inst.assets.size()));
  for (std::size_t i = 0; i < inst.assets.size(); ++i)
    p(static_cast<Eigen::Index>(i)) = inst.assets[i].price;
  return p;
}

Eigen::VectorXd
forward_prices(const Instance& inst)
{
  Eigen::VectorXd p(static_cast<Eigen::Index>(inst.forwards.size()));
  for (std::size_t k = 0; k < inst.forwards.size(); ++k)
    p(static_cast<Eigen::Index>(k)) = inst.forwards[k].price;
  return p;
}

Eigen::VectorXd
value_by_currency(const Instance& inst, const Eigen::VectorXd& units, const Eigen::RowVectorXd& prices)
{
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inst.currency_count()));
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    v(static_cast<Eigen::Index>(inst.assets[i].currency_index)) += units(ii) * prices(ii);
  }
  return v;
}

ScenarioPrices
prices_from(const Instance& inst, const std::vector<std::string>& names, const Eigen::MatrixXd& values)
{
  auto index = [&](const std::string& name) {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name)
        return static_cast<Eigen::Index>(j);
    throw MissingColumn(name);
  };
  std::vector<Eigen::Index> ccy;
  for (const auto& c : inst.currencies)
    ccy.push_back(index(c));

  ScenarioPrices out;
  const auto N = values.rows();
  out.asset.resize(N, static_cast<Eigen::Index>(inst.assets.size()));
  for (std::size_t i = 0; i < inst.assets.size(); ++i) {
    const auto& a = inst.assets[i];
    const auto col = index(a.name);
    const auto cc = ccy[a.currency_index];
    out.asset.col(static_cast<Eigen::Index>(i)) =
      a.price * (1.0 + values.col(col).array() + values.col(cc).array()).matrix();
  }
  out.forward.resize(N, static_cast<Eigen::Index>(inst.forwards.size()));
  for (std::size_t k = 0; k < inst.forwards.size(); ++k) {
    const auto& g = inst.forwards[k];
    out.forward.col(static_cast<Eigen::Index>(k)) =
      g.price * (values.col(ccy[g.long_index]) - values.col(ccy[g.short_index]));
  }
  return out;
}

} // namespace

double
Residuals::get(const std::string& name) const
{
  for (const auto& [k, v] : items)
    if (k == name)
      return v;
  return 0.0;
}

void
Residuals::add(const std::string& name, double v)
{
  for (auto& [k, x] : items)
    if (k == name) {
      x += v;
      return;
    }
  items.emplace_back(name, v);
}

double
Residuals::total() const
{
  double t = 0.0;
  for (const auto& item : items)
    t += item.second;
  return t;
}

StageDecision
StageDecision::zeros(const Instance& inst)
{
  const auto A = static_cast<Eigen::Index>(inst.assets.size());
  const auto K = static_cast<Eigen::Index>(inst.forwards.size());
  const auto C = static_cast<Eigen::Index>(inst.currency_count());
  StageDecision d;
  d.buy_asset = d.sell_asset = d.x_asset = d.y_asset = Eigen::VectorXd::Zero(A);
  d.buy_fwd = d.sell_fwd = d.x_fwd = d.y_fwd = Eigen::VectorXd::Zero(K);
  d.z = Eigen::VectorXd::Zero(C);
  return d;
}

bool
StageDecision::is_zero() const
{
  auto zero = [](const Eigen::VectorXd& v) { return v.size() == 0 || v.isZero(0.0); };
  return zero(buy_asset) && zero(sell_asset) && zero(x_asset) && zero(y_asset) && zero(buy_fwd) &&
         zero(sell_fwd) && zero(x_fwd) && zero(y_fwd) && zero(z);
}

ScenarioPrices
scenario_prices(const Instance& inst, const ScenarioSet& scenarios)
{
  return prices_from(inst, scenarios.names, scenarios.values);
}

ScenarioPrices
scenario_prices(const Instance& inst,
                const std::vector<std::string>& names,
                const Eigen::RowVectorXd& returns)
{
  if (static_cast<std::size_t>(returns.size()) != names.size())
    throw DimensionMismatch("one return per column name required");
  return prices_from(inst, names, Eigen::MatrixXd(returns));
}

FirstStageReport
evaluate_first_stage(const Instance& inst, const StageDecision& d)
{
  check_stage(inst, d);
  const double w0 = inst.wealth0();
  const Eigen::RowVectorXd p0 = first_prices(inst);
  const Eigen::VectorXd pk = forward_prices(inst);
  const auto A = static_cast<Eigen::Index>(inst.assets.size());
  const auto K = static_cast<Eigen::Index>(inst.forwards.size());

  FirstStageReport r;
  r.units.resize(A);
  for (Eigen::Index i = 0; i < A; ++i)
    r.units(i) = inst.assets[static_cast<std::size_t>(i)].initial_units +
                 d.buy_asset(i) * d.x_asset(i) - d.sell_asset(i) * d.y_asset(i);
  r.fwd_units.resize(K);
  Eigen::VectorXd q0(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    q0(k) = inst.forwards[static_cast<std::size_t>(k)].initial_units;
    r.fwd_units(k) = q0(k) + d.buy_fwd(k) * d.x_fwd(k) - d.sell_fwd(k) * d.y_fwd(k);
  }
  r.fwd_value = r.fwd_units.cwiseProduct(pk);

  const auto overlay = build_overlay(inst.ternary(), r.fwd_value);
  r.F = overlay.F;
  r.margin = inst.margin * r.fwd_value.cwiseAbs().sum();
  const double margin0 = inst.margin * q0.cwiseProduct(pk).cwiseAbs().sum();

  const Flows f = trade_flows(inst, d, p0);
  r.costs = f.costs;
  r.cash = inst.initial_cash + margin0 + f.proceeds - f.outlays - f.costs - r.margin;

  r.asset_value_by_currency = value_by_currency(inst, r.units, p0);
  r.exposure = currency_exposure(r.asset_value_by_currency, r.F, r.margin, 0);
  r.total_overlay = total_overlay(r.F);

  const double deficit = -r.cash;
  r.residuals.add("cash_balance", deficit > kCashTolerance * w0 ? deficit / w0 : 0.0);
  position_residuals(inst, r.units, p0, r.exposure, d.z, r.total_overlay, w0, r.residuals);
  trade_residuals(inst, d, p0, r.residuals);
  return r;
}

RecourseReport
evaluate_recourse(const Instance& inst,
                  const FirstStageReport& first,
                  const StageDecision* d,
                  const Eigen::RowVectorXd& asset_prices,
                  const Eigen::RowVectorXd& forward_change)
{
  const double w0 = inst.wealth0();
  const Eigen::VectorXd pk = forward_prices(inst);
  StageDecision none;
  if (!d) {
    none = StageDecision::zeros(inst);
    d = &none;
  }
  check_stage(inst, *d);

  RecourseReport r;
  r.units = first.units + d->buy_asset.cwiseProduct(d->x_asset) - d->sell_asset.cwiseProduct(d->y_asset);
  r.fwd_units = first.fwd_units + d->buy_fwd.cwiseProduct(d->x_fwd) - d->sell_fwd.cwiseProduct(d->y_fwd);
  const Eigen::VectorXd value = r.fwd_units.cwiseProduct(pk);
  r.F = build_overlay(inst.ternary(), value).F;
  r.margin = inst.margin * value.cwiseAbs().sum();

  const Flows f = trade_flows(inst, *d, asset_prices);
  r.costs = f.costs;
  r.cash = first.cash + first.margin - r.margin + f.proceeds - f.outlays - f.costs;

  // Only the shortfall created at this node counts; a first-stage deficit is
  // already charged once.
  const double available = std::max(first.cash, 0.0);
  const double deficit = -(available + first.margin - r.margin + f.proceeds - f.outlays - f.costs);
  r.residuals.add("cash_balance", deficit > kCashTolerance * w0 ? deficit / w0 : 0.0);

  const double mtm = first.fwd_units.dot(forward_change.transpose());
  r.wealth = r.units.dot(asset_prices.transpose()) + mtm + r.margin + r.cash;

  r.exposure = currency_exposure(value_by_currency(inst, r.units, asset_prices), r.F, r.margin, 0);
  r.total_overlay = total_overlay(r.F);
  position_residuals(inst, r.units, asset_prices, r.exposure, d->z, r.total_overlay, r.wealth, r.residuals);
  trade_residuals(inst, *d, asset_prices, r.residuals);
  return r;
}

double
wealth(const Instance& inst,
       const FirstStageReport& first,
       const StageDecision* d,
       const Eigen::RowVectorXd& asset_prices,
       const Eigen::RowVectorXd& forward_change)
{
  return evaluate_recourse(inst, first, d, asset_prices, forward_change).wealth;
}

CvarResult
cvar_objective(std::span<const double> losses, std::span<const double> probabilities, double beta)
{
  const std::size_t n = losses.size();
  if (n == 0)
    throw EmptyScenarios();
  if (probabilities.size() != n)
    throw LengthMismatch("one probability per loss required");
  if (!(beta > 0.0 && beta < 1.0))
    throw InvalidParameter("beta must lie in (0, 1)");

  const bool uniform = std::all_of(probabilities.begin(), probabilities.end(),
                                   [&](double p) { return p == probabilities[0]; });
  CvarResult out;
  if (uniform) {
    const double target = (beta - 1e-12) * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(target));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> tmp(losses.begin(), losses.end());
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(k - 1), tmp.end());
    out.alpha = tmp[k - 1];
  } else {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
    double cum = 0.0;
    out.alpha = losses[idx.back()];
    for (std::size_t i : idx) {
      cum += probabilities[i];
      if (cum >= beta - 1e-12) {
        out.alpha = losses[i];
        break;
      }
    }
  }
  out.shortfall.resize(n);
  double tail = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    out.shortfall[r] = pos(losses[r] - out.alpha);
    tail += probabilities[r] * out.shortfall[r];
  }
  out.cvar = out.alpha + tail / (1.0 - beta);
  return out;
}

double
cvar_auxiliary(std::span<const double> losses,
               std::span<const double> probabilities,
               double beta,
               double alpha)
{
  double tail = 0.0;
  for (std::size_t r = 0; r < losses.size(); ++r)
    tail += probabilities[r] * pos(losses[r] - alpha);
  return alpha + tail / (1.0 - beta);
}

double
expected_return(std::span<const double> wealth, std::span<const double> probabilities, double w0)
{
  if (wealth.size() != probabilities.size())
    throw LengthMismatch("one probability per scenario required");
  double e = 0.0;
  for (std::size_t r = 0; r < wealth.size(); ++r)
    e += probabilities[r] * (wealth[r] / w0 - 1.0);
  return e;
}

bool
Evaluation::only_target_violated() const
{
  return first_residuals.total() == 0.0 && recourse_residuals.total() == 0.0 && target_residual > 0.0;
}

double
penalty_weight(double cvar)
{
  return 1e3 * std::max(1.0, std::abs(cvar));
}

Evaluation
evaluate(const Instance& inst,
         const Solution& sol,
         const ScenarioSet& scenarios,
         const ScenarioPrices& prices)
{
  const std::size_t N = scenarios.size();
  if (N == 0)
    throw EmptyScenarios();
  if (static_cast<std::size_t>(prices.asset.rows()) != N)
    throw DimensionMismatch("prices do not match the scenario set");
  const double w0 = inst.wealth0();

  Evaluation ev;
  ev.first = evaluate_first_stage(inst, sol.first);
  ev.first_residuals = ev.first.residuals;
  ev.wealth.resize(N);
  ev.losses.resize(N);

  if (sol.recourse.empty()) {
    const auto& fs = ev.first;
    const auto A = prices.asset.cols();
    const auto C = static_cast<Eigen::Index>(inst.currency_count());
    const Eigen::VectorXd W = prices.asset * fs.units + prices.forward * fs.fwd_units +
                              Eigen::VectorXd::Constant(static_cast<Eigen::Index>(N), fs.margin + fs.cash);
    const Eigen::VectorXd net = fs.F.colwise().sum().transpose();
    Eigen::VectorXd c(C);
    double overlay_res = 0.0, exp_res = 0.0, hold = 0.0;
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(N); ++r) {
      const double wr = W(r);
      const double denom = wr > 0.0 ? wr : w0;
      c = net;
      c(0) += fs.margin;
      for (Eigen::Index i = 0; i < A; ++i) {
        const auto& a = inst.assets[static_cast<std::size_t>(i)];
        const double v = fs.units(i) * prices.asset(r, i);
        c(static_cast<Eigen::Index>(a.currency_index)) += v;
        const double frac = v / denom;
        hold += pos(-frac) + pos(frac - a.max_holding);
        if (fs.units(i) > 0.0)
          hold += pos(a.min_holding - frac);
      }
      for (Eigen::Index j = 0; j < C; ++j) {
        const double frac = c(j) / denom;
        exp_res += pos(-frac) + pos(frac - inst.c_max[static_cast<std::size_t>(j)]);
      }
      overlay_res += pos(fs.total_overlay - inst.overlay_limit * c.sum()) / w0;
      ev.wealth[static_cast<std::size_t>(r)] = wr;
    }
    ev.recourse_residuals.add("cash_balance", 0.0);
    ev.recourse_residuals.add("overlay_limit", overlay_res);
    ev.recourse_residuals.add("currency_exposure", exp_res);
    ev.recourse_residuals.add("holding_bounds", hold);
  } else {
    if (sol.recourse.size() != N)
      throw DimensionMismatch("one recourse decision per scenario required");
    for (std::size_t r = 0; r < N; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto rep = evaluate_recourse(inst, ev.first, &sol.recourse[r], prices.asset.row(ri),
                                         prices.forward.row(ri));
      ev.wealth[r] = rep.wealth;
      for (const auto& [k, v] : rep.residuals.items)
        ev.recourse_residuals.add(k, v);
    }
  }

  for (std::size_t r = 0; r < N; ++r)
    ev.losses[r] = -(ev.wealth[r] / w0 - 1.0);
  ev.risk = cvar_objective(ev.losses, scenarios.probabilities, inst.beta);
  ev.expected_return = vinefx::expected_return(ev.wealth, scenarios.probabilities, w0);
  ev.target_residual = vinefx::target_residual(ev.expected_return, inst.mu);
  ev.violation = ev.first_residuals.total() + ev.recourse_residuals.total() + ev.target_residual;
  ev.penalty_weight = penalty_weight(ev.risk.cvar);
  ev.fitness = ev.risk.cvar + ev.penalty_weight * ev.violation;
  return ev;
}

Evaluation
evaluate(const Instance& inst, const Solution& sol, const ScenarioSet& scenarios)
{
  return evaluate(inst, sol, scenarios, scenario_prices(inst, scenarios));
}

} // namespace vinefx
