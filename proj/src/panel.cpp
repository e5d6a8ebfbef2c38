#include "vinefx/panel.hpp"

#include "vinefx/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vinefx {

bool
is_currency_code(const std::string& token)
{
  return token.size() == 3 &&
         std::all_of(token.begin(), token.end(), [](unsigned char c) {
           return std::isupper(c) != 0;
         });
}

std::optional<SeriesInfo>
classify_series(const std::string& name)
{
  const auto dot = name.rfind('.');
  if (dot == std::string::npos) {
    if (!is_currency_code(name))
      return std::nullopt;
    return SeriesInfo{ name, SeriesKind::Currency, name };
  }
  auto ccy = name.substr(dot + 1);
  if (dot == 0 || !is_currency_code(ccy))
    return std::nullopt;
  return SeriesInfo{ name, SeriesKind::Asset, std::move(ccy) };
}

std::vector<std::string>
ReturnPanel::names() const
{
  std::vector<std::string> out;
  out.reserve(series.size());
  for (const auto& s : series)
    out.push_back(s.name);
  return out;
}

std::optional<std::size_t>
ReturnPanel::find(const std::string& name) const
{
  for (std::size_t j = 0; j < series.size(); ++j)
    if (series[j].name == name)
      return j;
  return std::nullopt;
}

std::vector<std::string>
ReturnPanel::currencies() const
{
  std::vector<std::string> out{ base_currency };
  for (const auto& s : series)
    if (std::find(out.begin(), out.end(), s.currency) == out.end())
      out.push_back(s.currency);
  return out;
}

void
ReturnPanel::validate() const
{
  if (series.empty() || values.rows() == 0)
    throw EmptyPanel();
  if (static_cast<std::size_t>(values.cols()) != series.size())
    throw DimensionMismatch("panel has " + std::to_string(values.cols()) +
                            " value columns for " +
                            std::to_string(series.size()) + " series");
  if (!periods.empty() && periods.size() != rows())
    throw DimensionMismatch("period labels do not match panel length");
  if (!values.allFinite())
    throw Error("panel contains non-finite values");
  for (const auto& [ccy, r] : rates) {
    if (static_cast<std::size_t>(r.size()) != rows())
      throw DimensionMismatch("rate series rate." + ccy +
                              " has the wrong length");
    if (!r.allFinite())
      throw Error("rate series rate." + ccy + " contains non-finite values");
  }
  if (auto b = find(base_currency)) {
    if (values.col(static_cast<Eigen::Index>(*b)).cwiseAbs().maxCoeff() != 0.0)
      throw Error("base currency column " + base_currency + " must be zero");
  }
}

ReturnPanel
make_panel(std::vector<std::string> periods,
           const std::vector<std::string>& names,
           Eigen::MatrixXd values,
           std::map<std::string, Eigen::VectorXd> rates,
           std::string base_currency)
{
  if (!is_currency_code(base_currency))
    throw Error("base currency '" + base_currency +
                "' is not a three-letter code");
  if (static_cast<std::size_t>(values.cols()) != names.size())
    throw DimensionMismatch("column names do not match value columns");

  ReturnPanel p;
  p.periods = std::move(periods);
  p.base_currency = std::move(base_currency);
  p.rates = std::move(rates);
  for (const auto& n : names) {
    auto info = classify_series(n);
    if (!info)
      throw Error("column '" + n + "' has no currency token");
    p.series.push_back(*info);
  }
  if (!p.find(p.base_currency)) {
    p.series.push_back(
      SeriesInfo{ p.base_currency, SeriesKind::Currency, p.base_currency });
    Eigen::MatrixXd widened(values.rows(), values.cols() + 1);
    widened.leftCols(values.cols()) = values;
    widened.col(values.cols()).setZero();
    values = std::move(widened);
  }
  p.values = std::move(values);
  p.validate();
  return p;
}

} // namespace vinefx
