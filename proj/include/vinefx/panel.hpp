#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vinefx {

enum class SeriesKind
{
  Asset,
  Currency
};

/// A return column. Assets are named `<label>.<CCY>` and are denominated in
/// CCY; currencies are named by their bare three-letter code and hold the
/// return of that currency against the base currency.
struct SeriesInfo
{
  std::string name;
  SeriesKind kind = SeriesKind::Asset;
  std::string currency;
};

/// Classifies a column name; returns nullopt when the name carries no
/// recognisable currency token.
std::optional<SeriesInfo>
classify_series(const std::string& name);

bool
is_currency_code(const std::string& token);

/// Per-period decimal returns for named series plus one interest-rate series
/// per currency. The base currency is always present as a currency column;
/// its return is zero by definition.
struct ReturnPanel
{
  std::vector<std::string> periods;
  std::vector<SeriesInfo> series;
  Eigen::MatrixXd values; // periods x series
  std::map<std::string, Eigen::VectorXd> rates;
  std::string base_currency;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return series.size(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> find(const std::string& name) const;
  /// Currencies referenced by any series, base currency first, the rest in
  /// order of first appearance.
  std::vector<std::string> currencies() const;

  /// Throws on unequal lengths, non-finite values, or a nonzero base
  /// currency column.
  void validate() const;
};

/// Builds a panel, classifying each column and appending a zero base
/// currency column when none is supplied.
ReturnPanel
make_panel(std::vector<std::string> periods,
           const std::vector<std::string>& names,
           Eigen::MatrixXd values,
           std::map<std::string, Eigen::VectorXd> rates,
           std::string base_currency);

} // namespace vinefx
