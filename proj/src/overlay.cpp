#include "vinefx/overlay.hpp"

#include "vinefx/errors.hpp"

#include <string>

namespace vinefx {

TernaryMatrix
build_ternary(std::size_t currencies)
{
  if (currencies < 2)
    throw InvalidParameter("an overlay needs at least two currencies");
  std::vector<std::pair<int, int>> pairs;
  const int c = static_cast<int>(currencies);
  for (int a = 0; a < c; ++a)
    for (int b = a + 1; b < c; ++b)
      pairs.emplace_back(a, b);
  return pair_matrix(currencies, std::move(pairs));
}

TernaryMatrix
pair_matrix(std::size_t currencies, std::vector<std::pair<int, int>> pairs)
{
  TernaryMatrix t;
  t.currencies = currencies;
  t.T = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(pairs.size()),
                              static_cast<Eigen::Index>(currencies));
  const int c = static_cast<int>(currencies);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [lo, sh] = pairs[k];
    if (lo < 0 || sh < 0 || lo >= c || sh >= c || lo == sh)
      throw InvalidParameter("forward pair " + std::to_string(k + 1) +
                             " must name two distinct currencies");
    t.T(static_cast<Eigen::Index>(k), lo) = 1;
    t.T(static_cast<Eigen::Index>(k), sh) = -1;
  }
  t.pairs = std::move(pairs);
  return t;
}

OverlayState
build_overlay(const TernaryMatrix& T, const Eigen::VectorXd& q)
{
  if (static_cast<std::size_t>(q.size()) != T.size())
    throw DimensionMismatch("overlay needs " + std::to_string(T.size()) +
                            " positions, got " + std::to_string(q.size()));
  OverlayState s;
  s.q = q;
  s.F = T.T.cast<double>().array().colwise() * q.array();
  return s;
}

double
cost_of_carry(const Eigen::VectorXd& positions, const Eigen::VectorXd& rates)
{
  if (positions.size() != rates.size())
    throw DimensionMismatch("positions and rates must align by currency");
  return positions.dot(rates);
}

double
contract_carry(double notional, double rate_long, double rate_short)
{
  return notional * (rate_long - rate_short);
}

double
total_overlay(const Eigen::MatrixXd& F)
{
  return 0.5 * F.colwise().sum().cwiseAbs().sum();
}

Eigen::VectorXd
currency_exposure(const Eigen::VectorXd& asset_value,
                  const Eigen::MatrixXd& F,
                  double margin,
                  std::size_t base_index)
{
  if (F.rows() > 0 && F.cols() != asset_value.size())
    throw DimensionMismatch("overlay matrix has " + std::to_string(F.cols()) +
                            " currency columns for " +
                            std::to_string(asset_value.size()) + " currencies");
  if (base_index >= static_cast<std::size_t>(asset_value.size()))
    throw DimensionMismatch("base currency index out of range");
  Eigen::VectorXd c = asset_value;
  if (F.rows() > 0)
    c += F.colwise().sum().transpose();
  c(static_cast<Eigen::Index>(base_index)) += margin;
  return c;
}

} // namespace vinefx
