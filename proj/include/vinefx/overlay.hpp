#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace vinefx {

/// Signed pair matrix: row k has +1 in the long (bought) currency column and
/// -1 in the short (sold) currency column of forward pair k.
struct TernaryMatrix
{
  std::size_t currencies = 0;
  std::vector<std::pair<int, int>> pairs; // (long, short), 0-based
  Eigen::MatrixXi T;                      // K x C

  std::size_t size() const { return pairs.size(); }
};

/// All C(C-1)/2 pairs (j1, j2), j1 < j2, in lexicographic order. A positive
/// position buys j1 and sells j2.
TernaryMatrix
build_ternary(std::size_t currencies);

/// Matrix for an explicit list of (long, short) pairs.
TernaryMatrix
pair_matrix(std::size_t currencies, std::vector<std::pair<int, int>> pairs);

/// Forward positions q (base-currency notional per pair) spread over the
/// currency columns: F(k, j) = T(k, j) * q(k).
struct OverlayState
{
  Eigen::VectorXd q;
  Eigen::MatrixXd F;

  /// Net overlay per currency (column sums of F).
  Eigen::VectorXd net() const { return F.colwise().sum().transpose(); }
};

OverlayState
build_overlay(const TernaryMatrix& T, const Eigen::VectorXd& q);

/// Sum over currencies of position times interest rate.
double
cost_of_carry(const Eigen::VectorXd& positions, const Eigen::VectorXd& rates);

/// Carry of one forward: notional times (rate bought - rate sold).
double
contract_carry(double notional, double rate_long, double rate_short);

/// Half the sum of absolute net currency positions.
double
total_overlay(const Eigen::MatrixXd& F);

/// Per-currency exposure: asset value held in each currency plus the net
/// overlay, plus the forward margin reserve in the base currency.
Eigen::VectorXd
currency_exposure(const Eigen::VectorXd& asset_value,
                  const Eigen::MatrixXd& F,
                  double margin,
                  std::size_t base_index = 0);

} // namespace vinefx
