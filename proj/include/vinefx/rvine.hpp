#pragma once

#include "vinefx/bicop.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace vinefx {

/// One pair-copula of the vine: conditioned variables (first, second) given
/// the conditioning set. Variables are 0-based.
struct VineEdge
{
  int first = 0;
  int second = 0;
  std::vector<int> conditioning;
  FittedBicop copula;

  /// e.g. "1,3|2" with 1-based labels.
  std::string label() const;
};

/// Regular vine in lower-triangular matrix form.
///
/// Column i (0-based) has the diagonal variable M(i,i); for every row k > i
/// the entry M(k,i) pairs with the diagonal, conditioned on the entries below
/// it, M(k+1..n-1, i). The bottom row holds the first tree, row k belongs to
/// tree n-1-k. The copula stored at (k,i) takes the diagonal variable as its
/// first argument. Matrix entries are 1-based variable labels, 0 above the
/// diagonal.
class RVineSpec
{
public:
  RVineSpec() = default;
  explicit RVineSpec(std::size_t dimension);

  std::size_t dimension() const { return n_; }

  /// 1-based label at (row, col).
  int structure(std::size_t row, std::size_t col) const { return m_[row * n_ + col]; }
  void set_structure(std::size_t row, std::size_t col, int label) { m_[row * n_ + col] = label; }

  const FittedBicop& pair(std::size_t row, std::size_t col) const { return pc_[row * n_ + col]; }
  void set_pair(std::size_t row, std::size_t col, const FittedBicop& c) { pc_[row * n_ + col] = c; }

  /// Edges grouped by tree; trees()[t] has n-1-t edges.
  std::vector<std::vector<VineEdge>> trees() const;
  std::size_t edge_count() const { return n_ * (n_ - 1) / 2; }

  /// Throws InvalidParameter unless the matrix encodes a regular vine
  /// (permutation diagonal, nested spanning trees, proximity).
  void validate() const;
  bool is_valid() const;

  /// Same structure and the same family and parameters on every edge
  /// (fit diagnostics are ignored).
  bool operator==(const RVineSpec& other) const;

private:
  std::size_t n_ = 0;
  std::vector<int> m_;
  std::vector<FittedBicop> pc_;
};

/// Vine with every edge set to the given copula on the D-vine path
/// 1-2-...-n; a convenient starting point for tests and hand-built specs.
RVineSpec
make_dvine(std::size_t dimension, const FittedBicop& copula = {});

/// Sequential (tree-by-tree) maximum spanning tree selection on |Kendall's
/// tau| with per-edge family selection. `u` holds one column per variable.
RVineSpec
select_and_fit(const Eigen::MatrixXd& u, const std::vector<CopulaFamily>& candidates);

/// Copula log-density at one point.
double
log_density(const RVineSpec& spec, std::span<const double> u);

/// N x n uniforms drawn by inverse Rosenblatt transform. Row r uses its own
/// generator seeded from (seed, r) and consumes exactly n uniforms.
Eigen::MatrixXd
sample(const RVineSpec& spec, std::size_t n_rows, std::uint64_t seed, std::size_t threads = 0);

/// Threshold below which |tau| is treated as independence for m observations.
double
independence_threshold(std::size_t m);

nlohmann::json
to_json(const RVineSpec& spec);

RVineSpec
rvine_from_json(const nlohmann::json& j);

} // namespace vinefx
