#pragma once

#include "vinefx/panel.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace vinefx {

/// Smoothed empirical distribution of one return series: an Epanechnikov
/// kernel density tabulated on an equally spaced grid together with its
/// cumulative distribution. Immutable once fitted.
class MarginalModel
{
public:
  static constexpr std::size_t grid_size = 1024;
  static constexpr std::size_t min_samples = 8;

  /// Fits the kernel density with the rule-of-thumb bandwidth.
  ///
  /// Throws DegenerateSample for fewer than `min_samples` values, any
  /// non-finite value, or a constant sample.
  static MarginalModel fit(std::span<const double> samples);

  double bandwidth() const { return bandwidth_; }
  double grid_step() const { return step_; }
  const std::vector<double>& samples() const { return samples_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& density() const { return density_; }
  const std::vector<double>& cdf_table() const { return cdf_; }

  /// Probability integral transform, clamped to [0, 1].
  double cdf(double x) const;
  /// Generalised inverse inf{x : F(x) >= u} with linear interpolation
  /// between grid nodes; 0 and 1 map to the grid endpoints.
  double inv_cdf(double u) const;

private:
  std::vector<double> samples_;
  double bandwidth_ = 0.0;
  double step_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> density_;
  std::vector<double> cdf_;
};

/// h = 2.345 * min(sd, IQR / 1.349) * m^(-1/5); falls back to the standard
/// deviation when the interquartile range is zero.
double
silverman_bandwidth(std::span<const double> samples);

inline MarginalModel
fit_kde(std::span<const double> samples)
{
  return MarginalModel::fit(samples);
}

/// Sample quantile with linear interpolation between order statistics.
double
quantile_linear(std::vector<double> values, double p);

/// Pseudo-observations: one column per input column, each mapped through its
/// own fitted marginal.
struct UniformPanel
{
  std::vector<std::string> names;
  Eigen::MatrixXd u;
};

UniformPanel
pit_transform(const std::vector<std::string>& names, const Eigen::MatrixXd& values);

/// PIT of every series column of the panel (interest-rate series excluded).
UniformPanel
pit_transform(const ReturnPanel& panel);

/// Kolmogorov-Smirnov distance between the empirical distribution of `u` and
/// the uniform distribution on [0, 1].
double
ks_uniform(std::vector<double> u);

} // namespace vinefx
