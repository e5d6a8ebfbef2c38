#include "vinefx/marginals.hpp"

#include "vinefx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinefx {

namespace {

double
sample_sd(std::span<const double> x)
{
  const double m = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / m;
  double ss = 0.0;
  for (double v : x)
    ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (m - 1.0));
}

void
check_sample(std::span<const double> samples)
{
  if (samples.size() < MarginalModel::min_samples)
    throw DegenerateSample("need at least " +
                           std::to_string(MarginalModel::min_samples) +
                           " samples, got " + std::to_string(samples.size()));
  for (double v : samples)
    if (!std::isfinite(v))
      throw DegenerateSample("sample contains a non-finite value");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi)
    throw DegenerateSample("all samples are equal");
}

} // namespace

double
quantile_linear(std::vector<double> values, double p)
{
  if (values.empty())
    throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double
silverman_bandwidth(std::span<const double> samples)
{
  check_sample(samples);
  const double sd = sample_sd(samples);
  std::vector<double> sorted(samples.begin(), samples.end());
  const double iqr =
    quantile_linear(sorted, 0.75) - quantile_linear(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
  return 2.345 * spread *
         std::pow(static_cast<double>(samples.size()), -0.2);
}

MarginalModel
MarginalModel::fit(std::span<const double> samples)
{
  MarginalModel m;
  m.bandwidth_ = silverman_bandwidth(samples);
  m.samples_.assign(samples.begin(), samples.end());

  const double h = m.bandwidth_;
  const auto [smin, smax] =
    std::minmax_element(m.samples_.begin(), m.samples_.end());
  const double lo = *smin - 3.0 * h;
  const double hi = *smax + 3.0 * h;
  const double last = static_cast<double>(grid_size - 1);
  m.step_ = (hi - lo) / last;

  m.grid_.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i)
    m.grid_[i] = lo + (hi - lo) * (static_cast<double>(i) / last);
  m.grid_.back() = hi;

  // Epanechnikov kernel K(t) = 3/4 (1 - t^2) on |t| <= 1.
  const double scale = 1.0 / (static_cast<double>(m.samples_.size()) * h);
  m.density_.assign(grid_size, 0.0);
  for (std::size_t i = 0; i < grid_size; ++i) {
    double acc = 0.0;
    for (double s : m.samples_) {
      const double t = (m.grid_[i] - s) / h;
      if (t > -1.0 && t < 1.0)
        acc += 0.75 * (1.0 - t * t);
    }
    m.density_[i] = acc * scale;
  }

  // Cumulative trapezoid, rescaled so the tabulated density integrates to
  // one on the grid.
  m.cdf_.assign(grid_size, 0.0);
  for (std::size_t i = 1; i < grid_size; ++i)
    m.cdf_[i] =
      m.cdf_[i - 1] + 0.5 * (m.density_[i - 1] + m.density_[i]) * m.step_;
  const double total = m.cdf_.back();
  for (auto& d : m.density_)
    d /= total;
  for (auto& c : m.cdf_)
    c /= total;
  m.cdf_.back() = 1.0;
  return m;
}

double
MarginalModel::cdf(double x) const
{
  if (!(x > grid_.front()))
    return 0.0;
  if (!(x < grid_.back()))
    return 1.0;
  auto i = static_cast<std::size_t>((x - grid_.front()) / step_);
  i = std::min(i, grid_size - 2);
  const double t = std::clamp((x - grid_[i]) / step_, 0.0, 1.0);
  return std::clamp(cdf_[i] + t * (cdf_[i + 1] - cdf_[i]), 0.0, 1.0);
}

double
MarginalModel::inv_cdf(double u) const
{
  if (!(u > 0.0))
    return grid_.front();
  if (!(u < 1.0))
    return grid_.back();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const auto i = static_cast<std::size_t>(it - cdf_.begin());
  const double f0 = cdf_[i - 1];
  const double f1 = cdf_[i];
  const double t = (u - f0) / (f1 - f0);
  return grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
}

UniformPanel
pit_transform(const std::vector<std::string>& names, const Eigen::MatrixXd& values)
{
  if (values.cols() == 0 || values.rows() == 0)
    throw EmptyPanel();
  if (static_cast<std::size_t>(values.cols()) != names.size())
    throw DimensionMismatch("column names do not match value columns");

  UniformPanel out{ names, Eigen::MatrixXd(values.rows(), values.cols()) };
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const Eigen::VectorXd col = values.col(j);
    MarginalModel model;
    try {
      model = MarginalModel::fit(std::span<const double>(col.data(), col.size()));
    } catch (const DegenerateSample& e) {
      throw DegenerateSample("column '" + names[static_cast<std::size_t>(j)] +
                             "': " + e.what());
    }
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      out.u(i, j) = model.cdf(col(i));
  }
  return out;
}

UniformPanel
pit_transform(const ReturnPanel& panel)
{
  if (panel.cols() == 0 || panel.rows() == 0)
    throw EmptyPanel();
  return pit_transform(panel.names(), panel.values);
}

double
ks_uniform(std::vector<double> u)
{
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = std::clamp(u[i], 0.0, 1.0);
    d = std::max({ d,
                   static_cast<double>(i + 1) / n - x,
                   x - static_cast<double>(i) / n });
  }
  return d;
}

} // namespace vinefx
