#include "vinefx/scenarios.hpp"

#include "vinefx/errors.hpp"
#include "vinefx/io.hpp"
#include "vinefx/marginals.hpp"
#include "vinefx/parallel.hpp"
#include "vinefx/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace vinefx {

namespace {

// Re-raises a module error with the pipeline stage prepended, keeping its type.
template<typename Fn>
auto
staged(const char* stage, Fn&& fn) -> decltype(fn())
{
  const std::string p = std::string(stage) + ": ";
  try {
    return fn();
  } catch (const DegenerateSample& e) {
    throw DegenerateSample(p + e.what());
  } catch (const FitFailure& e) {
    throw FitFailure(p + e.what());
  } catch (const NonConvergence& e) {
    throw NonConvergence(p + e.what());
  } catch (const InvalidParameter& e) {
    throw InvalidParameter(p + e.what());
  }
}

bool
is_constant(const Eigen::VectorXd& c)
{
  return c.size() == 0 || c.maxCoeff() == c.minCoeff();
}

void
check_request(const ReturnPanel& p, std::size_t n)
{
  if (p.cols() == 0 || p.rows() == 0)
    throw EmptyPanel();
  if (n < 1)
    throw InvalidParameter("scenario count must be at least 1");
}

} // namespace

std::string_view
method_name(ScenarioMethod m)
{
  return m == ScenarioMethod::RVC ? "rvc" : "mvn";
}

ScenarioMethod
method_from_name(std::string_view name)
{
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "rvc")
    return ScenarioMethod::RVC;
  if (s == "mvn")
    return ScenarioMethod::MVN;
  throw InvalidParameter("unknown scenario method '" + std::string(name) + "'");
}

std::optional<std::size_t>
ScenarioSet::find(const std::string& name) const
{
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name)
      return j;
  return std::nullopt;
}

Eigen::VectorXd
ScenarioSet::column(const std::string& name) const
{
  const auto j = find(name);
  if (!j)
    throw MissingColumn(name);
  return values.col(static_cast<Eigen::Index>(*j));
}

void
ScenarioSet::validate() const
{
  if (values.rows() == 0)
    throw EmptyScenarios();
  if (static_cast<std::size_t>(values.cols()) != names.size())
    throw DimensionMismatch("scenario columns do not match names");
  if (probabilities.size() != size())
    throw DimensionMismatch("one probability per scenario required");
  if (!values.allFinite())
    throw Error("scenario values must be finite");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0))
      throw Error("scenario probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12 * std::max<double>(1.0, static_cast<double>(probabilities.size())))
    throw Error("scenario probabilities sum to " + format_number(total));
}

ScenarioSet
make_scenarios(std::vector<std::string> names, Eigen::MatrixXd values)
{
  ScenarioSet s;
  s.names = std::move(names);
  const auto n = static_cast<std::size_t>(values.rows());
  s.values = std::move(values);
  s.probabilities.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  s.validate();
  return s;
}

ReturnPanel
adjust_returns(const ReturnPanel& panel)
{
  panel.validate();
  ReturnPanel out = panel;
  out.rates.clear();
  for (std::size_t j = 0; j < panel.cols(); ++j) {
    const auto& info = panel.series[j];
    const auto it = panel.rates.find(info.currency);
    if (it == panel.rates.end())
      throw MissingRateSeries(info.currency);
    const double sign = info.kind == SeriesKind::Asset ? -1.0 : 1.0;
    out.values.col(static_cast<Eigen::Index>(j)) += sign * it->second;
  }
  return out;
}

ScenarioSet
generate_rvc(const ReturnPanel& adjusted,
             std::size_t n,
             const std::vector<CopulaFamily>& candidates,
             std::uint64_t seed,
             RVineSpec* fitted)
{
  check_request(adjusted, n);
  const auto d = static_cast<Eigen::Index>(adjusted.cols());
  const auto rows = static_cast<Eigen::Index>(n);

  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < d; ++j)
    if (!is_constant(adjusted.values.col(j)))
      live.push_back(j);

  Eigen::MatrixXd out(rows, d);
  for (Eigen::Index j = 0; j < d; ++j)
    if (std::find(live.begin(), live.end(), j) == live.end())
      out.col(j).setConstant(adjusted.values(0, j));
  if (live.empty())
    return make_scenarios(adjusted.names(), std::move(out));

  const auto names = adjusted.names();
  std::vector<MarginalModel> margins;
  Eigen::MatrixXd u(adjusted.values.rows(), static_cast<Eigen::Index>(live.size()));
  staged("marginals", [&] {
    for (std::size_t k = 0; k < live.size(); ++k) {
      const Eigen::VectorXd col = adjusted.values.col(live[k]);
      try {
        margins.push_back(MarginalModel::fit(std::span<const double>(col.data(), col.size())));
      } catch (const DegenerateSample& e) {
        throw DegenerateSample("column '" + names[static_cast<std::size_t>(live[k])] +
                               "': " + e.what());
      }
      for (Eigen::Index i = 0; i < col.size(); ++i)
        u(i, static_cast<Eigen::Index>(k)) = margins.back().cdf(col(i));
    }
  });

  Eigen::MatrixXd w;
  if (live.size() == 1) {
    w.resize(rows, 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
      Rng rng(substream_seed(seed, static_cast<std::uint64_t>(r)));
      w(r, 0) = uniform_open(rng);
    }
  } else {
    const auto spec = staged("vine fit", [&] { return select_and_fit(u, candidates); });
    if (fitted)
      *fitted = spec;
    w = staged("vine sampling", [&] { return sample(spec, n, seed); });
  }

  parallel_for(n, [&](std::size_t r) {
    const auto ri = static_cast<Eigen::Index>(r);
    for (std::size_t k = 0; k < live.size(); ++k)
      out(ri, live[k]) = margins[k].inv_cdf(w(ri, static_cast<Eigen::Index>(k)));
  });
  return make_scenarios(names, std::move(out));
}

ScenarioSet
generate_mvn(const ReturnPanel& adjusted, std::size_t n, std::uint64_t seed)
{
  check_request(adjusted, n);
  const auto d = static_cast<Eigen::Index>(adjusted.cols());
  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd& x = adjusted.values;
  if (x.rows() < 2)
    throw CovarianceFailure("need at least two periods to estimate a covariance");

  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < d; ++j)
    if (!is_constant(x.col(j)))
      live.push_back(j);
  const auto k = static_cast<Eigen::Index>(live.size());

  Eigen::MatrixXd sub(x.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c)
    sub.col(c) = x.col(live[static_cast<std::size_t>(c)]);
  const Eigen::VectorXd mean = sub.colwise().mean();
  const Eigen::MatrixXd centered = sub.rowwise() - mean.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);

  Eigen::MatrixXd lower;
  if (k > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      cov.diagonal().array() += 1e-10 * cov.trace();
      llt.compute(cov);
      if (llt.info() != Eigen::Success)
        throw CovarianceFailure("sample covariance is not positive definite after jitter");
    }
    lower = llt.matrixL();
  }

  Eigen::MatrixXd out(rows, d);
  for (Eigen::Index j = 0; j < d; ++j)
    out.col(j).setConstant(x(0, j));
  const boost::math::normal_distribution<double> normal;
  parallel_for(n, [&](std::size_t r) {
    Rng rng(substream_seed(seed, r));
    Eigen::VectorXd z(k);
    for (Eigen::Index c = 0; c < k; ++c)
      z(c) = boost::math::quantile(normal, uniform_open(rng));
    const Eigen::VectorXd draw = mean + lower * z;
    for (Eigen::Index c = 0; c < k; ++c)
      out(static_cast<Eigen::Index>(r), live[static_cast<std::size_t>(c)]) = draw(c);
  });
  return make_scenarios(adjusted.names(), std::move(out));
}

ScenarioSet
generate_scenarios(ScenarioMethod method,
                   const ReturnPanel& adjusted,
                   std::size_t n,
                   std::uint64_t seed)
{
  if (method == ScenarioMethod::MVN)
    return generate_mvn(adjusted, n, seed);
  return generate_rvc(adjusted, n, parametric_families(), seed);
}

std::string
scenarios_to_csv(const ScenarioSet& s)
{
  std::string out = "scenario_id";
  for (const auto& name : s.names)
    out += "," + name;
  out += "\n";
  for (Eigen::Index r = 0; r < s.values.rows(); ++r) {
    out += std::to_string(r + 1);
    for (Eigen::Index c = 0; c < s.values.cols(); ++c) {
      out += ",";
      out += format_number(s.values(r, c));
    }
    out += "\n";
  }
  return out;
}

ScenarioSet
scenarios_from_csv(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw EmptyScenarios();
  auto header = split_csv_line(line);
  if (header.empty() || header.front() != "scenario_id")
    throw ParseError(1, "first column must be 'scenario_id'");
  header.erase(header.begin());

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size() + 1)
      throw ParseError(lineno, "expected " + std::to_string(header.size() + 1) +
                                 " cells, found " + std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < header.size(); ++c)
      row.push_back(parse_cell(cells[c + 1], lineno, header[c]));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw EmptyScenarios();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < header.size(); ++c)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return make_scenarios(std::move(header), std::move(values));
}

void
write_scenarios(const std::filesystem::path& path, const ScenarioSet& s)
{
  write_text(path, scenarios_to_csv(s));
}

ScenarioSet
read_scenarios(const std::filesystem::path& path)
{
  return scenarios_from_csv(read_text(path));
}

} // namespace vinefx
