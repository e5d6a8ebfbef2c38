#include "vinefx/bicop.hpp"

#include "vinefx/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace vinefx {

namespace {

constexpr double kClamp = 1e-10;
constexpr double kInside = 1e-4;
constexpr double kClaytonMax = 28.0;
constexpr double kGumbelMax = 17.0;
constexpr double kFrankMax = 35.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Kind
{
  Independence,
  Gaussian,
  StudentT,
  Clayton,
  Gumbel,
  Frank
};

struct Shape
{
  Kind kind;
  int rotation; // 0, 90, 180, 270
};

Shape
shape_of(CopulaFamily f)
{
  switch (f) {
    case CopulaFamily::Independence: return { Kind::Independence, 0 };
    case CopulaFamily::Gaussian: return { Kind::Gaussian, 0 };
    case CopulaFamily::StudentT: return { Kind::StudentT, 0 };
    case CopulaFamily::Clayton: return { Kind::Clayton, 0 };
    case CopulaFamily::Gumbel: return { Kind::Gumbel, 0 };
    case CopulaFamily::Frank: return { Kind::Frank, 0 };
    case CopulaFamily::Clayton90: return { Kind::Clayton, 90 };
    case CopulaFamily::Clayton180: return { Kind::Clayton, 180 };
    case CopulaFamily::Clayton270: return { Kind::Clayton, 270 };
    case CopulaFamily::Gumbel90: return { Kind::Gumbel, 90 };
    case CopulaFamily::Gumbel180: return { Kind::Gumbel, 180 };
    case CopulaFamily::Gumbel270: return { Kind::Gumbel, 270 };
  }
  throw InvalidParameter("unknown copula family");
}

// Unrotated copula with its own (positive for Clayton/Gumbel) parameter.
struct Base
{
  Kind kind;
  double p;
  double df;
};

struct Rotated
{
  Base base;
  int rotation;
};

Rotated
resolve(const FittedBicop& c)
{
  c.validate();
  const auto s = shape_of(c.family);
  const double p = (s.rotation == 90 || s.rotation == 270) ? -c.theta : c.theta;
  return { { s.kind, p, c.theta2 }, s.rotation };
}

double
clamp01(double x)
{
  return std::clamp(x, kClamp, 1.0 - kClamp);
}

const boost::math::normal_distribution<double> kNormal{};

double
qnorm(double u)
{
  return boost::math::quantile(kNormal, u);
}

double
pnorm(double x)
{
  return boost::math::cdf(kNormal, x);
}

double
qt(double u, double df)
{
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), u);
}

double
pt(double x, double df)
{
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

// log(u^-t + v^-t - 1) without overflow.
double
clayton_log_sum(double u, double v, double t)
{
  const double a = -t * std::log(u);
  const double b = -t * std::log(v);
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

double
base_log_density(const Base& b, double u, double v)
{
  u = clamp01(u);
  v = clamp01(v);
  switch (b.kind) {
    case Kind::Independence:
      return 0.0;
    case Kind::Gaussian: {
      const double r = b.p;
      const double x = qnorm(u);
      const double y = qnorm(v);
      const double s = 1.0 - r * r;
      return -0.5 * std::log(s) - (r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * s);
    }
    case Kind::StudentT: {
      const double r = b.p;
      const double nu = b.df;
      const double x = qt(u, nu);
      const double y = qt(v, nu);
      const double s = 1.0 - r * r;
      return std::lgamma((nu + 2.0) / 2.0) + std::lgamma(nu / 2.0) -
             2.0 * std::lgamma((nu + 1.0) / 2.0) - 0.5 * std::log(s) -
             (nu + 2.0) / 2.0 *
               std::log1p((x * x + y * y - 2.0 * r * x * y) / (nu * s)) +
             (nu + 1.0) / 2.0 *
               (std::log1p(x * x / nu) + std::log1p(y * y / nu));
    }
    case Kind::Clayton: {
      const double t = b.p;
      return std::log1p(t) - (1.0 + t) * (std::log(u) + std::log(v)) -
             (2.0 + 1.0 / t) * clayton_log_sum(u, v, t);
    }
    case Kind::Gumbel: {
      const double t = b.p;
      const double lu = -std::log(u);
      const double lv = -std::log(v);
      const double ls = std::log(std::pow(lu, t) + std::pow(lv, t));
      const double a = std::exp(ls / t);
      return -a - std::log(u) - std::log(v) +
             (t - 1.0) * (std::log(lu) + std::log(lv)) + (1.0 / t - 2.0) * ls +
             std::log(a + t - 1.0);
    }
    case Kind::Frank: {
      const double t = b.p;
      const double a = std::expm1(-t * u);
      const double c = std::expm1(-t * v);
      const double d = std::expm1(-t);
      const double den = d + a * c;
      return std::log(-t * d) - t * (u + v) - 2.0 * std::log(std::abs(den));
    }
  }
  return 0.0;
}

// P(U <= u | V = v) of the unrotated copula.
double
base_h(const Base& b, double u, double v)
{
  if (u <= 0.0)
    return 0.0;
  if (u >= 1.0)
    return 1.0;
  u = clamp01(u);
  v = clamp01(v);
  double h = u;
  switch (b.kind) {
    case Kind::Independence:
      h = u;
      break;
    case Kind::Gaussian: {
      const double r = b.p;
      h = pnorm((qnorm(u) - r * qnorm(v)) / std::sqrt(1.0 - r * r));
      break;
    }
    case Kind::StudentT: {
      const double r = b.p;
      const double nu = b.df;
      const double x = qt(u, nu);
      const double y = qt(v, nu);
      const double scale = std::sqrt((nu + y * y) * (1.0 - r * r) / (nu + 1.0));
      h = pt((x - r * y) / scale, nu + 1.0);
      break;
    }
    case Kind::Clayton: {
      const double t = b.p;
      h = std::exp(-(t + 1.0) * std::log(v) -
                   (1.0 + 1.0 / t) * clayton_log_sum(u, v, t));
      break;
    }
    case Kind::Gumbel: {
      const double t = b.p;
      const double lu = -std::log(u);
      const double lv = -std::log(v);
      const double ls = std::log(std::pow(lu, t) + std::pow(lv, t));
      const double a = std::exp(ls / t);
      h = std::exp(-a + (1.0 / t - 1.0) * ls + (t - 1.0) * std::log(lv) - std::log(v));
      break;
    }
    case Kind::Frank: {
      const double t = b.p;
      const double a = std::expm1(-t * u);
      const double c = std::expm1(-t * v);
      const double d = std::expm1(-t);
      h = (c + 1.0) * a / (d + a * c);
      break;
    }
  }
  return std::clamp(h, 0.0, 1.0);
}

// Safeguarded Newton-bisection on a non-decreasing h with derivative dens.
template<typename H, typename D>
double
solve_increasing(H&& h, D&& dens, double w)
{
  double lo = 0.0;
  double hi = 1.0;
  double x = 0.5;
  for (int it = 0; it < 200; ++it) {
    const double fx = h(x) - w;
    if (std::abs(fx) <= 1e-14)
      return x;
    if (fx < 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(lo, 1e-300))
      return x;
    const double d = dens(x);
    double next = x - fx / d;
    if (!(d > 0.0) || !std::isfinite(next) || next <= lo || next >= hi)
      next = 0.5 * (lo + hi);
    if (next == x)
      return x;
    x = next;
  }
  if (std::abs(h(x) - w) <= 1e-9)
    return x;
  throw NonConvergence("inverse h-function did not converge in 200 iterations");
}

double
base_hinv_numeric(const Base& b, double w, double v)
{
  return solve_increasing([&](double u) { return base_h(b, u, v); },
                          [&](double u) { return std::exp(base_log_density(b, u, v)); },
                          w);
}

// Solves base_h(b, u, v) = w for u.
double
base_hinv(const Base& b, double w, double v)
{
  if (w <= 0.0)
    return 0.0;
  if (w >= 1.0)
    return 1.0;
  const double vc = clamp01(v);
  double u = std::numeric_limits<double>::quiet_NaN();
  switch (b.kind) {
    case Kind::Independence:
      return w;
    case Kind::Gaussian: {
      const double r = b.p;
      u = pnorm(qnorm(clamp01(w)) * std::sqrt(1.0 - r * r) + r * qnorm(vc));
      break;
    }
    case Kind::StudentT: {
      const double r = b.p;
      const double nu = b.df;
      const double y = qt(vc, nu);
      const double scale = std::sqrt((nu + y * y) * (1.0 - r * r) / (nu + 1.0));
      u = pt(qt(clamp01(w), nu + 1.0) * scale + r * y, nu);
      break;
    }
    case Kind::Frank: {
      const double t = b.p;
      const double c = std::expm1(-t * vc);
      const double d = std::expm1(-t);
      const double a = w * d / (1.0 + c * (1.0 - w));
      u = -std::log1p(a) / t;
      break;
    }
    case Kind::Clayton:
    case Kind::Gumbel:
      return base_hinv_numeric(b, w, v);
  }
  if (!std::isfinite(u) || u < 0.0 || u > 1.0 ||
      std::abs(base_h(b, u, v) - w) > 1e-10)
    return base_hinv_numeric(b, w, v);
  return u;
}

double
bivariate_normal_cdf(double x, double y, double r)
{
  // Owen's T representation; an exact zero argument is nudged off the
  // singular line of the T arguments (the distribution is continuous there).
  if (x == 0.0)
    x = 1e-15;
  if (y == 0.0)
    y = 1e-15;
  const double s = std::sqrt(1.0 - r * r);
  double p = 0.5 * pnorm(x) + 0.5 * pnorm(y) -
             boost::math::owens_t(x, (y - r * x) / (x * s)) -
             boost::math::owens_t(y, (x - r * y) / (y * s));
  if (x * y < 0.0)
    p -= 0.5;
  return std::clamp(p, 0.0, 1.0);
}

double
base_cdf(const Base& b, double u, double v)
{
  if (u <= 0.0 || v <= 0.0)
    return 0.0;
  if (u >= 1.0)
    return std::min(v, 1.0);
  if (v >= 1.0)
    return u;
  switch (b.kind) {
    case Kind::Independence:
      return u * v;
    case Kind::Gaussian:
      return bivariate_normal_cdf(qnorm(u), qnorm(v), b.p);
    case Kind::StudentT:
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double s) { return base_h(b, u, s); }, 0.0, v, 8, 1e-12);
    case Kind::Clayton:
      return std::exp(-clayton_log_sum(u, v, b.p) / b.p);
    case Kind::Gumbel: {
      const double t = b.p;
      return std::exp(-std::pow(std::pow(-std::log(u), t) + std::pow(-std::log(v), t), 1.0 / t));
    }
    case Kind::Frank: {
      const double t = b.p;
      return -std::log1p(std::expm1(-t * u) * std::expm1(-t * v) / std::expm1(-t)) / t;
    }
  }
  return u * v;
}

double
debye1(double x)
{
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
    [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); }, 0.0, x, 10, 1e-14);
  return integral / x;
}

double
frank_tau(double t)
{
  if (std::abs(t) < 1e-3)
    return t / 9.0 - t * t * t / 900.0;
  return 1.0 - 4.0 / t * (1.0 - debye1(t));
}

double
base_tau(const Base& b)
{
  switch (b.kind) {
    case Kind::Independence:
      return 0.0;
    case Kind::Gaussian:
    case Kind::StudentT:
      return 2.0 / std::numbers::pi * std::asin(b.p);
    case Kind::Clayton:
      return b.p / (b.p + 2.0);
    case Kind::Gumbel:
      return 1.0 - 1.0 / b.p;
    case Kind::Frank:
      return frank_tau(b.p);
  }
  return 0.0;
}

double
frank_from_tau(double tau)
{
  if (std::abs(tau) < 1e-9)
    return tau >= 0.0 ? kInside : -kInside;
  double lo = tau > 0.0 ? kInside : -kFrankMax;
  double hi = tau > 0.0 ? kFrankMax : -kInside;
  if (tau >= frank_tau(hi))
    return hi;
  if (tau <= frank_tau(lo))
    return lo;
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (frank_tau(mid) < tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Counts inversions of y (strict) with merge sort, sorting y in place.
std::uint64_t
count_inversions(std::vector<double>& y, std::vector<double>& buf, std::size_t lo, std::size_t hi)
{
  if (hi - lo < 2)
    return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(y, buf, lo, mid) + count_inversions(y, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      inv += mid - i;
      buf[k++] = y[j++];
    } else {
      buf[k++] = y[i++];
    }
  }
  while (i < mid)
    buf[k++] = y[i++];
  while (j < hi)
    buf[k++] = y[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

template<typename F>
double
golden_max(F&& f, double a, double b, double& best_value, double tol = 1e-9)
{
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > tol * (1.0 + std::abs(c)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  if (fc >= fd) {
    best_value = fc;
    return c;
  }
  best_value = fd;
  return d;
}

double
safe_loglik(const FittedBicop& c, std::span<const double> u, std::span<const double> v)
{
  const double ll = bicop_loglik(c, u, v);
  return std::isfinite(ll) ? ll : kNegInf;
}

// Student t log-likelihood profiled over rho at fixed degrees of freedom.
// The quantiles depend only on nu, so the inner search is cheap.
struct StudentProfile
{
  double rho;
  double loglik;
};

StudentProfile
student_profile(std::span<const double> u, std::span<const double> v, double nu, double rho0)
{
  const std::size_t m = u.size();
  std::vector<double> x(m), y(m);
  double margins = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = qt(clamp01(u[i]), nu);
    y[i] = qt(clamp01(v[i]), nu);
    margins += std::log1p(x[i] * x[i] / nu) + std::log1p(y[i] * y[i] / nu);
  }
  const double k = std::lgamma((nu + 2.0) / 2.0) + std::lgamma(nu / 2.0) -
                   2.0 * std::lgamma((nu + 1.0) / 2.0);
  auto ll = [&](double r) {
    const double s = 1.0 - r * r;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += std::log1p((x[i] * x[i] + y[i] * y[i] - 2.0 * r * x[i] * y[i]) / (nu * s));
    const double out = static_cast<double>(m) * (k - 0.5 * std::log(s)) -
                       (nu + 2.0) / 2.0 * acc + (nu + 1.0) / 2.0 * margins;
    return std::isfinite(out) ? out : kNegInf;
  };
  const auto rb = search_bounds(CopulaFamily::StudentT);
  double best_ll = kNegInf;
  double best = golden_max(ll, rb.lo, rb.hi, best_ll);
  const double at_start = ll(rho0);
  if (at_start > best_ll) {
    best = rho0;
    best_ll = at_start;
  }
  return { best, best_ll };
}

FittedBicop
fit_student(std::span<const double> u, std::span<const double> v, const FittedBicop& start)
{
  // Coarse log grid over the degrees of freedom, then golden-section
  // refinement of log(nu) between the neighbours of the best grid point.
  static constexpr std::array<double, 13> df_grid{ 2.1, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0,
                                                   10.0, 12.0, 15.0, 20.0, 25.0, 30.0 };
  std::size_t best_i = 0;
  StudentProfile best{ start.theta, kNegInf };
  for (std::size_t i = 0; i < df_grid.size(); ++i) {
    const auto p = student_profile(u, v, df_grid[i], start.theta);
    if (p.loglik > best.loglik) {
      best = p;
      best_i = i;
    }
  }
  double best_nu = df_grid[best_i];

  const double lo = std::log(best_i == 0 ? student_df_bounds.lo : df_grid[best_i - 1]);
  const double hi = std::log(best_i + 1 == df_grid.size() ? student_df_bounds.hi
                                                         : df_grid[best_i + 1]);
  StudentProfile refined = best;
  double refined_ll = kNegInf;
  const double log_nu = golden_max(
    [&](double t) { return student_profile(u, v, std::exp(t), best.rho).loglik; }, lo, hi,
    refined_ll, 1e-4);
  if (refined_ll > best.loglik) {
    best_nu = std::clamp(std::exp(log_nu), student_df_bounds.lo, student_df_bounds.hi);
    refined = student_profile(u, v, best_nu, best.rho);
  }

  FittedBicop out = make_bicop(CopulaFamily::StudentT, refined.rho, best_nu);
  out.loglik = safe_loglik(out, u, v);
  return out;
}

} // namespace

std::string_view
family_name(CopulaFamily family)
{
  switch (family) {
    case CopulaFamily::Independence: return "Independence";
    case CopulaFamily::Gaussian: return "Gaussian";
    case CopulaFamily::StudentT: return "StudentT";
    case CopulaFamily::Clayton: return "Clayton";
    case CopulaFamily::Gumbel: return "Gumbel";
    case CopulaFamily::Frank: return "Frank";
    case CopulaFamily::Clayton90: return "Clayton90";
    case CopulaFamily::Clayton180: return "Clayton180";
    case CopulaFamily::Clayton270: return "Clayton270";
    case CopulaFamily::Gumbel90: return "Gumbel90";
    case CopulaFamily::Gumbel180: return "Gumbel180";
    case CopulaFamily::Gumbel270: return "Gumbel270";
  }
  return "?";
}

CopulaFamily
family_from_name(std::string_view name)
{
  for (auto f : all_families())
    if (family_name(f) == name)
      return f;
  throw InvalidParameter("unknown copula family '" + std::string(name) + "'");
}

const std::vector<CopulaFamily>&
all_families()
{
  static const std::vector<CopulaFamily> v{
    CopulaFamily::Independence, CopulaFamily::Gaussian,   CopulaFamily::StudentT,
    CopulaFamily::Clayton,      CopulaFamily::Gumbel,     CopulaFamily::Frank,
    CopulaFamily::Clayton90,    CopulaFamily::Clayton180, CopulaFamily::Clayton270,
    CopulaFamily::Gumbel90,     CopulaFamily::Gumbel180,  CopulaFamily::Gumbel270
  };
  return v;
}

const std::vector<CopulaFamily>&
parametric_families()
{
  static const std::vector<CopulaFamily> v(all_families().begin() + 1, all_families().end());
  return v;
}

int
parameter_count(CopulaFamily family)
{
  switch (family) {
    case CopulaFamily::Independence: return 0;
    case CopulaFamily::StudentT: return 2;
    default: return 1;
  }
}

int
dependence_sign(CopulaFamily family)
{
  switch (family) {
    case CopulaFamily::Independence:
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
    case CopulaFamily::Frank:
      return 0;
    case CopulaFamily::Clayton90:
    case CopulaFamily::Clayton270:
    case CopulaFamily::Gumbel90:
    case CopulaFamily::Gumbel270:
      return -1;
    default:
      return 1;
  }
}

bool
parameters_in_range(CopulaFamily family, double theta, double theta2)
{
  if (family == CopulaFamily::Independence)
    return true;
  if (!std::isfinite(theta))
    return false;
  switch (family) {
    case CopulaFamily::Gaussian:
      return theta > -1.0 && theta < 1.0;
    case CopulaFamily::StudentT:
      return theta > -1.0 && theta < 1.0 && std::isfinite(theta2) && theta2 > 2.0;
    case CopulaFamily::Clayton:
    case CopulaFamily::Clayton180:
      return theta > 0.0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Gumbel180:
      return theta >= 1.0;
    case CopulaFamily::Frank:
      return theta != 0.0;
    case CopulaFamily::Clayton90:
    case CopulaFamily::Clayton270:
      return theta < 0.0;
    case CopulaFamily::Gumbel90:
    case CopulaFamily::Gumbel270:
      return theta <= -1.0;
    default:
      return false;
  }
}

SearchBounds
search_bounds(CopulaFamily family)
{
  switch (family) {
    case CopulaFamily::Independence: return { 0.0, 0.0 };
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT: return { -1.0 + kInside, 1.0 - kInside };
    case CopulaFamily::Clayton:
    case CopulaFamily::Clayton180: return { kInside, kClaytonMax };
    case CopulaFamily::Gumbel:
    case CopulaFamily::Gumbel180: return { 1.0 + kInside, kGumbelMax };
    case CopulaFamily::Frank: return { -kFrankMax, kFrankMax };
    case CopulaFamily::Clayton90:
    case CopulaFamily::Clayton270: return { -kClaytonMax, -kInside };
    case CopulaFamily::Gumbel90:
    case CopulaFamily::Gumbel270: return { -kGumbelMax, -1.0 - kInside };
  }
  return { 0.0, 0.0 };
}

void
FittedBicop::validate() const
{
  if (!parameters_in_range(family, theta, theta2))
    throw InvalidParameter("parameter (" + std::to_string(theta) + ", " +
                           std::to_string(theta2) + ") outside the range of " +
                           std::string(family_name(family)));
}

double
FittedBicop::aic() const
{
  return 2.0 * parameter_count() - 2.0 * loglik;
}

FittedBicop
make_bicop(CopulaFamily family, double theta, double theta2)
{
  FittedBicop c;
  c.family = family;
  c.theta = family == CopulaFamily::Independence ? 0.0 : theta;
  c.theta2 = family == CopulaFamily::StudentT ? theta2 : 0.0;
  c.validate();
  return c;
}

FittedBicop
transpose(const FittedBicop& c)
{
  FittedBicop t = c;
  if (c.family == CopulaFamily::Clayton90)
    t.family = CopulaFamily::Clayton270;
  else if (c.family == CopulaFamily::Clayton270)
    t.family = CopulaFamily::Clayton90;
  else if (c.family == CopulaFamily::Gumbel90)
    t.family = CopulaFamily::Gumbel270;
  else if (c.family == CopulaFamily::Gumbel270)
    t.family = CopulaFamily::Gumbel90;
  return t;
}

double
log_density(const FittedBicop& c, double u, double v)
{
  const auto r = resolve(c);
  switch (r.rotation) {
    case 90: return base_log_density(r.base, 1.0 - u, v);
    case 180: return base_log_density(r.base, 1.0 - u, 1.0 - v);
    case 270: return base_log_density(r.base, u, 1.0 - v);
    default: return base_log_density(r.base, u, v);
  }
}

double
density(const FittedBicop& c, double u, double v)
{
  return std::exp(log_density(c, u, v));
}

double
copula_cdf(const FittedBicop& c, double u, double v)
{
  const auto r = resolve(c);
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  switch (r.rotation) {
    case 90: return v - base_cdf(r.base, 1.0 - u, v);
    case 180: return u + v - 1.0 + base_cdf(r.base, 1.0 - u, 1.0 - v);
    case 270: return u - base_cdf(r.base, u, 1.0 - v);
    default: return base_cdf(r.base, u, v);
  }
}

double
h_func(const FittedBicop& c, double u, double v)
{
  const auto r = resolve(c);
  if (u <= 0.0)
    return 0.0;
  if (u >= 1.0)
    return 1.0;
  switch (r.rotation) {
    case 90: return 1.0 - base_h(r.base, 1.0 - u, v);
    case 180: return 1.0 - base_h(r.base, 1.0 - u, 1.0 - v);
    case 270: return base_h(r.base, u, 1.0 - v);
    default: return base_h(r.base, u, v);
  }
}

double
h_func_first(const FittedBicop& c, double u, double v)
{
  return h_func(transpose(c), v, u);
}

double
inv_h(const FittedBicop& c, double w, double v)
{
  const auto r = resolve(c);
  if (w <= 0.0)
    return 0.0;
  if (w >= 1.0)
    return 1.0;
  switch (r.rotation) {
    case 90: return 1.0 - base_hinv(r.base, 1.0 - w, v);
    case 180: return 1.0 - base_hinv(r.base, 1.0 - w, 1.0 - v);
    case 270: return base_hinv(r.base, w, 1.0 - v);
    default: return base_hinv(r.base, w, v);
  }
}

double
inv_h_first(const FittedBicop& c, double w, double u)
{
  return inv_h(transpose(c), w, u);
}

double
model_tau(const FittedBicop& c)
{
  const auto r = resolve(c);
  const double t = base_tau(r.base);
  return (r.rotation == 90 || r.rotation == 270) ? -t : t;
}

double
empirical_tau(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw LengthMismatch("series lengths differ: " + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()));
  const std::size_t n = x.size();
  if (n < 2)
    throw Error("Kendall's tau needs at least two observations");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  // Tied pairs in x and jointly tied pairs.
  std::uint64_t xtie = 0, ntie = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]])
      ++j;
    const std::uint64_t run = j - i;
    xtie += run * (run - 1) / 2;
    for (std::size_t k = i; k < j;) {
      std::size_t l = k;
      while (l < j && y[order[l]] == y[order[k]])
        ++l;
      const std::uint64_t r2 = l - k;
      ntie += r2 * (r2 - 1) / 2;
      k = l;
    }
    i = j;
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i)
    ys[i] = y[order[i]];
  const std::uint64_t dis = count_inversions(ys, buf, 0, n);

  std::uint64_t ytie = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i])
      ++j;
    const std::uint64_t run = j - i;
    ytie += run * (run - 1) / 2;
    i = j;
  }

  const double tot = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double num = tot - static_cast<double>(xtie) - static_cast<double>(ytie) +
                     static_cast<double>(ntie) - 2.0 * static_cast<double>(dis);
  const double den = std::sqrt(tot - static_cast<double>(xtie)) *
                     std::sqrt(tot - static_cast<double>(ytie));
  if (den == 0.0)
    return 0.0;
  return std::clamp(num / den, -1.0, 1.0);
}

double
bicop_loglik(const FittedBicop& c, std::span<const double> u, std::span<const double> v)
{
  if (u.size() != v.size())
    throw LengthMismatch("series lengths differ");
  if (c.family == CopulaFamily::Independence)
    return 0.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    ll += log_density(c, u[i], v[i]);
  return ll;
}

FittedBicop
tau_inversion(CopulaFamily family, double tau)
{
  tau = std::clamp(tau, -0.999, 0.999);
  const auto b = search_bounds(family);
  const double at = std::abs(tau);
  double theta = 0.0;
  double theta2 = 0.0;
  switch (family) {
    case CopulaFamily::Independence:
      return make_bicop(family);
    case CopulaFamily::Gaussian:
      theta = std::sin(std::numbers::pi * tau / 2.0);
      break;
    case CopulaFamily::StudentT:
      theta = std::sin(std::numbers::pi * tau / 2.0);
      theta2 = 8.0;
      break;
    case CopulaFamily::Clayton:
    case CopulaFamily::Clayton180:
      theta = tau > 0.0 ? 2.0 * tau / (1.0 - tau) : b.lo;
      break;
    case CopulaFamily::Clayton90:
    case CopulaFamily::Clayton270:
      theta = tau < 0.0 ? -2.0 * at / (1.0 - at) : b.hi;
      break;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Gumbel180:
      theta = tau > 0.0 ? 1.0 / (1.0 - tau) : b.lo;
      break;
    case CopulaFamily::Gumbel90:
    case CopulaFamily::Gumbel270:
      theta = tau < 0.0 ? -1.0 / (1.0 - at) : b.hi;
      break;
    case CopulaFamily::Frank:
      theta = frank_from_tau(tau);
      break;
  }
  theta = std::clamp(theta, b.lo, b.hi);
  if (family == CopulaFamily::Frank && theta == 0.0)
    theta = kInside;
  return make_bicop(family, theta, theta2);
}

FittedBicop
fit(CopulaFamily family, std::span<const double> u, std::span<const double> v)
{
  if (u.size() != v.size())
    throw LengthMismatch("series lengths differ: " + std::to_string(u.size()) +
                         " vs " + std::to_string(v.size()));
  if (u.size() < 8)
    throw FitFailure("need at least 8 observations to fit a copula");

  FittedBicop out;
  if (family == CopulaFamily::Independence) {
    out = make_bicop(family);
  } else {
    const FittedBicop start = tau_inversion(family, empirical_tau(u, v));
    const double start_ll = safe_loglik(start, u, v);
    if (family == CopulaFamily::StudentT) {
      out = fit_student(u, v, start);
    } else {
      auto b = search_bounds(family);
      if (family == CopulaFamily::Frank) {
        // Frank excludes zero; search the side the tau points to.
        if (start.theta > 0.0)
          b.lo = kInside;
        else
          b.hi = -kInside;
      }
      auto ll = [&](double t) { return safe_loglik(make_bicop(family, t), u, v); };
      double best_ll = kNegInf;
      double best = golden_max(ll, b.lo, b.hi, best_ll);
      for (double cand : { b.lo, b.hi }) {
        const double l = ll(cand);
        if (l > best_ll) {
          best_ll = l;
          best = cand;
        }
      }
      out = make_bicop(family, best);
      out.loglik = best_ll;
    }
    if (!(out.loglik >= start_ll) && std::isfinite(start_ll)) {
      out = start;
      out.loglik = start_ll;
    }
    if (!std::isfinite(out.loglik))
      throw FitFailure("no finite likelihood for " + std::string(family_name(family)));
  }
  out.n_obs = u.size();
  if (!parameters_in_range(out.family, out.theta, out.theta2))
    throw FitFailure("fitted parameter left the admissible range");
  return out;
}

FittedBicop
select_family(std::span<const double> u,
              std::span<const double> v,
              const std::vector<CopulaFamily>& candidates)
{
  if (candidates.empty())
    throw FitFailure("no candidate families");
  const double tau = empirical_tau(u, v);
  const int sign = tau > 0.0 ? 1 : (tau < 0.0 ? -1 : 0);

  bool have = false;
  FittedBicop best;
  std::string failures;
  for (auto f : candidates) {
    const int fs = dependence_sign(f);
    if (candidates.size() > 1 && fs != 0 && fs != sign)
      continue;
    try {
      auto c = fit(f, u, v);
      if (!have || c.aic() < best.aic()) {
        best = c;
        have = true;
      }
    } catch (const FitFailure& e) {
      failures += std::string(family_name(f)) + ": " + e.what() + "; ";
    }
  }
  if (!have)
    throw FitFailure("all candidate families failed" +
                     (failures.empty() ? std::string() : " (" + failures + ")"));
  return best;
}

std::vector<std::pair<double, double>>
simulate(const FittedBicop& c, std::size_t n, Rng& rng)
{
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = uniform_open(rng);
    const double w = uniform_open(rng);
    out.emplace_back(inv_h(c, w, v), v);
  }
  return out;
}

} // namespace vinefx
