#pragma once

#include "vinefx/random.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vinefx {

enum class CopulaFamily
{
  Independence,
  Gaussian,
  StudentT,
  Clayton,
  Gumbel,
  Frank,
  Clayton90,
  Clayton180,
  Clayton270,
  Gumbel90,
  Gumbel180,
  Gumbel270
};

std::string_view
family_name(CopulaFamily family);

/// Inverse of family_name; throws InvalidParameter for unknown names.
CopulaFamily
family_from_name(std::string_view name);

/// Every family, Independence first.
const std::vector<CopulaFamily>&
all_families();

/// The eleven parametric families used for scenario generation
/// (everything except Independence).
const std::vector<CopulaFamily>&
parametric_families();

/// Number of free parameters (0, 1 or 2).
int
parameter_count(CopulaFamily family);

/// Sign of the dependence the family can express: +1, -1, or 0 for both
/// (Independence counts as 0).
int
dependence_sign(CopulaFamily family);

/// True when (theta, theta2) lies in the admissible range of the family.
bool
parameters_in_range(CopulaFamily family, double theta, double theta2);

/// Bounds used by the likelihood search, already pulled 1e-4 inside any
/// finite range boundary.
struct SearchBounds
{
  double lo;
  double hi;
};

SearchBounds
search_bounds(CopulaFamily family);

/// Degrees-of-freedom search interval for the Student t family.
inline constexpr SearchBounds student_df_bounds{ 2.0 + 1e-4, 30.0 };

/// A bivariate copula with concrete parameters. `theta2` carries the Student
/// t degrees of freedom and is zero for every other family.
struct FittedBicop
{
  CopulaFamily family = CopulaFamily::Independence;
  double theta = 0.0;
  double theta2 = 0.0;
  double loglik = 0.0;
  std::size_t n_obs = 0;

  /// Throws InvalidParameter when out of range.
  void validate() const;
  int parameter_count() const { return vinefx::parameter_count(family); }
  /// 2k - 2 loglik
  double aic() const;

  bool operator==(const FittedBicop&) const = default;
};

FittedBicop
make_bicop(CopulaFamily family, double theta = 0.0, double theta2 = 0.0);

/// Copula of (V, U) given the copula of (U, V).
FittedBicop
transpose(const FittedBicop& c);

double
density(const FittedBicop& c, double u, double v);

double
log_density(const FittedBicop& c, double u, double v);

/// Copula distribution function C(u, v).
double
copula_cdf(const FittedBicop& c, double u, double v);

/// Conditional distribution of U given V = v, i.e. dC(u, v)/dv.
double
h_func(const FittedBicop& c, double u, double v);

/// Conditional distribution of V given U = u, i.e. dC(u, v)/du.
double
h_func_first(const FittedBicop& c, double u, double v);

/// Solves h_func(c, u, v) = w for u.
double
inv_h(const FittedBicop& c, double w, double v);

/// Solves h_func_first(c, u, v) = w for v.
double
inv_h_first(const FittedBicop& c, double w, double u);

/// Kendall's tau implied by the parameters.
double
model_tau(const FittedBicop& c);

/// Kendall's tau-b of two paired samples, O(m log m).
double
empirical_tau(std::span<const double> x, std::span<const double> y);

double
bicop_loglik(const FittedBicop& c, std::span<const double> u, std::span<const double> v);

/// Maximum-likelihood fit of one family, started from tau inversion.
FittedBicop
fit(CopulaFamily family, std::span<const double> u, std::span<const double> v);

/// Fits every admissible candidate and keeps the one with the lowest AIC.
/// Candidates whose dependence sign contradicts the empirical tau are
/// skipped.
FittedBicop
select_family(std::span<const double> u,
              std::span<const double> v,
              const std::vector<CopulaFamily>& candidates);

/// Draws n pairs (u, v) from the copula.
std::vector<std::pair<double, double>>
simulate(const FittedBicop& c, std::size_t n, Rng& rng);

/// Parameter implied by a target Kendall's tau (start value of fit()).
FittedBicop
tau_inversion(CopulaFamily family, double tau);

} // namespace vinefx
