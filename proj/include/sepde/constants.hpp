#pragma once

#include "sepde/elliptic.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace sepde {

/// Sampling and ascent parameters for the operator-norm estimators.
struct AscentBudget {
  int starts = 16;            ///< multistarts, the first being the eigenfunction
  int max_steps = 500;        ///< ascent steps per start
  double gain_tol = 1e-10;    ///< stop when the relative ratio gain falls below this
  double inner_tol = 1e-12;   ///< linear solve tolerance
  std::uint64_t seed = 0;
  int threads = 1;
};

struct NormEstimate {
  /// Best ratio over every evaluated candidate (a lower bound on the norm).
  double value = 0.0;
  /// Unit-L^2 field achieving `value`.
  Vector maximizer;
  /// L^2 norm of the Riemannian gradient at the maximizer.
  double stationarity = 0.0;
  int evaluations = 0;
  /// False when some start hit the step cap before the gain criterion.
  bool converged = true;
};

/// gamma_h = max_{u != 0} |phi^{-1} u|_{2p} / |u|_2 by multistart projected
/// gradient ascent on the unit L^2 sphere.
NormEstimate estimate_gamma_detailed(const LaplacianOperator& op, double p,
                                     const AscentBudget& budget);
double estimate_gamma(const LaplacianOperator& op, double p, const AscentBudget& budget);

/// Ratio |phi^{-1} u|_{2p} / |u|_2 for one field.
double embedding_ratio(const LaplacianOperator& op, double p, const Vector& u, double tol);

/// Discrete H^2 norm: L^2 norm of u, all forward first differences, the
/// per-axis second differences and the composed mixed differences.
double h2_norm(const Grid& grid, const Vector& u);

/// C_h = max |u|_{2,2,h} / |Delta_h u|_2 by power iteration on the
/// equivalent symmetric eigenproblem.
NormEstimate estimate_regularity_C(const LaplacianOperator& op, const AscentBudget& budget);

/// 1 / (2^p Gamma |h|^(p-1)).
double mu_threshold(double p, double Gamma, double h_norm);
/// (2 mu Gamma)^(1/(p-1)).
double beta_coefficient(double mu, double Gamma, double p);
/// 1 / (a Gamma + |b|).
double mu_star(double a, double Gamma, double b_norm);

enum class ExponentVerdict { admissible, inadmissible, extension };
ExponentVerdict admissible_exponent(double p, int dims);
std::string to_string(ExponentVerdict v);

struct ConstantsOptions {
  AscentBudget budget;
  /// Multiplier applied to gamma_h before it enters any threshold.
  double safety_factor = 1.1;
  /// Use gamma in place of Gamma = gamma^p in the threshold formulas.
  bool strict_paper_constants = false;
  bool estimate_C = false;
  double eigen_tol = 1e-10;
};

struct ConstantsReport {
  double p = 0.0;
  double gamma = 0.0;   ///< lower-bound estimate of |phi^{-1}|_{2 -> 2p}
  double Gamma = 0.0;   ///< gamma^p
  double safety_factor = 1.0;
  double lambda_star = 0.0;
  std::optional<double> regularity_C;
  bool strict_paper_constants = false;
  bool lower_bound = true;
  ExponentVerdict exponent = ExponentVerdict::extension;
  std::string method;
  std::uint64_t seed = 0;
  int starts = 0;
  int evaluations = 0;
  double stationarity = 0.0;
  bool ascent_converged = true;
  Vector maximizer;
  Grid grid;

  /// safety_factor * gamma.
  double gamma_inflated() const { return safety_factor * gamma; }
  /// The constant that enters f, beta, mu_{p,h} and mu*: (safety gamma)^p,
  /// or safety gamma in strict-paper mode.
  double threshold_constant() const;
};

/// Estimates lambda*, gamma (and optionally C) on the operator's grid.
ConstantsReport compute_constants(const LaplacianOperator& op, double p,
                                  const ConstantsOptions& options);

/// Builds a report from a user-supplied gamma instead of estimating it.
ConstantsReport constants_from_gamma(const LaplacianOperator& op, double p, double gamma,
                                     const ConstantsOptions& options);

}  // namespace sepde
