#pragma once

#include "sepde/constants.hpp"
#include "sepde/nemytskii.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sepde {

/// (a): A(u) = N(phi^{-1} u); (b): A(u) = N(phi^{-1}(u)^+).
enum class Variant { a, b };
enum class Method { picard, newton, hybrid };

std::string to_string(Variant v);
std::string to_string(Method m);

/// -Delta u + lambda u = f(x, u, mu) in the box, u = 0 on its boundary.
struct Problem {
  Grid grid;
  double lambda = 0.0;
  Nonlinearity nl;
  Variant variant = Variant::a;
  double R = 1.0;
  /// Discrete lambda*; computed on demand when absent.
  std::optional<double> lambda_star;
};

/// Throws InvalidArgument unless 0 <= lambda <= lambda*_h (1 + 1e-10) and the
/// variant suits the nonlinearity. Returns lambda*_h.
double validate_problem(const Problem& prob, const LaplacianOperator& op);

struct SolveOptions {
  Method method = Method::hybrid;
  double omega = 0.5;
  double omega_min = 1.0 / 64.0;
  double tol = 1e-10;
  int max_iter = 1000;
  double inner_tol = 1e-12;
  /// Hybrid switches to Newton below this relative fixed-point residual.
  double newton_switch = 1e-3;
  std::optional<Vector> initial_u;
  /// Called with (iteration, u) for every accepted iterate.
  std::function<void(int, const Vector&)> observer;
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  int picard_steps = 0;
  int newton_steps = 0;
  /// |u - T(u)|_2 / max(|u|_2, 1).
  double fixed_point_residual = 0.0;
  /// |-Delta_h v + lambda v - N(v)| in discrete L^2 and at the worst node.
  double strong_residual_l2 = 0.0;
  double strong_residual_max = 0.0;
  double u_norm = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double omega = 0.0;
  std::vector<std::string> trace;
  std::string message;

  /// max(|u|_2, 1): the scale every residual tolerance is measured against.
  double scale() const { return std::max(u_norm, 1.0); }
};

struct SolveResult {
  Field u;  ///< fixed point of T in L^2
  Field v;  ///< phi^{-1} u, the strong solution
  SolveReport report;
};

/// T(u) = A(u) + B(u) with B u = -lambda phi^{-1} u.
Field fixed_point_map(const Problem& prob, const Field& u, double tol_inner);

/// Computes a fixed point u = T(u) and v = phi^{-1} u. Non-convergence is
/// reported (converged = false, best iterate returned), never thrown.
SolveResult solve_P(const Problem& prob, const SolveOptions& opts);

struct QOptions {
  SolveOptions solve;
  /// Defaults to (b) when h >= 0 everywhere, else (a).
  std::optional<Variant> variant;
  double R = 1.0;
};

struct QResult {
  Field w;  ///< solution of -Delta w + lambda w = mu w^p + h
  SolveResult p_solution;
  double beta = 0.0;
  double Gamma = 0.0;
  double mu_threshold = 0.0;
  bool within_regime = true;
  Variant variant = Variant::a;
  ExponentVerdict exponent = ExponentVerdict::extension;
  double q_residual_l2 = 0.0;
  double q_residual_max = 0.0;
  /// Set when h >= 0 and variant (b): the strict positivity conclusion min w > 0.
  std::optional<bool> strictly_positive;
  std::vector<std::string> notes;
};

/// -Delta w + lambda w = mu w^p + h via the rescaled problem with
/// f = u^p/(2 Gamma) + beta h, beta = (2 mu Gamma)^(1/(p-1)), and w = v / beta.
QResult solve_Q(const Grid& grid, double lambda, double mu, double p, const Field& h,
                const QOptions& opts, const ConstantsReport& consts);

/// g(x,u) with its growth certificate |g| <= a |u|^p + b.
struct GrowthSpec {
  PointwiseRule g;
  PointwiseRule dg;
  double a;
  Field b;
  double p;
};

struct EigenResult {
  SolveResult p_solution;
  double mu_star = 0.0;
  bool within_regime = true;
  ExponentVerdict exponent = ExponentVerdict::extension;
  std::vector<std::string> notes;
};

/// -Delta v + lambda v = mu g(x, v).
EigenResult solve_eigenproblem(const Grid& grid, double lambda, double mu, const GrowthSpec& spec,
                               const SolveOptions& opts, const ConstantsReport& consts,
                               double R = 1.0);

}  // namespace sepde
