#pragma once

#include "sepde/grid.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>

namespace sepde {

/// Pointwise rule g(x, u).
using PointwiseRule = std::function<double(std::span<const double> x, double u)>;
/// Pointwise rule f(x, u, mu).
using ParametricRule = std::function<double(std::span<const double> x, double u, double mu)>;

/// Growth certificate |g(x,u)| <= a |u|^p + b(x).
struct GrowthBound {
  double a;
  Field b;
  double p;
};

/// f(x,u,mu) = u^p / (2 Gamma) + beta h(x). mu enters only through beta.
struct PowerSource {
  double p;
  double Gamma;
  double beta;
  Field h;
};

/// f(x,u,mu) = mu g(x,u) with a growth certificate on g.
struct GrowthBounded {
  PointwiseRule g;
  PointwiseRule dg;  // may be empty
  GrowthBound bound;
};

struct CustomRule {
  ParametricRule f;
  ParametricRule df;  // may be empty
  std::optional<GrowthBound> bound;
};

/// A Caratheodory nonlinearity f(x,u,mu) together with the parameter mu.
class Nonlinearity {
public:
  static Nonlinearity power_source(double p, double Gamma, double beta, Field h, double mu);
  static Nonlinearity growth_bounded(PointwiseRule g, GrowthBound bound, double mu,
                                     PointwiseRule dg = {});
  static Nonlinearity custom(ParametricRule f, double mu, ParametricRule df = {},
                             std::optional<GrowthBound> bound = std::nullopt);

  double mu() const noexcept { return mu_; }
  bool sign_certified() const noexcept { return sign_certified_; }
  Nonlinearity& certify_sign(bool certified) {
    sign_certified_ = certified;
    return *this;
  }

  const PowerSource* as_power_source() const { return std::get_if<PowerSource>(&rule_); }
  const GrowthBounded* as_growth_bounded() const { return std::get_if<GrowthBounded>(&rule_); }
  const CustomRule* as_custom() const { return std::get_if<CustomRule>(&rule_); }

  /// Growth certificate if the variant carries one.
  const GrowthBound* growth() const;

  /// True when f(x,u) is undefined for u < 0 (PowerSource, non-integer p),
  /// which forces the positive-part variant.
  bool requires_nonnegative() const;

  /// f(x, u, mu) at node `node` of `grid`.
  double value(const Grid& grid, Eigen::Index node, double u) const;
  /// d f / d u at node `node`; throws InvalidArgument when no derivative rule exists.
  double derivative(const Grid& grid, Eigen::Index node, double u) const;

  /// out_k = f(x_k, v_k) or f(x_k, v_k^+).
  void evaluate(const Grid& grid, const Vector& v, bool plus_variant, Vector& out) const;
  void differentiate(const Grid& grid, const Vector& v, bool plus_variant, Vector& out) const;

private:
  using Rule = std::variant<PowerSource, GrowthBounded, CustomRule>;
  Nonlinearity(Rule rule, double mu) : rule_(std::move(rule)), mu_(mu) {}

  const Grid* attached_grid() const;

  Rule rule_;
  double mu_;
  bool sign_certified_ = false;
};

/// N_f(v) = f(., v, mu).
Field apply_N(const Nonlinearity& nl, const Field& v);
/// N_f(v)^+ = f(., v^+, mu).
Field apply_N_plus(const Nonlinearity& nl, const Field& v);
/// Pointwise df/du; the plus variant has slope zero where v < 0.
Field pointwise_derivative(const Nonlinearity& nl, const Field& v, bool plus_variant);

/// u^p with exact integer powers for integral p; throws DomainError(node)
/// for u < 0 otherwise.
double signed_power(double u, double p, Eigen::Index node = -1);
bool is_integral(double p);

}  // namespace sepde
