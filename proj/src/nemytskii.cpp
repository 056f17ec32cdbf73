#include "sepde/nemytskii.hpp"

#include <cmath>
#include <string>

namespace sepde {

bool is_integral(double p) { return std::isfinite(p) && std::floor(p) == p; }

double signed_power(double u, double p, Eigen::Index node) {
  if (u < 0.0 && !is_integral(p)) {
    throw DomainError("negative value " + std::to_string(u) + " at node " + std::to_string(node) +
                          " raised to non-integer power " + std::to_string(p) +
                          "; use the positive-part variant (b)",
                      node);
  }
  if (p == 2.0) return u * u;
  return std::pow(u, p);
}

namespace {

void check_growth_bound(const PointwiseRule& g, const GrowthBound& bound) {
  if (!(bound.a > 0.0)) throw InvalidArgument("growth bound: a must be positive");
  if (!(bound.p > 1.0)) throw InvalidArgument("growth bound: p must exceed 1");
  if (!g) return;
  const Grid& grid = bound.b.grid();
  static constexpr double levels[] = {0.0, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0};
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto x = grid.coordinate(k);
    const std::span<const double> xs(x.data(), grid.dims());
    for (double level : levels) {
      for (double u : {level, -level}) {
        const double lhs = std::abs(g(xs, u));
        const double rhs = bound.a * std::pow(std::abs(u), bound.p) + bound.b[k];
        if (!(lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs)))) {
          throw InvalidArgument("growth bound violated at node " + std::to_string(k) +
                                ", u = " + std::to_string(u));
        }
      }
    }
  }
}

}  // namespace

Nonlinearity Nonlinearity::power_source(double p, double Gamma, double beta, Field h, double mu) {
  if (!(p > 1.0)) throw InvalidArgument("power source: p must exceed 1");
  if (!(Gamma > 0.0)) throw InvalidArgument("power source: Gamma must be positive");
  if (!(beta >= 0.0)) throw InvalidArgument("power source: beta must be nonnegative");
  if (!(mu >= 0.0)) throw InvalidArgument("power source: mu must be nonnegative");
  const bool nonnegative_source = h.size() == 0 || h.values().minCoeff() >= 0.0;
  Nonlinearity nl(PowerSource{p, Gamma, beta, std::move(h)}, mu);
  nl.sign_certified_ = nonnegative_source;
  return nl;
}

Nonlinearity Nonlinearity::growth_bounded(PointwiseRule g, GrowthBound bound, double mu,
                                          PointwiseRule dg) {
  if (!g) throw InvalidArgument("growth-bounded nonlinearity: rule g is empty");
  if (!(mu >= 0.0)) throw InvalidArgument("growth-bounded nonlinearity: mu must be nonnegative");
  check_growth_bound(g, bound);
  return Nonlinearity(GrowthBounded{std::move(g), std::move(dg), std::move(bound)}, mu);
}

Nonlinearity Nonlinearity::custom(ParametricRule f, double mu, ParametricRule df,
                                  std::optional<GrowthBound> bound) {
  if (!f) throw InvalidArgument("custom nonlinearity: rule f is empty");
  if (bound) {
    check_growth_bound([&f, mu](std::span<const double> x, double u) { return f(x, u, mu); },
                       *bound);
  }
  return Nonlinearity(CustomRule{std::move(f), std::move(df), std::move(bound)}, mu);
}

const GrowthBound* Nonlinearity::growth() const {
  if (const auto* gb = as_growth_bounded()) return &gb->bound;
  if (const auto* c = as_custom(); c && c->bound) return &*c->bound;
  return nullptr;
}

bool Nonlinearity::requires_nonnegative() const {
  const auto* ps = as_power_source();
  return ps != nullptr && !is_integral(ps->p);
}

const Grid* Nonlinearity::attached_grid() const {
  if (const auto* ps = as_power_source()) return &ps->h.grid();
  if (const auto* gb = growth()) return &gb->b.grid();
  return nullptr;
}

double Nonlinearity::value(const Grid& grid, Eigen::Index node, double u) const {
  if (const auto* ps = as_power_source()) {
    return signed_power(u, ps->p, node) / (2.0 * ps->Gamma) + ps->beta * ps->h[node];
  }
  const auto x = grid.coordinate(node);
  const std::span<const double> xs(x.data(), grid.dims());
  if (const auto* gb = as_growth_bounded()) {
    return mu_ * gb->g(xs, u);
  }
  return as_custom()->f(xs, u, mu_);
}

double Nonlinearity::derivative(const Grid& grid, Eigen::Index node, double u) const {
  if (const auto* ps = as_power_source()) {
    return ps->p * signed_power(u, ps->p - 1.0, node) / (2.0 * ps->Gamma);
  }
  const auto x = grid.coordinate(node);
  const std::span<const double> xs(x.data(), grid.dims());
  if (const auto* gb = as_growth_bounded()) {
    if (!gb->dg) throw InvalidArgument("nonlinearity has no derivative rule");
    return mu_ * gb->dg(xs, u);
  }
  const auto* c = as_custom();
  if (!c->df) throw InvalidArgument("nonlinearity has no derivative rule");
  return c->df(xs, u, mu_);
}

void Nonlinearity::evaluate(const Grid& grid, const Vector& v, bool plus_variant,
                            Vector& out) const {
  if (const Grid* attached = attached_grid()) require_same_grid(*attached, grid, "apply_N");
  out.resize(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out[k] = value(grid, k, plus_variant ? std::max(v[k], 0.0) : v[k]);
  }
}

void Nonlinearity::differentiate(const Grid& grid, const Vector& v, bool plus_variant,
                                 Vector& out) const {
  if (const Grid* attached = attached_grid()) {
    require_same_grid(*attached, grid, "pointwise_derivative");
  }
  out.resize(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    out[k] = plus_variant && v[k] < 0.0 ? 0.0 : derivative(grid, k, v[k]);
  }
}

Field apply_N(const Nonlinearity& nl, const Field& v) {
  Vector out;
  nl.evaluate(v.grid(), v.values(), false, out);
  return Field(v.grid(), std::move(out));
}

Field apply_N_plus(const Nonlinearity& nl, const Field& v) {
  Vector out;
  nl.evaluate(v.grid(), v.values(), true, out);
  return Field(v.grid(), std::move(out));
}

Field pointwise_derivative(const Nonlinearity& nl, const Field& v, bool plus_variant) {
  Vector out;
  nl.differentiate(v.grid(), v.values(), plus_variant, out);
  return Field(v.grid(), std::move(out));
}

}  // namespace sepde
