#include "doctest.h"

#include "oracles.hpp"
#include "sepde/solver.hpp"
#include "sepde/verify.hpp"

#include <numbers>

using namespace sepde;
using std::numbers::pi;

namespace {

Nonlinearity source_only(const Field& h) {
  const Vector values = h.values();
  const Grid grid = h.grid();
  return Nonlinearity::custom(
      [values, grid](std::span<const double> x, double, double) {
        // look the node up from its coordinate
        Eigen::Index k = 0;
        for (int i = 0; i < grid.dims(); ++i) {
          const int idx = static_cast<int>(std::lround(x[i] / grid.spacing(i))) - 1;
          k += idx * grid.stride(i);
        }
        return values[k];
      },
      0.0, [](auto, double, double) { return 0.0; });
}

Field sine_source(const Grid& g) {
  return eval_on_grid(g, [](std::span<const double> x) {
    double v = 1.0;
    for (double xi : x) v *= std::sin(pi * xi) + 0.3 * std::sin(3 * pi * xi);
    return v;
  });
}

ConstantsReport constants_for(const Grid& g, double p) {
  ConstantsOptions o;
  o.budget.starts = 4;
  return compute_constants(LaplacianOperator(g), p, o);
}

}  // namespace

TEST_CASE("fixed_point_map examples") {
  const Grid g = make_grid(1, {1.0}, {15});
  const Field h = sine_source(g);
  std::mt19937_64 rng(2);
  const Field u(g, oracle::random_field(g.size(), rng));

  SUBCASE("lambda = 0 with a u-independent nonlinearity") {
    const Problem prob{g, 0.0, source_only(h), Variant::a};
    CHECK((fixed_point_map(prob, u, 1e-12).values() - h.values()).norm() < 1e-14);
  }
  SUBCASE("u = 0 for the power source gives beta h") {
    const Problem prob{g, 0.0, Nonlinearity::power_source(2.0, 0.3, 0.7, h, 0.1), Variant::a};
    CHECK((fixed_point_map(prob, Field(g), 1e-12).values() - 0.7 * h.values()).norm() < 1e-15);
  }
  SUBCASE("lambda > 0: fixed point against a direct shifted solve") {
    const LaplacianOperator op(g);
    const double lambda = 0.5 * lambda_star(op, 1e-10);
    const Problem prob{g, lambda, source_only(h), Variant::a};
    const Vector v = oracle::direct_solve(op, h.values(), lambda);
    const Field u_direct(g, op.matrix() * v);
    const Field image = fixed_point_map(prob, u_direct, 1e-13);
    CHECK((image.values() - u_direct.values()).norm() <= 1e-10 * u_direct.values().norm());
  }
}

TEST_CASE("solve_P with u-independent nonlinearity") {
  const Grid g = make_grid(2, {1.0, 1.0}, {15, 15});
  const Field h = sine_source(g);
  const LaplacianOperator op(g);

  SUBCASE("lambda = 0 converges in one undamped Picard step") {
    SolveOptions opts;
    opts.method = Method::picard;
    opts.omega = 1.0;
    const SolveResult r = solve_P(Problem{g, 0.0, source_only(h), Variant::a}, opts);
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK((r.u.values() - h.values()).norm() < 1e-14);
    CHECK((r.v.values() - oracle::direct_solve(op, h.values())).norm() <= 1e-10 * r.v.values().norm());
  }
  SUBCASE("lambda = lambda*/2 matches the direct linear solve") {
    const double lambda = 0.5 * lambda_star(op, 1e-10);
    for (Method m : {Method::picard, Method::newton, Method::hybrid}) {
      SolveOptions opts;
      opts.method = m;
      const SolveResult r = solve_P(Problem{g, lambda, source_only(h), Variant::a}, opts);
      CHECK(r.report.converged);
      const Vector v = oracle::direct_solve(op, h.values(), lambda);
      CHECK((r.v.values() - v).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, v.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("solve_P in the guaranteed regime of the power-source family") {
  const Grid g = make_grid(2, {1.0, 1.0}, {15, 15});
  const Field h(g, Vector::Ones(g.size()));
  const ConstantsReport consts = constants_for(g, 2.0);
  const double Gamma = consts.threshold_constant();
  const double mu = 0.5 * mu_threshold(2.0, Gamma, l2_norm(h));
  const Nonlinearity nl = Nonlinearity::power_source(2.0, Gamma, beta_coefficient(mu, Gamma, 2.0), h, mu);
  const Problem prob{g, 0.0, nl, Variant::a, 1.0, consts.lambda_star};

  SolveOptions picard;
  picard.method = Method::picard;
  std::vector<double> norms;
  picard.observer = [&](int, const Vector& u) { norms.push_back(lq_norm(u, 2.0, g.cell_volume())); };
  const SolveResult rp = solve_P(prob, picard);
  CHECK(rp.report.converged);
  CHECK(rp.report.u_norm <= 1.0);
  CHECK(rp.report.strong_residual_l2 <= 1e-9);
  REQUIRE_FALSE(norms.empty());
  for (double n : norms) CHECK(n <= 1.0 + 1e-12);  // iterates stay in B_R

  SolveOptions newton;
  newton.method = Method::newton;
  const SolveResult rn = solve_P(prob, newton);
  CHECK(rn.report.converged);
  CHECK(rn.report.newton_steps > 0);
  CHECK((rn.u.values() - rp.u.values()).cwiseAbs().maxCoeff() <= 10 * picard.tol);

  // independent residual path agrees with the solver's own
  const ResidualNorms res = strong_residual(rp.v, prob);
  CHECK(std::abs(res.l2 - rp.report.strong_residual_l2) <= 1e-12);
  CHECK(rp.report.strong_residual_l2 <= 10 * picard.tol * rp.report.scale());
}

TEST_CASE("solve_P failure modes") {
  const Grid g = make_grid(1, {1.0}, {31});
  const Field h(g, Vector::Ones(g.size()));
  const LaplacianOperator op(g);
  const double lstar = lambda_star(op, 1e-10);

  CHECK_THROWS_AS(solve_P(Problem{g, -0.5, source_only(h), Variant::a}, {}), InvalidArgument);
  CHECK_THROWS_AS(solve_P(Problem{g, 2 * lstar, source_only(h), Variant::a}, {}), InvalidArgument);
  CHECK_THROWS_AS(
      solve_P(Problem{g, 0.0, Nonlinearity::power_source(2.5, 1, 1, h, 1), Variant::a}, {}),
      InvalidArgument);
  SolveOptions bad;
  bad.omega = 0.0;
  CHECK_THROWS_AS(solve_P(Problem{g, 0.0, source_only(h), Variant::a}, bad), InvalidArgument);

  // Far outside the regime: no positive solution near the origin branch.
  const Nonlinearity strong = Nonlinearity::power_source(2.0, 1e-4, 100.0, h, 1.0);
  SolveOptions opts;
  opts.max_iter = 60;
  const SolveResult r = solve_P(Problem{g, 0.0, strong, Variant::b}, opts);
  CHECK_FALSE(r.report.converged);
  CHECK_FALSE(r.report.message.empty());
  CHECK(r.u.values().allFinite());
}

TEST_CASE("solve_Q") {
  SUBCASE("positivity at the threshold, unit square") {
    const Grid g = make_grid(2, {1.0, 1.0}, {15, 15});
    const Field h(g, Vector::Ones(g.size()));
    const ConstantsReport consts = constants_for(g, 2.0);
    const double mu = mu_threshold(2.0, consts.threshold_constant(), l2_norm(h));
    const QResult q = solve_Q(g, 0.0, mu, 2.0, h, QOptions{}, consts);
    CHECK(q.p_solution.report.converged);
    CHECK(q.variant == Variant::b);
    CHECK(q.within_regime);
    REQUIRE(q.strictly_positive.has_value());
    CHECK(*q.strictly_positive);
    CHECK(q.w.values().minCoeff() > 0.0);
    CHECK(q.q_residual_l2 <= 10 * 1e-10 * q.p_solution.report.scale() / q.beta);
  }
  SUBCASE("rescaling identity") {
    const Grid g = make_grid(1, {1.0}, {31});
    const Field h = sine_source(g);
    const ConstantsReport consts = constants_for(g, 3.0);
    const double lambda = 0.5 * consts.lambda_star;
    const double mu = 0.5 * mu_threshold(3.0, consts.threshold_constant(), l2_norm(h));
    const QResult q = solve_Q(g, lambda, mu, 3.0, h, QOptions{}, consts);
    REQUIRE(q.p_solution.report.converged);
    const LaplacianOperator op(g);
    // -Delta(v/beta) + lambda v/beta - mu (v/beta)^p - h = (1/beta)(-Delta v + lambda v - f(v))
    const Vector& v = q.p_solution.v.values();
    Vector f(v.size());
    const Nonlinearity nl = Nonlinearity::power_source(3.0, q.Gamma, q.beta, h, mu);
    nl.evaluate(g, v, q.variant == Variant::b, f);
    const Vector p_res = op.apply(v) + lambda * v - f;
    const Vector w = v / q.beta;
    const Vector base = q.variant == Variant::b ? Vector(w.cwiseMax(0.0)) : w;
    const Vector wp = base.array().cube();
    const Vector q_res = op.apply(w) + lambda * w - mu * wp - h.values();
    CHECK((q_res - p_res / q.beta).cwiseAbs().maxCoeff() <=
          1e-12 * (op.apply(w).cwiseAbs().maxCoeff() + h.values().cwiseAbs().maxCoeff()));
    const ResidualNorms direct = q_residual(q.w, lambda, mu, 3.0, h, q.variant);
    CHECK(direct.l2 == doctest::Approx(q.q_residual_l2).epsilon(1e-6).scale(1e-12));
  }
  SUBCASE("outside the regime is flagged, h = 0 rejected") {
    const Grid g = make_grid(1, {1.0}, {15});
    const Field h(g, Vector::Ones(g.size()));
    const ConstantsReport consts = constants_for(g, 2.0);
    const double mu = 1.5 * mu_threshold(2.0, consts.threshold_constant(), l2_norm(h));
    const QResult q = solve_Q(g, 0.0, mu, 2.0, h, QOptions{}, consts);
    CHECK_FALSE(q.within_regime);
    CHECK_FALSE(q.notes.empty());
    CHECK_THROWS_AS(solve_Q(g, 0.0, mu, 2.0, Field(g), QOptions{}, consts), InvalidArgument);
  }
}

TEST_CASE("solve_eigenproblem") {
  const Grid g = make_grid(1, {1.0}, {63});
  const ConstantsReport consts = constants_for(g, 2.0);
  const Field b(g, Vector::Ones(g.size()));

  SUBCASE("g = u^2 + 1 at half mu*") {
    const GrowthSpec spec{[](auto, double u) { return u * u + 1; }, [](auto, double u) { return 2 * u; },
                          1.0, b, 2.0};
    const double ms = mu_star(1.0, consts.threshold_constant(), l2_norm(b));
    const EigenResult r = solve_eigenproblem(g, 0.0, 0.5 * ms, spec, SolveOptions{}, consts);
    CHECK(r.p_solution.report.converged);
    CHECK(r.p_solution.report.u_norm <= 1.0 + 1e-8);
    CHECK(r.within_regime);
    CHECK(r.mu_star == doctest::Approx(ms));
    const EigenResult at = solve_eigenproblem(g, 0.0, ms, spec, SolveOptions{}, consts);
    CHECK(at.within_regime);
  }
  SUBCASE("nearly linear g reduces to a resolvent solve") {
    const Field bx = sine_source(g);
    const Field bb(g, bx.values().cwiseAbs());
    const Vector bvals = bb.values();
    const GrowthSpec spec{[bvals, g](std::span<const double> x, double u) {
                            const auto k = static_cast<Eigen::Index>(std::lround(x[0] / g.spacing(0))) - 1;
                            return 1e-12 * u * u + bvals[k];
                          },
                          [](auto, double u) { return 2e-12 * u; }, 1e-12, bb, 2.0};
    const LaplacianOperator op(g);
    const double lambda = 0.5 * consts.lambda_star;
    const double mu = 0.8;
    const EigenResult r = solve_eigenproblem(g, lambda, mu, spec, SolveOptions{}, consts);
    REQUIRE(r.p_solution.report.converged);
    const Vector v = oracle::direct_solve(op, mu * bvals, lambda);
    CHECK((r.p_solution.v.values() - v).cwiseAbs().maxCoeff() <= 1e-8);
  }
}
