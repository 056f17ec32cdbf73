#include "doctest.h"

#include "oracles.hpp"
#include "sepde/hypotheses.hpp"

#include <random>

using namespace sepde;

namespace {

struct Setup {
  Grid grid = make_grid(1, {1.0}, {31});
  LaplacianOperator op{grid};
  ConstantsReport consts = [this] {
    ConstantsOptions o;
    o.budget.starts = 4;
    return compute_constants(op, 2.0, o);
  }();
};

const Setup& setup() {
  static const Setup s;
  return s;
}

Nonlinearity power_at(double mu, const Field& h, double p = 2.0) {
  const double Gamma = setup().consts.threshold_constant();
  return Nonlinearity::power_source(p, Gamma, beta_coefficient(mu, Gamma, p), h, mu);
}

}  // namespace

TEST_CASE("verdict_from_margin") {
  CHECK(verdict_from_margin(0.1, 1) == Verdict::pass);
  CHECK(verdict_from_margin(-0.1, 1) == Verdict::fail);
  CHECK(verdict_from_margin(1e-13, 1) == Verdict::boundary);
  CHECK(verdict_from_margin(-1e-13, 1) == Verdict::boundary);
}

TEST_CASE("analytic invariance for the power-source family") {
  const auto& s = setup();
  const Field h(s.grid, Vector::Ones(s.grid.size()));
  const double Gamma = s.consts.threshold_constant();
  const double mu_ph = mu_threshold(2.0, Gamma, l2_norm(h));

  const HypothesisReport at = check_invariance_analytic(power_at(mu_ph, h), 1.0, s.consts);
  CHECK(at.verdict == Verdict::boundary);
  CHECK(std::abs(at.margin) <= 1e-12);

  const HypothesisReport twice = check_invariance_analytic(power_at(2 * mu_ph, h), 1.0, s.consts);
  CHECK(twice.verdict == Verdict::fail);
  CHECK(twice.margin == doctest::Approx(-0.5).epsilon(1e-12));

  CHECK(check_invariance_analytic(power_at(0.5 * mu_ph, h), 1.0, s.consts).verdict == Verdict::pass);

  // strictly decreasing margin in mu
  double previous = std::numeric_limits<double>::infinity();
  for (double f = 0.1; f <= 2.0; f += 0.1) {
    const double m = check_invariance_analytic(power_at(f * mu_ph, h), 1.0, s.consts).margin;
    CHECK(m < previous);
    previous = m;
  }

  const HypothesisReport h2 = check_invariance_analytic(power_at(mu_ph, h), 1.0, s.consts, true);
  CHECK(h2.hypothesis == Hypothesis::H2);
  CHECK_FALSE(h2.note.empty());
}

TEST_CASE("analytic invariance for growth-bounded and custom rules") {
  const auto& s = setup();
  const Field b(s.grid, Vector::Ones(s.grid.size()));
  const double Gamma = s.consts.threshold_constant();
  const double ms = mu_star(1.0, Gamma, l2_norm(b));
  const Nonlinearity g = Nonlinearity::growth_bounded([](auto, double u) { return u * u + 1; },
                                                      GrowthBound{1.0, b, 2.0}, ms);
  const HypothesisReport r = check_invariance_analytic(g, 1.0, s.consts);
  CHECK(r.verdict == Verdict::boundary);
  CHECK(std::abs(r.margin) <= 1e-12);

  const Nonlinearity custom = Nonlinearity::custom([](auto, double u, double) { return u; }, 1.0);
  CHECK_THROWS_AS(check_invariance_analytic(custom, 1.0, s.consts), InvalidArgument);
}

TEST_CASE("sampled invariance") {
  const auto& s = setup();
  SamplingOptions opts;
  opts.samples = 100;
  opts.seed = 3;

  SUBCASE("zero nonlinearity") {
    const Nonlinearity zero = Nonlinearity::custom([](auto, double, double) { return 0.0; }, 1.0);
    const HypothesisReport r = check_invariance_sampled(zero, s.op, 2.0, false, opts);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.margin == 2.0);
    CHECK(r.note == "sampled evidence only");
  }
  SUBCASE("large source fails with a witness near zero") {
    const Field h(s.grid, Vector::Ones(s.grid.size()));
    const Nonlinearity nl = Nonlinearity::power_source(2.0, 1.0, 5.0 / l2_norm(h), h, 1.0);
    const HypothesisReport r = check_invariance_sampled(nl, s.op, 1.0, false, opts);
    CHECK(r.verdict == Verdict::fail);
    REQUIRE(r.witness.has_value());
    CHECK(1.0 - r.margin >= 5.0 * (1 - 1e-12));
  }
  SUBCASE("non-integer exponent requires the plus variant") {
    const Field h(s.grid, Vector::Ones(s.grid.size()));
    const Nonlinearity nl = power_at(0.01, h, 2.5);
    CHECK_THROWS_AS(check_invariance_sampled(nl, s.op, 1.0, false, opts), InvalidArgument);
    CHECK(check_invariance_sampled(nl, s.op, 1.0, true, opts).hypothesis == Hypothesis::H2);
  }
  SUBCASE("sampled never contradicts an analytic pass") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> frac(0.05, 1.0), amp(0.1, 3.0);
    const double Gamma = s.consts.threshold_constant();
    for (int config = 0; config < 50; ++config) {
      const double p = config % 2 ? 2.0 : 3.0;
      Vector hv = oracle::random_field(s.grid.size(), rng).cwiseAbs() * amp(rng);
      const Field h(s.grid, hv);
      const double mu = frac(rng) * mu_threshold(p, Gamma, l2_norm(h));
      const Nonlinearity nl = power_at(mu, h, p);
      const bool plus = config % 3 == 0;
      const HypothesisReport a = check_invariance_analytic(nl, 1.0, s.consts, plus);
      SamplingOptions o = opts;
      o.samples = 20;
      o.seed = static_cast<std::uint64_t>(config);
      const HypothesisReport b = check_invariance_sampled(nl, s.op, 1.0, plus, o);
      if (a.verdict == Verdict::pass && a.margin > 1e-6) CHECK(b.verdict != Verdict::fail);
      CHECK(b.margin >= a.margin - 1e-12);
    }
  }
}

TEST_CASE("sign condition") {
  const auto& s = setup();
  const SamplingOptions opts;
  const Field h(s.grid, Vector::Ones(s.grid.size()));
  CHECK(check_sign_condition(power_at(0.1, h), s.grid, opts).verdict == Verdict::pass);

  Vector hv = Vector::Ones(s.grid.size());
  hv[4] = -1.0;
  const HypothesisReport r = check_sign_condition(power_at(0.1, Field(s.grid, hv)), s.grid, opts);
  CHECK(r.verdict == Verdict::fail);
  CHECK(r.worst_case.find("node 4, u = 0") != std::string::npos);

  const Nonlinearity g = Nonlinearity::custom([](auto, double u, double mu) { return mu * (u - 1); }, 0.5);
  CHECK(check_sign_condition(g, s.grid, opts).verdict == Verdict::fail);
}

TEST_CASE("dissipativity of B = -lambda phi^{-1}") {
  const auto& s = setup();
  const double lstar = s.consts.lambda_star;
  SamplingOptions opts;
  opts.samples = 1000;
  opts.seed = 5;
  for (double lambda : {0.0, 0.5 * lstar, lstar}) {
    const HypothesisReport r = check_dissipativity(s.op, lambda, opts);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.margin >= -1e-12);
    CHECK(r.norm_slack >= -1e-10);
  }
  // the norm bound is tight on the eigenfunction at lambda = lambda*
  CHECK(std::abs(check_dissipativity(s.op, lstar, opts).norm_slack) <= 1e-8);
  CHECK(check_dissipativity(s.op, 0.0, opts).margin == 0.0);
  // beyond lambda* the norm bound breaks
  CHECK(check_dissipativity(s.op, 1.5 * lstar, opts).verdict == Verdict::fail);
  CHECK_THROWS_AS(check_dissipativity(s.op, -0.5, opts), InvalidArgument);
}
