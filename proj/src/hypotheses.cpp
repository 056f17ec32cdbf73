#include "sepde/hypotheses.hpp"

#include "sepde/random.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace sepde {

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::H1: return "H1";
    case Hypothesis::H2: return "H2";
    case Hypothesis::H3: return "H3";
    case Hypothesis::dissipativity: return "dissipativity";
  }
  return "unknown";
}

std::string to_string(CheckMode m) {
  return m == CheckMode::analytic ? "analytic" : "sampled";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::boundary: return "boundary";
  }
  return "unknown";
}

Verdict verdict_from_margin(double margin, double R) {
  if (std::abs(margin) <= 1e-12 * R) return Verdict::boundary;
  return margin >= 0.0 ? Verdict::pass : Verdict::fail;
}

HypothesisReport check_invariance_analytic(const Nonlinearity& nl, double R,
                                           const ConstantsReport& consts, bool plus_variant) {
  if (!(R > 0.0)) throw InvalidArgument("check_invariance_analytic: R must be positive");
  HypothesisReport report;
  report.hypothesis = plus_variant ? Hypothesis::H2 : Hypothesis::H1;
  report.mode = CheckMode::analytic;
  report.R = R;
  std::ostringstream terms;
  terms.precision(17);
  double bound = 0.0;
  if (const auto* ps = nl.as_power_source()) {
    const double power_term = 0.5 * std::pow(R, ps->p);
    const double source_term = ps->beta * l2_norm(ps->h);
    bound = power_term + source_term;
    terms << "R^p/2 = " << power_term << ", beta*|h|_2 = " << source_term;
    if (plus_variant) {
      report.note = "the same bound covers the positive-part map; the condition named H3 in "
                    "the existence argument for this family is read as H2";
    }
  } else if (const GrowthBound* g = nl.growth()) {
    const double Gamma = consts.threshold_constant();
    const double power_term = nl.mu() * g->a * Gamma * std::pow(R, g->p);
    const double source_term = nl.mu() * l2_norm(g->b);
    bound = power_term + source_term;
    terms << "mu*a*Gamma*R^p = " << power_term << ", mu*|b|_2 = " << source_term;
  } else {
    throw InvalidArgument(
        "check_invariance_analytic: nonlinearity carries no growth metadata; use sampled mode");
  }
  report.margin = R - bound;
  report.verdict = verdict_from_margin(report.margin, R);
  report.worst_case = terms.str();
  return report;
}

namespace {

struct Candidate {
  Vector direction;
  std::string label;
};

std::vector<Candidate> structured_candidates(const LaplacianOperator& op, const Nonlinearity* nl) {
  std::vector<Candidate> out;
  const Vector e = smallest_eigenvalue(op, 1e-10).eigenvector;
  out.push_back({e, "first eigenfunction"});
  out.push_back({-e, "negated first eigenfunction"});
  out.push_back({Vector::Ones(op.grid().size()), "constant"});
  if (nl != nullptr) {
    const Field* source = nullptr;
    if (const auto* ps = nl->as_power_source()) source = &ps->h;
    else if (const GrowthBound* g = nl->growth()) source = &g->b;
    if (source != nullptr && max_norm(*source) > 0.0) {
      out.push_back({source->values(), "source field"});
    }
  }
  return out;
}

}  // namespace

HypothesisReport check_invariance_sampled(const Nonlinearity& nl, const LaplacianOperator& op,
                                          double R, bool plus_variant,
                                          const SamplingOptions& options) {
  if (!(R > 0.0)) throw InvalidArgument("check_invariance_sampled: R must be positive");
  if (options.samples < 1) throw InvalidArgument("check_invariance_sampled: samples must be >= 1");
  if (nl.requires_nonnegative() && !plus_variant) {
    throw InvalidArgument(
        "check_invariance_sampled: non-integer exponent is undefined on negative values; "
        "use the positive-part variant");
  }
  const Grid& grid = op.grid();
  const double w = grid.cell_volume();

  HypothesisReport report;
  report.hypothesis = plus_variant ? Hypothesis::H2 : Hypothesis::H1;
  report.mode = CheckMode::sampled;
  report.R = R;
  report.seed = options.seed;
  report.note = "sampled evidence only";

  std::vector<Candidate> candidates = structured_candidates(op, &nl);
  for (int s = 0; s < options.samples; ++s) {
    candidates.push_back({random_normal(grid.size(), options.seed, static_cast<std::uint64_t>(s)),
                          "random sample " + std::to_string(s)});
  }

  double worst = -1.0;
  Vector image;
  auto consider = [&](const Vector& u, const Vector& v, const std::string& label) {
    nl.evaluate(grid, v, plus_variant, image);
    const double norm = lq_norm(image, 2.0, w);
    ++report.samples;
    if (norm > worst) {
      worst = norm;
      report.worst_case = label;
      report.witness = u;
    }
  };

  consider(Vector::Zero(grid.size()), Vector::Zero(grid.size()), "zero field");
  static constexpr double radii[] = {1.0, 0.5, 0.1};
  for (const auto& c : candidates) {
    const double norm = lq_norm(c.direction, 2.0, w);
    if (norm == 0.0) continue;
    const Vector unit = c.direction / norm;
    // phi^{-1} is linear, so one solve serves all radii.
    const Vector k_unit = solve_phi_inverse(op, unit, options.inner_tol);
    for (double r : radii) {
      std::ostringstream label;
      label << c.label << " at |u|_2 = " << r << " R";
      consider(r * R * unit, r * R * k_unit, label.str());
    }
  }
  report.margin = R - worst;
  report.verdict = verdict_from_margin(report.margin, R);
  if (report.verdict != Verdict::fail) report.witness.reset();
  return report;
}

HypothesisReport check_sign_condition(const Nonlinearity& nl, const Grid& grid,
                                      const SamplingOptions& options) {
  if (options.samples < 1) throw InvalidArgument("check_sign_condition: samples must be >= 1");
  HypothesisReport report;
  report.hypothesis = Hypothesis::H3;
  report.mode = CheckMode::sampled;
  report.seed = options.seed;

  std::vector<double> levels = {0.0, 1e-12, 1.0, 1e3};
  auto rng = stream_engine(options.seed, 0);
  std::uniform_real_distribution<double> moderate(0.0, 10.0);
  for (int s = 0; s < options.samples; ++s) levels.push_back(moderate(rng));

  double worst = std::numeric_limits<double>::infinity();
  for (double u : levels) {
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      const double f = nl.value(grid, k, u);
      ++report.samples;
      if (f < worst) {
        worst = f;
        std::ostringstream os;
        os.precision(17);
        os << "node " << k << ", u = " << u << ", f = " << f;
        report.worst_case = os.str();
      }
    }
  }
  report.margin = worst;
  report.verdict = worst >= -1e-14 ? Verdict::pass : Verdict::fail;
  return report;
}

HypothesisReport check_dissipativity(const LaplacianOperator& op, double lambda,
                                     const SamplingOptions& options) {
  if (!(lambda >= 0.0)) {
    throw InvalidArgument("check_dissipativity: lambda must be >= 0 (negative lambda is not covered)");
  }
  if (options.samples < 1) throw InvalidArgument("check_dissipativity: samples must be >= 1");
  const Grid& grid = op.grid();
  const double w = grid.cell_volume();

  HypothesisReport report;
  report.hypothesis = Hypothesis::dissipativity;
  report.mode = CheckMode::sampled;
  report.R = 0.0;
  report.seed = options.seed;

  std::vector<Candidate> candidates = structured_candidates(op, nullptr);
  for (int s = 0; s < options.samples; ++s) {
    candidates.push_back({random_normal(grid.size(), options.seed, static_cast<std::uint64_t>(s)),
                          "random sample " + std::to_string(s)});
  }

  double worst_pairing = -std::numeric_limits<double>::infinity();
  double worst_slack = std::numeric_limits<double>::infinity();
  bool violated = false;
  for (const auto& c : candidates) {
    const Vector& u = c.direction;
    const Vector bu = -lambda * solve_phi_inverse(op, u, options.inner_tol);
    const double uu = weighted_dot(u, u, w);
    const double pairing = weighted_dot(bu, u, w) / uu;
    const double ratio = std::sqrt(weighted_dot(bu, bu, w) / uu);
    ++report.samples;
    if (pairing > worst_pairing) {
      worst_pairing = pairing;
      report.worst_case = c.label;
    }
    worst_slack = std::min(worst_slack, 1.0 - ratio);
    if (pairing > 1e-12 || ratio > 1.0 + 1e-10) {
      if (!violated) report.witness = u;
      violated = true;
    }
  }
  report.margin = -worst_pairing;
  report.norm_slack = worst_slack;
  report.verdict = violated ? Verdict::fail : Verdict::pass;
  return report;
}

}  // namespace sepde
