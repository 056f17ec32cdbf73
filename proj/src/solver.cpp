#include "sepde/solver.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace sepde {

std::string to_string(Variant v) { return v == Variant::a ? "a" : "b"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::picard: return "picard";
    case Method::newton: return "newton";
    case Method::hybrid: return "hybrid";
  }
  return "unknown";
}

double validate_problem(const Problem& prob, const LaplacianOperator& op) {
  if (!(prob.lambda >= 0.0)) {
    throw InvalidArgument("lambda must be >= 0 (covered range is 0 <= lambda <= lambda*)");
  }
  if (!(prob.R > 0.0)) throw InvalidArgument("R must be positive");
  if (prob.variant == Variant::a && prob.nl.requires_nonnegative()) {
    throw InvalidArgument("non-integer exponent requires the positive-part variant (b)");
  }
  const double lstar = prob.lambda_star ? *prob.lambda_star : lambda_star(op, 1e-10);
  if (prob.lambda > lstar * (1.0 + 1e-10)) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda = " << prob.lambda << " exceeds lambda*_h = " << lstar;
    throw InvalidArgument(os.str());
  }
  return lstar;
}

namespace {

class FixedPointSystem {
public:
  FixedPointSystem(const Problem& prob, const LaplacianOperator& op, double inner_tol)
      : prob_(prob), op_(op), w_(op.grid().cell_volume()), inner_tol_(inner_tol),
        plus_(prob.variant == Variant::b) {}

  double norm(const Vector& x) const { return lq_norm(x, 2.0, w_); }

  // T(u) together with v = phi^{-1} u.
  Vector map(const Vector& u, Vector& v) const {
    v = solve_phi_inverse(op_, u, inner_tol_);
    Vector image;
    prob_.nl.evaluate(op_.grid(), v, plus_, image);
    image.noalias() -= prob_.lambda * v;
    return image;
  }

  // F(v) = -Delta_h v + lambda v - N(v).
  Vector strong_residual(const Vector& v) const {
    Vector nv;
    prob_.nl.evaluate(op_.grid(), v, plus_, nv);
    return op_.apply(v) + prob_.lambda * v - nv;
  }

  // Newton direction for F; false when the Jacobian factorization fails.
  bool newton_direction(const Vector& v, const Vector& residual, Vector& delta) const {
    Vector slope;
    prob_.nl.differentiate(op_.grid(), v, plus_, slope);
    SparseMatrix jac = op_.matrix();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      jac.coeffRef(k, k) += prob_.lambda - slope[k];
    }
    jac.makeCompressed();
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) return false;
    delta = lu.solve(-residual);
    return lu.info() == Eigen::Success && delta.allFinite();
  }

  bool plus() const { return plus_; }

private:
  const Problem& prob_;
  const LaplacianOperator& op_;
  double w_;
  double inner_tol_;
  bool plus_;
};

std::string format_event(const char* what, int iteration, double value) {
  std::ostringstream os;
  os.precision(6);
  os << what << " at iteration " << iteration << " (" << value << ")";
  return os.str();
}

}  // namespace

Field fixed_point_map(const Problem& prob, const Field& u, double tol_inner) {
  require_same_grid(prob.grid, u.grid(), "fixed_point_map");
  const LaplacianOperator op(prob.grid);
  const FixedPointSystem system(prob, op, tol_inner);
  Vector v;
  return Field(prob.grid, system.map(u.values(), v));
}

SolveResult solve_P(const Problem& prob, const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("solve: tol must be positive");
  if (!(opts.omega > 0.0 && opts.omega <= 1.0)) {
    throw InvalidArgument("solve: damping omega must lie in (0, 1]");
  }
  if (opts.max_iter < 1) throw InvalidArgument("solve: max_iter must be >= 1");
  const LaplacianOperator op(prob.grid);
  validate_problem(prob, op);
  const FixedPointSystem system(prob, op, opts.inner_tol);
  const Eigen::Index n = prob.grid.size();

  SolveReport report;
  Vector u = opts.initial_u ? *opts.initial_u : Vector::Zero(n);
  if (u.size() != n) throw InvalidArgument("solve: initial guess size does not match the grid");
  double omega = opts.omega;

  Vector best_u = u;
  double best_res = std::numeric_limits<double>::infinity();
  Vector v, tu;
  double res = std::numeric_limits<double>::infinity();

  auto relative_residual = [&](const Vector& uu, const Vector& tuu) {
    return system.norm(uu - tuu) / std::max(system.norm(uu), 1.0);
  };
  auto remember = [&] {
    if (res < best_res) {
      best_res = res;
      best_u = u;
    }
  };

  bool use_newton = opts.method == Method::newton;
  try {
    // Picard phase.
    while (!use_newton && report.iterations < opts.max_iter) {
      tu = system.map(u, v);
      res = relative_residual(u, tu);
      if (!std::isfinite(res)) {
        report.message = "non-finite iterate";
        break;
      }
      remember();
      if (res <= opts.tol) {
        report.converged = true;
        break;
      }
      if (opts.method == Method::hybrid && res < opts.newton_switch) {
        report.trace.push_back(format_event("switch to newton", report.iterations, res));
        use_newton = true;
        break;
      }
      Vector next = (1.0 - omega) * u + omega * tu;
      ++report.iterations;
      ++report.picard_steps;
      if (!(system.norm(next) <= 10.0 * prob.R)) {
        omega *= 0.5;
        report.trace.push_back(format_event("divergence, damping halved", report.iterations, omega));
        if (omega < opts.omega_min) {
          report.message = "diverged with damping below omega_min";
          break;
        }
        u = best_u;
        continue;
      }
      u = std::move(next);
      if (opts.observer) opts.observer(report.iterations, u);
    }

    // Newton phase on the v-form residual.
    if (use_newton && !report.converged) {
      v = solve_phi_inverse(op, u, opts.inner_tol);
      Vector f = system.strong_residual(v);
      double fnorm = system.norm(f);
      while (report.iterations < opts.max_iter) {
        u = op.apply(v);
        Vector v_check;
        tu = system.map(u, v_check);
        res = relative_residual(u, tu);
        remember();
        if (res <= opts.tol) {
          report.converged = true;
          break;
        }
        ++report.iterations;
        Vector delta;
        bool stepped = false;
        if (system.newton_direction(v, f, delta)) {
          double alpha = 1.0;
          for (int halving = 0; halving < 30; ++halving) {
            Vector trial = v + alpha * delta;
            Vector ft = system.strong_residual(trial);
            const double tnorm = system.norm(ft);
            if (std::isfinite(tnorm) && tnorm < (1.0 - 1e-4 * alpha) * fnorm) {
              v = std::move(trial);
              f = std::move(ft);
              fnorm = tnorm;
              stepped = true;
              break;
            }
            alpha *= 0.5;
          }
        }
        if (stepped) {
          ++report.newton_steps;
          if (opts.observer) opts.observer(report.iterations, op.apply(v));
        } else {
          report.trace.push_back(format_event("newton step rejected, picard fallback",
                                              report.iterations, fnorm));
          u = (1.0 - omega) * u + omega * tu;
          ++report.picard_steps;
          v = solve_phi_inverse(op, u, opts.inner_tol);
          f = system.strong_residual(v);
          fnorm = system.norm(f);
        }
      }
    }
  } catch (const NonConvergence& e) {
    report.message = std::string("inner linear solve failed: ") + e.what();
    report.converged = false;
  }

  if (!report.converged) {
    if (report.message.empty()) report.message = "iteration cap reached";
    u = best_u;
    res = best_res;
  }

  // Final v = phi^{-1} u and diagnostics.
  try {
    tu = system.map(u, v);
    res = relative_residual(u, tu);
  } catch (const NonConvergence& e) {
    v = e.best_iterate();
  }
  const Vector r = system.strong_residual(v);
  report.fixed_point_residual = res;
  report.strong_residual_l2 = system.norm(r);
  report.strong_residual_max = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  report.u_norm = system.norm(u);
  report.v_min = v.minCoeff();
  report.v_max = v.maxCoeff();
  report.omega = omega;
  if (report.converged) report.message = "converged";

  Vector u_out = u.allFinite() ? u : Vector::Zero(n);
  Vector v_out = v.allFinite() ? v : Vector::Zero(n);
  return SolveResult{Field(prob.grid, std::move(u_out)), Field(prob.grid, std::move(v_out)),
                     std::move(report)};
}

QResult solve_Q(const Grid& grid, double lambda, double mu, double p, const Field& h,
                const QOptions& opts, const ConstantsReport& consts) {
  require_same_grid(grid, h.grid(), "solve_Q");
  if (!(mu > 0.0)) throw InvalidArgument("solve_Q: mu must be positive");
  if (!(p > 1.0)) throw InvalidArgument("solve_Q: p must exceed 1");
  const double h_norm = l2_norm(h);
  if (h_norm == 0.0) throw InvalidArgument("solve_Q: h must not vanish identically");

  const double Gamma = consts.threshold_constant();
  const double beta = beta_coefficient(mu, Gamma, p);
  const bool h_nonnegative = h.values().minCoeff() >= 0.0;
  const Variant variant = opts.variant ? *opts.variant : (h_nonnegative ? Variant::b : Variant::a);

  Problem prob{grid, lambda, Nonlinearity::power_source(p, Gamma, beta, h, mu), variant, opts.R,
               consts.grid == grid ? std::optional<double>(consts.lambda_star) : std::nullopt};

  std::vector<std::string> notes;
  const double threshold = mu_threshold(p, Gamma, h_norm);
  const bool within = mu <= threshold;
  if (!within) notes.emplace_back("mu exceeds mu_{p,h}: outside the guaranteed regime");
  const ExponentVerdict exponent = admissible_exponent(p, grid.dims());
  if (exponent == ExponentVerdict::extension) {
    notes.emplace_back("exponent/dimension pair outside the stated admissibility window (extension)");
  } else if (exponent == ExponentVerdict::inadmissible) {
    notes.emplace_back("exponent inadmissible for this dimension");
  }

  SolveResult sol = solve_P(prob, opts.solve);
  Vector w = sol.v.values() / beta;

  // Q-residual of w, evaluated directly.
  const LaplacianOperator op(grid);
  Vector wp(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double base = variant == Variant::b ? std::max(w[k], 0.0) : w[k];
    wp[k] = signed_power(base, p, k);
  }
  const Vector rq = op.apply(w) + lambda * w - mu * wp - h.values();

  QResult out{Field(grid, w), std::move(sol), beta, Gamma, threshold, within, variant, exponent,
              lq_norm(rq, 2.0, grid.cell_volume()), rq.cwiseAbs().maxCoeff(), std::nullopt,
              std::move(notes)};
  if (h_nonnegative && variant == Variant::b) {
    out.strictly_positive = w.minCoeff() > 0.0;
  }
  return out;
}

EigenResult solve_eigenproblem(const Grid& grid, double lambda, double mu, const GrowthSpec& spec,
                               const SolveOptions& opts, const ConstantsReport& consts, double R) {
  if (!(mu > 0.0)) throw InvalidArgument("solve_eigenproblem: mu must be positive");
  require_same_grid(grid, spec.b.grid(), "solve_eigenproblem");
  Nonlinearity nl =
      Nonlinearity::growth_bounded(spec.g, GrowthBound{spec.a, spec.b, spec.p}, mu, spec.dg);
  Problem prob{grid, lambda, std::move(nl), Variant::a, R,
               consts.grid == grid ? std::optional<double>(consts.lambda_star) : std::nullopt};

  EigenResult out{solve_P(prob, opts), 0.0, true, admissible_exponent(spec.p, grid.dims()), {}};
  out.mu_star = mu_star(spec.a, consts.threshold_constant(), l2_norm(spec.b));
  out.within_regime = mu <= out.mu_star;
  if (!out.within_regime) out.notes.emplace_back("mu exceeds mu*: outside the guaranteed regime");
  if (out.exponent == ExponentVerdict::extension) {
    out.notes.emplace_back("exponent/dimension pair outside the stated admissibility window (extension)");
  }
  return out;
}

}  // namespace sepde
