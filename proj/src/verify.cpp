#include "sepde/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace sepde {

namespace {

ResidualNorms norms_of(const Vector& r, double w) {
  return {lq_norm(r, 2.0, w), r.size() ? r.cwiseAbs().maxCoeff() : 0.0};
}

}  // namespace

ResidualNorms strong_residual(const Field& v, const Problem& prob) {
  require_same_grid(prob.grid, v.grid(), "strong_residual");
  const SparseMatrix a = LaplacianOperator(prob.grid).matrix();
  const Field nv = prob.variant == Variant::b ? apply_N_plus(prob.nl, v) : apply_N(prob.nl, v);
  const Vector r = a * v.values() + prob.lambda * v.values() - nv.values();
  return norms_of(r, prob.grid.cell_volume());
}

ResidualNorms q_residual(const Field& w, double lambda, double mu, double p, const Field& h,
                         Variant variant) {
  require_same_grid(w.grid(), h.grid(), "q_residual");
  const SparseMatrix a = LaplacianOperator(w.grid()).matrix();
  const Field base = variant == Variant::b ? positive_part(w) : w;
  Vector power(base.size());
  for (Eigen::Index k = 0; k < power.size(); ++k) power[k] = signed_power(base[k], p, k);
  const Vector r = a * w.values() + lambda * w.values() - mu * power - h.values();
  return norms_of(r, w.grid().cell_volume());
}

std::string to_string(Positivity p) {
  switch (p) {
    case Positivity::strictly_positive: return "strictly_positive";
    case Positivity::nonnegative: return "nonnegative";
    case Positivity::violated: return "violated";
  }
  return "unknown";
}

PositivityResult positivity_check(const Field& v, double tol) {
  if (!(tol >= 0.0)) throw InvalidArgument("positivity_check: tol must be >= 0");
  PositivityResult out;
  if (v.size() == 0) return out;
  out.min = v.values().minCoeff(&out.node);
  if (out.min > tol) out.verdict = Positivity::strictly_positive;
  else if (out.min >= -tol) out.verdict = Positivity::nonnegative;
  else out.verdict = Positivity::violated;
  return out;
}

std::string to_string(MmsMode m) { return m == MmsMode::stencil ? "stencil" : "analytic"; }

ManufacturedSource manufacture_source(const Grid& grid, const ManufacturedSolution& exact,
                                      double lambda, double mu, double p, MmsMode mode) {
  if (!exact.w) throw InvalidArgument("manufacture_source: exact solution rule is empty");
  ManufacturedSource out{Field(grid), {}};

  // Sample the boundary faces: the Dirichlet data must vanish there.
  double boundary_max = 0.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    auto x = grid.coordinate(k);
    for (int i = 0; i < grid.dims(); ++i) {
      for (double face : {0.0, grid.length(i)}) {
        auto xb = x;
        xb[i] = face;
        boundary_max =
            std::max(boundary_max, std::abs(exact.w(std::span<const double>(xb.data(), grid.dims()))));
      }
    }
  }
  if (boundary_max > 1e-12) {
    out.warnings.push_back("exact solution does not vanish on the boundary (max |w*| = " +
                           std::to_string(boundary_max) + ")");
  }

  const Field w = eval_on_grid(grid, exact.w);
  Vector lap;
  if (mode == MmsMode::stencil) {
    lap = LaplacianOperator(grid).apply(w.values());
  } else {
    if (!exact.minus_laplacian) {
      throw InvalidArgument("manufacture_source: analytic mode needs the continuum Laplacian");
    }
    lap = eval_on_grid(grid, exact.minus_laplacian).values();
  }
  Vector power(w.size());
  for (Eigen::Index k = 0; k < power.size(); ++k) power[k] = signed_power(w[k], p, k);
  out.h = Field(grid, lap + lambda * w.values() - mu * power);
  return out;
}

ManufacturedSolution sine_product(const std::vector<double>& lengths, int wavenumber) {
  std::vector<double> freq;
  for (double len : lengths) freq.push_back(wavenumber * std::numbers::pi / len);
  ManufacturedSolution s;
  s.w = [freq](std::span<const double> x) {
    double value = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) value *= std::sin(freq[i] * x[i]);
    return value;
  };
  s.minus_laplacian = [freq](std::span<const double> x) {
    double value = 1.0;
    double k2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      value *= std::sin(freq[i] * x[i]);
      k2 += freq[i] * freq[i];
    }
    return k2 * value;
  };
  return s;
}

RefinementTable refinement_study(const MmsCase& mms, const std::vector<int>& resolutions,
                                 const SolveOptions& opts) {
  if (resolutions.size() < 2) {
    throw InvalidArgument("refinement_study: at least two resolutions are required");
  }
  for (std::size_t i = 1; i < resolutions.size(); ++i) {
    if (resolutions[i] <= resolutions[i - 1]) {
      throw InvalidArgument("refinement_study: resolutions must be strictly increasing");
    }
  }
  if (static_cast<int>(mms.lengths.size()) != mms.dims) {
    throw InvalidArgument("refinement_study: lengths must have dims entries");
  }

  RefinementTable table;
  table.mode = mms.mode;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (int n : resolutions) {
    const Grid grid = make_grid(mms.dims, mms.lengths, std::vector<int>(mms.dims, n));
    RefinementRow row;
    row.resolution = n;
    row.h = grid.spacing(0);
    row.order_l2 = row.order_max = nan;
    try {
      const ManufacturedSource src =
          manufacture_source(grid, mms.exact, mms.lambda, mms.mu, mms.p, mms.mode);
      const LaplacianOperator op(grid);
      ConstantsOptions copts;
      copts.safety_factor = 1.0;
      const ConstantsReport consts = constants_from_gamma(op, mms.p, mms.gamma, copts);
      QOptions qopts;
      qopts.solve = opts;
      const QResult q = solve_Q(grid, mms.lambda, mms.mu, mms.p, src.h, qopts, consts);
      const Vector err = q.w.values() - eval_on_grid(grid, mms.exact.w).values();
      row.converged = q.p_solution.report.converged;
      row.error_l2 = lq_norm(err, 2.0, grid.cell_volume());
      row.error_max = err.cwiseAbs().maxCoeff();
      row.floor = row.error_l2 <= mms.floor_tol;
    } catch (const std::exception&) {
      row.converged = false;
    }
    table.rows.push_back(row);
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const RefinementRow& coarse = table.rows[i - 1];
    RefinementRow& fine = table.rows[i];
    if (!coarse.converged || !fine.converged || coarse.floor || fine.floor) continue;
    const double dh = std::log(coarse.h / fine.h);
    fine.order_l2 = std::log(coarse.error_l2 / fine.error_l2) / dh;
    fine.order_max = std::log(coarse.error_max / fine.error_max) / dh;
  }
  return table;
}

}  // namespace sepde
