#pragma once

#include "sepde/solver.hpp"

#include <string>
#include <vector>

namespace sepde {

struct ResidualNorms {
  double l2 = 0.0;
  double max_node = 0.0;
};

/// r = -Delta_h v + lambda v - N(v) (or N^+ for variant b), evaluated with
/// the assembled stencil rather than the solver's matrix-free path.
ResidualNorms strong_residual(const Field& v, const Problem& prob);

/// Residual of -Delta_h w + lambda w - mu w^p - h (w^+ for variant b).
ResidualNorms q_residual(const Field& w, double lambda, double mu, double p, const Field& h,
                         Variant variant);

enum class Positivity { strictly_positive, nonnegative, violated };
std::string to_string(Positivity p);

struct PositivityResult {
  Positivity verdict = Positivity::violated;
  double min = 0.0;
  Eigen::Index node = -1;
};

/// strictly_positive iff min v > tol; nonnegative iff min v >= -tol.
PositivityResult positivity_check(const Field& v, double tol);

enum class MmsMode { stencil, analytic };
std::string to_string(MmsMode m);

/// An exact solution w* together with its continuum -Laplacian.
struct ManufacturedSolution {
  PointRule w;
  PointRule minus_laplacian;  // only needed for the analytic mode
};

struct ManufacturedSource {
  Field h;
  std::vector<std::string> warnings;
};

/// h = L w* + lambda w* - mu (w*)^p where L is -Delta_h (stencil mode, w* is
/// then an exact discrete solution) or the continuum -Laplacian (analytic mode).
ManufacturedSource manufacture_source(const Grid& grid, const ManufacturedSolution& exact,
                                      double lambda, double mu, double p, MmsMode mode);

/// w*(x) = prod_i sin(k pi x_i / L_i).
ManufacturedSolution sine_product(const std::vector<double>& lengths, int wavenumber = 1);

struct RefinementRow {
  int resolution = 0;
  double h = 0.0;
  double error_l2 = 0.0;
  double error_max = 0.0;
  double order_l2 = 0.0;   ///< NaN for the first row, failed rows and floor rows
  double order_max = 0.0;
  bool converged = false;
  bool floor = false;      ///< error at the solver floor
};

struct RefinementTable {
  std::vector<RefinementRow> rows;
  MmsMode mode = MmsMode::analytic;
};

struct MmsCase {
  int dims = 1;
  std::vector<double> lengths{1.0};
  double lambda = 0.0;
  double mu = 0.05;
  double p = 2.0;
  ManufacturedSolution exact;
  MmsMode mode = MmsMode::analytic;
  /// gamma fed to the rescaling; the recovered w does not depend on it.
  double gamma = 1.0;
  /// Errors below this count as the solver floor.
  double floor_tol = 1e-8;
};

/// Solves the manufactured problem on each resolution (all axes alike) and
/// tabulates errors and observed orders log(e_coarse/e_fine)/log(h_coarse/h_fine).
RefinementTable refinement_study(const MmsCase& mms, const std::vector<int>& resolutions,
                                 const SolveOptions& opts);

}  // namespace sepde
