#pragma once

#include "sepde/grid.hpp"

#include <Eigen/SparseCore>

namespace sepde {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// The discrete Dirichlet Laplacian phi: u -> -Delta_h u on a box grid.
///
/// Second-order central differences per axis with the missing boundary
/// neighbours taken as zero. The operator is symmetric positive definite
/// under the weighted L^2 pairing; apply() is matrix-free.
class LaplacianOperator {
public:
  explicit LaplacianOperator(Grid grid);

  const Grid& grid() const noexcept { return grid_; }

  /// out = -Delta_h in.
  void apply(const Vector& in, Vector& out) const;
  Vector apply(const Vector& in) const;

  /// Assembled copy of the stencil, for direct factorizations.
  SparseMatrix matrix() const;

  /// Iteration cap of the conjugate gradient solve: 20 n^(1/N), at least 10^4.
  int iteration_cap() const noexcept { return iteration_cap_; }

private:
  Grid grid_;
  std::array<double, Grid::max_dims> inv_h2_{};
  int iteration_cap_;
};

Field apply_phi(const LaplacianOperator& op, const Field& f);

/// Solves -Delta_h v = rhs by conjugate gradients until the true residual
/// satisfies |A v - rhs| <= tol |rhs|. Throws NonConvergence at the cap.
Vector solve_phi_inverse(const LaplacianOperator& op, const Vector& rhs, double tol);
Field solve_phi_inverse(const LaplacianOperator& op, const Field& rhs, double tol);

struct SpectralReport {
  double lambda1 = 0.0;
  int iterations = 0;
  /// |A e - lambda1 e|_2 / lambda1 for the unit eigenvector e.
  double residual = 0.0;
  /// L^2-normalized, positive first eigenfunction.
  Vector eigenvector;
  Grid grid;
};

/// Smallest eigenvalue of -Delta_h by inverse power iteration from the
/// constant field, stopping when the relative eigen-residual is below tol.
SpectralReport smallest_eigenvalue(const LaplacianOperator& op, double tol,
                                   int max_iterations = 10000);

/// lambda* = 1 / |phi^{-1}|_{L^2 -> L^2}, i.e. the smallest eigenvalue.
double lambda_star(const LaplacianOperator& op, double tol);

}  // namespace sepde
