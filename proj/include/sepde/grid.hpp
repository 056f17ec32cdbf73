#pragma once

#include "sepde/errors.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace sepde {

using Vector = Eigen::VectorXd;

/// Uniform mesh of the interior nodes of the box [0,L_1] x ... x [0,L_N].
///
/// Node k along axis i sits at (k+1) h_i for k = 0..n_i-1 with
/// h_i = L_i / (n_i + 1); boundary nodes are not stored (their values are
/// the homogeneous Dirichlet zeros). Storage is row-major: the last axis
/// varies fastest.
class Grid {
public:
  static constexpr int max_dims = 3;

  /// One interior node on the unit interval.
  Grid();
  Grid(int dims, std::span<const double> lengths, std::span<const int> counts);

  int dims() const noexcept { return dims_; }
  double length(int axis) const { return lengths_.at(axis); }
  int count(int axis) const { return counts_.at(axis); }
  double spacing(int axis) const { return spacings_.at(axis); }

  Eigen::Index size() const noexcept { return size_; }
  /// Quadrature weight of one node, the product of the spacings.
  double cell_volume() const noexcept { return cell_volume_; }
  /// Lebesgue measure of the box.
  double measure() const noexcept;

  /// Flat index stride of an axis.
  Eigen::Index stride(int axis) const { return strides_.at(axis); }
  /// Zero-based per-axis node index of flat index k.
  std::array<int, max_dims> multi_index(Eigen::Index k) const;
  std::array<double, max_dims> coordinate(Eigen::Index k) const;

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  int dims_;
  std::array<double, max_dims> lengths_{};
  std::array<int, max_dims> counts_{};
  std::array<double, max_dims> spacings_{};
  std::array<Eigen::Index, max_dims> strides_{};
  Eigen::Index size_;
  double cell_volume_;
};

Grid make_grid(int dims, const std::vector<double>& lengths,
               const std::vector<int>& resolution);

/// A grid function: one finite real value per interior node.
class Field {
public:
  Field(Grid grid, Vector values);
  /// Zero field.
  explicit Field(Grid grid);

  const Grid& grid() const noexcept { return grid_; }
  const Vector& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index k) const { return values_[k]; }

  Field operator-() const { return Field(grid_, -values_); }

private:
  Grid grid_;
  Vector values_;
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double c, const Field& f);

/// Throws InvalidArgument unless both fields live on the same grid.
void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// Weighted discrete L^q norm (sum_k w |v_k|^q)^(1/q), computed with a
/// max-abs rescaling so large q neither overflows nor underflows.
template <typename Derived>
double lq_norm(const Eigen::MatrixBase<Derived>& v, double q, double weight) {
  using std::abs;
  using std::pow;
  const double scale = v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    return 0.0;
  }
  if (q == 2.0) {
    return scale * std::sqrt(weight * (v / scale).squaredNorm());
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    sum += pow(abs(v[k]) / scale, q);
  }
  return scale * pow(weight * sum, 1.0 / q);
}

/// Discrete L^2 pairing sum_k w a_k b_k.
template <typename DerivedA, typename DerivedB>
double weighted_dot(const Eigen::MatrixBase<DerivedA>& a,
                    const Eigen::MatrixBase<DerivedB>& b, double weight) {
  return weight * a.dot(b);
}

double lq_norm(const Field& f, double q);
inline double l2_norm(const Field& f) { return lq_norm(f, 2.0); }
double inner_product(const Field& f, const Field& g);
Field positive_part(const Field& f);
/// Largest nodal magnitude.
double max_norm(const Field& f);

using PointRule = std::function<double(std::span<const double>)>;

/// Samples a rule at every interior node.
Field eval_on_grid(const Grid& grid, const PointRule& rule);

}  // namespace sepde
