#include "sepde/grid.hpp"

#include <sstream>
#include <string>

namespace sepde {

namespace {

[[noreturn]] void reject(const std::string& message) { throw InvalidArgument(message); }

}  // namespace

Grid::Grid() : Grid(1, std::array{1.0}, std::array{1}) {}

Grid::Grid(int dims, std::span<const double> lengths, std::span<const int> counts)
    : dims_(dims) {
  if (dims < 1 || dims > max_dims) {
    reject("dims must be 1, 2 or 3 (got " + std::to_string(dims) + ")");
  }
  if (static_cast<int>(lengths.size()) != dims) {
    reject("lengths: expected " + std::to_string(dims) + " entries, got " +
           std::to_string(lengths.size()));
  }
  if (static_cast<int>(counts.size()) != dims) {
    reject("resolution: expected " + std::to_string(dims) + " entries, got " +
           std::to_string(counts.size()));
  }
  size_ = 1;
  cell_volume_ = 1.0;
  for (int i = 0; i < dims; ++i) {
    if (!(lengths[i] > 0.0) || !std::isfinite(lengths[i])) {
      std::ostringstream os;
      os << "lengths[" << i << "] must be positive and finite (got " << lengths[i] << ")";
      reject(os.str());
    }
    if (counts[i] < 1) {
      reject("resolution[" + std::to_string(i) + "] must be >= 1 (got " +
             std::to_string(counts[i]) + ")");
    }
    lengths_[i] = lengths[i];
    counts_[i] = counts[i];
    spacings_[i] = lengths[i] / (counts[i] + 1);
    size_ *= counts[i];
    cell_volume_ *= spacings_[i];
  }
  Eigen::Index stride = 1;
  for (int i = dims - 1; i >= 0; --i) {
    strides_[i] = stride;
    stride *= counts_[i];
  }
}

double Grid::measure() const noexcept {
  double m = 1.0;
  for (int i = 0; i < dims_; ++i) m *= lengths_[i];
  return m;
}

std::array<int, Grid::max_dims> Grid::multi_index(Eigen::Index k) const {
  std::array<int, max_dims> idx{};
  for (int i = 0; i < dims_; ++i) {
    idx[i] = static_cast<int>((k / strides_[i]) % counts_[i]);
  }
  return idx;
}

std::array<double, Grid::max_dims> Grid::coordinate(Eigen::Index k) const {
  const auto idx = multi_index(k);
  std::array<double, max_dims> x{};
  for (int i = 0; i < dims_; ++i) x[i] = (idx[i] + 1) * spacings_[i];
  return x;
}

Grid make_grid(int dims, const std::vector<double>& lengths,
               const std::vector<int>& resolution) {
  return Grid(dims, lengths, resolution);
}

Field::Field(Grid grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw InvalidArgument("field has " + std::to_string(values_.size()) +
                          " values but the grid has " + std::to_string(grid_.size()) +
                          " interior nodes");
  }
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw InvalidArgument("field value at node " + std::to_string(k) + " is not finite");
    }
  }
}

Field::Field(Grid grid) : grid_(std::move(grid)), values_(Vector::Zero(grid_.size())) {}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (!(a == b)) {
    throw InvalidArgument(std::string(where) + ": fields live on different grids");
  }
}

Field operator+(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "operator+");
  return Field(a.grid(), a.values() + b.values());
}

Field operator-(const Field& a, const Field& b) {
  require_same_grid(a.grid(), b.grid(), "operator-");
  return Field(a.grid(), a.values() - b.values());
}

Field operator*(double c, const Field& f) { return Field(f.grid(), c * f.values()); }

double lq_norm(const Field& f, double q) {
  if (!(q >= 1.0)) {
    throw InvalidArgument("lq_norm: exponent q must be >= 1");
  }
  return lq_norm(f.values(), q, f.grid().cell_volume());
}

double inner_product(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  return weighted_dot(f.values(), g.values(), f.grid().cell_volume());
}

Field positive_part(const Field& f) {
  return Field(f.grid(), f.values().cwiseMax(0.0));
}

double max_norm(const Field& f) {
  return f.size() == 0 ? 0.0 : f.values().cwiseAbs().maxCoeff();
}

Field eval_on_grid(const Grid& grid, const PointRule& rule) {
  Vector values(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto x = grid.coordinate(k);
    const double value = rule(std::span<const double>(x.data(), grid.dims()));
    if (!std::isfinite(value)) {
      throw EvaluationError("rule returned a non-finite value at node " + std::to_string(k), k);
    }
    values[k] = value;
  }
  return Field(grid, std::move(values));
}

}  // namespace sepde
