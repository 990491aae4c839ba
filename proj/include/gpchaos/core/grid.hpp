#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace gpchaos::core {

inline constexpr std::size_t kDefaultMaxPoints = std::size_t{1} << 27;
inline constexpr int kMaxDim = 16;

/// Uniform tensor grid on the cube [-L, L]^dim with n points per axis.
/// Flat indices are row-major: axis 0 varies slowest.
class Grid {
 public:
  Grid(int dim, double half_width, int points_per_axis,
       std::size_t max_points = kDefaultMaxPoints);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return size_; }
  double cell_volume() const;

  double coordinate(int index) const { return -half_width_ + index * spacing_; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  int index_along(std::size_t flat, int axis) const {
    return static_cast<int>((flat / strides_[static_cast<std::size_t>(axis)]) %
                            static_cast<std::size_t>(n_));
  }

  void unravel(std::size_t flat, std::span<int> index) const;
  std::size_t ravel(std::span<const int> index) const;
  void point(std::size_t flat, std::span<double> x) const;

  /// Trapezoid weight along one axis (h in the interior, h/2 at the ends).
  double axis_weight(int index) const {
    return (index == 0 || index == n_ - 1) ? 0.5 * spacing_ : spacing_;
  }
  /// Tensor-product trapezoid weight of a grid node.
  double weight(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;

  /// Same spacing and extent, different dimension.
  Grid with_dim(int dim, std::size_t max_points = kDefaultMaxPoints) const;

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_ && a.half_width_ == b.half_width_;
  }

 private:
  int dim_;
  double half_width_;
  int n_;
  double spacing_;
  std::size_t size_;
  std::vector<std::size_t> strides_;
};

/// Real field sampled on a grid. Values are always finite.
class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values);

  static ScalarField zeros(Grid grid);
  static ScalarField constant(Grid grid, double value);
  static ScalarField sample(Grid grid, const std::function<double(std::span<const double>)>& f);

  /// Validates nonnegativity and unit trapezoid mass (within tolerance) and
  /// returns the field flagged as a density.
  static ScalarField density(Grid grid, std::vector<double> values, double tolerance = 1e-10);

  /// Rescales a nonnegative field to unit mass and flags it as a density.
  ScalarField normalized() const;

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  bool is_density() const { return is_density_; }
  double max() const;
  double min() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  bool is_density_ = false;
};

/// Vector-valued field with `components` entries per node, stored interleaved.
class VectorField {
 public:
  VectorField(Grid grid, int components, std::vector<double> values);
  static VectorField zeros(Grid grid, int components);

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  double at(std::size_t flat, int c) const {
    return values_[flat * static_cast<std::size_t>(components_) + static_cast<std::size_t>(c)];
  }
  double& at(std::size_t flat, int c) {
    return values_[flat * static_cast<std::size_t>(components_) + static_cast<std::size_t>(c)];
  }
  std::span<const double> values() const { return values_; }
  /// Extracts a single component as a scalar field.
  ScalarField component(int c) const;

 private:
  Grid grid_;
  int components_;
  std::vector<double> values_;
};

/// Equal-weight point cloud; represents an empirical measure.
class SampleSet {
 public:
  SampleSet(int dim, std::vector<double> coordinates);

  int dim() const { return dim_; }
  std::size_t count() const { return coordinates_.size() / static_cast<std::size_t>(dim_); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coordinates_).subspan(i * static_cast<std::size_t>(dim_),
                                                        static_cast<std::size_t>(dim_));
  }
  std::span<const double> coordinates() const { return coordinates_; }
  double weight() const { return 1.0 / static_cast<double>(count()); }

  /// Points restricted to the coordinate range [first, first + width).
  SampleSet project(int first, int width) const;
  /// Rows selected by index (duplicates allowed, used for bootstrap resampling).
  SampleSet select(std::span<const std::size_t> rows) const;

 private:
  int dim_;
  std::vector<double> coordinates_;
};

}  // namespace gpchaos::core
