#include "gpchaos/core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gpchaos/core/quadrature.hpp"
#include "gpchaos/error.hpp"

namespace gpchaos::core {

Grid::Grid(int dim, double half_width, int points_per_axis, std::size_t max_points)
    : dim_(dim), half_width_(half_width), n_(points_per_axis) {
  require(dim >= 1 && dim <= kMaxDim, ErrorKind::kInvalidArgument, "grid dimension must be in [1, 16]", "dim");
  require(std::isfinite(half_width) && half_width > 0.0, ErrorKind::kInvalidArgument,
          "grid half-width must be positive", "extent_per_axis");
  require(points_per_axis >= 8, ErrorKind::kInvalidArgument, "grid needs at least 8 points per axis",
          "points_per_axis");
  // dim * log(n) against log(max_points), evaluated without overflow.
  require(dim * std::log(static_cast<double>(n_)) <= std::log(static_cast<double>(max_points)) + 1e-12,
          ErrorKind::kCapExceeded,
          "grid with " + std::to_string(n_) + "^" + std::to_string(dim) + " points exceeds the cap of " +
              std::to_string(max_points),
          "grid");
  spacing_ = 2.0 * half_width_ / (n_ - 1);
  strides_.assign(static_cast<std::size_t>(dim_), 1);
  for (int a = dim_ - 2; a >= 0; --a) {
    strides_[static_cast<std::size_t>(a)] =
        strides_[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(n_);
  }
  size_ = strides_[0] * static_cast<std::size_t>(n_);
}

double Grid::cell_volume() const { return std::pow(spacing_, dim_); }

void Grid::unravel(std::size_t flat, std::span<int> index) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    index[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
}

std::size_t Grid::ravel(std::span<const int> index) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(index[static_cast<std::size_t>(a)]);
  }
  return flat;
}

void Grid::point(std::size_t flat, std::span<double> x) const {
  for (int a = dim_ - 1; a >= 0; --a) {
    x[static_cast<std::size_t>(a)] = coordinate(static_cast<int>(flat % static_cast<std::size_t>(n_)));
    flat /= static_cast<std::size_t>(n_);
  }
}

double Grid::weight(std::size_t flat) const {
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) {
    w *= axis_weight(static_cast<int>(flat % static_cast<std::size_t>(n_)));
    flat /= static_cast<std::size_t>(n_);
  }
  return w;
}

bool Grid::on_boundary(std::size_t flat) const {
  for (int a = 0; a < dim_; ++a) {
    const auto i = flat % static_cast<std::size_t>(n_);
    if (i == 0 || i == static_cast<std::size_t>(n_ - 1)) return true;
    flat /= static_cast<std::size_t>(n_);
  }
  return false;
}

Grid Grid::with_dim(int dim, std::size_t max_points) const {
  return Grid(dim, half_width_, n_, max_points);
}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  require(values_.size() == grid_.size(), ErrorKind::kDimensionMismatch,
          "field has " + std::to_string(values_.size()) + " values for a grid of " +
              std::to_string(grid_.size()) + " nodes");
  require(std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }),
          ErrorKind::kInvalidArgument, "field values must be finite");
}

ScalarField ScalarField::zeros(Grid grid) { return constant(std::move(grid), 0.0); }

ScalarField ScalarField::constant(Grid grid, double value) {
  std::vector<double> v(grid.size(), value);
  return ScalarField(std::move(grid), std::move(v));
}

ScalarField ScalarField::sample(Grid grid, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> v(grid.size());
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.point(i, x);
    v[i] = f(x);
  }
  return ScalarField(std::move(grid), std::move(v));
}

ScalarField ScalarField::density(Grid grid, std::vector<double> values, double tolerance) {
  ScalarField field(std::move(grid), std::move(values));
  require(field.min() >= 0.0, ErrorKind::kInvalidArgument, "density has negative values");
  const double mass = integrate(field);
  require(std::abs(mass - 1.0) <= tolerance, ErrorKind::kNotNormalized,
          "density mass " + std::to_string(mass) + " differs from 1");
  field.is_density_ = true;
  return field;
}

ScalarField ScalarField::normalized() const {
  require(min() >= 0.0, ErrorKind::kInvalidArgument, "cannot normalize a field with negative values");
  const double mass = integrate(*this);
  require(mass > 0.0, ErrorKind::kNotNormalized, "cannot normalize a field with zero mass");
  std::vector<double> v(values_.begin(), values_.end());
  for (double& x : v) x /= mass;
  ScalarField out(grid_, std::move(v));
  out.is_density_ = true;
  return out;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

VectorField::VectorField(Grid grid, int components, std::vector<double> values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  require(components >= 1, ErrorKind::kInvalidArgument, "vector field needs components");
  require(values_.size() == grid_.size() * static_cast<std::size_t>(components),
          ErrorKind::kDimensionMismatch, "vector field size does not match grid");
}

VectorField VectorField::zeros(Grid grid, int components) {
  std::vector<double> v(grid.size() * static_cast<std::size_t>(components), 0.0);
  return VectorField(std::move(grid), components, std::move(v));
}

ScalarField VectorField::component(int c) const {
  std::vector<double> v(grid_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = at(i, c);
  return ScalarField(grid_, std::move(v));
}

SampleSet::SampleSet(int dim, std::vector<double> coordinates)
    : dim_(dim), coordinates_(std::move(coordinates)) {
  require(dim >= 1, ErrorKind::kInvalidArgument, "sample dimension must be positive");
  require(!coordinates_.empty() && coordinates_.size() % static_cast<std::size_t>(dim) == 0,
          ErrorKind::kInvalidArgument, "sample set needs at least one complete point");
  require(std::all_of(coordinates_.begin(), coordinates_.end(), [](double v) { return std::isfinite(v); }),
          ErrorKind::kInvalidArgument, "sample coordinates must be finite");
}

SampleSet SampleSet::project(int first, int width) const {
  require(first >= 0 && width >= 1 && first + width <= dim_, ErrorKind::kDimensionMismatch,
          "projection outside the sample dimension");
  std::vector<double> out;
  out.reserve(count() * static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < count(); ++i) {
    auto p = point(i);
    out.insert(out.end(), p.begin() + first, p.begin() + first + width);
  }
  return SampleSet(width, std::move(out));
}

SampleSet SampleSet::select(std::span<const std::size_t> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(dim_));
  for (std::size_t r : rows) {
    auto p = point(r);
    out.insert(out.end(), p.begin(), p.end());
  }
  return SampleSet(dim_, std::move(out));
}

}  // namespace gpchaos::core
