#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "wavesolve/basis.hpp"

namespace wavesolve {

enum class PointRole { Interior, Boundary, Initial, Evaluation };

std::string_view to_string(PointRole role);

/// Row-major list of points: point i occupies coords[i*dim .. i*dim+dim).
struct PointSet {
  std::size_t dim = 1;
  PointRole role = PointRole::Interior;
  std::vector<double> coords;

  std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  double coord(std::size_t i, std::size_t d) const { return coords[i * dim + d]; }
  void push_back(std::span<const double> p) { coords.insert(coords.end(), p.begin(), p.end()); }
  /// Column d of the set.
  std::vector<double> axis(std::size_t d) const;
};

/// Axis-aligned box, one interval per dimension.
using Box = std::vector<Interval>;

/// Rectangle (or segment) plus the index of the time axis, if any.
struct Geometry {
  Box box;
  std::optional<std::size_t> time_axis;

  std::size_t dim() const { return box.size(); }
};

/// Gray-code Sobol generator (Joe-Kuo direction numbers, dimensions 1-2).
class SobolSequence {
 public:
  explicit SobolSequence(std::size_t dim);
  /// Next point in [0,1)^dim. The all-zero initial element is skipped.
  std::vector<double> next();

 private:
  std::size_t dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::vector<std::uint32_t>> directions_;
};

/// First n points of the Sobol sequence mapped affinely onto the box.
PointSet sobol_points(std::size_t dim, std::size_t n, const Box& box);

struct ConditionPoints {
  PointSet boundary;
  PointSet initial;
};

/// Boundary and initial point sets for the geometry.
///
///  - 1D without time axis: boundary = {a, b}; requesting initial points throws.
///  - 1D with time axis (IVP): initial = {t0}; boundary is empty.
///  - 2D with time axis: n_boundary split evenly across x = a and x = b (same
///    Sobol-sampled t on both sides, so entries pair up); n_initial points at
///    t = t0 with Sobol-sampled x.
///  - 2D without time axis: n_boundary split evenly across the edges
///    x = a, x = b, y = c, y = d (in that order).
ConditionPoints boundary_points(const Geometry& geometry, std::size_t n_boundary,
                                std::size_t n_initial);

/// Tensor-product equispaced grid including the endpoints; the first axis
/// varies slowest.
PointSet uniform_grid(const Box& box, std::span<const std::size_t> resolution);

}  // namespace wavesolve
