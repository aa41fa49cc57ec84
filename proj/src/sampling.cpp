#include "wavesolve/sampling.hpp"

#include <cmath>
#include <string>

#include "wavesolve/error.hpp"

namespace wavesolve {

std::string_view to_string(PointRole role) {
  switch (role) {
    case PointRole::Interior:
      return "interior";
    case PointRole::Boundary:
      return "boundary";
    case PointRole::Initial:
      return "initial";
    case PointRole::Evaluation:
      return "evaluation";
  }
  return "unknown";
}

std::vector<double> PointSet::axis(std::size_t d) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coord(i, d);
  return out;
}

namespace {

constexpr int kBits = 32;

// Joe-Kuo (new-joe-kuo-6.21201) parameters. Dimension 1 is the van der Corput
// sequence (all m_i = 1); dimension 2 has s = 1, a = 0, m_1 = 1.
std::vector<std::uint32_t> direction_numbers(std::size_t d) {
  std::vector<std::uint32_t> v(kBits);
  if (d == 0) {
    for (int i = 0; i < kBits; ++i) v[i] = std::uint32_t{1} << (kBits - 1 - i);
    return v;
  }
  constexpr int s = 1;
  constexpr std::uint32_t a = 0;
  const std::uint32_t m[s] = {1};
  for (int i = 0; i < s; ++i) v[i] = m[i] << (kBits - 1 - i);
  for (int i = s; i < kBits; ++i) {
    std::uint32_t value = v[i - s] ^ (v[i - s] >> s);
    for (int l = 1; l < s; ++l)
      if ((a >> (s - 1 - l)) & 1u) value ^= v[i - l];
    v[i] = value;
  }
  return v;
}

}  // namespace

SobolSequence::SobolSequence(std::size_t dim) : dim_(dim), state_(dim, 0) {
  if (dim < 1 || dim > 2) throw ConfigError("Sobol sequence supports dimensions 1 and 2");
  for (std::size_t d = 0; d < dim; ++d) directions_.push_back(direction_numbers(d));
}

std::vector<double> SobolSequence::next() {
  // Gray-code update: flip the direction number of the lowest zero bit of the
  // previous index. Starting from index 0 skips the all-zero element.
  std::uint64_t c = 0;
  std::uint64_t value = index_;
  while (value & 1u) {
    value >>= 1;
    ++c;
  }
  if (c >= kBits) throw NumericError("Sobol sequence exhausted");
  ++index_;
  std::vector<double> out(dim_);
  for (std::size_t d = 0; d < dim_; ++d) {
    state_[d] ^= directions_[d][c];
    out[d] = std::ldexp(static_cast<double>(state_[d]), -kBits);
  }
  return out;
}

PointSet sobol_points(std::size_t dim, std::size_t n, const Box& box) {
  if (dim < 1 || dim > 2) throw ConfigError("sobol_points: dim must be 1 or 2");
  if (n < 1) throw ConfigError("sobol_points: n must be >= 1");
  if (box.size() != dim) throw ShapeError("sobol_points: box dimension mismatch");
  SobolSequence seq(dim);
  PointSet out{dim, PointRole::Interior, {}};
  out.coords.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = seq.next();
    for (std::size_t d = 0; d < dim; ++d)
      out.coords.push_back(box[d].lo + u[d] * (box[d].hi - box[d].lo));
  }
  return out;
}

ConditionPoints boundary_points(const Geometry& geometry, std::size_t n_boundary,
                                std::size_t n_initial) {
  const std::size_t dim = geometry.dim();
  if (dim < 1 || dim > 2) throw ConfigError("boundary_points: dim must be 1 or 2");
  if (n_initial > 0 && !geometry.time_axis)
    throw ConfigError("boundary_points: initial points requested for a problem without time axis");
  ConditionPoints out{{dim, PointRole::Boundary, {}}, {dim, PointRole::Initial, {}}};
  const Box& box = geometry.box;

  if (dim == 1) {
    if (geometry.time_axis) {
      out.initial.coords = {box[0].lo};
    } else {
      out.boundary.coords = {box[0].lo, box[0].hi};
    }
    return out;
  }

  if (geometry.time_axis) {
    if (*geometry.time_axis != 1) throw ConfigError("boundary_points: time must be the second axis");
    const std::size_t per_side = n_boundary / 2;
    if (n_boundary > 0 && per_side == 0)
      throw ConfigError("boundary_points: need at least 2 boundary points");
    if (per_side > 0) {
      const auto t = sobol_points(1, per_side, {box[1]});
      for (double x : {box[0].lo, box[0].hi})
        for (std::size_t i = 0; i < per_side; ++i) out.boundary.coords.insert(out.boundary.coords.end(), {x, t.coords[i]});
    }
    if (n_initial > 0) {
      const auto x = sobol_points(1, n_initial, {box[0]});
      for (std::size_t i = 0; i < n_initial; ++i)
        out.initial.coords.insert(out.initial.coords.end(), {x.coords[i], box[1].lo});
    }
    return out;
  }

  const std::size_t per_edge = n_boundary / 4;
  if (n_boundary > 0 && per_edge == 0)
    throw ConfigError("boundary_points: need at least 4 boundary points");
  if (per_edge > 0) {
    const auto ys = sobol_points(1, per_edge, {box[1]});
    const auto xs = sobol_points(1, per_edge, {box[0]});
    for (double x : {box[0].lo, box[0].hi})
      for (std::size_t i = 0; i < per_edge; ++i) out.boundary.coords.insert(out.boundary.coords.end(), {x, ys.coords[i]});
    for (double y : {box[1].lo, box[1].hi})
      for (std::size_t i = 0; i < per_edge; ++i) out.boundary.coords.insert(out.boundary.coords.end(), {xs.coords[i], y});
  }
  return out;
}

PointSet uniform_grid(const Box& box, std::span<const std::size_t> resolution) {
  if (box.size() != resolution.size() || box.empty() || box.size() > 2)
    throw ShapeError("uniform_grid: one resolution per dimension (1 or 2) required");
  for (std::size_t r : resolution)
    if (r < 2) throw ConfigError("uniform_grid: resolution must be >= 2");
  auto node = [&](std::size_t d, std::size_t i) {
    if (i + 1 == resolution[d]) return box[d].hi;
    return box[d].lo + (box[d].hi - box[d].lo) * static_cast<double>(i) /
                           static_cast<double>(resolution[d] - 1);
  };
  PointSet out{box.size(), PointRole::Evaluation, {}};
  if (box.size() == 1) {
    for (std::size_t i = 0; i < resolution[0]; ++i) out.coords.push_back(node(0, i));
    return out;
  }
  out.coords.reserve(2 * resolution[0] * resolution[1]);
  for (std::size_t i = 0; i < resolution[0]; ++i)
    for (std::size_t j = 0; j < resolution[1]; ++j)
      out.coords.insert(out.coords.end(), {node(0, i), node(1, j)});
  return out;
}

}  // namespace wavesolve
