#include "wavesolve/basis.hpp"

#include <cmath>
#include <limits>

#include "wavesolve/error.hpp"

namespace wavesolve {

std::string_view to_string(MotherKind kind) {
  switch (kind) {
    case MotherKind::Gaussian:
      return "gaussian";
    case MotherKind::MexicanHat:
      return "mexican";
  }
  return "unknown";
}

MotherKind parse_mother_kind(std::string_view name) {
  if (name == "gaussian" || name == "G" || name == "g") return MotherKind::Gaussian;
  if (name == "mexican" || name == "mexicanhat" || name == "mexican_hat" || name == "M" ||
      name == "m")
    return MotherKind::MexicanHat;
  throw ConfigError("unknown wavelet kind '" + std::string(name) + "'");
}

double mother_eval(MotherKind kind, int order, double x) {
  if (order < 0 || order > 2)
    throw ConfigError("mother_eval: derivative order " + std::to_string(order) +
                      " unsupported (0..2)");
  const double x2 = x * x;
  const double e = std::exp(-0.5 * x2);
  if (kind == MotherKind::Gaussian) {
    switch (order) {
      case 0:
        return -x * e;
      case 1:
        return (x2 - 1.0) * e;
      default:
        return (3.0 * x - x2 * x) * e;
    }
  }
  switch (order) {
    case 0:
      return (1.0 - x2) * e;
    case 1:
      return (x2 * x - 3.0 * x) * e;
    default:
      return (-x2 * x2 + 6.0 * x2 - 3.0) * e;
  }
}

std::pair<std::int64_t, std::int64_t> translation_range(const Interval& domain, int j) {
  // Scaling by a power of two is exact, so the ceilings are exact too.
  const double lo = std::ceil(std::ldexp(domain.lo, j + 1));
  const double hi = std::ceil(std::ldexp(domain.hi, j + 1));
  constexpr double kLimit = 9.0e15;
  if (std::abs(lo) > kLimit || std::abs(hi) > kLimit)
    throw ConfigError("translation range overflows at resolution " + std::to_string(j));
  return {static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)};
}

std::size_t WaveletFamily::size() const {
  if (axes.empty()) return 0;
  std::size_t m = 1;
  for (const auto& a : axes) m *= a.size();
  return m;
}

std::vector<std::size_t> WaveletFamily::split_index(std::size_t m) const {
  std::vector<std::size_t> out(axes.size());
  for (std::size_t d = axes.size(); d-- > 0;) {
    out[d] = m % axes[d].size();
    m /= axes[d].size();
  }
  return out;
}

namespace {

std::size_t axis_count(const Interval& domain, const ResolutionRange& r) {
  std::size_t total = 0;
  for (int j = r.jmin; j <= r.jmax; ++j) {
    const auto [lo, hi] = translation_range(domain, j);
    total += static_cast<std::size_t>(hi - lo + 1);
  }
  return total;
}

}  // namespace

WaveletFamily enumerate_family(MotherKind mother, std::span<const Interval> domains,
                               std::span<const ResolutionRange> ranges, std::size_t max_size) {
  if (domains.empty() || domains.size() > 2)
    throw ConfigError("enumerate_family: 1 or 2 dimensions supported");
  if (domains.size() != ranges.size())
    throw ConfigError("enumerate_family: one resolution range per dimension required");

  // Count first so an oversized request fails before allocating.
  std::size_t total = 1;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const auto& dom = domains[d];
    const auto& r = ranges[d];
    if (!(std::isfinite(dom.lo) && std::isfinite(dom.hi)) || !(dom.lo < dom.hi))
      throw ConfigError("enumerate_family: empty domain along axis " + std::to_string(d));
    if (r.jmin > r.jmax)
      throw ConfigError("enumerate_family: resolution range [" + std::to_string(r.jmin) + "," +
                        std::to_string(r.jmax) + "] is empty");
    if (r.jmin < -60 || r.jmax > 50)
      throw ConfigError("enumerate_family: resolution out of supported range [-60,50]");
    const std::size_t n = axis_count(dom, r);
    if (n > max_size || total > max_size / n)
      throw ConfigError("enumerate_family: family size exceeds cap of " + std::to_string(max_size));
    total *= n;
  }

  WaveletFamily family;
  family.mother = mother;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    AxisFamily axis{domains[d], ranges[d], {}};
    axis.indices.reserve(axis_count(domains[d], ranges[d]));
    for (int j = ranges[d].jmin; j <= ranges[d].jmax; ++j) {
      const auto [lo, hi] = translation_range(domains[d], j);
      for (std::int64_t k = lo; k <= hi; ++k) axis.indices.push_back({j, k});
    }
    family.axes.push_back(std::move(axis));
  }
  return family;
}

double axis_basis_eval(MotherKind kind, const FamilyIndex& index, int order, double x) {
  const double scale = std::ldexp(1.0, index.j);
  const double arg = scale * x - static_cast<double>(index.k);
  // 2^{j order} sqrt(2^j): exact power of two times the normalisation.
  const double factor = std::ldexp(std::sqrt(scale), index.j * order);
  return factor * mother_eval(kind, order, arg);
}

double basis_eval(const WaveletFamily& family, std::size_t m, std::span<const int> orders,
                  std::span<const double> point) {
  if (orders.size() != family.dim() || point.size() != family.dim())
    throw ShapeError("basis_eval: orders/point dimension mismatch");
  if (m >= family.size()) throw ShapeError("basis_eval: index out of range");
  const auto pos = family.split_index(m);
  double value = 1.0;
  for (std::size_t d = 0; d < family.dim(); ++d)
    value *= axis_basis_eval(family.mother, family.axes[d].indices[pos[d]], orders[d], point[d]);
  return value;
}

}  // namespace wavesolve
