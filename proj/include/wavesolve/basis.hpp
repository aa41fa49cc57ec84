#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wavesolve {

enum class MotherKind { Gaussian, MexicanHat };

std::string_view to_string(MotherKind kind);
/// Accepts "gaussian" / "mexican" (also "mexicanhat", "mexican_hat").
MotherKind parse_mother_kind(std::string_view name);

/// Closed-form psi, psi' or psi'' of the mother wavelet.
///
///   Gaussian:    psi(x) = -x e^{-x^2/2}
///   Mexican hat: psi(x) = (1 - x^2) e^{-x^2/2}
///
/// Throws ConfigError for order > 2.
double mother_eval(MotherKind kind, int order, double x);

struct FamilyIndex {
  int j = 0;           // resolution (dilation exponent), may be negative
  std::int64_t k = 0;  // translation

  friend bool operator==(const FamilyIndex&, const FamilyIndex&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Inclusive on both ends.
struct ResolutionRange {
  int jmin = 0;
  int jmax = 0;

  friend bool operator==(const ResolutionRange&, const ResolutionRange&) = default;
};

/// Translation range [ceil(a 2^{j+1}), ceil(b 2^{j+1})] for one resolution.
std::pair<std::int64_t, std::int64_t> translation_range(const Interval& domain, int j);

/// Dilates and translates of the mother wavelet along one coordinate axis.
struct AxisFamily {
  Interval domain;
  ResolutionRange resolutions;
  std::vector<FamilyIndex> indices;  // (j, k) lexicographic

  std::size_t size() const { return indices.size(); }
};

/// A 1D family or the tensor product of two axis families.
///
/// In 2D the flat index m enumerates (j1, k1, j2, k2) lexicographically, i.e.
/// m = m1 * M2 + m2 where m1, m2 index the axis families.
struct WaveletFamily {
  MotherKind mother = MotherKind::Gaussian;
  std::vector<AxisFamily> axes;

  std::size_t dim() const { return axes.size(); }
  std::size_t size() const;
  /// Per-axis positions of flat index m.
  std::vector<std::size_t> split_index(std::size_t m) const;
};

inline constexpr std::size_t kDefaultFamilyCap = std::size_t{1} << 20;

/// Enumerates the family over the given per-axis domains and resolution
/// ranges (one entry per dimension, 1 or 2 dimensions).
WaveletFamily enumerate_family(MotherKind mother, std::span<const Interval> domains,
                               std::span<const ResolutionRange> ranges,
                               std::size_t max_size = kDefaultFamilyCap);

/// 2^{j order} sqrt(2^j) psi^{(order)}(2^j x - k): derivative of one
/// dilated/translated member along its axis.
double axis_basis_eval(MotherKind kind, const FamilyIndex& index, int order, double x);

/// Family member m (flat index) differentiated `orders[d]` times along axis d,
/// evaluated at `point`.
double basis_eval(const WaveletFamily& family, std::size_t m, std::span<const int> orders,
                  std::span<const double> point);

}  // namespace wavesolve
