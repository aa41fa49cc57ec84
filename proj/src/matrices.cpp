#include "wavesolve/matrices.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "wavesolve/error.hpp"

namespace wavesolve {

namespace {

// exp(-a^2/2) is exactly zero in double precision once |a| > 38.6.
constexpr double kSupportRadius = 40.0;

double drop_negligible(double v) { return std::abs(v) <= kNegligibleEntry ? 0.0 : v; }

std::string describe(std::span<const double> p) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t d = 0; d < p.size(); ++d) os << (d ? ", " : "") << p[d];
  os << ")";
  return os.str();
}

ProfileBlock build_profile(const AxisFamily& axis, MotherKind kind, int order,
                           const std::vector<double>& sorted_x) {
  ProfileBlock block;
  const std::size_t m_count = axis.size();
  block.begin.resize(m_count);
  block.end.resize(m_count);
  block.offset.resize(m_count);
  std::vector<double> column;
  for (std::size_t m = 0; m < m_count; ++m) {
    const auto& idx = axis.indices[m];
    const double inv_scale = std::ldexp(1.0, -idx.j);
    const double k = static_cast<double>(idx.k);
    const double lo = (k - kSupportRadius) * inv_scale;
    const double hi = (k + kSupportRadius) * inv_scale;
    auto first = static_cast<std::size_t>(
        std::lower_bound(sorted_x.begin(), sorted_x.end(), lo) - sorted_x.begin());
    auto last = static_cast<std::size_t>(
        std::upper_bound(sorted_x.begin(), sorted_x.end(), hi) - sorted_x.begin());
    column.clear();
    for (std::size_t s = first; s < last; ++s)
      column.push_back(drop_negligible(axis_basis_eval(kind, idx, order, sorted_x[s])));
    std::size_t b = 0;
    std::size_t e = column.size();
    while (b < e && column[b] == 0.0) ++b;
    while (e > b && column[e - 1] == 0.0) --e;
    block.begin[m] = first + b;
    block.end[m] = first + e;
    block.offset[m] = block.values.size();
    block.values.insert(block.values.end(), column.begin() + static_cast<std::ptrdiff_t>(b),
                        column.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return block;
}

Eigen::MatrixXd build_factor(const AxisFamily& axis, MotherKind kind, int order,
                             const PointSet& points, std::size_t d) {
  const std::size_t n = points.size();
  Eigen::MatrixXd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(axis.size()));
  for (std::size_t m = 0; m < axis.size(); ++m)
    for (std::size_t i = 0; i < n; ++i)
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
          drop_negligible(axis_basis_eval(kind, axis.indices[m], order, points.coord(i, d)));
  return f;
}

template <typename T>
void write_pod(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("truncated block file");
  return value;
}

}  // namespace

bool BasisMatrices::has(const MultiOrder& order) const {
  return std::find(orders_.begin(), orders_.end(), order) != orders_.end();
}

void BasisMatrices::check_order(const MultiOrder& order) const {
  if (!has(order))
    throw ConfigError("basis block (" + std::to_string(order[0]) + "," + std::to_string(order[1]) +
                      ") was not assembled");
}

double BasisMatrices::entry(const MultiOrder& order, std::size_t i, std::size_t m) const {
  check_order(order);
  if (i >= rows() || m >= cols()) throw ShapeError("BasisMatrices::entry: index out of range");
  if (family_.dim() == 1) {
    const auto& block = profile_.at(order[0]);
    const auto pos = static_cast<std::size_t>(
        std::find(sorted_.begin(), sorted_.end(), i) - sorted_.begin());
    if (pos < block.begin[m] || pos >= block.end[m]) return 0.0;
    return block.values[block.offset[m] + pos - block.begin[m]];
  }
  const auto split = family_.split_index(m);
  const auto r = static_cast<Eigen::Index>(i);
  return factors_[0].at(order[0])(r, static_cast<Eigen::Index>(split[0])) *
         factors_[1].at(order[1])(r, static_cast<Eigen::Index>(split[1]));
}

Eigen::MatrixXd BasisMatrices::dense(const MultiOrder& order) const {
  check_order(order);
  const auto n = static_cast<Eigen::Index>(rows());
  const auto mcount = static_cast<Eigen::Index>(cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, mcount);
  if (family_.dim() == 1) {
    const auto& block = profile_.at(order[0]);
    for (Eigen::Index m = 0; m < mcount; ++m) {
      const auto mm = static_cast<std::size_t>(m);
      for (std::size_t s = block.begin[mm]; s < block.end[mm]; ++s)
        out(static_cast<Eigen::Index>(sorted_[s]), m) = block.values[block.offset[mm] + s - block.begin[mm]];
    }
    return out;
  }
  const auto& f1 = factors_[0].at(order[0]);
  const auto& f2 = factors_[1].at(order[1]);
  const Eigen::Index m2 = f2.cols();
  for (Eigen::Index a = 0; a < f1.cols(); ++a)
    for (Eigen::Index b = 0; b < m2; ++b) out.col(a * m2 + b) = f1.col(a).cwiseProduct(f2.col(b));
  return out;
}

Eigen::MatrixXd BasisMatrices::apply(const MultiOrder& order,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  const MultiOrder orders[] = {order};
  return std::move(apply_many(orders, x).front());
}

std::vector<Eigen::MatrixXd> BasisMatrices::apply_many(
    std::span<const MultiOrder> orders, const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (static_cast<std::size_t>(x.rows()) != cols())
    throw ShapeError("BasisMatrices::apply: coefficient length " + std::to_string(x.rows()) +
                     " != family size " + std::to_string(cols()));
  for (const auto& o : orders) check_order(o);
  const auto n = static_cast<Eigen::Index>(rows());
  const Eigen::Index fields = x.cols();
  std::vector<Eigen::MatrixXd> out(orders.size());

  if (family_.dim() == 1) {
    Eigen::MatrixXd ys(n, fields);
    for (std::size_t s = 0; s < orders.size(); ++s) {
      const auto& block = profile_.at(orders[s][0]);
      ys.setZero();
      for (std::size_t m = 0; m < block.begin.size(); ++m) {
        const auto len = static_cast<Eigen::Index>(block.end[m] - block.begin[m]);
        if (len == 0) continue;
        Eigen::Map<const Eigen::VectorXd> col(block.values.data() + block.offset[m], len);
        const auto b = static_cast<Eigen::Index>(block.begin[m]);
        for (Eigen::Index f = 0; f < fields; ++f)
          ys.col(f).segment(b, len) += x(static_cast<Eigen::Index>(m), f) * col;
      }
      out[s].resize(n, fields);
      for (Eigen::Index r = 0; r < n; ++r) out[s].row(static_cast<Eigen::Index>(sorted_[r])) = ys.row(r);
    }
    return out;
  }

  const auto& axis1 = family_.axes[1];
  const auto m1 = static_cast<Eigen::Index>(family_.axes[0].size());
  const auto m2 = static_cast<Eigen::Index>(axis1.size());
  // Coefficients of all fields side by side: C(a, f*M2 + b) = x(a*M2 + b, f).
  Eigen::MatrixXd coeffs(m1, fields * m2);
  for (Eigen::Index f = 0; f < fields; ++f)
    coeffs.middleCols(f * m2, m2) =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            x.col(f).data(), m1, m2);
  std::set<int> first_orders;
  for (const auto& o : orders) first_orders.insert(o[0]);
  for (int o1 : first_orders) {
    const Eigen::MatrixXd t = factors_[0].at(o1) * coeffs;  // N x F*M2
    for (std::size_t s = 0; s < orders.size(); ++s) {
      if (orders[s][0] != o1) continue;
      const auto& f2 = factors_[1].at(orders[s][1]);
      out[s].resize(n, fields);
      for (Eigen::Index f = 0; f < fields; ++f)
        out[s].col(f) = t.middleCols(f * m2, m2).cwiseProduct(f2).rowwise().sum();
    }
  }
  return out;
}

void BasisMatrices::apply_transpose_add(std::span<const MultiOrder> orders,
                                        std::span<const Eigen::MatrixXd> weights,
                                        Eigen::Ref<Eigen::MatrixXd> g) const {
  if (orders.size() != weights.size())
    throw ShapeError("apply_transpose_add: one weight matrix per order required");
  if (static_cast<std::size_t>(g.rows()) != cols())
    throw ShapeError("apply_transpose_add: gradient rows != family size");
  const auto n = static_cast<Eigen::Index>(rows());
  const Eigen::Index fields = g.cols();
  for (std::size_t s = 0; s < orders.size(); ++s) {
    check_order(orders[s]);
    if (weights[s].rows() != n || weights[s].cols() != fields)
      throw ShapeError("apply_transpose_add: weight shape mismatch");
  }

  if (family_.dim() == 1) {
    Eigen::MatrixXd ws(n, fields);
    for (std::size_t s = 0; s < orders.size(); ++s) {
      const auto& block = profile_.at(orders[s][0]);
      for (Eigen::Index r = 0; r < n; ++r) ws.row(r) = weights[s].row(static_cast<Eigen::Index>(sorted_[r]));
      for (std::size_t m = 0; m < block.begin.size(); ++m) {
        const auto len = static_cast<Eigen::Index>(block.end[m] - block.begin[m]);
        if (len == 0) continue;
        Eigen::Map<const Eigen::VectorXd> col(block.values.data() + block.offset[m], len);
        const auto b = static_cast<Eigen::Index>(block.begin[m]);
        for (Eigen::Index f = 0; f < fields; ++f)
          g(static_cast<Eigen::Index>(m), f) += col.dot(ws.col(f).segment(b, len));
      }
    }
    return;
  }

  const auto m1 = static_cast<Eigen::Index>(family_.axes[0].size());
  const auto m2 = static_cast<Eigen::Index>(family_.axes[1].size());
  std::set<int> first_orders;
  for (const auto& o : orders) first_orders.insert(o[0]);
  Eigen::MatrixXd z(n, fields * m2);
  for (int o1 : first_orders) {
    z.setZero();
    for (std::size_t s = 0; s < orders.size(); ++s) {
      if (orders[s][0] != o1) continue;
      const auto& f2 = factors_[1].at(orders[s][1]);
      for (Eigen::Index f = 0; f < fields; ++f)
        z.middleCols(f * m2, m2) += weights[s].col(f).asDiagonal() * f2;
    }
    const Eigen::MatrixXd gm = factors_[0].at(o1).transpose() * z;  // M1 x F*M2
    for (Eigen::Index f = 0; f < fields; ++f)
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          g.col(f).data(), m1, m2) += gm.middleCols(f * m2, m2);
  }
}

Eigen::VectorXd BasisMatrices::combined_column_norms(std::span<const MultiOrder> orders,
                                                     std::span<const Eigen::VectorXd> row_weights) const {
  if (orders.size() != row_weights.size())
    throw ShapeError("combined_column_norms: one weight vector per order required");
  const auto n = static_cast<Eigen::Index>(rows());
  for (std::size_t s = 0; s < orders.size(); ++s) {
    check_order(orders[s]);
    if (row_weights[s].size() != n) throw ShapeError("combined_column_norms: weight length mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols()));

  if (family_.dim() == 1) {
    std::vector<Eigen::VectorXd> ws(orders.size(), Eigen::VectorXd(n));
    for (std::size_t s = 0; s < orders.size(); ++s)
      for (Eigen::Index r = 0; r < n; ++r) ws[s][r] = row_weights[s][static_cast<Eigen::Index>(sorted_[r])];
    Eigen::VectorXd column(n);
    for (std::size_t m = 0; m < cols(); ++m) {
      std::size_t lo = rows(), hi = 0;
      for (const auto& o : orders) {
        const auto& block = profile_.at(o[0]);
        if (block.end[m] > block.begin[m]) {
          lo = std::min(lo, block.begin[m]);
          hi = std::max(hi, block.end[m]);
        }
      }
      if (hi <= lo) continue;
      column.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)).setZero();
      for (std::size_t s = 0; s < orders.size(); ++s) {
        const auto& block = profile_.at(orders[s][0]);
        for (std::size_t r = block.begin[m]; r < block.end[m]; ++r)
          column[static_cast<Eigen::Index>(r)] +=
              ws[s][static_cast<Eigen::Index>(r)] * block.values[block.offset[m] + r - block.begin[m]];
      }
      out[static_cast<Eigen::Index>(m)] =
          column.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)).squaredNorm();
    }
    return out;
  }

  // sum_i (sum_s w_s F1s(i,a) F2s(i,b))^2 expands into one GEMM per pair (s, t).
  const auto m1 = static_cast<Eigen::Index>(family_.axes[0].size());
  const auto m2 = static_cast<Eigen::Index>(family_.axes[1].size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m1, m2);
  for (std::size_t s = 0; s < orders.size(); ++s)
    for (std::size_t t = 0; t < orders.size(); ++t) {
      const Eigen::MatrixXd left =
          factors_[0].at(orders[s][0]).cwiseProduct(factors_[0].at(orders[t][0]));
      const Eigen::VectorXd w = row_weights[s].cwiseProduct(row_weights[t]);
      const Eigen::MatrixXd right =
          w.asDiagonal() * factors_[1].at(orders[s][1]).cwiseProduct(factors_[1].at(orders[t][1]));
      acc.noalias() += left.transpose() * right;
    }
  for (Eigen::Index a = 0; a < m1; ++a)
    for (Eigen::Index b = 0; b < m2; ++b) out[a * m2 + b] = std::max(acc(a, b), 0.0);
  return out;
}

BasisMatrices assemble(const WaveletFamily& family, const PointSet& points,
                       std::span<const MultiOrder> required_orders) {
  if (family.dim() == 0) throw ConfigError("assemble: empty family");
  if (points.dim != family.dim()) throw ShapeError("assemble: point dimension != family dimension");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto p = points.point(i);
    for (std::size_t d = 0; d < family.dim(); ++d) {
      const auto& dom = family.axes[d].domain;
      if (!std::isfinite(p[d]) || p[d] < dom.lo - kDomainTolerance || p[d] > dom.hi + kDomainTolerance)
        throw DomainError("assemble: point " + std::to_string(i) + " " + describe(p) +
                          " lies outside the family domain");
    }
  }

  BasisMatrices out;
  out.family_ = family;
  out.points_ = points;
  for (const auto& o : required_orders) {
    if (o[0] < 0 || o[0] > 2 || o[1] < 0 || o[1] > 2)
      throw ConfigError("assemble: derivative orders must lie in 0..2");
    if (family.dim() == 1 && o[1] != 0) throw ConfigError("assemble: 1D family with 2D order");
    if (!out.has(o)) out.orders_.push_back(o);
  }

  if (family.dim() == 1) {
    const std::size_t n = points.size();
    out.sorted_.resize(n);
    std::iota(out.sorted_.begin(), out.sorted_.end(), std::size_t{0});
    std::stable_sort(out.sorted_.begin(), out.sorted_.end(), [&](std::size_t a, std::size_t b) {
      return points.coords[a] < points.coords[b];
    });
    std::vector<double> xs(n);
    for (std::size_t s = 0; s < n; ++s) xs[s] = points.coords[out.sorted_[s]];
    for (const auto& o : out.orders_)
      if (!out.profile_.contains(o[0]))
        out.profile_.emplace(o[0], build_profile(family.axes[0], family.mother, o[0], xs));
    return out;
  }

  for (const auto& o : out.orders_)
    for (std::size_t d = 0; d < 2; ++d)
      if (!out.factors_[d].contains(o[d]))
        out.factors_[d].emplace(o[d], build_factor(family.axes[d], family.mother, o[d], points, d));
  return out;
}

Eigen::VectorXd reconstruct(const BasisMatrices& matrices, const Eigen::Ref<const Eigen::VectorXd>& c,
                            double bias, const MultiOrder& order) {
  if (static_cast<std::size_t>(c.size()) != matrices.cols())
    throw ShapeError("reconstruct: coefficient length " + std::to_string(c.size()) +
                     " != family size " + std::to_string(matrices.cols()));
  Eigen::VectorXd out = matrices.apply(order, c).col(0);
  if (order == kZeroOrder) out.array() += bias;
  return out;
}

void save_blocks(const BasisMatrices& matrices, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write("WSBM", 4);
  write_pod<std::uint32_t>(os, 1);
  write_pod<std::uint64_t>(os, matrices.rows());
  write_pod<std::uint64_t>(os, matrices.cols());
  const auto orders = matrices.orders();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(orders.size()));
  for (const auto& o : orders) {
    write_pod<std::int32_t>(os, o[0]);
    write_pod<std::int32_t>(os, o[1]);
  }
  for (const auto& o : orders) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block = matrices.dense(o);
    os.write(reinterpret_cast<const char*>(block.data()),
             static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

DenseBlockFile load_blocks(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "WSBM", 4) != 0) throw IoError("'" + path.string() + "' is not a block file");
  if (read_pod<std::uint32_t>(is) != 1) throw IoError("unsupported block file version");
  DenseBlockFile out;
  out.rows = read_pod<std::uint64_t>(is);
  out.cols = read_pod<std::uint64_t>(is);
  const auto count = read_pod<std::uint32_t>(is);
  for (std::uint32_t s = 0; s < count; ++s) {
    const int a = read_pod<std::int32_t>(is);
    const int b = read_pod<std::int32_t>(is);
    out.orders.push_back({a, b});
  }
  for (std::uint32_t s = 0; s < count; ++s) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> block(
        static_cast<Eigen::Index>(out.rows), static_cast<Eigen::Index>(out.cols));
    is.read(reinterpret_cast<char*>(block.data()), static_cast<std::streamsize>(block.size() * sizeof(double)));
    if (!is) throw IoError("truncated block file '" + path.string() + "'");
    out.blocks.emplace_back(block);
  }
  return out;
}

}  // namespace wavesolve
