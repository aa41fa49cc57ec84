#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "wavesolve/basis.hpp"
#include "wavesolve/sampling.hpp"

namespace wavesolve {

/// Derivative order along each axis; 1D problems leave the second entry 0.
using MultiOrder = std::array<int, 2>;

inline constexpr MultiOrder kZeroOrder{0, 0};

/// Stored entries with magnitude at or below this are replaced by zero. The
/// Gaussian tails would otherwise leave subnormal doubles in the blocks, and
/// those slow the dense products by an order of magnitude.
inline constexpr double kNegligibleEntry = 1e-30;

/// N x M block whose column m is nonzero only on the sorted rows
/// [begin[m], end[m]). Entries outside that range are below kNegligibleEntry.
struct ProfileBlock {
  std::vector<std::size_t> begin;
  std::vector<std::size_t> end;
  std::vector<std::size_t> offset;  // start of column m in values
  std::vector<double> values;
};

/// Dense evaluations of the family and its partial derivatives at a fixed
/// point set (the weights of the non-trainable reconstruction stage).
///
/// 1D blocks are kept in column-profile form over the points sorted by
/// coordinate. 2D blocks are kept factored: the row of point i in block
/// (o1, o2) is kron(F1[o1].row(i), F2[o2].row(i)), which is exactly the
/// tensor-product basis. `dense()` materialises either form.
class BasisMatrices {
 public:
  BasisMatrices() = default;

  const WaveletFamily& family() const { return family_; }
  const PointSet& points() const { return points_; }
  std::size_t rows() const { return points_.size(); }
  std::size_t cols() const { return family_.size(); }
  bool has(const MultiOrder& order) const;
  std::vector<MultiOrder> orders() const { return orders_; }

  double entry(const MultiOrder& order, std::size_t i, std::size_t m) const;
  Eigen::MatrixXd dense(const MultiOrder& order) const;

  /// Y = block * X. X is M x F (one coefficient column per field), Y is N x F.
  Eigen::MatrixXd apply(const MultiOrder& order, const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  /// Evaluates several blocks against the same coefficients, sharing work
  /// between blocks with a common first-axis order.
  std::vector<Eigen::MatrixXd> apply_many(std::span<const MultiOrder> orders,
                                          const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  /// G += sum_s block(orders[s])^T W[s]. Each W[s] is N x F, G is M x F.
  void apply_transpose_add(std::span<const MultiOrder> orders,
                           std::span<const Eigen::MatrixXd> weights,
                           Eigen::Ref<Eigen::MatrixXd> g) const;

  /// Squared column norms of sum_s diag(w_s) * block(orders[s]), where each
  /// w_s holds one weight per point.
  Eigen::VectorXd combined_column_norms(std::span<const MultiOrder> orders,
                                        std::span<const Eigen::VectorXd> row_weights) const;

  friend BasisMatrices assemble(const WaveletFamily& family, const PointSet& points,
                                std::span<const MultiOrder> required_orders);

 private:
  void check_order(const MultiOrder& order) const;
  std::size_t order_slot(const MultiOrder& order) const;

  WaveletFamily family_;
  PointSet points_;
  std::vector<MultiOrder> orders_;

  // 1D
  std::vector<std::size_t> sorted_;  // sorted position -> original row
  std::map<int, ProfileBlock> profile_;

  // 2D: per axis, per derivative order, N x M_axis factor
  std::array<std::map<int, Eigen::MatrixXd>, 2> factors_;
};

inline constexpr double kDomainTolerance = 1e-12;

/// Populates every requested block. Throws DomainError if a point lies
/// outside the family's box by more than kDomainTolerance.
BasisMatrices assemble(const WaveletFamily& family, const PointSet& points,
                       std::span<const MultiOrder> required_orders);

/// block(order) * c, plus `bias` on every entry iff order is the zero order.
Eigen::VectorXd reconstruct(const BasisMatrices& matrices, const Eigen::Ref<const Eigen::VectorXd>& c,
                            double bias, const MultiOrder& order);

/// Cached dense blocks: header then row-major little-endian doubles.
struct DenseBlockFile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<MultiOrder> orders;
  std::vector<Eigen::MatrixXd> blocks;
};

/// Layout: "WSBM" magic, u32 version (1), u64 N, u64 M, u32 order count,
/// count x (i32, i32) orders, then each block N*M row-major f64 LE.
void save_blocks(const BasisMatrices& matrices, const std::filesystem::path& path);
DenseBlockFile load_blocks(const std::filesystem::path& path);

}  // namespace wavesolve
