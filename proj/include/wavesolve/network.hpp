#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavesolve/sampling.hpp"

namespace wavesolve {

enum class Activation { Tanh, Sine };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// splitmix64 (Steele, Lea, Flood 2014). Every random draw in the library
/// comes from this generator so runs are reproducible across platforms.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

struct NetworkShape {
  /// n0 (feature count = collocation count), hidden widths..., nL = fields * coeffs_per_field.
  std::vector<std::size_t> layer_sizes;
  std::size_t fields = 1;
  std::size_t coeffs_per_field = 0;
  /// 1: features are the coordinates themselves; 2: a shallow encoder maps
  /// each point to one feature.
  std::size_t point_dim = 1;
  std::size_t encoder_width = 16;
  Activation activation = Activation::Tanh;
};

/// Raw network output split per field.
struct NetOutput {
  Eigen::MatrixXd coefficients;  // M x F, column f = field f
  std::vector<double> biases;    // expansion bias B per field
};

/// Fully connected network producing the expansion coefficients.
///
/// All trainable values live in one flat vector (encoder, then layers in
/// order with weight before bias, then the expansion biases) so the
/// optimiser can treat them uniformly.
class CoefficientNet {
 public:
  CoefficientNet() = default;

  /// Glorot-uniform weights, zero layer biases, B = 0.
  static CoefficientNet init(const NetworkShape& shape, std::uint64_t seed);

  const NetworkShape& shape() const { return shape_; }
  std::size_t layer_count() const { return shape_.layer_sizes.size() - 1; }
  bool has_encoder() const { return shape_.point_dim == 2; }

  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  double& expansion_bias(std::size_t field);
  double expansion_bias(std::size_t field) const;

  // Encoder: feature = w_out . tanh(W_in p + b_in) + b_out
  Eigen::Map<Eigen::MatrixXd> encoder_weight_in();
  Eigen::Map<const Eigen::MatrixXd> encoder_weight_in() const;
  Eigen::Map<Eigen::VectorXd> encoder_bias_in();
  Eigen::Map<const Eigen::VectorXd> encoder_bias_in() const;
  Eigen::Map<Eigen::VectorXd> encoder_weight_out();
  Eigen::Map<const Eigen::VectorXd> encoder_weight_out() const;
  double& encoder_bias_out();
  double encoder_bias_out() const;

  /// 1D: the coordinates; 2D: encoder output per point.
  Eigen::VectorXd build_features(const PointSet& points) const;

  /// Feed-forward pass on a fixed feature vector; caches intermediates.
  NetOutput forward(const Eigen::Ref<const Eigen::VectorXd>& features);
  /// Features from the points (through the encoder in 2D) and forward pass;
  /// a following backward() also reaches the encoder parameters.
  NetOutput forward_points(const PointSet& points);

  /// Reverse-mode gradient of a loss given dL/dcoefficients (M x F) and
  /// dL/dB per field, laid out like parameters().
  Eigen::VectorXd backward(const Eigen::Ref<const Eigen::MatrixXd>& d_coefficients,
                           std::span<const double> d_biases) const;

  /// Fixed, non-trainable per-output factors (M x F) applied after the last
  /// layer: coefficients = scale .* z. Empty means identity.
  void set_output_scale(const Eigen::Ref<const Eigen::MatrixXd>& scale);
  const Eigen::VectorXd& output_scale() const { return output_scale_; }

  void clear_cache();

 private:
  struct Slice {
    std::size_t offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 1;
  };

  double activate(double a) const;
  double activate_derivative(double a, double z) const;

  NetworkShape shape_;
  Eigen::VectorXd params_;
  std::vector<Slice> weights_;
  std::vector<Slice> biases_;
  Slice enc_w_in_, enc_b_in_, enc_w_out_, enc_b_out_;
  std::size_t expansion_offset_ = 0;
  Eigen::VectorXd output_scale_;

  // Forward cache.
  bool cached_ = false;
  bool cached_encoder_ = false;
  std::vector<Eigen::VectorXd> pre_;   // pre-activations a^k, k = 1..L
  std::vector<Eigen::VectorXd> post_;  // z^0 .. z^{L-1}
  Eigen::MatrixXd enc_points_;         // 2 x N
  Eigen::MatrixXd enc_hidden_;         // width x N
};

/// JSON snapshot: layer sizes, row-major weights, biases, B values and the
/// encoder block.
void save_snapshot(const CoefficientNet& net, const std::filesystem::path& path);
CoefficientNet load_snapshot(const std::filesystem::path& path);
std::string snapshot_json(const CoefficientNet& net);
CoefficientNet snapshot_from_json(std::string_view text);

}  // namespace wavesolve
