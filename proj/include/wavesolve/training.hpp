#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavesolve/basis.hpp"
#include "wavesolve/matrices.hpp"
#include "wavesolve/network.hpp"
#include "wavesolve/problems.hpp"
#include "wavesolve/sampling.hpp"

namespace wavesolve {

struct LossBreakdown {
  double residual = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double total = 0.0;
};

struct LossWeights {
  double residual = 1.0;
  double ic = 1.0;
  double bc = 1.0;
};

/// Condition entries resolved against a point set: each entry compares the
/// reconstruction at `rows[e]` (minus that at `partners[e]` for periodic
/// kinds) with `targets[e]`.
struct ConditionRows {
  std::size_t record = 0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> partners;
  Eigen::VectorXd targets;
};

/// Everything fixed for a run: point sets, their basis blocks and the
/// condition entries.
struct TrainingData {
  WaveletFamily family;
  PointSet interior;
  ConditionPoints condition_points;
  BasisMatrices interior_blocks;
  BasisMatrices boundary_blocks;
  BasisMatrices initial_blocks;
  std::vector<ConditionRows> boundary_rows;
  std::vector<ConditionRows> initial_rows;
  std::size_t boundary_entries = 0;
  std::size_t initial_entries = 0;
};

TrainingData prepare_training_data(const ProblemSpec& spec, const WaveletFamily& family, std::size_t n_interior,
                                   std::size_t n_boundary, std::size_t n_initial);

struct LossGradient {
  LossBreakdown loss;
  Eigen::MatrixXd d_coefficients;  // M x F
  std::vector<double> d_biases;
};

/// Composite loss and its exact gradient with respect to the coefficients
/// (M x F) and expansion biases.
LossGradient loss_and_coefficient_gradient(const ProblemSpec& spec, const TrainingData& data,
                                           const Eigen::Ref<const Eigen::MatrixXd>& coefficients,
                                           std::span<const double> biases, const LossWeights& weights = {},
                                           bool with_gradient = true);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  static AdamState zeros(std::size_t n, const AdamHyper& hyper = {});
};

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads);

/// How network outputs map to coefficients. `Level` multiplies every
/// coefficient of a resolution level by the reciprocal of the largest
/// linearised residual/condition column norm in that level.
enum class CoefficientScaling { None, Level };

std::string_view to_string(CoefficientScaling s);
CoefficientScaling parse_coefficient_scaling(std::string_view name);

struct TrainConfig {
  std::string problem = "advdiff";
  std::optional<double> epsilon;
  MotherKind wavelet = MotherKind::Gaussian;
  std::vector<ResolutionRange> resolutions;  // per axis; empty: preset
  std::size_t hidden_layers = 6;
  std::size_t width = 100;
  std::size_t encoder_width = 16;
  Activation activation = Activation::Tanh;
  std::size_t interior = 1000;
  std::size_t boundary = 0;
  std::size_t initial = 0;
  std::size_t iterations = 20000;
  AdamHyper adam;
  double decay_factor = 1.0;  // lr multiplied by this every decay_every steps
  std::size_t decay_every = 1000;
  std::uint64_t seed = 1;
  LossWeights weights;
  CoefficientScaling scaling = CoefficientScaling::Level;
  std::size_t history_stride = 1;
  double loss_floor = 1e-12;
  /// Return the parameters with the lowest recorded total loss instead of
  /// the last ones.
  bool keep_best = false;

  /// Preset hyperparameters of a registered problem.
  static TrainConfig from_preset(const std::string& problem, std::optional<double> epsilon = std::nullopt,
                                 MotherKind wavelet = MotherKind::Gaussian);
};

/// Throws ConfigError describing the first inconsistency.
void validate(const TrainConfig& config, const ProblemSpec& spec);

WaveletFamily family_for(const TrainConfig& config, const ProblemSpec& spec);

struct LossRecord {
  std::size_t iteration = 0;
  LossBreakdown loss;
};

struct TrainResult {
  CoefficientNet net;
  WaveletFamily family;
  PointSet interior;
  std::vector<LossRecord> history;
  LossBreakdown final_loss;
  std::size_t iterations_run = 0;
  bool aborted = false;
  std::string diagnostic;
  double seconds = 0.0;
};

/// Output scale (M x F) for the given mode.
Eigen::MatrixXd coefficient_scaling(CoefficientScaling mode, const ProblemSpec& spec, const TrainingData& data);

/// Network input for the interior set and the net's coefficients and biases.
NetOutput network_output(CoefficientNet& net, const PointSet& interior);

/// Network sized for the config and data, initialised from config.seed, with
/// `scale` as its fixed output scaling.
CoefficientNet make_network(const TrainConfig& config, const ProblemSpec& spec, const TrainingData& data,
                            const Eigen::MatrixXd& scale);

using ProgressCallback = std::function<void(const LossRecord&)>;

TrainResult train(const TrainConfig& config, const ProgressCallback& progress = {});

/// Lower-level entry: trains on prepared data with an already constructed
/// network (used by tests and by train()).
TrainResult train_prepared(const TrainConfig& config, const ProblemSpec& spec, const TrainingData& data,
                           CoefficientNet net, const ProgressCallback& progress = {});

}  // namespace wavesolve
