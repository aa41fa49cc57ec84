#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavesolve/network.hpp"
#include "wavesolve/problems.hpp"
#include "wavesolve/training.hpp"

namespace wavesolve {

/// sqrt(sum (u - u_hat)^2 / sum u^2). Throws NumericError when sum u^2 = 0.
double relative_l2(std::span<const double> exact, std::span<const double> predicted);

/// Ground truth for evaluation: closed form or an oracle solution.
struct Reference {
  std::string source;
  std::function<double(std::span<const double>, std::size_t)> value;
  /// Relative change between the two oracle refinement levels (0 for closed
  /// forms and cached solutions).
  double refinement_change = 0.0;
  /// The two oracle resolutions compared (empty unless computed in memory).
  std::string refinement_levels;
};

Reference exact_reference(const ProblemSpec& spec);
/// Runs the problem's oracle in memory (self-refinement checks included).
Reference compute_oracle_reference(const ProblemSpec& spec);
/// File used to cache the oracle solution of `spec` inside `dir`.
std::filesystem::path oracle_cache_path(const ProblemSpec& spec, const std::filesystem::path& dir);
/// Computes the oracle and writes it to the cache; returns the path.
std::filesystem::path write_oracle_cache(const ProblemSpec& spec, const std::filesystem::path& dir);
/// Exact reference when available, otherwise the cached oracle. Throws
/// StateError naming the `oracle` command when the cache is missing.
Reference load_reference(const ProblemSpec& spec, const std::filesystem::path& oracle_dir);

/// Trained coefficient network together with what is needed to evaluate it.
struct TrainedModel {
  TrainConfig config;
  CoefficientNet net;
  WaveletFamily family;
  PointSet interior;
};

TrainedModel rebuild_model(const TrainConfig& config, CoefficientNet net);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// 1000 uniform points in 1D, 101 x 101 in 2D.
PointSet default_evaluation_grid(const ProblemSpec& spec);

struct Evaluation {
  std::vector<double> errors;  // relative L2 per field
  PointSet grid;
  Eigen::MatrixXd exact;      // grid x fields
  Eigen::MatrixXd predicted;  // grid x fields
  Eigen::MatrixXd abs_error() const { return (exact - predicted).cwiseAbs(); }
};

/// Reconstructs each field on `grid` and compares with the reference.
Evaluation evaluate(const ProblemSpec& spec, TrainedModel& model, const PointSet& grid, const Reference& reference);

struct RunReport {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string diagnostic;
  std::vector<double> errors;
  LossBreakdown final_loss;
  std::size_t iterations_run = 0;
  std::vector<LossRecord> history;
  double seconds = 0.0;
};

struct AggregateReport {
  TrainConfig config;
  std::string problem;
  double epsilon = 0.0;
  std::vector<std::string> field_names;
  std::string reference;
  std::size_t family_size = 0;
  std::vector<double> mean;
  std::vector<double> stddev;
  double mean_seconds = 0.0;
  std::size_t survivors = 0;
  bool flagged = false;  // at least one seed failed
  std::vector<RunReport> runs;
  /// Evaluation of the first surviving seed (written to solution.csv).
  std::optional<Evaluation> sample;
  std::optional<TrainedModel> sample_model;
};

/// Worker cap: WAVESOLVE_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_limit();

struct ProtocolOptions {
  std::size_t threads = 0;  // 0: worker_limit()
  bool keep_model = false;
  std::function<void(std::uint64_t, const LossRecord&)> progress;
};

/// Trains once per seed (concurrently up to the worker cap), evaluates and
/// aggregates mean and sample standard deviation in seed order.
AggregateReport run_protocol(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                             const Reference& reference, const ProtocolOptions& options = {});

enum class SweepAxis { Resolution, Collocation, Architecture };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepRow {
  std::string value;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::size_t survivors = 0;
  std::string error;  // set when the cell failed as a whole
};

struct SweepTable {
  SweepAxis axis = SweepAxis::Resolution;
  std::vector<std::string> field_names;
  std::vector<SweepRow> rows;
};

/// Applies one sweep value to a config: Resolution sets the upper bound of
/// every axis range, Collocation the interior count, Architecture "DxW".
TrainConfig apply_sweep_value(const TrainConfig& base, SweepAxis axis, const std::string& value);

SweepTable sweep(const TrainConfig& base, SweepAxis axis, std::span<const std::string> values,
                 std::span<const std::uint64_t> seeds, const Reference& reference,
                 const ProtocolOptions& options = {});

std::string config_json(const TrainConfig& config);
TrainConfig config_from_json(std::string_view text);
std::string report_json(const AggregateReport& report);

/// Writes report.json, loss.csv, timing.json and (when a sample evaluation
/// exists) solution.csv into `dir`.
void emit(const AggregateReport& report, const std::filesystem::path& dir);
void emit_sweep(const SweepTable& table, const std::filesystem::path& dir);

/// 17 significant digits, scientific notation.
std::string format_real(double v);

}  // namespace wavesolve
