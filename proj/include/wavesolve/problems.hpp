#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wavesolve/basis.hpp"
#include "wavesolve/matrices.hpp"
#include "wavesolve/sampling.hpp"

namespace wavesolve {

/// Per-field jet entries. In time-dependent 2D problems the second axis is
/// time, so the Y slots hold t-derivatives.
enum class JetSlot : int { U = 0, Ux = 1, Uxx = 2, Uy = 3, Uyy = 4 };

inline constexpr std::size_t kSlotCount = 5;
inline constexpr std::size_t kMaxFields = 2;

MultiOrder slot_order(JetSlot slot);
std::string_view to_string(JetSlot slot);
inline std::size_t slot_index(JetSlot s) { return static_cast<std::size_t>(s); }

/// Field jets at a point batch; a slot is present iff its vector is non-empty.
struct Jets {
  std::size_t points = 0;
  std::size_t fields = 0;
  std::array<std::array<Eigen::VectorXd, kSlotCount>, kMaxFields> data;

  bool has(std::size_t field, JetSlot s) const { return data[field][slot_index(s)].size() > 0; }
  const Eigen::VectorXd& at(std::size_t field, JetSlot s) const;
  Eigen::VectorXd& at(std::size_t field, JetSlot s) { return data[field][slot_index(s)]; }
};

/// Residuals (N x F, column per equation) and their partials with respect to
/// every jet entry. partial(eq, field, slot) is empty when identically zero.
struct ResidualEval {
  Eigen::MatrixXd r;
  /// Largest magnitude among the terms of each equation at each point.
  Eigen::MatrixXd scale;
  std::array<std::array<std::array<Eigen::VectorXd, kSlotCount>, kMaxFields>, kMaxFields> partials;

  const Eigen::VectorXd& partial(std::size_t eq, std::size_t field, JetSlot s) const {
    return partials[eq][field][slot_index(s)];
  }
};

enum class ConditionKind { Dirichlet, Neumann, InitialValue, InitialDerivative, PeriodicValue, PeriodicDerivative };

std::string_view to_string(ConditionKind kind);

enum class Side { Lo, Hi };

using PointFunction = std::function<double(std::span<const double>)>;

/// One boundary or initial constraint. `axis`/`side` select the points of the
/// condition set lying on that face (for periodic kinds, Lo points are paired
/// in order with Hi points). `derivative_axis` is used by derivative kinds.
struct ConditionRecord {
  ConditionKind kind = ConditionKind::Dirichlet;
  std::size_t field = 0;
  std::size_t axis = 0;
  Side side = Side::Lo;
  std::size_t derivative_axis = 0;
  PointFunction target;

  bool is_initial() const {
    return kind == ConditionKind::InitialValue || kind == ConditionKind::InitialDerivative;
  }
  bool is_periodic() const {
    return kind == ConditionKind::PeriodicValue || kind == ConditionKind::PeriodicDerivative;
  }
  MultiOrder order() const;
};

/// Hyperparameters of a benchmark run.
struct Preset {
  std::array<ResolutionRange, 2> gaussian{};
  std::array<ResolutionRange, 2> mexican{};
  std::size_t hidden_layers = 6;
  std::size_t width = 100;
  std::size_t interior = 1000;
  std::size_t boundary = 0;
  std::size_t initial = 0;
  std::size_t iterations = 20000;
  double lr = 1e-3;
  double decay_factor = 1.0;
  std::size_t decay_every = 1000;
  double weight_residual = 1.0;
  double weight_ic = 1.0;
  double weight_bc = 1.0;
  bool keep_best = false;
};

struct ProblemSpec {
  std::string name;
  Geometry geometry;
  std::size_t fields = 1;
  std::vector<std::string> field_names;
  double epsilon = 0.0;
  /// Jet slots the residual reads (for every field).
  std::vector<JetSlot> slots;
  std::function<ResidualEval(const Jets&, const PointSet&)> residual;
  std::vector<ConditionRecord> conditions;
  /// Exact jet (field, slot) at a point; empty when no closed form exists.
  std::function<double(std::span<const double>, std::size_t, JetSlot)> exact;
  /// Right-hand side forcing of each equation; empty for homogeneous problems.
  std::function<double(std::span<const double>, std::size_t)> forcing;
  Preset preset;
  /// Reference needed from an oracle when `exact` is empty.
  bool needs_oracle = false;

  std::size_t dim() const { return geometry.dim(); }
  bool has_exact() const { return static_cast<bool>(exact); }
  /// Every derivative order referenced by the residual and the conditions.
  std::vector<MultiOrder> required_orders() const;
  std::vector<MultiOrder> residual_orders() const;
  std::vector<MultiOrder> condition_orders(bool initial) const;
  bool has_boundary_conditions() const;
  bool has_initial_conditions() const;
  Eigen::MatrixXd exact_values(const PointSet& points) const;
  Jets exact_jets(const PointSet& points) const;
};

std::vector<std::string> problem_names();

/// Throws ConfigError for unknown names or a non-positive override. The
/// override replaces the problem's perturbation parameter (tau for `fhn`,
/// the permittivity for `maxwell_homog`).
ProblemSpec get_problem(std::string_view name, std::optional<double> epsilon = std::nullopt);

ResidualEval residual_and_partials(const ProblemSpec& spec, const Jets& jets, const PointSet& points);

struct ForcingProbe {
  std::vector<double> max_forcing;          // per equation
  double max_boundary_target = 0.0;
  double max_initial_target = 0.0;
};

ForcingProbe forcing_magnitude_probe(const ProblemSpec& spec, const PointSet& interior,
                                     const ConditionPoints& conditions);

}  // namespace wavesolve
