#include "wavesolve/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "wavesolve/error.hpp"

namespace wavesolve {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Flush-to-zero and denormals-are-zero for the calling thread. Decaying Adam
// moments and far-tail gradients otherwise sit in the subnormal range, where
// every operation takes the slow path.
class FlushSubnormals {
 public:
#if defined(__SSE__)
  FlushSubnormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushSubnormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

bool on_face(const PointSet& set, std::size_t i, std::size_t axis, double value) {
  return set.coord(i, axis) == value;
}

std::vector<ConditionRows> resolve_conditions(const ProblemSpec& spec, const PointSet& set, bool initial,
                                              std::size_t& entries) {
  std::vector<ConditionRows> out;
  entries = 0;
  const Box& box = spec.geometry.box;
  for (std::size_t r = 0; r < spec.conditions.size(); ++r) {
    const auto& rec = spec.conditions[r];
    if (rec.is_initial() != initial) continue;
    if (rec.axis >= spec.dim() || rec.field >= spec.fields)
      throw ConfigError("condition " + std::to_string(r) + " refers to a missing axis or field");
    ConditionRows rows;
    rows.record = r;
    const double lo = box[rec.axis].lo, hi = box[rec.axis].hi;
    if (rec.is_periodic()) {
      std::vector<std::size_t> his;
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (on_face(set, i, rec.axis, lo)) rows.rows.push_back(i);
        if (on_face(set, i, rec.axis, hi)) his.push_back(i);
      }
      if (his.size() != rows.rows.size())
        throw ConfigError("periodic condition needs matching point counts on both faces");
      rows.partners = std::move(his);
    } else {
      const double face = rec.side == Side::Lo ? lo : hi;
      for (std::size_t i = 0; i < set.size(); ++i)
        if (on_face(set, i, rec.axis, face)) rows.rows.push_back(i);
    }
    if (rows.rows.empty())
      throw ConfigError("no points available for " + std::string(to_string(rec.kind)) + " condition " +
                        std::to_string(r) + " of '" + spec.name + "'");
    rows.targets.resize(idx(rows.rows.size()));
    for (std::size_t e = 0; e < rows.rows.size(); ++e) rows.targets[idx(e)] = rec.target(set.point(rows.rows[e]));
    entries += rows.rows.size();
    out.push_back(std::move(rows));
  }
  return out;
}

std::size_t order_position(const std::vector<MultiOrder>& orders, const MultiOrder& o) {
  return static_cast<std::size_t>(std::find(orders.begin(), orders.end(), o) - orders.begin());
}

// Adds the condition-category loss and gradient.
double condition_loss(const ProblemSpec& spec, const BasisMatrices& blocks, const std::vector<ConditionRows>& rows,
                      std::size_t entries, const Eigen::Ref<const Eigen::MatrixXd>& coefficients,
                      std::span<const double> biases, double weight, bool with_gradient, Eigen::MatrixXd& d_coeffs,
                      std::vector<double>& d_biases) {
  if (entries == 0) return 0.0;
  std::vector<MultiOrder> orders;
  for (const auto& cr : rows) {
    const auto o = spec.conditions[cr.record].order();
    if (order_position(orders, o) == orders.size()) orders.push_back(o);
  }
  auto values = blocks.apply_many(orders, coefficients);
  const std::size_t zero = order_position(orders, kZeroOrder);
  if (zero < orders.size())
    for (std::size_t f = 0; f < spec.fields; ++f) values[zero].col(idx(f)).array() += biases[f];

  std::vector<Eigen::MatrixXd> w;
  if (with_gradient) w.assign(orders.size(), Eigen::MatrixXd::Zero(idx(blocks.rows()), idx(spec.fields)));
  const double coef = 2.0 * weight / static_cast<double>(entries);
  double sum = 0.0;
  for (const auto& cr : rows) {
    const auto& rec = spec.conditions[cr.record];
    const std::size_t o = order_position(orders, rec.order());
    const auto f = idx(rec.field);
    for (std::size_t e = 0; e < cr.rows.size(); ++e) {
      const auto row = idx(cr.rows[e]);
      double value = values[o](row, f);
      if (!cr.partners.empty()) value -= values[o](idx(cr.partners[e]), f);
      const double mismatch = value - cr.targets[idx(e)];
      sum += mismatch * mismatch;
      if (with_gradient) {
        w[o](row, f) += coef * mismatch;
        if (!cr.partners.empty()) w[o](idx(cr.partners[e]), f) -= coef * mismatch;
      }
    }
  }
  if (with_gradient) {
    blocks.apply_transpose_add(orders, w, d_coeffs);
    if (zero < orders.size())
      for (std::size_t f = 0; f < spec.fields; ++f) d_biases[f] += w[zero].col(idx(f)).sum();
  }
  return sum / static_cast<double>(entries);
}

}  // namespace

TrainingData prepare_training_data(const ProblemSpec& spec, const WaveletFamily& family, std::size_t n_interior,
                                   std::size_t n_boundary, std::size_t n_initial) {
  if (family.dim() != spec.dim()) throw ConfigError("family dimension does not match the problem");
  for (std::size_t d = 0; d < spec.dim(); ++d)
    if (family.axes[d].domain.lo != spec.geometry.box[d].lo || family.axes[d].domain.hi != spec.geometry.box[d].hi)
      throw ConfigError("family domain does not match the problem domain");
  if (n_interior == 0) throw ConfigError("at least one interior point is required");

  TrainingData data;
  data.family = family;
  data.interior = sobol_points(spec.dim(), n_interior, spec.geometry.box);
  const bool wants_initial = spec.has_initial_conditions();
  const bool wants_boundary = spec.has_boundary_conditions();
  if (spec.dim() == 2) {
    if (wants_boundary && n_boundary == 0) throw ConfigError("'" + spec.name + "' needs boundary points");
    if (wants_initial && n_initial == 0) throw ConfigError("'" + spec.name + "' needs initial points");
  }
  data.condition_points = boundary_points(spec.geometry, wants_boundary ? n_boundary : 0,
                                          wants_initial ? std::max<std::size_t>(n_initial, 1) : 0);

  data.interior_blocks = assemble(family, data.interior, spec.required_orders());
  if (wants_boundary) {
    data.boundary_rows = resolve_conditions(spec, data.condition_points.boundary, false, data.boundary_entries);
    data.boundary_blocks = assemble(family, data.condition_points.boundary, spec.condition_orders(false));
  }
  if (wants_initial) {
    data.initial_rows = resolve_conditions(spec, data.condition_points.initial, true, data.initial_entries);
    data.initial_blocks = assemble(family, data.condition_points.initial, spec.condition_orders(true));
  }
  return data;
}

LossGradient loss_and_coefficient_gradient(const ProblemSpec& spec, const TrainingData& data,
                                           const Eigen::Ref<const Eigen::MatrixXd>& coefficients,
                                           std::span<const double> biases, const LossWeights& weights,
                                           bool with_gradient) {
  const std::size_t m = data.family.size();
  if (static_cast<std::size_t>(coefficients.rows()) != m || static_cast<std::size_t>(coefficients.cols()) != spec.fields)
    throw ShapeError("coefficients must be " + std::to_string(m) + " x " + std::to_string(spec.fields));
  if (biases.size() != spec.fields) throw ShapeError("one expansion bias per field required");

  LossGradient out;
  out.d_coefficients = Eigen::MatrixXd::Zero(idx(m), idx(spec.fields));
  out.d_biases.assign(spec.fields, 0.0);

  // Interior residual.
  std::vector<MultiOrder> orders;
  for (JetSlot s : spec.slots) orders.push_back(slot_order(s));
  auto values = data.interior_blocks.apply_many(orders, coefficients);
  Jets jets;
  jets.points = data.interior.size();
  jets.fields = spec.fields;
  for (std::size_t k = 0; k < spec.slots.size(); ++k)
    for (std::size_t f = 0; f < spec.fields; ++f) {
      jets.at(f, spec.slots[k]) = values[k].col(idx(f));
      if (spec.slots[k] == JetSlot::U) jets.at(f, JetSlot::U).array() += biases[f];
    }
  const ResidualEval res = residual_and_partials(spec, jets, data.interior);
  if (!res.r.allFinite()) throw NumericError("non-finite residual");
  const double n = static_cast<double>(data.interior.size());
  out.loss.residual = res.r.squaredNorm() / n;

  if (with_gradient) {
    const double coef = 2.0 * weights.residual / n;
    std::vector<Eigen::MatrixXd> w(orders.size(), Eigen::MatrixXd::Zero(idx(jets.points), idx(spec.fields)));
    for (std::size_t k = 0; k < spec.slots.size(); ++k)
      for (std::size_t eq = 0; eq < spec.fields; ++eq)
        for (std::size_t f = 0; f < spec.fields; ++f) {
          const auto& p = res.partial(eq, f, spec.slots[k]);
          if (p.size() == 0) continue;
          w[k].col(idx(f)).array() += coef * res.r.col(idx(eq)).array() * p.array();
        }
    data.interior_blocks.apply_transpose_add(orders, w, out.d_coefficients);
    for (std::size_t k = 0; k < spec.slots.size(); ++k)
      if (spec.slots[k] == JetSlot::U)
        for (std::size_t f = 0; f < spec.fields; ++f) out.d_biases[f] += w[k].col(idx(f)).sum();
  }

  out.loss.bc = condition_loss(spec, data.boundary_blocks, data.boundary_rows, data.boundary_entries, coefficients,
                               biases, weights.bc, with_gradient, out.d_coefficients, out.d_biases);
  out.loss.ic = condition_loss(spec, data.initial_blocks, data.initial_rows, data.initial_entries, coefficients,
                               biases, weights.ic, with_gradient, out.d_coefficients, out.d_biases);
  out.loss.total = weights.residual * out.loss.residual + weights.ic * out.loss.ic + weights.bc * out.loss.bc;
  if (!std::isfinite(out.loss.total)) throw NumericError("non-finite loss");
  return out;
}

AdamState AdamState::zeros(std::size_t n, const AdamHyper& hyper) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(idx(n));
  s.v = Eigen::VectorXd::Zero(idx(n));
  s.hyper = hyper;
  return s;
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  const auto& h = state.hyper;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  auto m = state.m.array();
  auto v = state.v.array();
  const auto g = grads.array();
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v = h.beta2 * v + (1.0 - h.beta2) * g.square();
  params.array() -= h.lr * (m / c1) / ((v / c2).sqrt() + h.epsilon);
}

std::string_view to_string(CoefficientScaling s) { return s == CoefficientScaling::Level ? "level" : "none"; }

CoefficientScaling parse_coefficient_scaling(std::string_view name) {
  if (name == "level") return CoefficientScaling::Level;
  if (name == "none") return CoefficientScaling::None;
  throw ConfigError("unknown coefficient scaling '" + std::string(name) + "' (none|level)");
}

TrainConfig TrainConfig::from_preset(const std::string& problem, std::optional<double> epsilon, MotherKind wavelet) {
  const ProblemSpec spec = get_problem(problem, epsilon);
  const Preset& p = spec.preset;
  TrainConfig c;
  c.problem = problem;
  c.epsilon = epsilon;
  c.wavelet = wavelet;
  const auto& ranges = wavelet == MotherKind::Gaussian ? p.gaussian : p.mexican;
  c.resolutions.assign(ranges.begin(), ranges.begin() + static_cast<std::ptrdiff_t>(spec.dim()));
  c.hidden_layers = p.hidden_layers;
  c.width = p.width;
  c.interior = p.interior;
  c.boundary = p.boundary;
  c.initial = p.initial;
  c.iterations = p.iterations;
  c.adam.lr = p.lr;
  c.decay_factor = p.decay_factor;
  c.decay_every = p.decay_every;
  c.weights = {p.weight_residual, p.weight_ic, p.weight_bc};
  c.keep_best = p.keep_best;
  return c;
}

void validate(const TrainConfig& c, const ProblemSpec& spec) {
  if (!c.resolutions.empty() && c.resolutions.size() != spec.dim())
    throw ConfigError("one resolution range per axis required (" + std::to_string(spec.dim()) + ")");
  if (c.width == 0) throw ConfigError("network width must be positive");
  if (c.interior == 0) throw ConfigError("at least one collocation point is required");
  if (!(c.adam.lr >= 0.0) || !std::isfinite(c.adam.lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0) || !(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0))
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(c.adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(c.decay_factor > 0.0 && c.decay_factor <= 1.0)) throw ConfigError("decay factor must lie in (0, 1]");
  if (c.decay_every == 0) throw ConfigError("decay interval must be positive");
  if (c.history_stride == 0) throw ConfigError("history stride must be positive");
  if (c.weights.residual < 0 || c.weights.ic < 0 || c.weights.bc < 0)
    throw ConfigError("loss weights must be non-negative");
}

WaveletFamily family_for(const TrainConfig& config, const ProblemSpec& spec) {
  std::vector<ResolutionRange> ranges = config.resolutions;
  if (ranges.empty()) {
    const auto& preset = config.wavelet == MotherKind::Gaussian ? spec.preset.gaussian : spec.preset.mexican;
    ranges.assign(preset.begin(), preset.begin() + static_cast<std::ptrdiff_t>(spec.dim()));
  }
  return enumerate_family(config.wavelet, spec.geometry.box, ranges);
}

Eigen::MatrixXd coefficient_scaling(CoefficientScaling mode, const ProblemSpec& spec, const TrainingData& data) {
  const std::size_t m = data.family.size();
  Eigen::MatrixXd scale = Eigen::MatrixXd::Ones(idx(m), idx(spec.fields));
  if (mode == CoefficientScaling::None) return scale;

  // Linearisation of the residual at the zero state.
  Jets zero;
  zero.points = data.interior.size();
  zero.fields = spec.fields;
  for (std::size_t f = 0; f < spec.fields; ++f)
    for (JetSlot s : spec.slots) zero.at(f, s) = Eigen::VectorXd::Zero(idx(zero.points));
  const ResidualEval lin = residual_and_partials(spec, zero, data.interior);
  std::vector<MultiOrder> orders;
  for (JetSlot s : spec.slots) orders.push_back(slot_order(s));

  for (std::size_t f = 0; f < spec.fields; ++f) {
    Eigen::VectorXd norms = Eigen::VectorXd::Zero(idx(m));
    for (std::size_t eq = 0; eq < spec.fields; ++eq) {
      std::vector<Eigen::VectorXd> w;
      bool any = false;
      for (JetSlot s : spec.slots) {
        const auto& p = lin.partial(eq, f, s);
        any = any || p.size() > 0;
        w.push_back(p.size() > 0 ? p : Eigen::VectorXd::Zero(idx(zero.points)));
      }
      if (any) norms += data.interior_blocks.combined_column_norms(orders, w) / static_cast<double>(zero.points);
    }
    auto add_conditions = [&](const BasisMatrices& blocks, const std::vector<ConditionRows>& rows, std::size_t entries) {
      for (const auto& cr : rows) {
        const auto& rec = spec.conditions[cr.record];
        if (rec.field != f) continue;
        Eigen::VectorXd sel = Eigen::VectorXd::Zero(idx(blocks.rows()));
        for (std::size_t r : cr.rows) sel[idx(r)] = 1.0;
        for (std::size_t r : cr.partners) sel[idx(r)] = 1.0;
        const MultiOrder o[] = {rec.order()};
        const Eigen::VectorXd ws[] = {sel};
        norms += blocks.combined_column_norms(o, ws) / static_cast<double>(entries);
      }
    };
    add_conditions(data.boundary_blocks, data.boundary_rows, data.boundary_entries);
    add_conditions(data.initial_blocks, data.initial_rows, data.initial_entries);

    std::map<std::array<int, 2>, double> level_max;
    auto level_of = [&](std::size_t col) {
      std::array<int, 2> key{0, 0};
      const auto split = data.family.split_index(col);
      for (std::size_t d = 0; d < data.family.dim(); ++d) key[d] = data.family.axes[d].indices[split[d]].j;
      return key;
    };
    for (std::size_t col = 0; col < m; ++col) {
      double& mx = level_max[level_of(col)];
      mx = std::max(mx, norms[idx(col)]);
    }
    for (std::size_t col = 0; col < m; ++col) {
      const double mx = level_max[level_of(col)];
      if (mx > 0.0 && std::isfinite(mx)) scale(idx(col), idx(f)) = 1.0 / std::sqrt(mx);
    }
  }
  return scale;
}

NetOutput network_output(CoefficientNet& net, const PointSet& interior) { return net.forward_points(interior); }

TrainResult train_prepared(const TrainConfig& config, const ProblemSpec& spec, const TrainingData& data,
                           CoefficientNet net, const ProgressCallback& progress) {
  validate(config, spec);
  const FlushSubnormals flush;
  TrainResult result;
  result.family = data.family;
  result.interior = data.interior;
  AdamState adam = AdamState::zeros(net.parameter_count(), config.adam);
  Eigen::VectorXd best_params;
  LossBreakdown best_loss;
  best_loss.total = std::numeric_limits<double>::infinity();

  const auto start = std::chrono::steady_clock::now();
  double lr = config.adam.lr;
  Eigen::VectorXd previous;
  std::size_t it = 0;
  for (;; ++it) {
    LossGradient lg;
    try {
      const NetOutput out = network_output(net, data.interior);
      lg = loss_and_coefficient_gradient(spec, data, out.coefficients, out.biases, config.weights,
                                         it < config.iterations);
    } catch (const NumericError& e) {
      result.aborted = true;
      std::ostringstream os;
      os << e.what() << " at iteration " << it;
      if (!result.history.empty()) os << "; last finite total loss " << result.final_loss.total;
      result.diagnostic = os.str();
      if (previous.size() > 0) net.parameters() = previous;
      break;
    }
    result.final_loss = lg.loss;
    if (it % config.history_stride == 0 || it == config.iterations) {
      result.history.push_back({it, lg.loss});
      if (progress) progress(result.history.back());
    }
    if (config.keep_best && lg.loss.total < best_loss.total) {
      best_loss = lg.loss;
      best_params = net.parameters();
    }
    if (it >= config.iterations || lg.loss.total < config.loss_floor) break;

    const Eigen::VectorXd grad = net.backward(lg.d_coefficients, lg.d_biases);
    if (!grad.allFinite()) {
      result.aborted = true;
      result.diagnostic = "non-finite gradient at iteration " + std::to_string(it);
      break;
    }
    if (it > 0 && it % config.decay_every == 0) lr *= config.decay_factor;
    adam.hyper.lr = lr;
    previous = net.parameters();
    adam_step(adam, net.parameters(), grad);
  }
  result.iterations_run = it;
  if (config.keep_best && best_params.size() > 0 && best_loss.total < result.final_loss.total) {
    net.parameters() = best_params;
    result.final_loss = best_loss;
  }
  net.clear_cache();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.net = std::move(net);
  return result;
}

CoefficientNet make_network(const TrainConfig& config, const ProblemSpec& spec, const TrainingData& data,
                            const Eigen::MatrixXd& scale) {
  NetworkShape shape;
  shape.layer_sizes.push_back(data.interior.size());
  for (std::size_t l = 0; l < config.hidden_layers; ++l) shape.layer_sizes.push_back(config.width);
  shape.layer_sizes.push_back(spec.fields * data.family.size());
  shape.fields = spec.fields;
  shape.coeffs_per_field = data.family.size();
  shape.point_dim = spec.dim();
  shape.encoder_width = config.encoder_width;
  shape.activation = config.activation;
  CoefficientNet net = CoefficientNet::init(shape, config.seed);
  net.set_output_scale(scale);
  return net;
}

TrainResult train(const TrainConfig& config, const ProgressCallback& progress) {
  const ProblemSpec spec = get_problem(config.problem, config.epsilon);
  validate(config, spec);
  const WaveletFamily family = family_for(config, spec);
  const TrainingData data =
      prepare_training_data(spec, family, config.interior, config.boundary, config.initial);
  CoefficientNet net = make_network(config, spec, data, coefficient_scaling(config.scaling, spec, data));
  return train_prepared(config, spec, data, std::move(net), progress);
}

}  // namespace wavesolve
