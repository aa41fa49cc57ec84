#include "wavesolve/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "wavesolve/error.hpp"

namespace wavesolve {

using Eigen::ArrayXd;
using Eigen::VectorXd;

MultiOrder slot_order(JetSlot slot) {
  switch (slot) {
    case JetSlot::U:
      return {0, 0};
    case JetSlot::Ux:
      return {1, 0};
    case JetSlot::Uxx:
      return {2, 0};
    case JetSlot::Uy:
      return {0, 1};
    case JetSlot::Uyy:
      return {0, 2};
  }
  throw ConfigError("invalid jet slot");
}

std::string_view to_string(JetSlot slot) {
  switch (slot) {
    case JetSlot::U:
      return "u";
    case JetSlot::Ux:
      return "u_x";
    case JetSlot::Uxx:
      return "u_xx";
    case JetSlot::Uy:
      return "u_y";
    case JetSlot::Uyy:
      return "u_yy";
  }
  return "?";
}

std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::Dirichlet:
      return "dirichlet";
    case ConditionKind::Neumann:
      return "neumann";
    case ConditionKind::InitialValue:
      return "initial_value";
    case ConditionKind::InitialDerivative:
      return "initial_derivative";
    case ConditionKind::PeriodicValue:
      return "periodic_value";
    case ConditionKind::PeriodicDerivative:
      return "periodic_derivative";
  }
  return "?";
}

const VectorXd& Jets::at(std::size_t field, JetSlot s) const {
  if (field >= fields || !has(field, s))
    throw ConfigError("jet slot " + std::string(to_string(s)) + " missing for field " + std::to_string(field));
  return data[field][slot_index(s)];
}

MultiOrder ConditionRecord::order() const {
  switch (kind) {
    case ConditionKind::Dirichlet:
    case ConditionKind::InitialValue:
    case ConditionKind::PeriodicValue:
      return kZeroOrder;
    case ConditionKind::Neumann:
    case ConditionKind::InitialDerivative:
    case ConditionKind::PeriodicDerivative: {
      MultiOrder o = kZeroOrder;
      o[derivative_axis] = 1;
      return o;
    }
  }
  return kZeroOrder;
}

namespace {

void add_unique(std::vector<MultiOrder>& out, const MultiOrder& o) {
  if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
}

}  // namespace

std::vector<MultiOrder> ProblemSpec::residual_orders() const {
  std::vector<MultiOrder> out;
  for (JetSlot s : slots) add_unique(out, slot_order(s));
  return out;
}

std::vector<MultiOrder> ProblemSpec::condition_orders(bool initial) const {
  std::vector<MultiOrder> out;
  for (const auto& c : conditions)
    if (c.is_initial() == initial) add_unique(out, c.order());
  return out;
}

std::vector<MultiOrder> ProblemSpec::required_orders() const {
  std::vector<MultiOrder> out{kZeroOrder};
  for (const auto& o : residual_orders()) add_unique(out, o);
  for (const auto& c : conditions) add_unique(out, c.order());
  return out;
}

bool ProblemSpec::has_boundary_conditions() const {
  return std::any_of(conditions.begin(), conditions.end(), [](const auto& c) { return !c.is_initial(); });
}

bool ProblemSpec::has_initial_conditions() const {
  return std::any_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.is_initial(); });
}

Eigen::MatrixXd ProblemSpec::exact_values(const PointSet& points) const {
  if (!exact) throw StateError("problem '" + name + "' has no closed-form solution");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(fields));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t f = 0; f < fields; ++f)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = exact(points.point(i), f, JetSlot::U);
  return out;
}

Jets ProblemSpec::exact_jets(const PointSet& points) const {
  if (!exact) throw StateError("problem '" + name + "' has no closed-form solution");
  Jets jets;
  jets.points = points.size();
  jets.fields = fields;
  std::vector<JetSlot> wanted = slots;
  if (std::find(wanted.begin(), wanted.end(), JetSlot::U) == wanted.end()) wanted.push_back(JetSlot::U);
  for (std::size_t f = 0; f < fields; ++f)
    for (JetSlot s : wanted) {
      VectorXd v(static_cast<Eigen::Index>(points.size()));
      for (std::size_t i = 0; i < points.size(); ++i) v[static_cast<Eigen::Index>(i)] = exact(points.point(i), f, s);
      jets.at(f, s) = std::move(v);
    }
  return jets;
}

namespace {

using std::numbers::pi;

ResidualEval blank(const Jets& jets, std::size_t fields) {
  ResidualEval out;
  const auto n = static_cast<Eigen::Index>(jets.points);
  out.r.resize(n, static_cast<Eigen::Index>(fields));
  out.scale.resize(n, static_cast<Eigen::Index>(fields));
  return out;
}

VectorXd constant(std::size_t n, double v) { return VectorXd::Constant(static_cast<Eigen::Index>(n), v); }

ArrayXd coordinate(const PointSet& points, std::size_t axis) {
  ArrayXd out(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) out[static_cast<Eigen::Index>(i)] = points.coord(i, axis);
  return out;
}

ArrayXd max_abs(std::initializer_list<ArrayXd> terms) {
  ArrayXd out = ArrayXd::Zero(terms.begin()->size());
  for (const auto& t : terms) out = out.max(t.abs());
  return out;
}

ConditionRecord condition(ConditionKind kind, std::size_t field, std::size_t axis, Side side, PointFunction target,
                          std::size_t derivative_axis = 0) {
  ConditionRecord c;
  c.kind = kind;
  c.field = field;
  c.axis = axis;
  c.side = side;
  c.derivative_axis = derivative_axis;
  c.target = std::move(target);
  return c;
}

PointFunction constant_target(double v) {
  return [v](std::span<const double>) { return v; };
}

Preset preset_1d(int jm_hi, int jg_hi, std::size_t layers, std::size_t width, std::size_t interior,
                 std::size_t iterations) {
  Preset p;
  p.mexican = {ResolutionRange{0, jm_hi}, ResolutionRange{0, 0}};
  p.gaussian = {ResolutionRange{0, jg_hi}, ResolutionRange{0, 0}};
  p.hidden_layers = layers;
  p.width = width;
  p.interior = interior;
  p.iterations = iterations;
  return p;
}

Preset preset_2d(ResolutionRange jx, ResolutionRange jt, std::size_t layers, std::size_t width, std::size_t interior,
                 std::size_t boundary, std::size_t initial, std::size_t iterations) {
  Preset p;
  p.gaussian = {jx, jt};
  p.mexican = {jx, jt};
  p.hidden_layers = layers;
  p.width = width;
  p.interior = interior;
  p.boundary = boundary;
  p.initial = initial;
  p.iterations = iterations;
  return p;
}

// eps u'' + (1 + eps) u' + u = 0 on [0, 1].
ProblemSpec advdiff(double eps) {
  ProblemSpec s;
  s.name = "advdiff";
  s.geometry = Geometry{{Interval{0.0, 1.0}}, std::nullopt};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::U, JetSlot::Ux, JetSlot::Uxx};
  s.residual = [eps](const Jets& j, const PointSet&) {
    ResidualEval out = blank(j, 1);
    const ArrayXd u = j.at(0, JetSlot::U), du = j.at(0, JetSlot::Ux), d2u = j.at(0, JetSlot::Uxx);
    out.r.col(0) = (eps * d2u + (1 + eps) * du + u).matrix();
    out.scale.col(0) = max_abs({eps * d2u, (1 + eps) * du, u}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = constant(j.points, 1.0);
    out.partials[0][0][slot_index(JetSlot::Ux)] = constant(j.points, 1.0 + eps);
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, eps);
    return out;
  };
  s.conditions = {condition(ConditionKind::Dirichlet, 0, 0, Side::Lo, constant_target(0.0)),
                  condition(ConditionKind::Dirichlet, 0, 0, Side::Hi, constant_target(1.0))};
  // e^{-x/eps} is evaluated as e^{(1-x)/eps} e^{-1/eps} relative to the
  // denominator so small eps stays finite.
  s.exact = [eps](std::span<const double> p, std::size_t, JetSlot slot) {
    const double x = p[0];
    const double denom = std::exp(-1.0) - std::exp(-1.0 / eps);
    const double slow = std::exp(-x);
    const double fast = std::exp(-x / eps);
    switch (slot) {
      case JetSlot::U:
        return (slow - fast) / denom;
      case JetSlot::Ux:
        return (-slow + fast / eps) / denom;
      case JetSlot::Uxx:
        return (slow - fast / (eps * eps)) / denom;
      default:
        return 0.0;
    }
  };
  s.preset = preset_1d(8, 9, 6, 100, 1000, 20000);
  s.preset.weight_bc = 100.0;
  s.preset.decay_factor = 0.9;
  s.preset.decay_every = 1000;
  s.preset.keep_best = true;
  return s;
}

// eps u'' + (3 + t) u' + u^2 - sin(u) = f on [0, 1], u(0) = 1, u'(0) = 1/eps.
ProblemSpec nonlinear_ivp(double eps) {
  ProblemSpec s;
  s.name = "nonlinear_ivp";
  s.geometry = Geometry{{Interval{0.0, 1.0}}, std::size_t{0}};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::U, JetSlot::Ux, JetSlot::Uxx};
  auto exact = [eps](std::span<const double> p, std::size_t, JetSlot slot) {
    const double t = p[0];
    const double e = std::exp(-t / eps);
    switch (slot) {
      case JetSlot::U:
        return 2.0 - e + t * t;
      case JetSlot::Ux:
        return e / eps + 2.0 * t;
      case JetSlot::Uxx:
        return -e / (eps * eps) + 2.0;
      default:
        return 0.0;
    }
  };
  s.exact = exact;
  s.forcing = [eps, exact](std::span<const double> p, std::size_t) {
    const double u = exact(p, 0, JetSlot::U);
    return eps * exact(p, 0, JetSlot::Uxx) + (3.0 + p[0]) * exact(p, 0, JetSlot::Ux) + u * u - std::sin(u);
  };
  auto forcing = s.forcing;
  s.residual = [eps, forcing](const Jets& j, const PointSet& pts) {
    ResidualEval out = blank(j, 1);
    const ArrayXd u = j.at(0, JetSlot::U), du = j.at(0, JetSlot::Ux), d2u = j.at(0, JetSlot::Uxx);
    const ArrayXd t = coordinate(pts, 0);
    ArrayXd f(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) f[i] = forcing(pts.point(static_cast<std::size_t>(i)), 0);
    out.r.col(0) = (eps * d2u + (3.0 + t) * du + u.square() - u.sin() - f).matrix();
    out.scale.col(0) = max_abs({eps * d2u, (3.0 + t) * du, u.square(), u.sin(), f}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = (2.0 * u - u.cos()).matrix();
    out.partials[0][0][slot_index(JetSlot::Ux)] = (3.0 + t).matrix();
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, eps);
    return out;
  };
  s.conditions = {condition(ConditionKind::InitialValue, 0, 0, Side::Lo, constant_target(1.0)),
                  condition(ConditionKind::InitialDerivative, 0, 0, Side::Lo, constant_target(1.0 / eps), 0)};
  s.preset = preset_1d(9, 10, 8, 200, 10000, 20000);
  s.preset.weight_ic = 100.0;
  s.preset.keep_best = true;
  return s;
}

// -eps u'' + u^5 + 3u - 1 = 0 on [0, 1] with derivative data at both ends.
ProblemSpec neumann_bvp(double eps) {
  ProblemSpec s;
  s.name = "neumann_bvp";
  s.geometry = Geometry{{Interval{0.0, 1.0}}, std::nullopt};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::U, JetSlot::Uxx};
  s.residual = [eps](const Jets& j, const PointSet&) {
    ResidualEval out = blank(j, 1);
    const ArrayXd u = j.at(0, JetSlot::U), d2u = j.at(0, JetSlot::Uxx);
    const ArrayXd u4 = u.square().square();
    out.r.col(0) = (-eps * d2u + u4 * u + 3.0 * u - 1.0).matrix();
    out.scale.col(0) = max_abs({eps * d2u, u4 * u, 3.0 * u, ArrayXd::Ones(u.size())}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = (5.0 * u4 + 3.0).matrix();
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, -eps);
    return out;
  };
  s.conditions = {condition(ConditionKind::Neumann, 0, 0, Side::Lo, constant_target(std::sin(0.5)), 0),
                  condition(ConditionKind::Neumann, 0, 0, Side::Hi, constant_target(std::exp(-0.7)), 0)};
  s.preset = preset_1d(8, 9, 8, 200, 10000, 10000);
  s.preset.keep_best = true;
  s.needs_oracle = true;
  return s;
}

struct FhnParams {
  double a = 1.0, b = 1.0, current = 0.1, resistance = 1.0;
};

// v' = v - v^3/3 - w + R I,  tau w' = v - b w - a, stored as
// r_v = v' - v + v^3/3 + w - R I and r_w = tau w' - v + b w + a.
ProblemSpec fhn(double tau) {
  const FhnParams prm;
  ProblemSpec s;
  s.name = "fhn";
  s.geometry = Geometry{{Interval{0.0, 1.0}}, std::size_t{0}};
  s.fields = 2;
  s.field_names = {"v", "w"};
  s.epsilon = tau;
  s.slots = {JetSlot::U, JetSlot::Ux};
  s.residual = [tau, prm](const Jets& j, const PointSet&) {
    ResidualEval out = blank(j, 2);
    const ArrayXd v = j.at(0, JetSlot::U), dv = j.at(0, JetSlot::Ux);
    const ArrayXd w = j.at(1, JetSlot::U), dw = j.at(1, JetSlot::Ux);
    const double ri = prm.resistance * prm.current;
    const ArrayXd ones = ArrayXd::Ones(v.size());
    out.r.col(0) = (dv - v + v.cube() / 3.0 + w - ri).matrix();
    out.r.col(1) = (tau * dw - v + prm.b * w + prm.a).matrix();
    out.scale.col(0) = max_abs({dv, v, v.cube() / 3.0, w, ri * ones}).matrix();
    out.scale.col(1) = max_abs({tau * dw, v, prm.b * w, prm.a * ones}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = (v.square() - 1.0).matrix();
    out.partials[0][0][slot_index(JetSlot::Ux)] = constant(j.points, 1.0);
    out.partials[0][1][slot_index(JetSlot::U)] = constant(j.points, 1.0);
    out.partials[1][0][slot_index(JetSlot::U)] = constant(j.points, -1.0);
    out.partials[1][1][slot_index(JetSlot::U)] = constant(j.points, prm.b);
    out.partials[1][1][slot_index(JetSlot::Ux)] = constant(j.points, tau);
    return out;
  };
  s.conditions = {condition(ConditionKind::InitialValue, 0, 0, Side::Lo, constant_target(0.5)),
                  condition(ConditionKind::InitialValue, 1, 0, Side::Lo, constant_target(0.1))};
  s.preset = preset_1d(10, 11, 10, 200, 10000, 20000);
  s.preset.keep_best = true;
  s.needs_oracle = true;
  return s;
}

// u_t = u_xx + f on (-1, 1) x (0, 1], stored as r = u_t - u_xx - f.
ProblemSpec heat2d(double eps) {
  ProblemSpec s;
  s.name = "heat2d";
  s.geometry = Geometry{{Interval{-1.0, 1.0}, Interval{0.0, 1.0}}, std::size_t{1}};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::Uxx, JetSlot::Uy};
  auto exact = [eps](std::span<const double> p, std::size_t, JetSlot slot) {
    const double x = p[0], t = p[1];
    const double q = (2.0 * t - 1.0) * (2.0 * t - 1.0) + eps;
    const double g = std::exp(1.0 / q);
    const double shape = 1.0 - x * x;
    switch (slot) {
      case JetSlot::U:
        return shape * g;
      case JetSlot::Ux:
        return -2.0 * x * g;
      case JetSlot::Uxx:
        return -2.0 * g;
      case JetSlot::Uy:
        return shape * g * (-4.0 * (2.0 * t - 1.0) / (q * q));
      case JetSlot::Uyy: {
        const double dq = 4.0 * (2.0 * t - 1.0);
        const double dg = -dq / (q * q);
        const double d2g = -8.0 / (q * q) + 2.0 * dq * dq / (q * q * q);
        return shape * g * (dg * dg + d2g);
      }
    }
    return 0.0;
  };
  s.exact = exact;
  s.forcing = [exact](std::span<const double> p, std::size_t) {
    return exact(p, 0, JetSlot::Uy) - exact(p, 0, JetSlot::Uxx);
  };
  auto forcing = s.forcing;
  s.residual = [forcing](const Jets& j, const PointSet& pts) {
    ResidualEval out = blank(j, 1);
    const ArrayXd ut = j.at(0, JetSlot::Uy), uxx = j.at(0, JetSlot::Uxx);
    ArrayXd f(ut.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = forcing(pts.point(static_cast<std::size_t>(i)), 0);
    out.r.col(0) = (ut - uxx - f).matrix();
    out.scale.col(0) = max_abs({ut, uxx, f}).matrix();
    out.partials[0][0][slot_index(JetSlot::Uy)] = constant(j.points, 1.0);
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, -1.0);
    return out;
  };
  s.conditions = {condition(ConditionKind::Dirichlet, 0, 0, Side::Lo, constant_target(0.0)),
                  condition(ConditionKind::Dirichlet, 0, 0, Side::Hi, constant_target(0.0)),
                  condition(ConditionKind::InitialValue, 0, 1, Side::Lo, [eps](std::span<const double> p) {
                    return (1.0 - p[0] * p[0]) * std::exp(1.0 / (1.0 + eps));
                  })};
  s.preset = preset_2d({-3, 5}, {-3, 5}, 6, 50, 10000, 1000, 500, 20000);
  s.preset.weight_ic = 100.0;
  s.preset.weight_bc = 100.0;
  s.preset.keep_best = true;
  return s;
}

struct HelmholtzParams {
  double c = 1.0, b1 = 1.0, b2 = 8.0;
};

// u_xx + u_yy + c^2 u = f on (-1, 1)^2.
// The perturbation parameter is unused here; it is echoed for reports only.
ProblemSpec helmholtz(double eps) {
  const HelmholtzParams prm;
  ProblemSpec s;
  s.name = "helmholtz";
  s.geometry = Geometry{{Interval{-1.0, 1.0}, Interval{-1.0, 1.0}}, std::nullopt};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::U, JetSlot::Uxx, JetSlot::Uyy};
  auto exact = [prm](std::span<const double> p, std::size_t, JetSlot slot) {
    const double kx = prm.b1 * pi, ky = prm.b2 * pi;
    const double sx = std::sin(kx * p[0]), sy = std::sin(ky * p[1]);
    switch (slot) {
      case JetSlot::U:
        return sx * sy;
      case JetSlot::Ux:
        return kx * std::cos(kx * p[0]) * sy;
      case JetSlot::Uxx:
        return -kx * kx * sx * sy;
      case JetSlot::Uy:
        return sx * ky * std::cos(ky * p[1]);
      case JetSlot::Uyy:
        return -ky * ky * sx * sy;
    }
    return 0.0;
  };
  s.exact = exact;
  const double c2 = prm.c * prm.c;
  s.forcing = [exact, prm, c2](std::span<const double> p, std::size_t) {
    return (c2 - (prm.b1 * prm.b1 + prm.b2 * prm.b2) * pi * pi) * exact(p, 0, JetSlot::U);
  };
  auto forcing = s.forcing;
  s.residual = [c2, forcing](const Jets& j, const PointSet& pts) {
    ResidualEval out = blank(j, 1);
    const ArrayXd u = j.at(0, JetSlot::U), uxx = j.at(0, JetSlot::Uxx), uyy = j.at(0, JetSlot::Uyy);
    ArrayXd f(u.size());
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = forcing(pts.point(static_cast<std::size_t>(i)), 0);
    out.r.col(0) = (uxx + uyy + c2 * u - f).matrix();
    out.scale.col(0) = max_abs({uxx, uyy, c2 * u, f}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = constant(j.points, c2);
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, 1.0);
    out.partials[0][0][slot_index(JetSlot::Uyy)] = constant(j.points, 1.0);
    return out;
  };
  auto dirichlet = [exact](std::span<const double> p) { return exact(p, 0, JetSlot::U); };
  for (std::size_t axis : {0u, 1u})
    for (Side side : {Side::Lo, Side::Hi})
      s.conditions.push_back(condition(ConditionKind::Dirichlet, 0, axis, side, dirichlet));
  s.preset = preset_2d({-4, 5}, {-4, 5}, 6, 50, 10000, 1000, 0, 20000);
  s.preset.weight_bc = 100.0;
  s.preset.decay_factor = 0.8;
  s.preset.decay_every = 4000;
  s.preset.keep_best = true;
  return s;
}

// u_t - eps u_xx + 5u^3 - 5u = 0 on [-1, 1] x [0, 1], periodic in x.
ProblemSpec allen_cahn(double eps) {
  ProblemSpec s;
  s.name = "allen_cahn";
  s.geometry = Geometry{{Interval{-1.0, 1.0}, Interval{0.0, 1.0}}, std::size_t{1}};
  s.field_names = {"u"};
  s.epsilon = eps;
  s.slots = {JetSlot::U, JetSlot::Uxx, JetSlot::Uy};
  s.residual = [eps](const Jets& j, const PointSet&) {
    ResidualEval out = blank(j, 1);
    const ArrayXd u = j.at(0, JetSlot::U), ut = j.at(0, JetSlot::Uy), uxx = j.at(0, JetSlot::Uxx);
    out.r.col(0) = (ut - eps * uxx + 5.0 * u.cube() - 5.0 * u).matrix();
    out.scale.col(0) = max_abs({ut, eps * uxx, 5.0 * u.cube(), 5.0 * u}).matrix();
    out.partials[0][0][slot_index(JetSlot::U)] = (15.0 * u.square() - 5.0).matrix();
    out.partials[0][0][slot_index(JetSlot::Uy)] = constant(j.points, 1.0);
    out.partials[0][0][slot_index(JetSlot::Uxx)] = constant(j.points, -eps);
    return out;
  };
  s.conditions = {
      condition(ConditionKind::PeriodicValue, 0, 0, Side::Lo, constant_target(0.0)),
      condition(ConditionKind::PeriodicDerivative, 0, 0, Side::Lo, constant_target(0.0), 0),
      condition(ConditionKind::InitialValue, 0, 1, Side::Lo,
                [](std::span<const double> p) { return p[0] * p[0] * std::cos(pi * p[0]); })};
  s.preset = preset_2d({-5, 6}, {-5, 5}, 6, 100, 20000, 2000, 1000, 20000);
  s.preset.weight_ic = 1000.0;
  s.preset.weight_bc = 100.0;
  s.preset.keep_best = true;
  s.needs_oracle = true;
  return s;
}

// E_t + (1/eps) H_x = 0, H_t + (1/mu) E_x = 0 on [0, 1] x [0, 1] with PEC walls.
ProblemSpec maxwell_homog(double permittivity) {
  const double mu = 1.0;
  const double mode = 4.0;
  const double k = mode * pi;
  const double omega = k / std::sqrt(permittivity * mu);
  const double amp = std::sqrt(permittivity / mu);
  ProblemSpec s;
  s.name = "maxwell_homog";
  s.geometry = Geometry{{Interval{0.0, 1.0}, Interval{0.0, 1.0}}, std::size_t{1}};
  s.fields = 2;
  s.field_names = {"E", "H"};
  s.epsilon = permittivity;
  s.slots = {JetSlot::Ux, JetSlot::Uy};
  s.residual = [permittivity, mu](const Jets& j, const PointSet&) {
    ResidualEval out = blank(j, 2);
    const ArrayXd ex = j.at(0, JetSlot::Ux), et = j.at(0, JetSlot::Uy);
    const ArrayXd hx = j.at(1, JetSlot::Ux), ht = j.at(1, JetSlot::Uy);
    out.r.col(0) = (et + hx / permittivity).matrix();
    out.r.col(1) = (ht + ex / mu).matrix();
    out.scale.col(0) = max_abs({et, hx / permittivity}).matrix();
    out.scale.col(1) = max_abs({ht, ex / mu}).matrix();
    out.partials[0][0][slot_index(JetSlot::Uy)] = constant(j.points, 1.0);
    out.partials[0][1][slot_index(JetSlot::Ux)] = constant(j.points, 1.0 / permittivity);
    out.partials[1][1][slot_index(JetSlot::Uy)] = constant(j.points, 1.0);
    out.partials[1][0][slot_index(JetSlot::Ux)] = constant(j.points, 1.0 / mu);
    return out;
  };
  s.exact = [k, omega, amp](std::span<const double> p, std::size_t field, JetSlot slot) {
    const double x = p[0], t = p[1];
    const double sx = std::sin(k * x), cx = std::cos(k * x);
    const double st = std::sin(omega * t), ct = std::cos(omega * t);
    if (field == 0) {
      switch (slot) {
        case JetSlot::U:
          return sx * ct;
        case JetSlot::Ux:
          return k * cx * ct;
        case JetSlot::Uxx:
          return -k * k * sx * ct;
        case JetSlot::Uy:
          return -omega * sx * st;
        case JetSlot::Uyy:
          return -omega * omega * sx * ct;
      }
    }
    switch (slot) {
      case JetSlot::U:
        return -amp * cx * st;
      case JetSlot::Ux:
        return amp * k * sx * st;
      case JetSlot::Uxx:
        return amp * k * k * cx * st;
      case JetSlot::Uy:
        return -amp * omega * cx * ct;
      case JetSlot::Uyy:
        return amp * omega * omega * cx * st;
    }
    return 0.0;
  };
  s.conditions = {condition(ConditionKind::Dirichlet, 0, 0, Side::Lo, constant_target(0.0)),
                  condition(ConditionKind::Dirichlet, 0, 0, Side::Hi, constant_target(0.0)),
                  condition(ConditionKind::Neumann, 1, 0, Side::Lo, constant_target(0.0), 0),
                  condition(ConditionKind::Neumann, 1, 0, Side::Hi, constant_target(0.0), 0),
                  condition(ConditionKind::InitialValue, 0, 1, Side::Lo,
                            [k](std::span<const double> p) { return std::sin(k * p[0]); }),
                  condition(ConditionKind::InitialValue, 1, 1, Side::Lo, constant_target(0.0))};
  s.preset = preset_2d({-5, 5}, {-5, 5}, 6, 50, 10000, 500, 500, 20000);
  s.preset.weight_ic = 100.0;
  s.preset.weight_bc = 100.0;
  s.preset.keep_best = true;
  return s;
}

struct Entry {
  std::string_view name;
  double default_epsilon;
  ProblemSpec (*make)(double);
};

const Entry kRegistry[] = {
    {"advdiff", 0x1p-4, advdiff},
    {"nonlinear_ivp", 0x1p-10, nonlinear_ivp},
    {"neumann_bvp", 0x1p-10, neumann_bvp},
    {"fhn", 0x1p-10, fhn},
    {"heat2d", 0.15, heat2d},
    {"helmholtz", 1.0, helmholtz},
    {"allen_cahn", 1e-4, allen_cahn},
    {"maxwell_homog", 1.0, maxwell_homog},
};

}  // namespace

std::vector<std::string> problem_names() {
  std::vector<std::string> out;
  for (const auto& e : kRegistry) out.emplace_back(e.name);
  return out;
}

ProblemSpec get_problem(std::string_view name, std::optional<double> epsilon) {
  for (const auto& e : kRegistry) {
    if (e.name != name) continue;
    const double eps = epsilon.value_or(e.default_epsilon);
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("epsilon must be positive and finite");
    return e.make(eps);
  }
  std::string known;
  for (const auto& n : problem_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown problem '" + std::string(name) + "' (known: " + known + ")");
}

ResidualEval residual_and_partials(const ProblemSpec& spec, const Jets& jets, const PointSet& points) {
  if (jets.fields != spec.fields) throw ConfigError("jets carry the wrong number of fields");
  if (jets.points != points.size()) throw ShapeError("jets and points disagree in count");
  for (std::size_t f = 0; f < spec.fields; ++f)
    for (JetSlot s : spec.slots)
      if (!jets.has(f, s))
        throw ConfigError("jet slot " + std::string(to_string(s)) + " missing for field " + std::to_string(f));
  return spec.residual(jets, points);
}

ForcingProbe forcing_magnitude_probe(const ProblemSpec& spec, const PointSet& interior,
                                     const ConditionPoints& conditions) {
  ForcingProbe out;
  out.max_forcing.assign(spec.fields, 0.0);
  if (spec.forcing)
    for (std::size_t i = 0; i < interior.size(); ++i)
      for (std::size_t f = 0; f < spec.fields; ++f)
        out.max_forcing[f] = std::max(out.max_forcing[f], std::abs(spec.forcing(interior.point(i), f)));
  for (const auto& c : spec.conditions) {
    const PointSet& set = c.is_initial() ? conditions.initial : conditions.boundary;
    double& slot = c.is_initial() ? out.max_initial_target : out.max_boundary_target;
    for (std::size_t i = 0; i < set.size(); ++i) slot = std::max(slot, std::abs(c.target(set.point(i))));
  }
  return out;
}

}  // namespace wavesolve
