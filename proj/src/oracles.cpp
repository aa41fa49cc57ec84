#include "wavesolve/oracles.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "wavesolve/error.hpp"

namespace wavesolve {

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

// Index of the left node of the cell containing `p` (clamped to the ends).
std::size_t locate(const std::vector<double>& nodes, double p) {
  if (nodes.size() < 2) throw StateError("interpolation needs at least two nodes");
  auto it = std::upper_bound(nodes.begin(), nodes.end(), p);
  std::size_t right = static_cast<std::size_t>(it - nodes.begin());
  right = std::clamp<std::size_t>(right, 1, nodes.size() - 1);
  return right - 1;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("'" + path.string() + "': cannot parse number '" + s + "'");
  }
}

}  // namespace

double GridSolution::at(double position, std::size_t field) const {
  if (field >= fields()) throw ShapeError("GridSolution::at: field out of range");
  const std::size_t i = locate(x, position);
  const double w = (position - x[i]) / (x[i + 1] - x[i]);
  const double lo = values(idx(i), idx(field)), hi = values(idx(i + 1), idx(field));
  return lo + std::clamp(w, 0.0, 1.0) * (hi - lo);
}

double SpaceTimeSolution::at(double position, double time) const {
  const std::size_t i = locate(x, position);
  const std::size_t k = locate(t, time);
  const double wx = std::clamp((position - x[i]) / (x[i + 1] - x[i]), 0.0, 1.0);
  const double wt = std::clamp((time - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0);
  const auto r = idx(k), c = idx(i);
  const double lower = (1 - wx) * u(r, c) + wx * u(r, c + 1);
  const double upper = (1 - wx) * u(r + 1, c) + wx * u(r + 1, c + 1);
  return (1 - wt) * lower + wt * upper;
}

std::vector<double> shishkin_mesh(double eps, std::size_t n_cells) {
  if (n_cells < 64 || n_cells % 4 != 0) throw ConfigError("Shishkin mesh needs n_cells >= 64 divisible by 4");
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  const double n = static_cast<double>(n_cells);
  const double sigma = std::min(0.25, 2.0 * std::sqrt(eps) * std::log(n));
  const std::size_t q = n_cells / 4;
  std::vector<double> x(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i) {
    if (i <= q) {
      x[i] = sigma * static_cast<double>(i) / static_cast<double>(q);
    } else if (i <= 3 * q) {
      x[i] = sigma + (1.0 - 2.0 * sigma) * static_cast<double>(i - q) / static_cast<double>(2 * q);
    } else {
      x[i] = 1.0 - sigma + sigma * static_cast<double>(i - 3 * q) / static_cast<double>(q);
    }
  }
  x.back() = 1.0;
  return x;
}

namespace {

const double kLeftSlope = std::sin(0.5);
const double kRightSlope = std::exp(-0.7);

// One-sided three-point first-derivative weights at the left end.
std::array<double, 3> left_weights(double h1, double h2) {
  return {-(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))};
}

// Same at the right end, for u_n, u_{n-1}, u_{n-2}.
std::array<double, 3> right_weights(double h1, double h2) {
  return {(2 * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2))};
}

Eigen::VectorXd bvp_equations(double eps, const std::vector<double>& x, const Eigen::VectorXd& u) {
  const std::size_t n = x.size() - 1;
  Eigen::VectorXd f(idx(n + 1));
  const auto lw = left_weights(x[1] - x[0], x[2] - x[1]);
  f[0] = lw[0] * u[0] + lw[1] * u[1] + lw[2] * u[2] - kLeftSlope;
  for (std::size_t i = 1; i < n; ++i) {
    const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
    const auto k = idx(i);
    const double d2 = 2.0 / (hl + hr) * ((u[k + 1] - u[k]) / hr - (u[k] - u[k - 1]) / hl);
    const double v = u[k];
    f[k] = -eps * d2 + v * v * v * v * v + 3.0 * v - 1.0;
  }
  const auto rw = right_weights(x[n] - x[n - 1], x[n - 1] - x[n - 2]);
  const auto last = idx(n);
  f[last] = rw[0] * u[last] + rw[1] * u[last - 1] + rw[2] * u[last - 2] - kRightSlope;
  return f;
}

}  // namespace

double bvp_fd_residual(double eps, const std::vector<double>& x, const Eigen::VectorXd& u) {
  if (x.size() < 3 || static_cast<std::size_t>(u.size()) != x.size()) throw ShapeError("bvp_fd_residual: size mismatch");
  return bvp_equations(eps, x, u).lpNorm<Eigen::Infinity>();
}

GridSolution solve_bvp_fd(double eps, std::size_t n_cells, const BvpOracleOptions& options) {
  const std::vector<double> x = shishkin_mesh(eps, n_cells);
  const std::size_t n = n_cells;

  // Start from the root of the reduced equation u^5 + 3u - 1 = 0.
  double root = 0.3;
  for (int k = 0; k < 50; ++k) root -= (std::pow(root, 5) + 3 * root - 1) / (5 * std::pow(root, 4) + 3);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(idx(n + 1), root);

  Eigen::VectorXd f = bvp_equations(eps, x, u);
  double norm = f.lpNorm<Eigen::Infinity>();
  std::size_t iter = 0;
  while (norm >= options.tolerance) {
    if (iter++ >= options.max_newton)
      throw NumericError("BVP Newton iteration did not converge in " + std::to_string(options.max_newton) +
                         " steps (residual " + format_double(norm) + ")");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(3 * (n + 1));
    const auto lw = left_weights(x[1] - x[0], x[2] - x[1]);
    for (int c = 0; c < 3; ++c) trip.emplace_back(0, c, lw[static_cast<std::size_t>(c)]);
    for (std::size_t i = 1; i < n; ++i) {
      const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
      const double s = -eps * 2.0 / (hl + hr);
      const auto k = idx(i);
      trip.emplace_back(k, k - 1, s / hl);
      trip.emplace_back(k, k + 1, s / hr);
      trip.emplace_back(k, k, -s / hr - s / hl + 5.0 * std::pow(u[k], 4) + 3.0);
    }
    const auto rw = right_weights(x[n] - x[n - 1], x[n - 1] - x[n - 2]);
    const auto last = idx(n);
    for (int c = 0; c < 3; ++c) trip.emplace_back(last, last - c, rw[static_cast<std::size_t>(c)]);
    Eigen::SparseMatrix<double> jac(idx(n + 1), idx(n + 1));
    jac.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw NumericError("BVP Jacobian factorisation failed");
    const Eigen::VectorXd delta = lu.solve(-f);

    double step = 1.0;
    Eigen::VectorXd trial;
    Eigen::VectorXd f_trial;
    double trial_norm = 0.0;
    for (int halvings = 0;; ++halvings) {
      trial = u + step * delta;
      f_trial = bvp_equations(eps, x, trial);
      trial_norm = f_trial.lpNorm<Eigen::Infinity>();
      if (trial_norm < norm || halvings >= 30) break;
      step *= 0.5;
    }
    u = std::move(trial);
    f = std::move(f_trial);
    // A step at rounding level means the residual sits at the floor set by
    // the 1/h^2 stencil weights; further iterations cannot reduce it.
    if (delta.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + u.lpNorm<Eigen::Infinity>())) {
      norm = f.lpNorm<Eigen::Infinity>();
      break;
    }
    norm = trial_norm;
  }

  GridSolution out;
  out.names = {"u"};
  out.x = x;
  out.values = u;
  return out;
}

GridSolution integrate_fhn_backward_euler(const FhnParameters& p, double t_end, double step,
                                          std::size_t output_points) {
  if (!(p.tau > 0.0)) throw ConfigError("FHN tau must be positive");
  if (!(t_end > 0.0) || !(step > 0.0)) throw ConfigError("FHN end time and step must be positive");
  if (output_points < 2) throw ConfigError("FHN output needs at least two points");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));
  const double h = t_end / static_cast<double>(steps);
  const double ri = p.resistance * p.current;

  GridSolution out;
  out.names = {"v", "w"};
  out.x.resize(output_points);
  out.values.resize(idx(output_points), 2);
  for (std::size_t k = 0; k < output_points; ++k)
    out.x[k] = t_end * static_cast<double>(k) / static_cast<double>(output_points - 1);
  out.x.back() = t_end;

  double v = p.v0, w = p.w0, t = 0.0;
  std::size_t next = 0;
  auto emit_until = [&](double t_new, double v_old, double w_old, double t_old, double v_new, double w_new) {
    while (next < output_points && out.x[next] <= t_new + 1e-15) {
      const double s = t_new > t_old ? std::clamp((out.x[next] - t_old) / (t_new - t_old), 0.0, 1.0) : 1.0;
      out.values(idx(next), 0) = v_old + s * (v_new - v_old);
      out.values(idx(next), 1) = w_old + s * (w_new - w_old);
      ++next;
    }
  };
  emit_until(0.0, v, w, 0.0, v, w);
  for (std::size_t n = 1; n <= steps; ++n) {
    const double t_new = n == steps ? t_end : h * static_cast<double>(n);
    double vn = v, wn = w;
    for (int it = 0; it < 30; ++it) {
      const double g1 = vn - v - h * (vn - vn * vn * vn / 3.0 - wn + ri);
      const double g2 = wn - w - (h / p.tau) * (vn - p.b * wn - p.a);
      const double j11 = 1.0 - h * (1.0 - vn * vn), j12 = h;
      const double j21 = -h / p.tau, j22 = 1.0 + h * p.b / p.tau;
      const double det = j11 * j22 - j12 * j21;
      const double dv = -(g1 * j22 - j12 * g2) / det;
      const double dw = -(j11 * g2 - j21 * g1) / det;
      vn += dv;
      wn += dw;
      if (std::abs(dv) + std::abs(dw) < 1e-15 * (1.0 + std::abs(vn) + std::abs(wn))) break;
    }
    if (!std::isfinite(vn) || !std::isfinite(wn)) throw NumericError("FHN integration produced non-finite values");
    emit_until(t_new, v, w, t, vn, wn);
    v = vn;
    w = wn;
    t = t_new;
  }
  return out;
}

FhnOracleResult solve_fhn(const FhnParameters& params, double t_end, const FhnOracleOptions& options) {
  double h = std::min(params.tau / 20.0, 1e-4);
  GridSolution coarse = integrate_fhn_backward_euler(params, t_end, h, options.output_points);
  GridSolution fine = integrate_fhn_backward_euler(params, t_end, h / 2, options.output_points);
  Eigen::MatrixXd previous = 2.0 * fine.values - coarse.values;
  double change = 0.0;
  for (std::size_t k = 0; k < options.max_halvings; ++k) {
    h /= 2;
    GridSolution finer = integrate_fhn_backward_euler(params, t_end, h / 2, options.output_points);
    Eigen::MatrixXd current = 2.0 * finer.values - fine.values;
    change = (current - previous).cwiseAbs().maxCoeff();
    if (change < options.tolerance) {
      FhnOracleResult out;
      out.solution = std::move(finer);
      out.solution.values = std::move(current);
      out.step = h / 2;
      out.halving_change = change;
      return out;
    }
    previous = std::move(current);
    fine = std::move(finer);
  }
  throw NumericError("FHN step-halving study did not reach tolerance " + format_double(options.tolerance) +
                     " (last change " + format_double(change) + ")");
}

namespace {

// Solves the periodic system with constant diagonal `d` and off-diagonals
// `e` (including the corner entries) by Sherman-Morrison on a tridiagonal.
class CyclicSolver {
 public:
  CyclicSolver(std::size_t n, double d, double e) : n_(n), e_(e) {
    gamma_ = -d;
    diag_.assign(n, d);
    diag_[0] = d - gamma_;
    diag_[n - 1] = d - e * e / gamma_;
    // Thomas factorisation of the modified tridiagonal.
    c_prime_.resize(n);
    denom_.resize(n);
    denom_[0] = diag_[0];
    c_prime_[0] = e / denom_[0];
    for (std::size_t i = 1; i < n; ++i) {
      denom_[i] = diag_[i] - e * c_prime_[i - 1];
      c_prime_[i] = e / denom_[i];
    }
    std::vector<double> uvec(n, 0.0);
    uvec[0] = gamma_;
    uvec[n - 1] = e;
    z_ = thomas(uvec);
  }

  void solve(std::vector<double>& rhs) const {
    std::vector<double> y = thomas(rhs);
    const double fact = (y[0] + e_ * y[n_ - 1] / gamma_) / (1.0 + z_[0] + e_ * z_[n_ - 1] / gamma_);
    for (std::size_t i = 0; i < n_; ++i) rhs[i] = y[i] - fact * z_[i];
  }

 private:
  std::vector<double> thomas(const std::vector<double>& r) const {
    std::vector<double> y(n_);
    y[0] = r[0] / denom_[0];
    for (std::size_t i = 1; i < n_; ++i) y[i] = (r[i] - e_ * y[i - 1]) / denom_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) y[i] -= c_prime_[i] * y[i + 1];
    return y;
  }

  std::size_t n_;
  double e_;
  double gamma_;
  std::vector<double> diag_, c_prime_, denom_, z_;
};

SpaceTimeSolution allen_cahn_imex(double eps, std::size_t n_x, std::size_t n_t, std::size_t stored_rows) {
  if (n_x < 256) throw ConfigError("Allen-Cahn oracle needs n_x >= 256");
  if (stored_rows < 2 || n_t % (stored_rows - 1) != 0)
    throw ConfigError("Allen-Cahn oracle: n_t must be a multiple of stored_rows - 1");
  const double dx = 2.0 / static_cast<double>(n_x);
  const double dt = 1.0 / static_cast<double>(n_t);
  const double r = dt * eps / (dx * dx);
  const CyclicSolver solver(n_x, 1.0 + 2.0 * r, -r);
  const std::size_t stride = n_t / (stored_rows - 1);

  SpaceTimeSolution out;
  out.x.resize(n_x + 1);
  for (std::size_t j = 0; j <= n_x; ++j) out.x[j] = -1.0 + dx * static_cast<double>(j);
  out.x.back() = 1.0;
  out.t.resize(stored_rows);
  for (std::size_t k = 0; k < stored_rows; ++k) out.t[k] = static_cast<double>(k * stride) * dt;
  out.t.back() = 1.0;
  out.u.resize(idx(stored_rows), idx(n_x + 1));

  std::vector<double> u(n_x);
  for (std::size_t j = 0; j < n_x; ++j) {
    const double x = out.x[j];
    u[j] = x * x * std::cos(std::numbers::pi * x);
  }
  auto store = [&](std::size_t row) {
    for (std::size_t j = 0; j < n_x; ++j) out.u(idx(row), idx(j)) = u[j];
    out.u(idx(row), idx(n_x)) = u[0];
  };
  store(0);
  for (std::size_t n = 1; n <= n_t; ++n) {
    for (double& v : u) v += dt * (5.0 * v - 5.0 * v * v * v);
    solver.solve(u);
    if (n % stride == 0) store(n / stride);
  }
  if (!out.u.allFinite()) throw NumericError("Allen-Cahn integration produced non-finite values");
  return out;
}

}  // namespace

AllenCahnResult solve_allen_cahn(double eps, const AllenCahnOptions& options) {
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  AllenCahnResult out;
  SpaceTimeSolution coarse = allen_cahn_imex(eps, options.n_x, options.n_t, options.stored_rows);
  if (!options.check_refinement) {
    out.solution = std::move(coarse);
    return out;
  }
  SpaceTimeSolution fine = allen_cahn_imex(eps, 2 * options.n_x, 2 * options.n_t, options.stored_rows);
  double diff = 0.0, norm = 0.0;
  for (Eigen::Index k = 0; k < coarse.u.rows(); ++k)
    for (Eigen::Index j = 0; j < coarse.u.cols(); ++j) {
      const double d = coarse.u(k, j) - fine.u(k, 2 * j);
      diff += d * d;
      norm += fine.u(k, 2 * j) * fine.u(k, 2 * j);
    }
  out.refinement_change = std::sqrt(diff / norm);
  if (out.refinement_change >= options.refinement_tolerance)
    throw NumericError("Allen-Cahn refinement change " + format_double(out.refinement_change) +
                       " exceeds tolerance " + format_double(options.refinement_tolerance));
  out.solution = std::move(fine);
  return out;
}

void write_csv(const GridSolution& solution, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "x";
  for (const auto& n : solution.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < solution.x.size(); ++i) {
    os << format_double(solution.x[i]);
    for (std::size_t f = 0; f < solution.fields(); ++f) os << ',' << format_double(solution.values(idx(i), idx(f)));
    os << '\n';
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

GridSolution read_grid_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw IoError("'" + path.string() + "' is empty");
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "x") throw IoError("'" + path.string() + "': unexpected header");
  GridSolution out;
  out.names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) throw IoError("'" + path.string() + "': ragged row");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, path));
    rows.push_back(std::move(row));
  }
  out.x.resize(rows.size());
  out.values.resize(idx(rows.size()), idx(out.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x[i] = rows[i][0];
    for (std::size_t f = 0; f < out.names.size(); ++f) out.values(idx(i), idx(f)) = rows[i][f + 1];
  }
  return out;
}

void write_csv(const SpaceTimeSolution& solution, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "x,t,u\n";
  for (std::size_t k = 0; k < solution.t.size(); ++k)
    for (std::size_t j = 0; j < solution.x.size(); ++j)
      os << format_double(solution.x[j]) << ',' << format_double(solution.t[k]) << ','
         << format_double(solution.u(idx(k), idx(j))) << '\n';
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

SpaceTimeSolution read_space_time_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line) || line != "x,t,u") throw IoError("'" + path.string() + "': unexpected header");
  std::vector<double> xs, ts, us;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) throw IoError("'" + path.string() + "': ragged row");
    xs.push_back(parse_double(cells[0], path));
    ts.push_back(parse_double(cells[1], path));
    us.push_back(parse_double(cells[2], path));
  }
  SpaceTimeSolution out;
  // Rows are written time-major, so x repeats until t changes.
  std::size_t nx = 0;
  while (nx < ts.size() && ts[nx] == ts[0]) ++nx;
  if (nx < 2 || ts.size() % nx != 0) throw IoError("'" + path.string() + "': not a tensor grid");
  const std::size_t nt = ts.size() / nx;
  out.x.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(nx));
  out.t.resize(nt);
  out.u.resize(idx(nt), idx(nx));
  for (std::size_t k = 0; k < nt; ++k) {
    out.t[k] = ts[k * nx];
    for (std::size_t j = 0; j < nx; ++j) out.u(idx(k), idx(j)) = us[k * nx + j];
  }
  return out;
}

}  // namespace wavesolve
