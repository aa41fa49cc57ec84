#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace wavesolve {

/// Solution on a 1D node set (column per field), linearly interpolated
/// between nodes.
struct GridSolution {
  std::vector<std::string> names;
  std::vector<double> x;
  Eigen::MatrixXd values;  // x.size() x fields

  std::size_t fields() const { return static_cast<std::size_t>(values.cols()); }
  double at(double position, std::size_t field) const;
};

/// Scalar field on a tensor grid of x nodes by t rows, bilinear in between.
struct SpaceTimeSolution {
  std::vector<double> x;
  std::vector<double> t;
  Eigen::MatrixXd u;  // t.size() x x.size()

  double at(double position, double time) const;
};

struct BvpOracleOptions {
  double tolerance = 1e-10;
  std::size_t max_newton = 50;
};

/// -eps u'' + u^5 + 3u - 1 = 0 on [0, 1] with u'(0) = sin(0.5),
/// u'(1) = exp(-0.7): central differences on a Shishkin mesh refined at both
/// ends, one-sided second-order boundary stencils, damped Newton.
GridSolution solve_bvp_fd(double eps, std::size_t n_cells, const BvpOracleOptions& options = {});

/// Max-norm of the discrete equations at a given node vector on the mesh
/// `x`; used to verify the solver's convergence contract.
double bvp_fd_residual(double eps, const std::vector<double>& x, const Eigen::VectorXd& u);

/// Shishkin mesh with transition point min(1/4, 2 sqrt(eps) ln n) at both ends.
std::vector<double> shishkin_mesh(double eps, std::size_t n_cells);

struct FhnParameters {
  double a = 1.0;
  double b = 1.0;
  double current = 0.1;
  double resistance = 1.0;
  double tau = 0x1p-10;
  double v0 = 0.5;
  double w0 = 0.1;
};

struct FhnOracleOptions {
  double tolerance = 1e-6;
  std::size_t output_points = 10000;
  std::size_t max_halvings = 10;
};

struct FhnOracleResult {
  GridSolution solution;
  double step = 0.0;         // finest backward-Euler step used
  double halving_change = 0.0;
};

/// Backward Euler with Newton per step, starting from h = min(tau/20, 1e-4).
/// Two step sizes are combined by Richardson extrapolation and the step is
/// halved until successive extrapolations agree to `tolerance` on the
/// output grid. Throws NumericError otherwise.
FhnOracleResult solve_fhn(const FhnParameters& params, double t_end, const FhnOracleOptions& options = {});

/// Backward-Euler trajectory at a fixed step, sampled on `output_points`
/// uniform nodes of [0, t_end].
GridSolution integrate_fhn_backward_euler(const FhnParameters& params, double t_end, double step,
                                          std::size_t output_points);

struct AllenCahnOptions {
  std::size_t n_x = 1024;
  std::size_t n_t = 20000;
  std::size_t stored_rows = 1001;
  double refinement_tolerance = 1e-3;
  bool check_refinement = true;
};

struct AllenCahnResult {
  SpaceTimeSolution solution;
  double refinement_change = 0.0;  // relative L2 between the two levels
};

/// Method of lines for u_t = eps u_xx + 5u - 5u^3 on the periodic interval
/// [-1, 1], u(x, 0) = x^2 cos(pi x): implicit diffusion (cyclic tridiagonal
/// solve) with explicit reaction. With check_refinement the run is repeated
/// with doubled n_x and n_t and compared at shared nodes.
AllenCahnResult solve_allen_cahn(double eps, const AllenCahnOptions& options = {});

void write_csv(const GridSolution& solution, const std::filesystem::path& path);
GridSolution read_grid_csv(const std::filesystem::path& path);
void write_csv(const SpaceTimeSolution& solution, const std::filesystem::path& path);
SpaceTimeSolution read_space_time_csv(const std::filesystem::path& path);

}  // namespace wavesolve
