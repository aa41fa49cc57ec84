#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "wavesolve/error.hpp"
#include "wavesolve/oracles.hpp"
#include "wavesolve/report.hpp"

namespace ws = wavesolve;

namespace {

struct TrainFlags {
  std::string problem = "advdiff";
  std::optional<double> epsilon;
  std::string wavelet = "gaussian";
  std::vector<int> jmin, jmax;
  std::optional<std::size_t> layers, width, points, boundary, initial, iters, history_stride;
  std::optional<double> lr, decay, w_residual, w_ic, w_bc;
  std::optional<std::size_t> decay_every;
  std::string activation = "tanh";
  std::string scaling = "level";
  std::optional<bool> keep_best;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string oracle_dir = "oracle_cache";
  bool verbose = false;
};

void add_problem_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--problem", f.problem, "registered problem name")->capture_default_str();
  app->add_option("--epsilon", f.epsilon, "perturbation parameter override");
  app->add_option("--oracle-dir", f.oracle_dir, "directory of cached oracle solutions")->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  add_problem_flags(app, f);
  app->add_option("--wavelet", f.wavelet, "gaussian | mexican")->capture_default_str();
  app->add_option("--jmin", f.jmin, "lowest resolution level per axis")->expected(1, 2);
  app->add_option("--jmax", f.jmax, "highest resolution level per axis")->expected(1, 2);
  app->add_option("--layers", f.layers, "hidden layers");
  app->add_option("--width", f.width, "neurons per hidden layer");
  app->add_option("--points", f.points, "interior collocation points");
  app->add_option("--boundary-points", f.boundary, "boundary points (2D)");
  app->add_option("--initial-points", f.initial, "initial points (2D)");
  app->add_option("--iters", f.iters, "Adam iterations");
  app->add_option("--lr", f.lr, "learning rate");
  app->add_option("--decay", f.decay, "learning-rate factor per decay interval");
  app->add_option("--decay-every", f.decay_every, "decay interval in iterations");
  app->add_option("--w-residual", f.w_residual, "residual loss weight");
  app->add_option("--w-ic", f.w_ic, "initial-condition loss weight");
  app->add_option("--w-bc", f.w_bc, "boundary-condition loss weight");
  app->add_option("--activation", f.activation, "tanh | sin")->capture_default_str();
  app->add_option("--scaling", f.scaling, "coefficient scaling: level | none")->capture_default_str();
  app->add_option("--history-stride", f.history_stride, "record the loss every n iterations");
  app->add_flag("--keep-best,!--no-keep-best", f.keep_best, "return the parameters with the lowest loss seen");
  app->add_option("--seeds", f.seeds, "seeds, one run each")->capture_default_str();
  app->add_flag("-v,--verbose", f.verbose, "print loss progress to stderr");
}

ws::TrainConfig build_config(const TrainFlags& f) {
  ws::TrainConfig c = ws::TrainConfig::from_preset(f.problem, f.epsilon, ws::parse_mother_kind(f.wavelet));
  if (!f.jmin.empty() || !f.jmax.empty()) {
    auto pick = [](const std::vector<int>& v, std::size_t d, int fallback) {
      if (v.empty()) return fallback;
      return v.size() > d ? v[d] : v.back();
    };
    for (std::size_t d = 0; d < c.resolutions.size(); ++d) {
      c.resolutions[d].jmin = pick(f.jmin, d, c.resolutions[d].jmin);
      c.resolutions[d].jmax = pick(f.jmax, d, c.resolutions[d].jmax);
      if (c.resolutions[d].jmin > c.resolutions[d].jmax)
        throw ws::ConfigError("jmin exceeds jmax on axis " + std::to_string(d));
    }
  }
  if (f.layers) c.hidden_layers = *f.layers;
  if (f.width) c.width = *f.width;
  if (f.points) c.interior = *f.points;
  if (f.boundary) c.boundary = *f.boundary;
  if (f.initial) c.initial = *f.initial;
  if (f.iters) c.iterations = *f.iters;
  if (f.lr) c.adam.lr = *f.lr;
  if (f.decay) c.decay_factor = *f.decay;
  if (f.decay_every) c.decay_every = *f.decay_every;
  if (f.history_stride) c.history_stride = *f.history_stride;
  if (f.w_residual) c.weights.residual = *f.w_residual;
  if (f.w_ic) c.weights.ic = *f.w_ic;
  if (f.w_bc) c.weights.bc = *f.w_bc;
  c.activation = ws::parse_activation(f.activation);
  c.scaling = ws::parse_coefficient_scaling(f.scaling);
  if (f.keep_best) c.keep_best = *f.keep_best;
  return c;
}

ws::ProtocolOptions protocol_options(const TrainFlags& f, bool keep_model) {
  ws::ProtocolOptions o;
  o.keep_model = keep_model;
  if (f.verbose)
    o.progress = [](std::uint64_t seed, const ws::LossRecord& r) {
      if (r.iteration % 1000 == 0)
        std::cerr << "seed " << seed << " iter " << r.iteration << " loss " << r.loss.total << " (res "
                  << r.loss.residual << ", ic " << r.loss.ic << ", bc " << r.loss.bc << ")\n";
    };
  return o;
}

void print_errors(const std::vector<std::string>& names, const std::vector<double>& mean,
                  const std::vector<double>& stddev) {
  for (std::size_t i = 0; i < names.size(); ++i)
    std::cout << names[i] << ": relative L2 " << ws::format_real(mean[i]) << " +- " << ws::format_real(stddev[i])
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet-expansion physics-informed network solver"};
  app.set_config("--config", "", "INI/TOML file whose keys mirror the flags (per-subcommand sections)");
  app.require_subcommand(1);

  TrainFlags solve_flags;
  std::string solve_out = "out";
  auto* solve = app.add_subcommand("solve", "train on every seed, evaluate and write the report");
  add_train_flags(solve, solve_flags);
  solve->add_option("--out", solve_out, "output directory")->capture_default_str();

  TrainFlags sweep_flags;
  std::string sweep_out = "sweep_out";
  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "run the protocol for each value of one hyperparameter");
  add_train_flags(sweep, sweep_flags);
  sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
  sweep->add_option("--axis", axis, "resolution | collocation | architecture")->required();
  sweep->add_option("--values", values, "values along the axis (J, N or DEPTHxWIDTH)")->required();

  TrainFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "compute and cache a reference solution");
  add_problem_flags(oracle, oracle_flags);

  TrainFlags eval_flags;
  std::string model_path;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "re-evaluate a saved model");
  eval->add_option("--model", model_path, "model.json written by solve")->required();
  eval->add_option("--oracle-dir", eval_flags.oracle_dir, "directory of cached oracle solutions")
      ->capture_default_str();
  eval->add_option("--out", eval_out, "write solution.csv into this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const ws::TrainConfig config = build_config(solve_flags);
      const ws::ProblemSpec spec = ws::get_problem(config.problem, config.epsilon);
      const ws::Reference ref = ws::load_reference(spec, solve_flags.oracle_dir);
      const ws::AggregateReport rep =
          ws::run_protocol(config, solve_flags.seeds, ref, protocol_options(solve_flags, true));
      ws::emit(rep, solve_out);
      print_errors(rep.field_names, rep.mean, rep.stddev);
      std::cout << "survivors " << rep.survivors << "/" << rep.runs.size() << ", mean training seconds "
                << rep.mean_seconds << "\n";
      for (const ws::RunReport& r : rep.runs)
        if (r.failed) std::cerr << "seed " << r.seed << " failed: " << r.diagnostic << "\n";
      return rep.survivors > 0 ? 0 : 1;
    }
    if (sweep->parsed()) {
      const ws::TrainConfig config = build_config(sweep_flags);
      const ws::ProblemSpec spec = ws::get_problem(config.problem, config.epsilon);
      const ws::Reference ref = ws::load_reference(spec, sweep_flags.oracle_dir);
      const ws::SweepTable table = ws::sweep(config, ws::parse_sweep_axis(axis), values, sweep_flags.seeds, ref,
                                             protocol_options(sweep_flags, false));
      ws::emit_sweep(table, sweep_out);
      for (const ws::SweepRow& row : table.rows) {
        std::cout << row.value << ":";
        for (std::size_t f = 0; f < row.mean.size(); ++f)
          std::cout << " " << table.field_names[f] << " " << ws::format_real(row.mean[f]);
        if (!row.error.empty()) std::cout << " (" << row.error << ")";
        std::cout << "\n";
      }
      return 0;
    }
    if (oracle->parsed()) {
      const ws::ProblemSpec spec = ws::get_problem(oracle_flags.problem, oracle_flags.epsilon);
      if (spec.has_exact()) {
        std::cout << spec.name << " has a closed-form solution; no oracle needed\n";
        return 0;
      }
      std::cout << ws::write_oracle_cache(spec, oracle_flags.oracle_dir).string() << "\n";
      return 0;
    }
    if (eval->parsed()) {
      ws::TrainedModel model = ws::load_model(model_path);
      const ws::ProblemSpec spec = ws::get_problem(model.config.problem, model.config.epsilon);
      const ws::Reference ref = ws::load_reference(spec, eval_flags.oracle_dir);
      ws::Evaluation ev = ws::evaluate(spec, model, ws::default_evaluation_grid(spec), ref);
      print_errors(spec.field_names, ev.errors, std::vector<double>(ev.errors.size(), 0.0));
      if (!eval_out.empty()) {
        ws::AggregateReport rep;
        rep.config = model.config;
        rep.problem = spec.name;
        rep.epsilon = spec.epsilon;
        rep.field_names = spec.field_names;
        rep.reference = ref.source;
        rep.family_size = model.family.size();
        rep.mean = ev.errors;
        rep.stddev.assign(ev.errors.size(), 0.0);
        rep.survivors = 1;
        rep.runs.push_back({model.config.seed, false, "", ev.errors, {}, 0, {}, 0.0});
        rep.sample = std::move(ev);
        ws::emit(rep, eval_out);
      }
      return 0;
    }
  } catch (const ws::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
