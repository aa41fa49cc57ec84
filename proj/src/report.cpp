#include "wavesolve/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "wavesolve/error.hpp"
#include "wavesolve/matrices.hpp"
#include "wavesolve/oracles.hpp"
#include "wavesolve/sampling.hpp"

namespace wavesolve {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json reals(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real(x));
  return a;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string number_tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> axis_names(const ProblemSpec& spec) {
  if (spec.dim() == 1) return {spec.geometry.time_axis ? "t" : "x"};
  if (spec.geometry.time_axis) return {"x", "t"};
  return {"x", "y"};
}

json loss_json(const LossBreakdown& l) {
  return json{{"residual", real(l.residual)}, {"ic", real(l.ic)}, {"bc", real(l.bc)}, {"total", real(l.total)}};
}

// Oracle for neumann_bvp: Shishkin mesh, checked against half the cells.
constexpr std::size_t kBvpCells = 16384;

double grid_change(const GridSolution& fine, const GridSolution& coarse) {
  double num = 0.0, den = 0.0;
  for (std::size_t f = 0; f < fine.fields(); ++f)
    for (std::size_t i = 0; i < coarse.x.size(); ++i) {
      const double a = fine.at(coarse.x[i], f), b = coarse.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
      num += (a - b) * (a - b);
      den += a * a;
    }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

Reference grid_reference(std::shared_ptr<const GridSolution> sol, std::string source, double change,
                         std::string levels = {}) {
  Reference r;
  r.source = std::move(source);
  r.refinement_change = change;
  r.refinement_levels = std::move(levels);
  r.value = [sol](std::span<const double> p, std::size_t f) { return sol->at(p[0], f); };
  return r;
}

Reference space_time_reference(std::shared_ptr<const SpaceTimeSolution> sol, std::string source, double change,
                               std::string levels = {}) {
  Reference r;
  r.source = std::move(source);
  r.refinement_change = change;
  r.refinement_levels = std::move(levels);
  r.value = [sol](std::span<const double> p, std::size_t) { return sol->at(p[0], p[1]); };
  return r;
}

FhnParameters fhn_parameters(const ProblemSpec& spec) {
  FhnParameters p;
  p.tau = spec.epsilon;
  return p;
}

double fhn_end(const ProblemSpec& spec) { return spec.geometry.box[0].hi; }

struct OracleSolution {
  std::shared_ptr<GridSolution> grid;
  std::shared_ptr<SpaceTimeSolution> space_time;
  double change = 0.0;
  std::string levels;
};

OracleSolution run_oracle(const ProblemSpec& spec) {
  OracleSolution out;
  if (spec.name == "neumann_bvp") {
    auto fine = std::make_shared<GridSolution>(solve_bvp_fd(spec.epsilon, kBvpCells));
    const GridSolution coarse = solve_bvp_fd(spec.epsilon, kBvpCells / 2);
    out.change = grid_change(*fine, coarse);
    out.levels = std::to_string(kBvpCells) + " vs " + std::to_string(kBvpCells / 2) + " mesh cells";
    out.grid = std::move(fine);
  } else if (spec.name == "fhn") {
    FhnOracleResult r = solve_fhn(fhn_parameters(spec), fhn_end(spec));
    out.change = r.halving_change;
    out.levels = "backward-Euler pairs (2h, h) vs (4h, 2h), h = " + format_real(r.step);
    out.grid = std::make_shared<GridSolution>(std::move(r.solution));
  } else if (spec.name == "allen_cahn") {
    const AllenCahnOptions options;
    AllenCahnResult r = solve_allen_cahn(spec.epsilon, options);
    out.change = r.refinement_change;
    out.levels = std::to_string(options.n_x) + "x" + std::to_string(options.n_t) + " vs " +
                 std::to_string(2 * options.n_x) + "x" + std::to_string(2 * options.n_t) + " (space x time)";
    out.space_time = std::make_shared<SpaceTimeSolution>(std::move(r.solution));
  } else {
    throw ConfigError("no oracle for problem '" + spec.name + "'");
  }
  return out;
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

double relative_l2(std::span<const double> exact, std::span<const double> predicted) {
  if (exact.size() != predicted.size())
    throw ShapeError("relative_l2: lengths " + std::to_string(exact.size()) + " and " +
                     std::to_string(predicted.size()));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = exact[i] - predicted[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) throw NumericError("relative_l2 undefined for an all-zero exact field");
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------- references

Reference exact_reference(const ProblemSpec& spec) {
  if (!spec.has_exact()) throw StateError("problem '" + spec.name + "' has no closed-form solution");
  Reference r;
  r.source = "exact";
  auto exact = spec.exact;
  r.value = [exact](std::span<const double> p, std::size_t f) { return exact(p, f, JetSlot::U); };
  return r;
}

Reference compute_oracle_reference(const ProblemSpec& spec) {
  OracleSolution sol = run_oracle(spec);
  if (sol.grid) return grid_reference(std::move(sol.grid), "oracle", sol.change, sol.levels);
  return space_time_reference(std::move(sol.space_time), "oracle", sol.change, sol.levels);
}

std::filesystem::path oracle_cache_path(const ProblemSpec& spec, const std::filesystem::path& dir) {
  return dir / (spec.name + "_eps_" + number_tag(spec.epsilon) + ".csv");
}

std::filesystem::path write_oracle_cache(const ProblemSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = oracle_cache_path(spec, dir);
  const OracleSolution sol = run_oracle(spec);
  if (sol.grid)
    write_csv(*sol.grid, path);
  else
    write_csv(*sol.space_time, path);
  return path;
}

Reference load_reference(const ProblemSpec& spec, const std::filesystem::path& oracle_dir) {
  if (spec.has_exact()) return exact_reference(spec);
  const auto path = oracle_cache_path(spec, oracle_dir);
  if (!std::filesystem::exists(path))
    throw StateError("no reference solution for '" + spec.name + "' at " + path.string() +
                     "; run `wavesolve oracle --problem " + spec.name + "` first");
  const std::string source = "oracle:" + path.filename().string();
  if (spec.dim() == 1) return grid_reference(std::make_shared<GridSolution>(read_grid_csv(path)), source, 0.0);
  return space_time_reference(std::make_shared<SpaceTimeSolution>(read_space_time_csv(path)), source, 0.0);
}

// -------------------------------------------------------------------- models

TrainedModel rebuild_model(const TrainConfig& config, CoefficientNet net) {
  const ProblemSpec spec = get_problem(config.problem, config.epsilon);
  TrainedModel m{config, std::move(net), family_for(config, spec), sobol_points(spec.dim(), config.interior, spec.geometry.box)};
  if (m.net.shape().coeffs_per_field != m.family.size() || m.net.shape().fields != spec.fields)
    throw ConfigError("network snapshot does not match the configured wavelet family");
  return m;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  json j;
  j["format"] = "wavesolve-model";
  j["version"] = 1;
  j["config"] = json::parse(config_json(model.config));
  j["network"] = json::parse(snapshot_json(model.net));
  write_text(path, j.dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "wavesolve-model") throw IoError(path.string() + ": not a model file");
  return rebuild_model(config_from_json(j.at("config").dump()), snapshot_from_json(j.at("network").dump()));
}

PointSet default_evaluation_grid(const ProblemSpec& spec) {
  std::vector<std::size_t> res(spec.dim(), spec.dim() == 1 ? 1000 : 101);
  PointSet g = uniform_grid(spec.geometry.box, res);
  g.role = PointRole::Evaluation;
  return g;
}

Evaluation evaluate(const ProblemSpec& spec, TrainedModel& model, const PointSet& grid, const Reference& reference) {
  if (!reference.value) throw StateError("evaluation needs a reference solution");
  const NetOutput out = model.net.forward_points(model.interior);
  const MultiOrder zero{};
  const BasisMatrices blocks = assemble(model.family, grid, std::span<const MultiOrder>(&zero, 1));
  Evaluation ev;
  ev.grid = grid;
  const auto n = static_cast<Eigen::Index>(grid.size());
  ev.exact.resize(n, static_cast<Eigen::Index>(spec.fields));
  ev.predicted.resize(n, static_cast<Eigen::Index>(spec.fields));
  for (std::size_t f = 0; f < spec.fields; ++f) {
    const auto col = static_cast<Eigen::Index>(f);
    ev.predicted.col(col) = reconstruct(blocks, out.coefficients.col(col), out.biases[f], zero);
    for (Eigen::Index i = 0; i < n; ++i) ev.exact(i, col) = reference.value(grid.point(static_cast<std::size_t>(i)), f);
    ev.errors.push_back(relative_l2({ev.exact.col(col).data(), grid.size()}, {ev.predicted.col(col).data(), grid.size()}));
  }
  return ev;
}

// ------------------------------------------------------------------ protocol

std::size_t worker_limit() {
  if (const char* env = std::getenv("WAVESOLVE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

AggregateReport run_protocol(const TrainConfig& config, std::span<const std::uint64_t> seeds,
                             const Reference& reference, const ProtocolOptions& options) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  const ProblemSpec spec = get_problem(config.problem, config.epsilon);
  validate(config, spec);
  const WaveletFamily family = family_for(config, spec);
  const TrainingData data = prepare_training_data(spec, family, config.interior, config.boundary, config.initial);
  const Eigen::MatrixXd scale = coefficient_scaling(config.scaling, spec, data);
  const PointSet grid = default_evaluation_grid(spec);

  AggregateReport rep;
  rep.config = config;
  rep.problem = spec.name;
  rep.epsilon = spec.epsilon;
  rep.field_names = spec.field_names;
  rep.reference = reference.source;
  rep.family_size = family.size();
  rep.runs.resize(seeds.size());
  std::vector<std::optional<Evaluation>> evals(seeds.size());
  std::vector<std::optional<TrainedModel>> models(seeds.size());

  std::mutex progress_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s; (s = next.fetch_add(1)) < seeds.size();) {
      RunReport& run = rep.runs[s];
      run.seed = seeds[s];
      TrainConfig cfg = config;
      cfg.seed = seeds[s];
      try {
        ProgressCallback cb;
        if (options.progress)
          cb = [&, seed = seeds[s]](const LossRecord& r) {
            std::lock_guard lock(progress_mutex);
            options.progress(seed, r);
          };
        TrainResult tr = train_prepared(cfg, spec, data, make_network(cfg, spec, data, scale), cb);
        run.final_loss = tr.final_loss;
        run.iterations_run = tr.iterations_run;
        run.history = std::move(tr.history);
        run.seconds = tr.seconds;
        if (tr.aborted) {
          run.failed = true;
          run.diagnostic = tr.diagnostic;
          continue;
        }
        TrainedModel model{cfg, std::move(tr.net), family, data.interior};
        Evaluation ev = evaluate(spec, model, grid, reference);
        run.errors = ev.errors;
        if (std::any_of(ev.errors.begin(), ev.errors.end(), [](double e) { return !std::isfinite(e); })) {
          run.failed = true;
          run.diagnostic = "non-finite evaluation error";
          continue;
        }
        evals[s] = std::move(ev);
        if (options.keep_model) models[s] = std::move(model);
      } catch (const Error& e) {
        run.failed = true;
        run.diagnostic = e.what();
      }
    }
  };
  const std::size_t n_workers =
      std::min(seeds.size(), options.threads > 0 ? options.threads : worker_limit());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  rep.mean.assign(spec.fields, 0.0);
  rep.stddev.assign(spec.fields, 0.0);
  double seconds = 0.0;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    seconds += rep.runs[s].seconds;
    if (rep.runs[s].failed) {
      rep.flagged = true;
      continue;
    }
    ++rep.survivors;
    for (std::size_t f = 0; f < spec.fields; ++f) rep.mean[f] += rep.runs[s].errors[f];
    if (!rep.sample) {
      rep.sample = std::move(evals[s]);
      if (options.keep_model) rep.sample_model = std::move(models[s]);
    }
  }
  rep.mean_seconds = seconds / static_cast<double>(seeds.size());
  for (std::size_t f = 0; f < spec.fields; ++f) {
    if (rep.survivors == 0) {
      rep.mean[f] = rep.stddev[f] = kNan;
      continue;
    }
    rep.mean[f] /= static_cast<double>(rep.survivors);
    double ss = 0.0;
    for (const RunReport& r : rep.runs)
      if (!r.failed) ss += (r.errors[f] - rep.mean[f]) * (r.errors[f] - rep.mean[f]);
    rep.stddev[f] = rep.survivors > 1 ? std::sqrt(ss / static_cast<double>(rep.survivors - 1)) : 0.0;
  }
  return rep;
}

// --------------------------------------------------------------------- sweep

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Resolution:
      return "resolution";
    case SweepAxis::Collocation:
      return "collocation";
    case SweepAxis::Architecture:
      return "architecture";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "resolution" || name == "J") return SweepAxis::Resolution;
  if (name == "collocation" || name == "N") return SweepAxis::Collocation;
  if (name == "architecture") return SweepAxis::Architecture;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "' (resolution, collocation, architecture)");
}

namespace {

std::size_t parse_count(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v <= 0) throw ConfigError(std::string("invalid ") + what + " '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

TrainConfig apply_sweep_value(const TrainConfig& base, SweepAxis axis, const std::string& value) {
  TrainConfig c = base;
  switch (axis) {
    case SweepAxis::Resolution: {
      std::size_t pos = 0;
      int j = 0;
      try {
        j = std::stoi(value, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != value.size()) throw ConfigError("invalid resolution level '" + value + "'");
      if (c.resolutions.empty()) {
        const ProblemSpec spec = get_problem(c.problem, c.epsilon);
        const auto& preset = c.wavelet == MotherKind::Gaussian ? spec.preset.gaussian : spec.preset.mexican;
        c.resolutions.assign(preset.begin(), preset.begin() + static_cast<std::ptrdiff_t>(spec.dim()));
      }
      for (ResolutionRange& r : c.resolutions) {
        if (j < r.jmin) throw ConfigError("resolution level " + value + " is below the lower bound");
        r.jmax = j;
      }
      break;
    }
    case SweepAxis::Collocation:
      c.interior = parse_count(value, "collocation count");
      break;
    case SweepAxis::Architecture: {
      const auto x = value.find('x');
      if (x == std::string::npos) throw ConfigError("architecture must be DEPTHxWIDTH, got '" + value + "'");
      c.hidden_layers = parse_count(value.substr(0, x), "depth");
      c.width = parse_count(value.substr(x + 1), "width");
      break;
    }
  }
  return c;
}

SweepTable sweep(const TrainConfig& base, SweepAxis axis, std::span<const std::string> values,
                 std::span<const std::uint64_t> seeds, const Reference& reference, const ProtocolOptions& options) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  SweepTable table;
  table.axis = axis;
  table.field_names = get_problem(base.problem, base.epsilon).field_names;
  ProtocolOptions opts = options;
  opts.keep_model = false;
  for (const std::string& v : values) {
    SweepRow row;
    row.value = v;
    try {
      const AggregateReport rep = run_protocol(apply_sweep_value(base, axis, v), seeds, reference, opts);
      row.mean = rep.mean;
      row.stddev = rep.stddev;
      row.survivors = rep.survivors;
      if (rep.survivors == 0) row.error = "all seeds failed: " + rep.runs.front().diagnostic;
    } catch (const Error& e) {
      row.error = e.what();
    }
    if (row.mean.empty()) {
      row.mean.assign(table.field_names.size(), kNan);
      row.stddev.assign(table.field_names.size(), kNan);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ------------------------------------------------------------------- output

std::string config_json(const TrainConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  j["wavelet"] = std::string(to_string(c.wavelet));
  json res = json::array();
  for (const ResolutionRange& r : c.resolutions) res.push_back(json::array({r.jmin, r.jmax}));
  j["resolutions"] = res;
  j["hidden_layers"] = c.hidden_layers;
  j["width"] = c.width;
  j["encoder_width"] = c.encoder_width;
  j["activation"] = std::string(to_string(c.activation));
  j["interior"] = c.interior;
  j["boundary"] = c.boundary;
  j["initial"] = c.initial;
  j["iterations"] = c.iterations;
  j["lr"] = c.adam.lr;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["adam_epsilon"] = c.adam.epsilon;
  j["decay_factor"] = c.decay_factor;
  j["decay_every"] = c.decay_every;
  j["seed"] = c.seed;
  j["weights"] = json{{"residual", c.weights.residual}, {"ic", c.weights.ic}, {"bc", c.weights.bc}};
  j["scaling"] = std::string(to_string(c.scaling));
  j["history_stride"] = c.history_stride;
  j["loss_floor"] = c.loss_floor;
  j["keep_best"] = c.keep_best;
  return j.dump();
}

TrainConfig config_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    TrainConfig c;
    c.problem = j.at("problem").get<std::string>();
    if (!j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
    c.wavelet = parse_mother_kind(j.at("wavelet").get<std::string>());
    for (const json& r : j.at("resolutions")) c.resolutions.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.encoder_width = j.at("encoder_width").get<std::size_t>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.interior = j.at("interior").get<std::size_t>();
    c.boundary = j.at("boundary").get<std::size_t>();
    c.initial = j.at("initial").get<std::size_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.adam.lr = j.at("lr").get<double>();
    c.adam.beta1 = j.at("beta1").get<double>();
    c.adam.beta2 = j.at("beta2").get<double>();
    c.adam.epsilon = j.at("adam_epsilon").get<double>();
    c.decay_factor = j.at("decay_factor").get<double>();
    c.decay_every = j.at("decay_every").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const json& w = j.at("weights");
    c.weights = {w.at("residual").get<double>(), w.at("ic").get<double>(), w.at("bc").get<double>()};
    c.scaling = parse_coefficient_scaling(j.at("scaling").get<std::string>());
    c.history_stride = j.at("history_stride").get<std::size_t>();
    c.loss_floor = j.at("loss_floor").get<double>();
    c.keep_best = j.at("keep_best").get<bool>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
}

std::string report_json(const AggregateReport& r) {
  json j;
  j["config"] = json::parse(config_json(r.config));
  j["problem"] = r.problem;
  j["epsilon"] = r.epsilon;
  j["fields"] = r.field_names;
  j["reference"] = r.reference;
  j["family_size"] = r.family_size;
  j["mean"] = reals(r.mean);
  j["stddev"] = reals(r.stddev);
  j["survivors"] = r.survivors;
  j["flagged"] = r.flagged;
  j["timing"] = "wall-clock of the training loop only, per seed in timing.json";
  json runs = json::array();
  for (const RunReport& run : r.runs) {
    json jr;
    jr["seed"] = run.seed;
    jr["failed"] = run.failed;
    jr["diagnostic"] = run.diagnostic;
    jr["errors"] = reals(run.errors);
    jr["final_loss"] = loss_json(run.final_loss);
    jr["iterations_run"] = run.iterations_run;
    jr["history"] = "loss.csv";
    jr["history_records"] = run.history.size();
    runs.push_back(jr);
  }
  j["runs"] = runs;
  return j.dump(1) + "\n";
}

void emit(const AggregateReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_json(report));

  std::string csv = "seed,iteration,residual,ic,bc,total\n";
  for (const RunReport& run : report.runs)
    for (const LossRecord& rec : run.history)
      csv += std::to_string(run.seed) + "," + std::to_string(rec.iteration) + "," + format_real(rec.loss.residual) +
             "," + format_real(rec.loss.ic) + "," + format_real(rec.loss.bc) + "," + format_real(rec.loss.total) +
             "\n";
  write_text(dir / "loss.csv", csv);

  json timing;
  timing["scope"] = "training loop only";
  json per = json::array();
  for (const RunReport& run : report.runs) per.push_back(json{{"seed", run.seed}, {"seconds", run.seconds}});
  timing["runs"] = per;
  timing["mean_seconds"] = report.mean_seconds;
  write_text(dir / "timing.json", timing.dump(1) + "\n");

  if (report.sample) {
    const Evaluation& ev = *report.sample;
    const ProblemSpec spec = get_problem(report.config.problem, report.config.epsilon);
    std::string out;
    const auto names = axis_names(spec);
    for (std::size_t d = 0; d < names.size(); ++d) out += (d ? "," : "") + names[d];
    for (const std::string& f : report.field_names) out += "," + f + "_exact," + f + "_predicted," + f + "_abs_error";
    out += "\n";
    const Eigen::MatrixXd err = ev.abs_error();
    for (std::size_t i = 0; i < ev.grid.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t d = 0; d < ev.grid.dim; ++d) out += (d ? "," : "") + format_real(ev.grid.coord(i, d));
      for (Eigen::Index f = 0; f < ev.exact.cols(); ++f)
        out += "," + format_real(ev.exact(row, f)) + "," + format_real(ev.predicted(row, f)) + "," +
               format_real(err(row, f));
      out += "\n";
    }
    write_text(dir / "solution.csv", out);
  }
  if (report.sample_model) save_model(*report.sample_model, dir / "model.json");
}

void emit_sweep(const SweepTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string out = std::string(to_string(table.axis));
  for (const std::string& f : table.field_names) out += ",mean_" + f + ",std_" + f;
  out += ",survivors,error\n";
  for (const SweepRow& row : table.rows) {
    out += row.value;
    for (std::size_t f = 0; f < table.field_names.size(); ++f)
      out += "," + format_real(row.mean[f]) + "," + format_real(row.stddev[f]);
    std::string err = row.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out += "," + std::to_string(row.survivors) + ",\"" + err + "\"\n";
  }
  write_text(dir / "sweep.csv", out);
}

}  // namespace wavesolve
