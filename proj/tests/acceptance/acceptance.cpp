// Acceptance harness: one criterion per invocation, one PASS/FAIL line on
// stdout. Tolerances, budgets and run sizes are fixed here; outputs of the
// training criteria are written under --work-dir for inspection.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wavesolve/error.hpp"
#include "wavesolve/report.hpp"
#include "wavesolve/training.hpp"

namespace ws = wavesolve;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(note + (ok ? "" : " [fail]"));
  }
};

struct Context {
  fs::path work;
  fs::path cli;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double minutes_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
}

const std::vector<std::uint64_t> kFiveSeeds{1, 2, 3, 4, 5};

// ------------------------------------------------------------ criterion 1

constexpr double kGradientTolerance = 1e-4;
constexpr double kGradientStep = 1e-6;
constexpr double kGradientMinutes = 1.0;
constexpr std::size_t kMiniMaxFamily = 20;

ws::TrainConfig miniature(const std::string& problem) {
  ws::TrainConfig c;
  c.problem = problem;
  const ws::ProblemSpec spec = ws::get_problem(problem);
  if (spec.dim() == 1) {
    c.resolutions = {{0, 1}};
    c.interior = 24;
  } else {
    c.resolutions = {{-1, 0}, {-1, -1}};
    c.interior = 30;
    c.boundary = 8;
    c.initial = 6;
  }
  c.hidden_layers = 4;
  c.width = 8;
  c.encoder_width = 4;
  c.iterations = 0;
  return c;
}

struct GradientCheck {
  std::size_t parameters = 0;
  std::size_t resolvable = 0;  // parameters whose gradient exceeds the difference quotient's rounding floor
  double max_relative = 0.0;   // over resolvable parameters
  std::size_t violations = 0;
  std::size_t family = 0;
};

// Central differences of a loss L carry a rounding error of about
// eps_mach |L| / h; a parameter passes when the analytic and numerical
// derivatives agree to kGradientTolerance relative, up to that floor.
GradientCheck check_gradient(const std::string& problem) {
  const ws::TrainConfig c = miniature(problem);
  const ws::ProblemSpec spec = ws::get_problem(problem);
  const ws::TrainingData data = ws::prepare_training_data(spec, ws::family_for(c, spec), c.interior, c.boundary,
                                                          c.initial);
  if (data.family.size() > kMiniMaxFamily)
    throw ws::ConfigError("miniature family for " + problem + " has " + std::to_string(data.family.size()) +
                          " members");
  ws::CoefficientNet net = ws::make_network(c, spec, data, ws::coefficient_scaling(c.scaling, spec, data));
  ws::SplitMix64 rng(7);
  for (double& p : net.parameters()) p += 0.1 * (rng.uniform() - 0.5);

  auto total = [&] {
    const ws::NetOutput o = ws::network_output(net, data.interior);
    return ws::loss_and_coefficient_gradient(spec, data, o.coefficients, o.biases, c.weights, false).loss.total;
  };
  const ws::NetOutput o = ws::network_output(net, data.interior);
  const ws::LossGradient lg = ws::loss_and_coefficient_gradient(spec, data, o.coefficients, o.biases, c.weights);
  const Eigen::VectorXd g = net.backward(lg.d_coefficients, lg.d_biases);
  const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(lg.loss.total) / kGradientStep;

  GradientCheck out;
  out.family = data.family.size();
  out.parameters = static_cast<std::size_t>(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double& p = net.parameters()(i);
    const double keep = p;
    p = keep + kGradientStep;
    const double lp = total();
    p = keep - kGradientStep;
    const double lm = total();
    p = keep;
    const double fd = (lp - lm) / (2.0 * kGradientStep);
    const double size = std::max(std::abs(g(i)), std::abs(fd));
    const double diff = std::abs(g(i) - fd);
    if (diff > kGradientTolerance * size + noise) ++out.violations;
    if (kGradientTolerance * size > noise) {
      ++out.resolvable;
      out.max_relative = std::max(out.max_relative, diff / size);
    }
  }
  return out;
}

Outcome gradient_exactness(const Context&) {
  Outcome out;
  const auto start = Clock::now();
  for (const std::string problem : {"advdiff", "fhn", "heat2d"}) {
    const GradientCheck r = check_gradient(problem);
    out.require(r.violations == 0 && r.max_relative < kGradientTolerance,
                problem + " M=" + std::to_string(r.family) + " params=" + std::to_string(r.parameters) +
                    " resolvable=" + std::to_string(r.resolvable) + " max rel " + sci(r.max_relative) +
                    " violations=" + std::to_string(r.violations));
  }
  const double minutes = minutes_since(start);
  out.require(minutes < kGradientMinutes, "runtime " + sci(minutes * 60.0) + " s (< 60 s)");
  return out;
}

// ------------------------------------------------------------ criterion 2

constexpr double kAnnihilationTolerance = 1e-8;
constexpr std::size_t kAnnihilationPoints = 1000;

Outcome residual_annihilation(const Context&) {
  Outcome out;
  for (const std::string problem : {"advdiff", "nonlinear_ivp", "heat2d", "helmholtz", "maxwell_homog"}) {
    const ws::ProblemSpec spec = ws::get_problem(problem);
    ws::SplitMix64 rng(42);
    ws::PointSet pts;
    pts.dim = spec.dim();
    for (std::size_t i = 0; i < kAnnihilationPoints; ++i)
      for (const ws::Interval& iv : spec.geometry.box) pts.coords.push_back(iv.lo + iv.length() * rng.uniform());
    const ws::ResidualEval r = ws::residual_and_partials(spec, spec.exact_jets(pts), pts);
    // Residual relative to the largest term of its equation (at least 1).
    const double worst = (r.r.array().abs() / r.scale.array().max(1.0)).maxCoeff();
    out.require(worst < kAnnihilationTolerance, problem + " max scaled |r| " + sci(worst));
  }
  return out;
}

// ------------------------------------------------------ training criteria

struct RunPlan {
  std::string problem;
  std::optional<double> epsilon;
  std::size_t iterations;  // 0: preset
  std::vector<std::uint64_t> seeds = kFiveSeeds;
  std::size_t interior = 0;  // 0: preset
};

ws::TrainConfig plan_config(const RunPlan& plan) {
  ws::TrainConfig c = ws::TrainConfig::from_preset(plan.problem, plan.epsilon);
  if (plan.iterations) {
    // shortened runs keep the preset's number of decay steps
    c.decay_every = std::max<std::size_t>(1, c.decay_every * plan.iterations / c.iterations);
    c.iterations = plan.iterations;
  }
  if (plan.interior) c.interior = plan.interior;
  c.history_stride = 10;
  return c;
}

ws::AggregateReport run_plan(const RunPlan& plan, const ws::Reference& ref, const fs::path& dir) {
  ws::ProtocolOptions opts;
  opts.keep_model = true;
  opts.progress = [](std::uint64_t seed, const ws::LossRecord& r) {
    if (r.iteration % 2000 == 0)
      std::cerr << "  seed " << seed << " iter " << r.iteration << " loss " << sci(r.loss.total) << "\n";
  };
  ws::AggregateReport rep = ws::run_protocol(plan_config(plan), plan.seeds, ref, opts);
  ws::emit(rep, dir);
  return rep;
}

void require_clean_runs(Outcome& out, const ws::AggregateReport& rep) {
  bool finite = true;
  for (const ws::RunReport& run : rep.runs)
    for (const ws::LossRecord& rec : run.history)
      finite = finite && std::isfinite(rec.loss.total) && std::isfinite(rec.loss.residual) &&
               std::isfinite(rec.loss.ic) && std::isfinite(rec.loss.bc);
  out.require(finite, "loss histories finite");
  out.require(rep.survivors == rep.runs.size(),
              "survivors " + std::to_string(rep.survivors) + "/" + std::to_string(rep.runs.size()));
}

std::string plan_note(const RunPlan& plan, const ws::AggregateReport& rep) {
  return std::to_string(plan.seeds.size()) + " seeds x " + std::to_string(rep.config.iterations) + " iters, N=" +
         std::to_string(rep.config.interior) + ", M=" + std::to_string(rep.family_size);
}

void require_field_errors(Outcome& out, const ws::AggregateReport& rep, const std::vector<double>& tolerance,
                          const std::string& prefix = "") {
  for (std::size_t f = 0; f < rep.field_names.size(); ++f)
    out.require(rep.mean[f] <= tolerance[f], prefix + rep.field_names[f] + " mean " + sci(rep.mean[f]) + " +- " +
                                                 sci(rep.stddev[f]) + " (<= " + sci(tolerance[f]) + ")");
}

void require_budget(Outcome& out, Clock::time_point start, double budget_minutes, const std::string& what = "") {
  const double minutes = minutes_since(start);
  out.require(minutes <= budget_minutes,
              what + "wall " + sci(minutes) + " min (<= " + sci(budget_minutes) + ")");
}

void note_oracle(Outcome& out, const ws::Reference& ref) {
  out.notes.push_back("oracle " + ref.refinement_levels + ", change " + sci(ref.refinement_change));
}

// criterion 3

constexpr double kAdvdiffBudgetMinutes = 15.0;

Outcome advdiff_table(const Context& ctx) {
  Outcome out;
  const struct {
    int exponent;
    double tolerance;
  } cases[] = {{4, 2.5e-4}, {7, 5.3e-3}, {10, 3.1e-2}};
  for (const auto& cs : cases) {
    const auto start = Clock::now();
    const RunPlan plan{"advdiff", std::ldexp(1.0, -cs.exponent), 0};
    const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
    const std::string tag = "eps=2^-" + std::to_string(cs.exponent);
    const ws::AggregateReport rep =
        run_plan(plan, ws::exact_reference(spec), ctx.work / "criterion_03" / ("eps_2m" + std::to_string(cs.exponent)));
    out.notes.push_back(tag + ": " + plan_note(plan, rep));
    require_clean_runs(out, rep);
    require_field_errors(out, rep, {cs.tolerance}, tag + " ");
    require_budget(out, start, kAdvdiffBudgetMinutes, tag + " ");
  }
  return out;
}

// criterion 4

Outcome nonlinear_ivp_table(const Context& ctx) {
  Outcome out;
  const auto start = Clock::now();
  const RunPlan plan{"nonlinear_ivp", 0x1p-10, 5000};
  const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
  const ws::AggregateReport rep = run_plan(plan, ws::exact_reference(spec), ctx.work / "criterion_04");
  out.notes.push_back(plan_note(plan, rep));
  require_clean_runs(out, rep);
  require_field_errors(out, rep, {1e-3});
  require_budget(out, start, 30.0);
  return out;
}

// criterion 5

Outcome neumann_bvp_table(const Context& ctx) {
  Outcome out;
  const auto start = Clock::now();
  const RunPlan plan{"neumann_bvp", 0x1p-10, 5000};
  const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
  const ws::Reference ref = ws::compute_oracle_reference(spec);
  note_oracle(out, ref);
  const ws::AggregateReport rep = run_plan(plan, ref, ctx.work / "criterion_05");
  out.notes.push_back(plan_note(plan, rep));
  require_clean_runs(out, rep);
  require_field_errors(out, rep, {1e-3});
  require_budget(out, start, 20.0);
  return out;
}

// criterion 6

constexpr double kLayerTolerance = 5e-2;

Outcome fhn_stiff(const Context& ctx) {
  Outcome out;
  const auto start = Clock::now();
  const double tau = 0x1p-10;
  const RunPlan plan{"fhn", tau, 3000};
  const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
  const ws::Reference ref = ws::compute_oracle_reference(spec);
  note_oracle(out, ref);
  ws::AggregateReport rep = run_plan(plan, ref, ctx.work / "criterion_06");
  out.notes.push_back(plan_note(plan, rep));
  require_clean_runs(out, rep);
  require_field_errors(out, rep, {5e-3, 1e-2});
  if (rep.sample_model) {
    ws::PointSet probe;
    probe.dim = 1;
    probe.role = ws::PointRole::Evaluation;
    probe.coords = {5.0 * tau};
    const ws::Evaluation ev = ws::evaluate(spec, *rep.sample_model, probe, ref);
    const auto w = static_cast<Eigen::Index>(
        std::find(spec.field_names.begin(), spec.field_names.end(), "w") - spec.field_names.begin());
    const double gap = std::abs(ev.predicted(0, w) - ev.exact(0, w));
    out.require(gap <= kLayerTolerance, "seed " + std::to_string(rep.sample_model->config.seed) + " w(5 tau) " +
                                            sci(ev.predicted(0, w)) + " vs oracle " + sci(ev.exact(0, w)) +
                                            " (gap <= " + sci(kLayerTolerance) + ")");
  } else {
    out.require(false, "no surviving model for the initial-layer probe");
  }
  require_budget(out, start, 30.0);
  return out;
}

// criteria 7-9

Outcome closed_form_2d(const Context& ctx, const std::string& dir, const RunPlan& plan,
                       const std::vector<double>& tolerance, double budget_minutes) {
  Outcome out;
  const auto start = Clock::now();
  const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
  const ws::AggregateReport rep = run_plan(plan, ws::exact_reference(spec), ctx.work / dir);
  out.notes.push_back(plan_note(plan, rep));
  require_clean_runs(out, rep);
  require_field_errors(out, rep, tolerance);
  require_budget(out, start, budget_minutes);
  return out;
}

Outcome heat_conduction(const Context& ctx) {
  return closed_form_2d(ctx, "criterion_07", {"heat2d", 0.15, 3000}, {5e-3}, 45.0);
}

Outcome helmholtz(const Context& ctx) {
  return closed_form_2d(ctx, "criterion_08", {"helmholtz", std::nullopt, 1500}, {5e-3}, 45.0);
}

Outcome maxwell(const Context& ctx) {
  return closed_form_2d(ctx, "criterion_09", {"maxwell_homog", std::nullopt, 2200}, {1e-2, 1e-2}, 45.0);
}

// criterion 10

Outcome allen_cahn(const Context& ctx) {
  Outcome out;
  const auto start = Clock::now();
  const RunPlan plan{"allen_cahn", 1e-4, 800};
  const ws::ProblemSpec spec = ws::get_problem(plan.problem, plan.epsilon);
  const ws::Reference ref = ws::compute_oracle_reference(spec);
  note_oracle(out, ref);
  const ws::AggregateReport rep = run_plan(plan, ref, ctx.work / "criterion_10");
  out.notes.push_back(plan_note(plan, rep));
  require_clean_runs(out, rep);
  ws::LossBreakdown mean;
  std::size_t n = 0;
  for (const ws::RunReport& run : rep.runs) {
    if (run.failed) continue;
    mean.residual += run.final_loss.residual;
    mean.bc += run.final_loss.bc;
    mean.ic += run.final_loss.ic;
    ++n;
  }
  if (n) {
    mean.residual /= static_cast<double>(n);
    mean.bc /= static_cast<double>(n);
    mean.ic /= static_cast<double>(n);
  }
  out.require(n > 0 && mean.residual <= 1e-3, "mean final residual loss " + sci(mean.residual) + " (<= 1e-3)");
  out.require(n > 0 && mean.bc <= 1e-6, "mean periodic-condition MSE " + sci(mean.bc) + " (<= 1e-6)");
  out.require(n > 0 && mean.ic <= 1e-6, "mean initial-condition MSE " + sci(mean.ic) + " (<= 1e-6)");
  require_field_errors(out, rep, {0.1}, "vs oracle ");
  require_budget(out, start, 60.0);
  return out;
}

// criterion 11

constexpr double kUShapeFactor = 5.0;

Outcome hyperparameter_trends(const Context& ctx) {
  Outcome out;
  const auto start = Clock::now();
  ws::TrainConfig base = ws::TrainConfig::from_preset("nonlinear_ivp", 0x1p-10);
  base.iterations = 2000;
  base.history_stride = 10;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const ws::Reference ref = ws::exact_reference(ws::get_problem("nonlinear_ivp", 0x1p-10));
  ws::ProtocolOptions opts;

  const std::vector<std::string> levels{"2", "4", "6", "8", "10", "12"};
  const ws::SweepTable res = ws::sweep(base, ws::SweepAxis::Resolution, levels, seeds, ref, opts);
  ws::emit_sweep(res, ctx.work / "criterion_11" / "resolution");
  std::string row_note = "resolution";
  std::size_t best = 0;
  bool complete = true;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const double e = res.rows[i].mean[0];
    row_note += " J=" + res.rows[i].value + ":" + sci(e);
    complete = complete && std::isfinite(e);
    if (e < res.rows[best].mean[0]) best = i;
  }
  out.notes.push_back(row_note);
  const double e_min = res.rows[best].mean[0];
  out.require(complete && res.rows.front().mean[0] >= kUShapeFactor * e_min &&
                  res.rows.back().mean[0] >= kUShapeFactor * e_min,
              "U-shape: J=" + res.rows.front().value + " and J=" + res.rows.back().value + " vs minimum at J=" +
                  res.rows[best].value + " (factor >= 5)");

  const std::vector<std::string> counts{"1000", "2500", "5000", "10000"};
  const ws::SweepTable col = ws::sweep(base, ws::SweepAxis::Collocation, counts, seeds, ref, opts);
  ws::emit_sweep(col, ctx.work / "criterion_11" / "collocation");
  row_note = "collocation";
  bool within = true;
  double envelope = std::numeric_limits<double>::infinity();
  for (const ws::SweepRow& row : col.rows) {
    const double e = row.mean[0];
    row_note += " N=" + row.value + ":" + sci(e) + "+-" + sci(row.stddev[0]);
    envelope = std::min(envelope, e);
    within = within && std::isfinite(e) && e <= envelope + 2.0 * row.stddev[0];
  }
  out.notes.push_back(row_note);
  // The running minimum is the tightest non-increasing envelope below the means.
  out.require(within, "collocation means within 2 std of the non-increasing envelope");
  require_budget(out, start, 120.0);
  return out;
}

// criterion 12

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ws::IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Context& ctx) {
  Outcome out;
  if (ctx.cli.empty()) throw ws::ConfigError("--cli is required for criterion 12");
  const fs::path dir = ctx.work / "criterion_12";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + ctx.cli.string() + "\" solve --problem advdiff --iters 5000 --out \"" +
                            (dir / run).string() + "\" > \"" + (dir / (std::string(run) + ".log")).string() + "\"";
    const int rc = std::system(cmd.c_str());
    out.require(rc == 0, std::string("invocation ") + run + " exit " + std::to_string(rc));
  }
  for (const char* file : {"report.json", "solution.csv", "loss.csv"}) {
    const std::string a = slurp(dir / "a" / file), b = slurp(dir / "b" / file);
    out.require(!a.empty() && a == b, std::string(file) + " " + std::to_string(a.size()) + " bytes identical");
  }
  return out;
}

using Criterion = std::function<Outcome(const Context&)>;

const std::vector<std::pair<std::string, Criterion>>& criteria() {
  static const std::vector<std::pair<std::string, Criterion>> list{
      {"gradient exactness", gradient_exactness},
      {"residual annihilation", residual_annihilation},
      {"advdiff error table", advdiff_table},
      {"nonlinear_ivp eps=2^-10", nonlinear_ivp_table},
      {"neumann_bvp eps=2^-10 vs oracle", neumann_bvp_table},
      {"fhn tau=2^-10 vs oracle", fhn_stiff},
      {"heat2d eps=0.15", heat_conduction},
      {"helmholtz", helmholtz},
      {"maxwell_homog", maxwell},
      {"allen_cahn eps=1e-4", allen_cahn},
      {"nonlinear_ivp sweep trends", hyperparameter_trends},
      {"solve determinism", determinism},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavesolve acceptance criteria"};
  int number = 0;
  Context ctx;
  ctx.work = "acceptance_work";
  app.add_option("--criterion", number, "criterion number")->required()->check(CLI::Range(1, 12));
  app.add_option("--work-dir", ctx.work, "directory for run outputs")->capture_default_str();
  app.add_option("--cli", ctx.cli, "wavesolve executable (criterion 12)");
  CLI11_PARSE(app, argc, argv);

  const auto& [name, run] = criteria()[static_cast<std::size_t>(number - 1)];
  char label[64];
  std::snprintf(label, sizeof label, "criterion %02d %s", number, name.c_str());
  Outcome outcome;
  try {
    fs::create_directories(ctx.work);
    outcome = run(ctx);
  } catch (const std::exception& e) {
    outcome.pass = false;
    outcome.notes.push_back(std::string("error: ") + e.what());
  }
  std::ostringstream line;
  line << label << ": " << (outcome.pass ? "PASS" : "FAIL");
  for (std::size_t i = 0; i < outcome.notes.size(); ++i) line << (i ? "; " : " | ") << outcome.notes[i];
  std::cout << line.str() << std::endl;
  return outcome.pass ? 0 : 1;
}
