#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wavesolve/error.hpp"
#include "wavesolve/report.hpp"

using namespace wavesolve;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TrainConfig tiny(const std::string& problem = "advdiff") {
  TrainConfig c = TrainConfig::from_preset(problem);
  const ProblemSpec spec = get_problem(problem);
  c.resolutions.assign(spec.dim(), ResolutionRange{0, 2});
  c.hidden_layers = 2;
  c.width = 10;
  c.interior = spec.dim() == 1 ? 40 : 50;
  c.boundary = spec.dim() == 1 ? 0 : 8;
  c.initial = spec.dim() == 1 ? 0 : 6;
  c.iterations = 30;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("wavesolve_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("relative L2") {
  const std::vector<double> u{1.0, -2.0, 3.0};
  CHECK(relative_l2(u, u) == 0.0);
  const std::vector<double> twice{2.0, -4.0, 6.0};
  CHECK(relative_l2(u, twice) == 1.0);
  const std::vector<double> a{1.0, 1.0}, b{1.0, 0.0};
  CHECK(relative_l2(a, b) == doctest::Approx(0.70710678).epsilon(1e-8));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(relative_l2(zero, b), NumericError);
  CHECK_THROWS_AS(relative_l2(u, a), ShapeError);
}

TEST_CASE("evaluation") {
  const ProblemSpec spec = get_problem("helmholtz");
  const PointSet grid = default_evaluation_grid(spec);
  CHECK(grid.size() == 101 * 101);
  CHECK(grid.coord(0, 0) == -1.0);
  CHECK(grid.coord(grid.size() - 1, 1) == 1.0);

  const TrainConfig c = tiny();
  const TrainResult r = train(c);
  TrainedModel model{c, r.net, r.family, r.interior};
  const ProblemSpec adv = get_problem("advdiff");
  const Evaluation ev = evaluate(adv, model, default_evaluation_grid(adv), exact_reference(adv));
  REQUIRE(ev.errors.size() == 1);
  const Eigen::MatrixXd err = ev.abs_error();
  const double rms = std::sqrt(err.squaredNorm() / static_cast<double>(err.size()));
  CHECK(err.maxCoeff() >= rms);

  // a reference equal to the reconstruction gives zero error
  const auto predicted = std::make_shared<Evaluation>(ev);
  Reference self;
  self.source = "self";
  self.value = [predicted](std::span<const double> p, std::size_t f) {
    const double x = p[0];
    const std::size_t i = static_cast<std::size_t>(std::llround(x * 999.0));
    return predicted->predicted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
  };
  CHECK(evaluate(adv, model, default_evaluation_grid(adv), self).errors[0] == 0.0);

  // saved model re-evaluates identically
  const auto dir = scratch("model");
  std::filesystem::create_directories(dir);
  save_model(model, dir / "model.json");
  TrainedModel back = load_model(dir / "model.json");
  CHECK(evaluate(adv, back, default_evaluation_grid(adv), exact_reference(adv)).errors == ev.errors);
  std::filesystem::remove_all(dir);
}

TEST_CASE("references") {
  const ProblemSpec spec = get_problem("neumann_bvp");
  const auto dir = scratch("oracle_missing");
  try {
    load_reference(spec, dir);
    FAIL("expected a missing-reference error");
  } catch (const StateError& e) {
    CHECK(std::string(e.what()).find("oracle") != std::string::npos);
  }
  CHECK(load_reference(get_problem("advdiff"), dir).source == "exact");
}

TEST_CASE("configuration JSON round-trip") {
  TrainConfig c = tiny("heat2d");
  c.epsilon = 0.2;
  c.keep_best = true;
  c.adam.lr = 0.00123;
  const std::string text = config_json(c);
  CHECK(config_json(config_from_json(text)) == text);
  CHECK_THROWS_AS(config_from_json("{}"), ConfigError);
}

TEST_CASE("protocol") {
  const TrainConfig c = tiny();
  const Reference ref = exact_reference(get_problem("advdiff"));
  SUBCASE("repeated seed has zero spread") {
    const std::vector<std::uint64_t> seeds{3, 3};
    const AggregateReport rep = run_protocol(c, seeds, ref);
    CHECK(rep.survivors == 2);
    CHECK(rep.stddev[0] == 0.0);
    CHECK(rep.runs[0].errors == rep.runs[1].errors);
  }
  SUBCASE("statistics are recomputable from the runs") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const AggregateReport rep = run_protocol(c, seeds, ref, {2, false, {}});
    double mean = 0.0;
    for (const RunReport& r : rep.runs) mean += r.errors[0] / 3.0;
    double ss = 0.0;
    for (const RunReport& r : rep.runs) ss += (r.errors[0] - mean) * (r.errors[0] - mean);
    CHECK(rep.mean[0] == doctest::Approx(mean).epsilon(1e-14));
    CHECK(rep.stddev[0] == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-12));
    CHECK(rep.runs[0].seed == 1);
    CHECK(rep.runs[2].seed == 3);
    // concurrency does not change results
    const AggregateReport serial = run_protocol(c, seeds, ref, {1, false, {}});
    CHECK(report_json(serial) == report_json(rep));
  }
  SUBCASE("failed seeds are flagged and excluded") {
    TrainConfig bad = c;
    bad.adam.lr = 1e300;
    bad.iterations = 5;
    const std::vector<std::uint64_t> seeds{1};
    const AggregateReport rep = run_protocol(bad, seeds, ref);
    CHECK(rep.flagged);
    CHECK(rep.survivors == 0);
    CHECK(rep.runs[0].failed);
    CHECK(!rep.runs[0].diagnostic.empty());
  }
  SUBCASE("single-value sweep reduces to the protocol") {
    const std::vector<std::uint64_t> seeds{1, 2};
    const std::vector<std::string> values{"40"};
    const SweepTable t = sweep(c, SweepAxis::Collocation, values, seeds, ref);
    const AggregateReport rep = run_protocol(c, seeds, ref);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].mean == rep.mean);
    CHECK(t.rows[0].stddev == rep.stddev);
  }
  SUBCASE("sweep cells fail independently") {
    const std::vector<std::uint64_t> seeds{1};
    const std::vector<std::string> values{"-7", "2"};
    const SweepTable t = sweep(c, SweepAxis::Resolution, values, seeds, ref);
    REQUIRE(t.rows.size() == 2);
    CHECK(!t.rows[0].error.empty());
    CHECK(t.rows[1].error.empty());
    CHECK(t.rows[1].survivors == 1);
  }
}

TEST_CASE("sweep values") {
  const TrainConfig c = tiny("heat2d");
  CHECK(apply_sweep_value(c, SweepAxis::Resolution, "5").resolutions[1].jmax == 5);
  CHECK(apply_sweep_value(c, SweepAxis::Collocation, "123").interior == 123);
  const TrainConfig a = apply_sweep_value(c, SweepAxis::Architecture, "4x30");
  CHECK(a.hidden_layers == 4);
  CHECK(a.width == 30);
  CHECK_THROWS_AS(apply_sweep_value(c, SweepAxis::Architecture, "4-30"), ConfigError);
  CHECK_THROWS_AS(apply_sweep_value(c, SweepAxis::Collocation, "abc"), ConfigError);
  CHECK(parse_sweep_axis("collocation") == SweepAxis::Collocation);
  CHECK_THROWS_AS(parse_sweep_axis("depth"), ConfigError);
}

TEST_CASE("emitted files") {
  const TrainConfig c = tiny();
  const std::vector<std::uint64_t> seeds{1, 2};
  const AggregateReport rep = run_protocol(c, seeds, exact_reference(get_problem("advdiff")), {0, true, {}});
  const auto a = scratch("emit_a"), b = scratch("emit_b");
  emit(rep, a);
  emit(rep, b);
  for (const char* f : {"report.json", "loss.csv", "solution.csv", "model.json"})
    CHECK(slurp(a / f) == slurp(b / f));

  const std::string json_text = slurp(a / "report.json");
  CHECK(nlohmann::json::parse(json_text).dump(1) + "\n" == json_text);

  std::ifstream sol(a / "solution.csv");
  std::string line;
  std::getline(sol, line);
  CHECK(line == "x,u_exact,u_predicted,u_abs_error");
  std::size_t rows = 0;
  while (std::getline(sol, line)) ++rows;
  CHECK(rows == 1000);

  std::ifstream loss(a / "loss.csv");
  std::getline(loss, line);
  CHECK(line == "seed,iteration,residual,ic,bc,total");
  rows = 0;
  while (std::getline(loss, line)) ++rows;
  CHECK(rows == 2 * 31);

  CHECK(format_real(0.1) == "1.0000000000000001e-01");
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}
