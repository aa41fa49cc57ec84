#include <doctest.h>

#include <cmath>
#include <vector>

#include "wavesolve/basis.hpp"
#include "wavesolve/error.hpp"

using namespace wavesolve;

namespace {

double central(auto f, double x, double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }

bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::abs(b) + abs_floor;
}

}  // namespace

TEST_CASE("mother wavelet values") {
  CHECK(mother_eval(MotherKind::MexicanHat, 0, 0.0) == 1.0);
  CHECK(mother_eval(MotherKind::Gaussian, 0, 0.0) == 0.0);
  CHECK(mother_eval(MotherKind::MexicanHat, 0, 1.0) == 0.0);
  CHECK(mother_eval(MotherKind::Gaussian, 1, 0.0) == -1.0);
  CHECK(mother_eval(MotherKind::MexicanHat, 1, 0.0) == 0.0);
  CHECK_THROWS_AS(mother_eval(MotherKind::Gaussian, 3, 0.0), ConfigError);
}

TEST_CASE("Gaussian derivative is minus the Mexican hat") {
  for (int i = 0; i < 10000; ++i) {
    const double x = -8.0 + 16.0 * i / 9999.0;
    CHECK(std::abs(mother_eval(MotherKind::Gaussian, 1, x) + mother_eval(MotherKind::MexicanHat, 0, x)) < 1e-12);
  }
}

TEST_CASE("mother derivatives match finite differences of the level below") {
  const double h = 1e-5;
  for (MotherKind kind : {MotherKind::Gaussian, MotherKind::MexicanHat})
    for (int order = 1; order <= 2; ++order)
      for (double x = -6.0; x <= 6.0; x += 0.173) {
        const double fd = central([&](double y) { return mother_eval(kind, order - 1, y); }, x, h);
        const double v = mother_eval(kind, order, x);
        if (std::abs(v) < 1e-3)
          CHECK(std::abs(v - fd) < 1e-8);
        else
          CHECK(close_rel(v, fd, 1e-5));
      }
}

TEST_CASE("family enumeration") {
  const std::vector<Interval> unit{{0.0, 1.0}};
  SUBCASE("single level on [0,1]") {
    const std::vector<ResolutionRange> r{{0, 0}};
    const WaveletFamily f = enumerate_family(MotherKind::Gaussian, unit, r);
    REQUIRE(f.size() == 3);
    CHECK(f.axes[0].indices[0] == FamilyIndex{0, 0});
    CHECK(f.axes[0].indices[1] == FamilyIndex{0, 1});
    CHECK(f.axes[0].indices[2] == FamilyIndex{0, 2});
  }
  SUBCASE("negative level on [-1,1]") {
    const std::vector<Interval> d{{-1.0, 1.0}};
    const std::vector<ResolutionRange> r{{-3, -3}};
    const WaveletFamily f = enumerate_family(MotherKind::MexicanHat, d, r);
    REQUIRE(f.size() == 2);
    CHECK(f.axes[0].indices[0].k == 0);
    CHECK(f.axes[0].indices[1].k == 1);
  }
  SUBCASE("levels 0..9 on [0,1]: brute-force count") {
    const std::vector<ResolutionRange> r{{0, 9}};
    const WaveletFamily f = enumerate_family(MotherKind::Gaussian, unit, r);
    std::size_t brute = 0;
    for (int j = 0; j <= 9; ++j) brute += static_cast<std::size_t>(std::ceil(std::ldexp(1.0, j + 1))) + 1;
    CHECK(f.size() == brute);
    CHECK(f.size() == 2056);
    for (std::size_t i = 1; i < f.size(); ++i) {
      const auto& a = f.axes[0].indices[i - 1];
      const auto& b = f.axes[0].indices[i];
      CHECK((a.j < b.j || (a.j == b.j && a.k < b.k)));
    }
  }
  SUBCASE("2D is the Cartesian product in (j1,k1,j2,k2) order") {
    const std::vector<Interval> d{{-1.0, 1.0}, {0.0, 1.0}};
    const std::vector<ResolutionRange> r{{-1, 1}, {0, 1}};
    const WaveletFamily f = enumerate_family(MotherKind::Gaussian, d, r);
    CHECK(f.size() == f.axes[0].size() * f.axes[1].size());
    const auto pos = f.split_index(f.axes[1].size() + 2);
    CHECK(pos[0] == 1);
    CHECK(pos[1] == 2);
  }
  SUBCASE("errors") {
    const std::vector<Interval> empty{{1.0, 1.0}};
    const std::vector<ResolutionRange> r{{0, 0}};
    CHECK_THROWS_AS(enumerate_family(MotherKind::Gaussian, empty, r), ConfigError);
    const std::vector<ResolutionRange> inverted{{2, 1}};
    CHECK_THROWS_AS(enumerate_family(MotherKind::Gaussian, unit, inverted), ConfigError);
    const std::vector<ResolutionRange> big{{0, 12}};
    CHECK_THROWS_AS(enumerate_family(MotherKind::Gaussian, unit, big, 100), ConfigError);
  }
  SUBCASE("deterministic") {
    const std::vector<ResolutionRange> r{{-2, 5}};
    const WaveletFamily a = enumerate_family(MotherKind::Gaussian, unit, r);
    const WaveletFamily b = enumerate_family(MotherKind::Gaussian, unit, r);
    CHECK(a.axes[0].indices == b.axes[0].indices);
  }
}

TEST_CASE("basis evaluation") {
  CHECK(axis_basis_eval(MotherKind::MexicanHat, {1, 0}, 0, 0.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  for (double x : {-1.3, 0.0, 0.4, 2.2})
    for (MotherKind kind : {MotherKind::Gaussian, MotherKind::MexicanHat})
      CHECK(axis_basis_eval(kind, {0, 0}, 0, x) == mother_eval(kind, 0, x));

  const FamilyIndex idx{3, 2};
  const double h = std::ldexp(1.0, -3) * 1e-4;
  const double fd = central([&](double y) { return axis_basis_eval(MotherKind::Gaussian, idx, 0, y); }, 0.3, h);
  CHECK(close_rel(axis_basis_eval(MotherKind::Gaussian, idx, 1, 0.3), fd, 1e-5));

  // chain-rule scaling on the same formula path
  for (int j : {-2, 0, 4, 10}) {
    const FamilyIndex jk{j, 3};
    const double s = std::ldexp(1.0, j);
    const double x = 0.37;
    CHECK(axis_basis_eval(MotherKind::Gaussian, jk, 1, x) ==
          s * std::sqrt(s) * mother_eval(MotherKind::Gaussian, 1, s * x - 3.0));
    const double hj = 1e-4 / s;
    const double fd2 = central([&](double y) { return axis_basis_eval(MotherKind::Gaussian, jk, 1, y); }, x, hj);
    CHECK(close_rel(axis_basis_eval(MotherKind::Gaussian, jk, 2, x), fd2, 1e-5, 1e-8 * s * s * std::sqrt(s)));
  }
}

TEST_CASE("2D basis is separable") {
  const std::vector<Interval> d{{-1.0, 1.0}, {-1.0, 1.0}};
  const std::vector<ResolutionRange> r{{0, 1}, {0, 1}};
  const WaveletFamily f = enumerate_family(MotherKind::MexicanHat, d, r);
  const std::vector<double> p{0.3, -0.6};
  for (std::size_t m = 0; m < f.size(); m += 7) {
    const auto pos = f.split_index(m);
    for (const std::vector<int>& o : {std::vector<int>{0, 0}, {1, 2}, {2, 1}}) {
      const double expect = axis_basis_eval(f.mother, f.axes[0].indices[pos[0]], o[0], p[0]) *
                            axis_basis_eval(f.mother, f.axes[1].indices[pos[1]], o[1], p[1]);
      CHECK(basis_eval(f, m, o, p) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}
