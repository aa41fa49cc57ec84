#include <doctest.h>

#include <cmath>

#include "wavesolve/error.hpp"
#include "wavesolve/network.hpp"

using namespace wavesolve;

namespace {

NetworkShape make_shape(std::vector<std::size_t> sizes, std::size_t fields, std::size_t dim = 1,
                        Activation act = Activation::Tanh) {
  NetworkShape s;
  s.layer_sizes = std::move(sizes);
  s.fields = fields;
  s.coeffs_per_field = s.layer_sizes.back() / fields;
  s.point_dim = dim;
  s.encoder_width = 5;
  s.activation = act;
  return s;
}

void randomize(CoefficientNet& net, std::uint64_t seed, double amp = 0.8) {
  SplitMix64 rng(seed);
  for (auto& p : net.parameters()) p = amp * (2.0 * rng.uniform() - 1.0);
}

// Scalar test loss: sum_ij a_ij C_ij^2 / 2 + sum_f b_f B_f^3 / 3, weights fixed.
struct TestLoss {
  Eigen::MatrixXd a;
  std::vector<double> b;
  double value(const NetOutput& o) const {
    double v = 0.5 * (a.array() * o.coefficients.array().square()).sum();
    for (std::size_t f = 0; f < b.size(); ++f) v += b[f] * std::pow(o.biases[f], 3) / 3.0;
    return v;
  }
  std::pair<Eigen::MatrixXd, std::vector<double>> grad(const NetOutput& o) const {
    std::vector<double> gb(b.size());
    for (std::size_t f = 0; f < b.size(); ++f) gb[f] = b[f] * o.biases[f] * o.biases[f];
    return {a.cwiseProduct(o.coefficients), gb};
  }
};

void check_gradient(CoefficientNet& net, const PointSet& pts, double rel) {
  const NetOutput out = net.forward_points(pts);
  TestLoss loss{Eigen::MatrixXd::Random(out.coefficients.rows(), out.coefficients.cols()), {}};
  for (std::size_t f = 0; f < out.biases.size(); ++f) loss.b.push_back(0.5 + f);
  const auto [gc, gb] = loss.grad(out);
  const Eigen::VectorXd g = net.backward(gc, gb);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) {
    const double keep = net.parameters()(i);
    net.parameters()(i) = keep + h;
    const double lp = loss.value(net.forward_points(pts));
    net.parameters()(i) = keep - h;
    const double lm = loss.value(net.forward_points(pts));
    net.parameters()(i) = keep;
    const double fd = (lp - lm) / (2 * h);
    CHECK(std::abs(g(i) - fd) <= rel * std::max(std::abs(fd), 1e-3));
  }
}

}  // namespace

TEST_CASE("Glorot initialisation") {
  const CoefficientNet net = CoefficientNet::init(make_shape({100, 100, 100}, 1), 7);
  const double bound = std::sqrt(6.0 / 200.0);
  CHECK(bound == doctest::Approx(0.17320508075688773));
  for (std::size_t k = 0; k < net.layer_count(); ++k) {
    CHECK(net.weight(k).cwiseAbs().maxCoeff() <= bound);
    CHECK(net.weight(k).cwiseAbs().maxCoeff() > 0.9 * bound);
    CHECK(net.bias(k).isZero(0.0));
  }
  CHECK(net.expansion_bias(0) == 0.0);
  CHECK(CoefficientNet::init(make_shape({100, 100, 100}, 1), 7).parameters() == net.parameters());
  CHECK(CoefficientNet::init(make_shape({100, 100, 100}, 1), 8).parameters() != net.parameters());
  CHECK_THROWS_AS(CoefficientNet::init(make_shape({3, 5, 7}, 2), 1), ConfigError);
}

TEST_CASE("features") {
  CoefficientNet net = CoefficientNet::init(make_shape({2, 4, 3}, 1), 1);
  PointSet pts;
  pts.coords = {0.1, 0.7};
  CHECK(net.build_features(pts) == Eigen::Vector2d(0.1, 0.7));
  pts.coords.push_back(0.3);
  CHECK_THROWS_AS(net.build_features(pts), ShapeError);

  CoefficientNet enc = CoefficientNet::init(make_shape({3, 4, 6}, 2, 2), 3);
  enc.parameters().setZero();
  const PointSet p2 = sobol_points(2, 3, {{0.0, 1.0}, {0.0, 1.0}});
  CHECK(enc.build_features(p2).isZero(0.0));
  randomize(enc, 4);
  CHECK(enc.build_features(p2) == enc.build_features(p2));
}

TEST_CASE("forward") {
  SUBCASE("zero parameters give zero coefficients") {
    CoefficientNet net = CoefficientNet::init(make_shape({3, 6, 6, 4}, 2), 1);
    net.parameters().setZero();
    const NetOutput o = net.forward(Eigen::Vector3d(0.2, -1.0, 3.0));
    CHECK(o.coefficients.isZero(0.0));
    CHECK(o.biases == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("identity layer") {
    CoefficientNet net = CoefficientNet::init(make_shape({3, 3}, 1), 1);
    net.weight(0).setIdentity();
    const Eigen::Vector3d x(0.2, -1.0, 3.0);
    CHECK(net.forward(x).coefficients.col(0) == x);
  }
  SUBCASE("matches an independent recursion and partitions per field") {
    for (Activation act : {Activation::Tanh, Activation::Sine}) {
      CoefficientNet net = CoefficientNet::init(make_shape({4, 7, 5, 6}, 2, 1, act), 11);
      randomize(net, 12);
      const Eigen::Vector4d x(0.1, 0.4, -0.3, 0.9);
      Eigen::VectorXd z = x;
      for (std::size_t k = 0; k < net.layer_count(); ++k) {
        Eigen::VectorXd a = net.weight(k) * z + net.bias(k);
        if (k + 1 < net.layer_count()) a = act == Activation::Tanh ? a.array().tanh().eval() : a.array().sin().eval();
        z = a;
      }
      const NetOutput o = net.forward(x);
      for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(o.coefficients(i % 3, i / 3) - z(i)) < 1e-12);
    }
  }
  SUBCASE("non-finite values are reported") {
    CoefficientNet net = CoefficientNet::init(make_shape({2, 3, 2}, 1), 1);
    CHECK_THROWS_AS(net.forward(Eigen::Vector2d(std::nan(""), 0.0)), NumericError);
  }
}

TEST_CASE("backward") {
  SUBCASE("before forward") {
    CoefficientNet net = CoefficientNet::init(make_shape({2, 8, 4}, 1), 1);
    const std::vector<double> db{0.0};
    CHECK_THROWS_AS(net.backward(Eigen::MatrixXd::Zero(4, 1), db), StateError);
  }
  SUBCASE("zero upstream") {
    CoefficientNet net = CoefficientNet::init(make_shape({2, 8, 4}, 1), 1);
    net.forward(Eigen::Vector2d(0.3, 0.6));
    const std::vector<double> db{0.0};
    CHECK(net.backward(Eigen::MatrixXd::Zero(4, 1), db).isZero(0.0));
  }
  SUBCASE("single affine layer, loss = first output") {
    CoefficientNet net = CoefficientNet::init(make_shape({3, 2}, 1), 1);
    const Eigen::Vector3d x(0.5, -2.0, 0.25);
    net.forward(x);
    Eigen::MatrixXd up = Eigen::MatrixXd::Zero(2, 1);
    up(0, 0) = 1.0;
    const std::vector<double> db{0.0};
    const Eigen::VectorXd g = net.backward(up, db);
    CoefficientNet shadow = net;
    shadow.parameters() = g;
    CHECK(shadow.weight(0).row(0).transpose() == x);
    CHECK(shadow.weight(0).row(1).isZero(0.0));
    CHECK(shadow.bias(0) == Eigen::Vector2d(1.0, 0.0));
  }
  SUBCASE("finite differences, 2x8x4") {
    CoefficientNet net = CoefficientNet::init(make_shape({2, 8, 4}, 2), 5);
    randomize(net, 6);
    PointSet pts;
    pts.coords = {0.3, 0.8};
    check_gradient(net, pts, 1e-5);
  }
  SUBCASE("finite differences with encoder, sine activation and output scale") {
    CoefficientNet net = CoefficientNet::init(make_shape({6, 5, 5, 8}, 2, 2, Activation::Sine), 9);
    randomize(net, 10);
    net.set_output_scale(Eigen::MatrixXd::Random(4, 2));
    const PointSet pts = sobol_points(2, 6, {{-1.0, 1.0}, {0.0, 1.0}});
    check_gradient(net, pts, 1e-5);
  }
}

TEST_CASE("snapshot round-trip") {
  CoefficientNet net = CoefficientNet::init(make_shape({5, 4, 6}, 2, 2), 3);
  randomize(net, 4);
  net.set_output_scale(Eigen::MatrixXd::Constant(3, 2, 0.5));
  const std::string text = snapshot_json(net);
  const CoefficientNet back = snapshot_from_json(text);
  CHECK(back.parameters() == net.parameters());
  CHECK(back.output_scale() == net.output_scale());
  CHECK(snapshot_json(back) == text);
  CHECK_THROWS(snapshot_from_json("{\"format\": \"other\"}"));
}
