#include "wavesolve/network.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wavesolve/error.hpp"

namespace wavesolve {

using Json = nlohmann::json;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Sine:
      return "sin";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sin" || name == "sine") return Activation::Sine;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

CoefficientNet CoefficientNet::init(const NetworkShape& shape, std::uint64_t seed) {
  if (shape.layer_sizes.size() < 2) throw ConfigError("network needs at least an input and an output layer");
  for (std::size_t n : shape.layer_sizes)
    if (n == 0) throw ConfigError("network layer sizes must be positive");
  if (shape.fields == 0 || shape.coeffs_per_field == 0) throw ConfigError("network needs fields and coefficients");
  if (shape.layer_sizes.back() != shape.fields * shape.coeffs_per_field)
    throw ConfigError("network output width " + std::to_string(shape.layer_sizes.back()) +
                      " != fields * coefficients " + std::to_string(shape.fields * shape.coeffs_per_field));
  if (shape.point_dim != 1 && shape.point_dim != 2) throw ConfigError("network point dimension must be 1 or 2");
  if (shape.point_dim == 2 && shape.encoder_width == 0) throw ConfigError("encoder width must be positive");

  CoefficientNet net;
  net.shape_ = shape;
  std::size_t offset = 0;
  auto take = [&](std::size_t rows, std::size_t cols) {
    Slice s{offset, rows, cols};
    offset += rows * cols;
    return s;
  };
  if (shape.point_dim == 2) {
    net.enc_w_in_ = take(shape.encoder_width, 2);
    net.enc_b_in_ = take(shape.encoder_width, 1);
    net.enc_w_out_ = take(shape.encoder_width, 1);
    net.enc_b_out_ = take(1, 1);
  }
  for (std::size_t k = 0; k + 1 < shape.layer_sizes.size(); ++k) {
    net.weights_.push_back(take(shape.layer_sizes[k + 1], shape.layer_sizes[k]));
    net.biases_.push_back(take(shape.layer_sizes[k + 1], 1));
  }
  net.expansion_offset_ = offset;
  offset += shape.fields;
  net.params_ = Eigen::VectorXd::Zero(idx(offset));

  // Draw order: encoder input weights, encoder output weights, then each
  // layer's weight matrix, all row-major.
  SplitMix64 rng(seed);
  auto glorot = [&](Eigen::Map<Eigen::MatrixXd> w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
  };
  if (net.has_encoder()) {
    glorot(net.encoder_weight_in());
    Eigen::Map<Eigen::MatrixXd> w_out(net.params_.data() + net.enc_w_out_.offset, 1, idx(shape.encoder_width));
    glorot(w_out);
  }
  for (std::size_t k = 0; k < net.layer_count(); ++k) glorot(net.weight(k));
  return net;
}

Eigen::Map<Eigen::MatrixXd> CoefficientNet::weight(std::size_t layer) {
  const auto& s = weights_.at(layer);
  return {params_.data() + s.offset, idx(s.rows), idx(s.cols)};
}
Eigen::Map<const Eigen::MatrixXd> CoefficientNet::weight(std::size_t layer) const {
  const auto& s = weights_.at(layer);
  return {params_.data() + s.offset, idx(s.rows), idx(s.cols)};
}
Eigen::Map<Eigen::VectorXd> CoefficientNet::bias(std::size_t layer) {
  const auto& s = biases_.at(layer);
  return {params_.data() + s.offset, idx(s.rows)};
}
Eigen::Map<const Eigen::VectorXd> CoefficientNet::bias(std::size_t layer) const {
  const auto& s = biases_.at(layer);
  return {params_.data() + s.offset, idx(s.rows)};
}
double& CoefficientNet::expansion_bias(std::size_t field) {
  if (field >= shape_.fields) throw ShapeError("expansion_bias: field out of range");
  return params_[idx(expansion_offset_ + field)];
}
double CoefficientNet::expansion_bias(std::size_t field) const {
  if (field >= shape_.fields) throw ShapeError("expansion_bias: field out of range");
  return params_[idx(expansion_offset_ + field)];
}

Eigen::Map<Eigen::MatrixXd> CoefficientNet::encoder_weight_in() {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_w_in_.offset, idx(enc_w_in_.rows), idx(enc_w_in_.cols)};
}
Eigen::Map<const Eigen::MatrixXd> CoefficientNet::encoder_weight_in() const {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_w_in_.offset, idx(enc_w_in_.rows), idx(enc_w_in_.cols)};
}
Eigen::Map<Eigen::VectorXd> CoefficientNet::encoder_bias_in() {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_b_in_.offset, idx(enc_b_in_.rows)};
}
Eigen::Map<const Eigen::VectorXd> CoefficientNet::encoder_bias_in() const {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_b_in_.offset, idx(enc_b_in_.rows)};
}
Eigen::Map<Eigen::VectorXd> CoefficientNet::encoder_weight_out() {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_w_out_.offset, idx(enc_w_out_.rows)};
}
Eigen::Map<const Eigen::VectorXd> CoefficientNet::encoder_weight_out() const {
  if (!has_encoder()) throw StateError("network has no encoder");
  return {params_.data() + enc_w_out_.offset, idx(enc_w_out_.rows)};
}
double& CoefficientNet::encoder_bias_out() {
  if (!has_encoder()) throw StateError("network has no encoder");
  return params_[idx(enc_b_out_.offset)];
}
double CoefficientNet::encoder_bias_out() const {
  if (!has_encoder()) throw StateError("network has no encoder");
  return params_[idx(enc_b_out_.offset)];
}

double CoefficientNet::activate(double a) const {
  return shape_.activation == Activation::Tanh ? std::tanh(a) : std::sin(a);
}

double CoefficientNet::activate_derivative(double a, double z) const {
  return shape_.activation == Activation::Tanh ? 1.0 - z * z : std::cos(a);
}

Eigen::VectorXd CoefficientNet::build_features(const PointSet& points) const {
  if (points.dim != shape_.point_dim) throw ShapeError("build_features: point dimension mismatch");
  if (points.size() != shape_.layer_sizes.front())
    throw ShapeError("build_features: " + std::to_string(points.size()) + " points for " +
                     std::to_string(shape_.layer_sizes.front()) + " features");
  const auto n = idx(points.size());
  if (!has_encoder()) return Eigen::Map<const Eigen::VectorXd>(points.coords.data(), n);
  Eigen::Map<const Eigen::MatrixXd> p(points.coords.data(), 2, n);
  const Eigen::MatrixXd hidden =
      ((encoder_weight_in() * p).colwise() + encoder_bias_in()).array().tanh().matrix();
  Eigen::VectorXd features = hidden.transpose() * encoder_weight_out();
  features.array() += encoder_bias_out();
  return features;
}

NetOutput CoefficientNet::forward(const Eigen::Ref<const Eigen::VectorXd>& features) {
  if (static_cast<std::size_t>(features.size()) != shape_.layer_sizes.front())
    throw ShapeError("forward: feature length " + std::to_string(features.size()) + " != input width " +
                     std::to_string(shape_.layer_sizes.front()));
  const std::size_t layers = layer_count();
  pre_.assign(layers, {});
  post_.assign(layers, {});
  post_[0] = features;
  Eigen::VectorXd z = features;
  for (std::size_t k = 0; k < layers; ++k) {
    Eigen::VectorXd a = weight(k) * post_[k] + bias(k);
    if (!a.allFinite()) {
      cached_ = false;
      throw NumericError("forward: non-finite values in layer " + std::to_string(k + 1));
    }
    if (k + 1 < layers) {
      post_[k + 1] = a.unaryExpr([this](double v) { return activate(v); });
    } else {
      z = a;
    }
    pre_[k] = std::move(a);
  }
  cached_ = true;
  cached_encoder_ = false;
  if (output_scale_.size() > 0) z.array() *= output_scale_.array();

  NetOutput out;
  out.coefficients = Eigen::Map<const Eigen::MatrixXd>(z.data(), idx(shape_.coeffs_per_field), idx(shape_.fields));
  out.biases.resize(shape_.fields);
  for (std::size_t f = 0; f < shape_.fields; ++f) out.biases[f] = expansion_bias(f);
  return out;
}

NetOutput CoefficientNet::forward_points(const PointSet& points) {
  if (!has_encoder()) return forward(build_features(points));
  if (points.dim != 2 || points.size() != shape_.layer_sizes.front())
    throw ShapeError("forward_points: point set does not match the network input");
  const auto n = idx(points.size());
  Eigen::Map<const Eigen::MatrixXd> p(points.coords.data(), 2, n);
  Eigen::MatrixXd hidden = ((encoder_weight_in() * p).colwise() + encoder_bias_in()).array().tanh().matrix();
  Eigen::VectorXd features = hidden.transpose() * encoder_weight_out();
  features.array() += encoder_bias_out();
  NetOutput out = forward(features);
  enc_points_ = p;
  enc_hidden_ = std::move(hidden);
  cached_encoder_ = true;
  return out;
}

Eigen::VectorXd CoefficientNet::backward(const Eigen::Ref<const Eigen::MatrixXd>& d_coefficients,
                                         std::span<const double> d_biases) const {
  if (!cached_) throw StateError("backward called before forward");
  if (static_cast<std::size_t>(d_coefficients.rows()) != shape_.coeffs_per_field ||
      static_cast<std::size_t>(d_coefficients.cols()) != shape_.fields || d_biases.size() != shape_.fields)
    throw ShapeError("backward: upstream gradient shape mismatch");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  const std::size_t layers = layer_count();
  // Output is field-major: entry f*M + m.
  Eigen::VectorXd delta(idx(shape_.layer_sizes.back()));
  for (std::size_t f = 0; f < shape_.fields; ++f)
    delta.segment(idx(f * shape_.coeffs_per_field), idx(shape_.coeffs_per_field)) = d_coefficients.col(idx(f));
  if (output_scale_.size() > 0) delta.array() *= output_scale_.array();

  for (std::size_t k = layers; k-- > 0;) {
    const auto& ws = weights_[k];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + ws.offset, idx(ws.rows), idx(ws.cols)).noalias() =
        delta * post_[k].transpose();
    grad.segment(idx(biases_[k].offset), idx(biases_[k].rows)) = delta;
    if (k > 0) {
      Eigen::VectorXd back = weight(k).transpose() * delta;
      const auto& a = pre_[k - 1];
      const auto& z = post_[k];
      for (Eigen::Index i = 0; i < back.size(); ++i) back[i] *= activate_derivative(a[i], z[i]);
      delta = std::move(back);
    } else if (cached_encoder_) {
      const Eigen::VectorXd d_features = weight(0).transpose() * delta;  // N
      grad.segment(idx(enc_w_out_.offset), idx(enc_w_out_.rows)) = enc_hidden_ * d_features;
      grad[idx(enc_b_out_.offset)] = d_features.sum();
      // d hidden = w_out * d_feature^T, through tanh'
      Eigen::MatrixXd d_hidden = encoder_weight_out() * d_features.transpose();
      d_hidden.array() *= (1.0 - enc_hidden_.array().square());
      Eigen::Map<Eigen::MatrixXd>(grad.data() + enc_w_in_.offset, idx(enc_w_in_.rows), idx(enc_w_in_.cols)) =
          d_hidden * enc_points_.transpose();
      grad.segment(idx(enc_b_in_.offset), idx(enc_b_in_.rows)) = d_hidden.rowwise().sum();
    }
  }
  for (std::size_t f = 0; f < shape_.fields; ++f) grad[idx(expansion_offset_ + f)] = d_biases[f];
  return grad;
}

void CoefficientNet::set_output_scale(const Eigen::Ref<const Eigen::MatrixXd>& scale) {
  if (scale.size() == 0) {
    output_scale_.resize(0);
    return;
  }
  if (static_cast<std::size_t>(scale.rows()) != shape_.coeffs_per_field ||
      static_cast<std::size_t>(scale.cols()) != shape_.fields)
    throw ShapeError("set_output_scale: expected " + std::to_string(shape_.coeffs_per_field) + " x " +
                     std::to_string(shape_.fields));
  if (!scale.allFinite()) throw NumericError("set_output_scale: non-finite factor");
  output_scale_ = Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd(scale).data(), scale.size());
}

void CoefficientNet::clear_cache() {
  cached_ = false;
  cached_encoder_ = false;
  pre_.clear();
  post_.clear();
  enc_points_.resize(0, 0);
  enc_hidden_.resize(0, 0);
}

namespace {

Json matrix_rows(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

void fill_matrix(const Json& rows, Eigen::Map<Eigen::MatrixXd> m, const std::string& what) {
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(m.rows()))
    throw IoError("snapshot: bad row count for " + what);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(m.cols()))
      throw IoError("snapshot: bad column count for " + what);
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
}

void fill_vector(const Json& values, Eigen::Map<Eigen::VectorXd> v, const std::string& what) {
  if (!values.is_array() || values.size() != static_cast<std::size_t>(v.size()))
    throw IoError("snapshot: bad length for " + what);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = values[static_cast<std::size_t>(i)].get<double>();
}

}  // namespace

std::string snapshot_json(const CoefficientNet& net) {
  const auto& shape = net.shape();
  Json j;
  j["format"] = "wavesolve-network";
  j["version"] = 1;
  j["activation"] = std::string(to_string(shape.activation));
  j["fields"] = shape.fields;
  j["coeffs_per_field"] = shape.coeffs_per_field;
  j["point_dim"] = shape.point_dim;
  j["layer_sizes"] = shape.layer_sizes;
  if (net.has_encoder()) {
    j["encoder"] = {{"width", shape.encoder_width},
                    {"weight_in", matrix_rows(net.encoder_weight_in())},
                    {"bias_in", vector_json(net.encoder_bias_in())},
                    {"weight_out", vector_json(net.encoder_weight_out())},
                    {"bias_out", net.encoder_bias_out()}};
  } else {
    j["encoder"] = nullptr;
  }
  Json layers = Json::array();
  for (std::size_t k = 0; k < net.layer_count(); ++k)
    layers.push_back({{"weight", matrix_rows(net.weight(k))}, {"bias", vector_json(net.bias(k))}});
  j["layers"] = std::move(layers);
  Json b = Json::array();
  for (std::size_t f = 0; f < shape.fields; ++f) b.push_back(net.expansion_bias(f));
  j["expansion_bias"] = std::move(b);
  if (net.output_scale().size() > 0) {
    j["output_scale"] = vector_json(net.output_scale());
  } else {
    j["output_scale"] = nullptr;
  }
  return j.dump();
}

CoefficientNet snapshot_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  }
  if (j.value("format", "") != "wavesolve-network") throw IoError("snapshot: unexpected format tag");
  NetworkShape shape;
  try {
    shape.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    shape.fields = j.at("fields").get<std::size_t>();
    shape.coeffs_per_field = j.at("coeffs_per_field").get<std::size_t>();
    shape.point_dim = j.at("point_dim").get<std::size_t>();
    shape.activation = parse_activation(j.at("activation").get<std::string>());
    if (!j.at("encoder").is_null()) shape.encoder_width = j["encoder"].at("width").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  }
  CoefficientNet net = CoefficientNet::init(shape, 0);
  net.parameters().setZero();
  try {
    if (net.has_encoder()) {
      const auto& e = j.at("encoder");
      fill_matrix(e.at("weight_in"), net.encoder_weight_in(), "encoder weight_in");
      fill_vector(e.at("bias_in"), net.encoder_bias_in(), "encoder bias_in");
      fill_vector(e.at("weight_out"), net.encoder_weight_out(), "encoder weight_out");
      net.encoder_bias_out() = e.at("bias_out").get<double>();
    }
    const auto& layers = j.at("layers");
    if (layers.size() != net.layer_count()) throw IoError("snapshot: layer count mismatch");
    for (std::size_t k = 0; k < net.layer_count(); ++k) {
      fill_matrix(layers[k].at("weight"), net.weight(k), "layer " + std::to_string(k) + " weight");
      fill_vector(layers[k].at("bias"), net.bias(k), "layer " + std::to_string(k) + " bias");
    }
    const auto& b = j.at("expansion_bias");
    if (b.size() != shape.fields) throw IoError("snapshot: expansion bias count mismatch");
    for (std::size_t f = 0; f < shape.fields; ++f) net.expansion_bias(f) = b[f].get<double>();
    if (j.contains("output_scale") && !j["output_scale"].is_null()) {
      Eigen::VectorXd scale(static_cast<Eigen::Index>(shape.layer_sizes.back()));
      fill_vector(j["output_scale"], Eigen::Map<Eigen::VectorXd>(scale.data(), scale.size()), "output_scale");
      net.set_output_scale(Eigen::Map<const Eigen::MatrixXd>(scale.data(), static_cast<Eigen::Index>(shape.coeffs_per_field),
                                                             static_cast<Eigen::Index>(shape.fields)));
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("snapshot: ") + e.what());
  }
  return net;
}

void save_snapshot(const CoefficientNet& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << snapshot_json(net) << '\n';
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

CoefficientNet load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return snapshot_from_json(ss.str());
}

}  // namespace wavesolve
