#include "hexplane/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace hexplane {

std::string to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::MLP: return "mlp";
    case DecoderKind::SH: return "sh";
  }
  return "?";
}

DecoderKind decoder_kind_from_string(const std::string& name) {
  if (name == "mlp") return DecoderKind::MLP;
  if (name == "sh") return DecoderKind::SH;
  throw ConfigError("unknown decoder '" + name + "'");
}

std::vector<std::size_t> ColorDecoder::slab_sizes() const {
  std::vector<std::size_t> sizes;
  for (const auto& v : const_cast<ColorDecoder*>(this)->parameters()) sizes.push_back(v.values.size());
  return sizes;
}

Eigen::Vector3d ColorDecoder::decode(std::span<const double> feature, const Eigen::Vector3d& dir) const {
  Eigen::MatrixXd f(feature_dim(), 1);
  for (int i = 0; i < feature_dim(); ++i) f(i, 0) = feature[i];
  Eigen::MatrixXd d = dir;
  Eigen::MatrixXd rgb;
  forward(f, d, rgb);
  return rgb.col(0);
}

int view_encoding_dim(int octaves) { return 3 + 6 * octaves; }

void encode_view(const Eigen::Vector3d& d, int octaves, double* out) {
  out[0] = d.x();
  out[1] = d.y();
  out[2] = d.z();
  double scale = 1.0;
  for (int k = 0; k < octaves; ++k) {
    for (int i = 0; i < 3; ++i) {
      out[3 + 6 * k + i] = std::sin(scale * d[i]);
      out[3 + 6 * k + 3 + i] = std::cos(scale * d[i]);
    }
    scale *= 2.0;
  }
}

// ---------------------------------------------------------------------------

namespace {

using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd as_matrix(const std::vector<float>& w, int rows, int cols) {
  return Eigen::Map<const RowMajorF>(w.data(), rows, cols).cast<double>();
}

Eigen::VectorXd as_vector(const std::vector<float>& b) {
  return Eigen::Map<const Eigen::VectorXf>(b.data(), static_cast<Eigen::Index>(b.size())).cast<double>();
}

void add_into(std::span<float> dst, const Eigen::MatrixXd& m) {
  // dst is row-major; m is column-major.
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) dst[r * cols + c] += static_cast<float>(m(r, c));
  }
}

}  // namespace

TinyMLP::TinyMLP(const Config& config) : config_(config) { allocate(); }

TinyMLP::TinyMLP(const Config& config, std::mt19937_64& rng) : config_(config) {
  allocate();
  for (int k = 0; k < 3; ++k) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(dims_[k]));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& w : weights_[k]) w = dist(rng);
    for (float& b : biases_[k]) b = dist(rng);
  }
}

void TinyMLP::allocate() {
  if (config_.feature_dim < 1 || config_.hidden < 1 || config_.octaves < 0) {
    throw ConfigError("invalid MLP decoder shape");
  }
  dims_ = {input_dim(), config_.hidden, config_.hidden, 3};
  for (int k = 0; k < 3; ++k) {
    weights_[k].assign(static_cast<std::size_t>(dims_[k + 1]) * dims_[k], 0.0f);
    biases_[k].assign(static_cast<std::size_t>(dims_[k + 1]), 0.0f);
  }
}

Eigen::MatrixXd TinyMLP::inputs(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const {
  const Eigen::Index n = features.cols();
  const int f = config_.feature_dim;
  Eigen::MatrixXd x(input_dim(), n);
  x.topRows(f) = features;
  for (Eigen::Index j = 0; j < n; ++j) {
    encode_view(dirs.col(j), config_.octaves, x.col(j).data() + f);
  }
  return x;
}

void TinyMLP::forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, Eigen::MatrixXd& rgb) const {
  const Eigen::MatrixXd x = inputs(features, dirs);
  Eigen::MatrixXd h = ((as_matrix(weights_[0], dims_[1], dims_[0]) * x).colwise() + as_vector(biases_[0])).cwiseMax(0.0);
  h = ((as_matrix(weights_[1], dims_[2], dims_[1]) * h).colwise() + as_vector(biases_[1])).cwiseMax(0.0);
  const Eigen::MatrixXd z = (as_matrix(weights_[2], dims_[3], dims_[2]) * h).colwise() + as_vector(biases_[2]);
  rgb = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

std::uint64_t TinyMLP::regime(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const {
  const Eigen::MatrixXd x = inputs(features, dirs);
  const Eigen::MatrixXd z0 = (as_matrix(weights_[0], dims_[1], dims_[0]) * x).colwise() + as_vector(biases_[0]);
  const Eigen::MatrixXd z1 =
      (as_matrix(weights_[1], dims_[2], dims_[1]) * z0.cwiseMax(0.0)).colwise() + as_vector(biases_[1]);
  std::uint64_t h = 0;
  for (const Eigen::MatrixXd* z : {&z0, &z1}) {
    for (Eigen::Index i = 0; i < z->size(); ++i) h = regime_mix(h, (*z)(i) > 0.0 ? 1 : 2);
  }
  return h;
}

void TinyMLP::backward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, const Eigen::MatrixXd& d_rgb,
                       Eigen::MatrixXd& d_features, GradSlabs grads) const {
  const Eigen::MatrixXd w0 = as_matrix(weights_[0], dims_[1], dims_[0]);
  const Eigen::MatrixXd w1 = as_matrix(weights_[1], dims_[2], dims_[1]);
  const Eigen::MatrixXd w2 = as_matrix(weights_[2], dims_[3], dims_[2]);
  const Eigen::MatrixXd x = inputs(features, dirs);
  const Eigen::MatrixXd z0 = (w0 * x).colwise() + as_vector(biases_[0]);
  const Eigen::MatrixXd h0 = z0.cwiseMax(0.0);
  const Eigen::MatrixXd z1 = (w1 * h0).colwise() + as_vector(biases_[1]);
  const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (w2 * h1).colwise() + as_vector(biases_[2]);
  const Eigen::MatrixXd s = z2.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });

  const Eigen::MatrixXd dz2 = d_rgb.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix()));
  add_into(grads[4], dz2 * h1.transpose());
  add_into(grads[5], dz2.rowwise().sum());
  const Eigen::MatrixXd dz1 = (w2.transpose() * dz2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  add_into(grads[2], dz1 * h0.transpose());
  add_into(grads[3], dz1.rowwise().sum());
  const Eigen::MatrixXd dz0 = (w1.transpose() * dz1).cwiseProduct((z0.array() > 0.0).cast<double>().matrix());
  add_into(grads[0], dz0 * x.transpose());
  add_into(grads[1], dz0.rowwise().sum());
  d_features = (w0.transpose() * dz0).topRows(config_.feature_dim);
}

std::vector<ParamView> TinyMLP::parameters() {
  std::vector<ParamView> views;
  for (int k = 0; k < 3; ++k) {
    views.push_back(ParamView{"mlp.w" + std::to_string(k), {dims_[k + 1], dims_[k]}, {}, weights_[k], ParamGroup::Dense});
    views.push_back(ParamView{"mlp.b" + std::to_string(k), {dims_[k + 1]}, {}, biases_[k], ParamGroup::Dense});
  }
  return views;
}

// ---------------------------------------------------------------------------

void sh_basis(const Eigen::Vector3d& d, double* out) {
  const double x = d.x(), y = d.y(), z = d.z();
  out[0] = 0.28209479177387814;
  out[1] = 0.4886025119029199 * y;
  out[2] = 0.4886025119029199 * z;
  out[3] = 0.4886025119029199 * x;
  out[4] = 1.0925484305920792 * x * y;
  out[5] = 1.0925484305920792 * y * z;
  out[6] = 0.31539156525252005 * (3.0 * z * z - 1.0);
  out[7] = 1.0925484305920792 * x * z;
  out[8] = 0.5462742152960396 * (x * x - y * y);
}

Eigen::Vector3d sh_decode(std::span<const double> coeffs, const Eigen::Vector3d& dir) {
  double basis[9];
  sh_basis(dir, basis);
  Eigen::Vector3d rgb;
  for (int c = 0; c < 3; ++c) {
    double v = 0.0;
    for (int k = 0; k < 9; ++k) v += coeffs[c * 9 + k] * basis[k];
    rgb[c] = std::clamp(v, 0.0, 1.0);
  }
  return rgb;
}

void SHDecoder::forward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, Eigen::MatrixXd& rgb) const {
  if (features.rows() != 27) throw ConfigError("SH decoding needs 27 features per point");
  rgb.resize(3, features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    rgb.col(j) = sh_decode({features.col(j).data(), 27}, dirs.col(j));
  }
}

std::uint64_t SHDecoder::regime(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs) const {
  std::uint64_t h = 0;
  double basis[9];
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    sh_basis(dirs.col(j), basis);
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 9; ++k) v += features(c * 9 + k, j) * basis[k];
      h = regime_mix(h, v <= 0.0 ? 1 : (v >= 1.0 ? 2 : 3));
    }
  }
  return h;
}

void SHDecoder::backward(const Eigen::MatrixXd& features, const Eigen::MatrixXd& dirs, const Eigen::MatrixXd& d_rgb,
                         Eigen::MatrixXd& d_features, GradSlabs) const {
  d_features.setZero(27, features.cols());
  double basis[9];
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    sh_basis(dirs.col(j), basis);
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int k = 0; k < 9; ++k) v += features(c * 9 + k, j) * basis[k];
      // Clamping passes gradient only strictly inside the range.
      if (v <= 0.0 || v >= 1.0) continue;
      for (int k = 0; k < 9; ++k) d_features(c * 9 + k, j) = d_rgb(c, j) * basis[k];
    }
  }
}

}  // namespace hexplane
