#include "hexplane/loss.hpp"

namespace hexplane {

double photometric_loss(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt) {
  if (pred.size() != gt.size()) throw ConfigError("photometric loss: batch sizes differ");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - gt[i]).squaredNorm();
  return sum / (3.0 * static_cast<double>(pred.size()));
}

Eigen::Vector3d photometric_grad(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt, std::size_t n_rays) {
  return (2.0 / (3.0 * static_cast<double>(n_rays))) * (pred - gt);
}

double tv_loss(std::span<const ParamView> slabs, double lambda_spatial, double lambda_temporal,
               std::span<const std::span<float>> grads) {
  double total = 0.0;
  for (std::size_t s = 0; s < slabs.size(); ++s) {
    const ParamView& view = slabs[s];
    if (view.group != ParamGroup::Grid || view.axes.empty()) continue;
    const std::size_t n_grid = view.axes.size();
    const std::vector<int>& shape = view.shape;
    const auto channels = static_cast<std::size_t>(shape.back());
    if (channels == 0) continue;
    // Row-major strides over [grid dims..., channels].
    std::vector<std::size_t> stride(shape.size(), 1);
    for (std::size_t d = shape.size() - 1; d-- > 0;) stride[d] = stride[d + 1] * static_cast<std::size_t>(shape[d + 1]);
    const std::size_t n = view.values.size();
    for (std::size_t axis = 0; axis < n_grid; ++axis) {
      const int len = shape[axis];
      if (len < 2) continue;
      const double lambda = view.axes[axis] == Axis::T ? lambda_temporal : lambda_spatial;
      if (lambda == 0.0) continue;
      const std::size_t count = n / static_cast<std::size_t>(len) * static_cast<std::size_t>(len - 1);
      const double scale = lambda / static_cast<double>(count);
      double sum = 0.0;
      const std::size_t st = stride[axis];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pos = (i / st) % static_cast<std::size_t>(len);
        if (pos + 1 == static_cast<std::size_t>(len)) continue;
        const double d = static_cast<double>(view.values[i + st]) - view.values[i];
        sum += d * d;
        if (!grads.empty()) {
          const auto g = static_cast<float>(2.0 * scale * d);
          grads[s][i + st] += g;
          grads[s][i] -= g;
        }
      }
      total += scale * sum;
    }
  }
  return total;
}

double tv_loss(const FeaturePlane& plane, double lambda_spatial, double lambda_temporal) {
  ParamView v{"plane", {plane.res_a, plane.res_b, plane.channels}, {plane.axis_a, plane.axis_b},
              std::span<float>(const_cast<float*>(plane.data.data()), plane.data.size()), ParamGroup::Grid};
  return tv_loss(std::span<const ParamView>(&v, 1), lambda_spatial, lambda_temporal);
}

}  // namespace hexplane
