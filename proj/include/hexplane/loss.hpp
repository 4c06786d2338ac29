#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "hexplane/feature_grid.hpp"
#include "hexplane/field.hpp"

namespace hexplane {

/// Mean squared error over rays and colour channels.
double photometric_loss(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt);

/// Gradient of photometric_loss with respect to one predicted colour.
Eigen::Vector3d photometric_grad(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt, std::size_t n_rays);

/// Squared-difference total variation over grid slabs. For every grid axis
/// of a slab, the mean of squared differences between adjacent nodes is
/// weighted by lambda_temporal for T and lambda_spatial otherwise, then
/// summed. Dense slabs are ignored. When `grads` is non-empty (one span per
/// slab) the gradient is added to it.
double tv_loss(std::span<const ParamView> slabs, double lambda_spatial, double lambda_temporal,
               std::span<const std::span<float>> grads = {});

/// Convenience overload for a single plane.
double tv_loss(const FeaturePlane& plane, double lambda_spatial, double lambda_temporal);

}  // namespace hexplane
