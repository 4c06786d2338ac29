#include "hexplane/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hexplane/parallel.hpp"

namespace hexplane {

double softplus(double raw) {
  if (raw > 30.0) return raw + std::log1p(std::exp(-raw));
  return std::log1p(std::exp(raw));
}

double softplus_grad(double raw) {
  if (raw >= 0.0) return 1.0 / (1.0 + std::exp(-raw));
  const double e = std::exp(raw);
  return e / (1.0 + e);
}

CompositeResult composite(std::span<const double> sigmas, std::span<const double> deltas,
                          std::span<const Eigen::Vector3d> colors, std::span<const double> distances) {
  const std::size_t n = sigmas.size();
  if (deltas.size() != n || colors.size() != n || (!distances.empty() && distances.size() != n)) {
    throw ConfigError("composite inputs differ in length");
  }
  CompositeResult r;
  r.weights.resize(n);
  double optical = 0.0;
  double depth = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = sigmas[k] * deltas[k];
    const double w = std::exp(-optical) * -std::expm1(-tau);
    r.weights[k] = w;
    r.rgb += w * colors[k];
    r.acc += w;
    if (!distances.empty()) depth += w * distances[k];
    optical += tau;
  }
  r.depth = depth / std::max(r.acc, 1e-10);
  return r;
}

void composite_backward(std::span<const double> sigmas, std::span<const double> deltas,
                        std::span<const Eigen::Vector3d> colors, const Eigen::Vector3d& d_rgb,
                        std::span<double> d_sigmas, std::span<Eigen::Vector3d> d_colors, bool corrupt) {
  const std::size_t n = sigmas.size();
  if (deltas.size() != n || colors.size() != n || d_sigmas.size() != n || d_colors.size() != n) {
    throw ConfigError("composite adjoint inputs differ in length");
  }
  // Suffix sums of w_j c_j.d_rgb, walked back to front.
  std::vector<double> trans(n + 1);
  std::vector<double> weights(n);
  double optical = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = sigmas[k] * deltas[k];
    trans[k] = std::exp(-optical);
    weights[k] = trans[k] * -std::expm1(-tau);
    optical += tau;
  }
  trans[n] = std::exp(-optical);
  double suffix = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double ck = colors[k].dot(d_rgb);
    d_sigmas[k] = corrupt ? deltas[k] * trans[k + 1] * ck : deltas[k] * (trans[k + 1] * ck - suffix);
    d_colors[k] = weights[k] * d_rgb;
    suffix += weights[k] * ck;
  }
}

RenderStats& RenderStats::operator+=(const RenderStats& o) {
  rays += o.rays;
  samples += o.samples;
  skipped += o.skipped;
  appearance_queries += o.appearance_queries;
  regime = regime_mix(regime, o.regime);
  return *this;
}

namespace {

struct RayState {
  RaySamples samples;
  std::vector<Point4> unit;      // normalized sample coordinates
  std::vector<double> shifted;   // raw opacity + density shift
  std::vector<double> sigma;
  std::vector<std::uint8_t> skipped;
  std::vector<int> column;       // appearance column or -1
  std::vector<Eigen::Vector3d> colors;
  CompositeResult result;
};

struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<RayState> rays;
  Eigen::MatrixXd features;
  Eigen::MatrixXd dirs;
  Eigen::MatrixXd rgb;
  std::vector<Point4> app_points;
  RenderStats stats;
};

void check_model(const SceneModelView& m) {
  if (!m.opacity || !m.appearance || !m.decoder) throw ConfigError("render needs opacity, appearance and decoder");
  if (m.opacity->feature_dim() != 1) throw ConfigError("opacity field must have a single feature channel");
  if (m.appearance->feature_dim() != m.decoder->feature_dim()) {
    throw ConfigError("decoder input size does not match the appearance feature size");
  }
  if (!(m.opacity->domain() == m.appearance->domain())) throw ConfigError("opacity and appearance domains differ");
}

void forward_chunk(const SceneModelView& model, const RayBatch& rays, const RenderSettings& settings,
                   std::uint64_t first_ray_id, Chunk& chunk) {
  const AxisDomain& domain = model.opacity->domain();
  const bool use_voxel = model.voxel != nullptr && !model.voxel->empty();
  const std::size_t count = chunk.end - chunk.begin;
  chunk.rays.resize(count);
  chunk.stats.rays = count;
  std::vector<double> dirs_flat;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t ray = chunk.begin + i;
    RayState& st = chunk.rays[i];
    sample_ray(rays.origins[ray], rays.directions[ray], rays.times[ray], domain, settings.sampling,
               first_ray_id + ray, st.samples);
    const std::size_t n = st.samples.points.size();
    st.unit.resize(n);
    st.shifted.assign(n, 0.0);
    st.sigma.assign(n, 0.0);
    st.skipped.assign(n, 0);
    st.column.assign(n, -1);
    st.colors.assign(n, Eigen::Vector3d::Zero());
    chunk.stats.samples += n;
    for (std::size_t k = 0; k < n; ++k) {
      const Point4& p = st.samples.points[k];
      st.unit[k] = normalize_point(domain, p);
      if (use_voxel && !model.voxel->occupied(p)) {
        st.skipped[k] = 1;
        ++chunk.stats.skipped;
        continue;
      }
      double raw = 0.0;
      model.opacity->query_normalized(st.unit[k], {&raw, 1});
      st.shifted[k] = raw + settings.density_shift;
      st.sigma[k] = softplus(st.shifted[k]);
    }
    // Weights decide which samples need appearance.
    double optical = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double tau = st.sigma[k] * st.samples.deltas[k];
      const double w = std::exp(-optical) * -std::expm1(-tau);
      optical += tau;
      if (!st.skipped[k] && w > settings.weight_cutoff) {
        st.column[k] = static_cast<int>(chunk.app_points.size());
        chunk.app_points.push_back(st.unit[k]);
        const Eigen::Vector3d d = rays.directions[ray].normalized();
        dirs_flat.insert(dirs_flat.end(), {d.x(), d.y(), d.z()});
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(chunk.app_points.size());
  chunk.stats.appearance_queries = static_cast<std::size_t>(m);
  const int f = model.appearance->feature_dim();
  chunk.features.resize(f, m);
  chunk.dirs = Eigen::Map<Eigen::MatrixXd>(dirs_flat.data(), 3, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    model.appearance->query_normalized(chunk.app_points[static_cast<std::size_t>(j)],
                                       {chunk.features.col(j).data(), static_cast<std::size_t>(f)});
  }
  if (m > 0) {
    model.decoder->forward(chunk.features, chunk.dirs, chunk.rgb);
  } else {
    chunk.rgb.resize(3, 0);
  }
  if (settings.track_regime) {
    std::uint64_t h = 0;
    for (const auto& st : chunk.rays) {
      for (int col : st.column) h = regime_mix(h, col >= 0 ? 1 : 2);
    }
    if (m > 0) h = regime_mix(h, model.decoder->regime(chunk.features, chunk.dirs));
    chunk.stats.regime = h;
  }
  for (auto& st : chunk.rays) {
    for (std::size_t k = 0; k < st.column.size(); ++k) {
      if (st.column[k] >= 0) st.colors[k] = chunk.rgb.col(st.column[k]);
    }
    st.result = composite(st.sigma, st.samples.deltas, st.colors, st.samples.distances);
  }
}

void store_outputs(const Chunk& chunk, RenderOutput& out) {
  for (std::size_t i = 0; i < chunk.rays.size(); ++i) {
    const auto& r = chunk.rays[i].result;
    out.rgb[chunk.begin + i] = r.rgb;
    out.depth[chunk.begin + i] = r.depth;
    out.acc[chunk.begin + i] = r.acc;
  }
}

std::vector<Chunk> make_chunks(std::size_t n_rays, int chunk_rays) {
  const std::size_t step = static_cast<std::size_t>(std::max(1, chunk_rays));
  std::vector<Chunk> chunks;
  for (std::size_t b = 0; b < n_rays; b += step) {
    Chunk c;
    c.begin = b;
    c.end = std::min(n_rays, b + step);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

RenderOutput empty_output(std::size_t n) {
  RenderOutput out;
  out.rgb.assign(n, Eigen::Vector3d::Zero());
  out.depth.assign(n, 0.0);
  out.acc.assign(n, 0.0);
  return out;
}

// Gradient contributions of one chunk, applied to the field slabs later.
struct ChunkAdjoint {
  std::vector<Point4> opacity_points;
  std::vector<double> opacity_upstream;
  Eigen::MatrixXd d_features;
  std::vector<std::vector<float>> decoder_grads;
};

void backward_chunk(const SceneModelView& model, const RenderSettings& settings, const RgbAdjoint& adjoint,
                    Chunk& chunk, ChunkAdjoint& adj) {
  const auto m = chunk.features.cols();
  Eigen::MatrixXd d_rgb_cols = Eigen::MatrixXd::Zero(3, m);
  std::vector<double> d_sigma;
  std::vector<Eigen::Vector3d> d_colors;
  for (std::size_t i = 0; i < chunk.rays.size(); ++i) {
    RayState& st = chunk.rays[i];
    const Eigen::Vector3d g = adjoint(chunk.begin + i, st.result.rgb);
    const std::size_t n = st.sigma.size();
    if (n == 0) continue;
    d_sigma.assign(n, 0.0);
    d_colors.assign(n, Eigen::Vector3d::Zero());
    composite_backward(st.sigma, st.samples.deltas, st.colors, g, d_sigma, d_colors,
                       settings.corrupt_composite_adjoint);
    for (std::size_t k = 0; k < n; ++k) {
      if (st.skipped[k]) continue;
      if (st.column[k] >= 0) d_rgb_cols.col(st.column[k]) = d_colors[k];
      const double d_raw = d_sigma[k] * softplus_grad(st.shifted[k]);
      if (d_raw != 0.0) {
        adj.opacity_points.push_back(st.unit[k]);
        adj.opacity_upstream.push_back(d_raw);
      }
    }
  }
  const auto sizes = model.decoder->slab_sizes();
  adj.decoder_grads.resize(sizes.size());
  std::vector<std::span<float>> spans;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    adj.decoder_grads[s].assign(sizes[s], 0.0f);
    spans.emplace_back(adj.decoder_grads[s]);
  }
  if (m > 0) {
    model.decoder->backward(chunk.features, chunk.dirs, d_rgb_cols, adj.d_features, spans);
  } else {
    adj.d_features.resize(model.appearance->feature_dim(), 0);
  }
}

void apply_adjoint(const SceneModelView& model, const Chunk& chunk, const ChunkAdjoint& adj,
                   std::span<const std::span<float>> opacity, std::span<const std::span<float>> appearance,
                   std::span<const std::span<float>> decoder) {
  for (std::size_t i = 0; i < adj.opacity_points.size(); ++i) {
    model.opacity->backward_normalized(adj.opacity_points[i], {&adj.opacity_upstream[i], 1}, opacity);
  }
  const auto f = static_cast<std::size_t>(adj.d_features.rows());
  for (Eigen::Index j = 0; j < adj.d_features.cols(); ++j) {
    model.appearance->backward_normalized(chunk.app_points[static_cast<std::size_t>(j)],
                                          {adj.d_features.col(j).data(), f}, appearance);
  }
  for (std::size_t s = 0; s < decoder.size(); ++s) {
    float* dst = decoder[s].data();
    const auto& src = adj.decoder_grads[s];
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
  }
}

}  // namespace

RenderOutput render_rays(const SceneModelView& model, const RayBatch& rays, const RenderSettings& settings,
                         std::uint64_t first_ray_id) {
  check_model(model);
  RenderOutput out = empty_output(rays.size());
  std::vector<Chunk> chunks = make_chunks(rays.size(), settings.chunk_rays);
  std::vector<RenderStats> stats(chunks.size());
  parallel_for(chunks.size(), settings.threads, [&](std::size_t c, int) {
    Chunk& chunk = chunks[c];
    forward_chunk(model, rays, settings, first_ray_id, chunk);
    store_outputs(chunk, out);
    stats[c] = chunk.stats;
    chunk = Chunk{};  // release sample storage early
  });
  for (const auto& s : stats) out.stats += s;
  return out;
}

RenderOutput render_rays_backward(const SceneModelView& model, const RayBatch& rays, const RenderSettings& settings,
                                  const RgbAdjoint& adjoint, RenderGrads& grads, std::uint64_t first_ray_id) {
  check_model(model);
  RenderOutput out = empty_output(rays.size());
  std::vector<Chunk> chunks = make_chunks(rays.size(), settings.chunk_rays);

  if (settings.deterministic) {
    std::vector<ChunkAdjoint> adjs(chunks.size());
    parallel_for(chunks.size(), settings.threads, [&](std::size_t c, int) {
      forward_chunk(model, rays, settings, first_ray_id, chunks[c]);
      store_outputs(chunks[c], out);
      backward_chunk(model, settings, adjoint, chunks[c], adjs[c]);
    });
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      apply_adjoint(model, chunks[c], adjs[c], grads.opacity, grads.appearance, grads.decoder);
      out.stats += chunks[c].stats;
    }
    return out;
  }

  // Fast mode: each worker scatters into private buffers merged at the end.
  int workers = settings.threads <= 0 ? default_thread_count() : settings.threads;
  workers = std::max(1, std::min<int>(workers, static_cast<int>(chunks.size())));
  struct WorkerGrads {
    std::vector<std::vector<float>> storage;
    std::vector<std::span<float>> opacity, appearance, decoder;
  };
  std::vector<WorkerGrads> local(static_cast<std::size_t>(workers));
  auto make = [](const std::vector<std::span<float>>& like, std::vector<std::vector<float>>& storage,
                 std::vector<std::span<float>>& spans) {
    for (const auto& s : like) {
      storage.emplace_back(s.size(), 0.0f);
      spans.emplace_back(storage.back());
    }
  };
  for (auto& w : local) {
    w.storage.reserve(grads.opacity.size() + grads.appearance.size() + grads.decoder.size());
    make(grads.opacity, w.storage, w.opacity);
    make(grads.appearance, w.storage, w.appearance);
    make(grads.decoder, w.storage, w.decoder);
  }
  parallel_for(chunks.size(), workers, [&](std::size_t c, int worker) {
    ChunkAdjoint adj;
    forward_chunk(model, rays, settings, first_ray_id, chunks[c]);
    store_outputs(chunks[c], out);
    backward_chunk(model, settings, adjoint, chunks[c], adj);
    auto& w = local[static_cast<std::size_t>(worker)];
    apply_adjoint(model, chunks[c], adj, w.opacity, w.appearance, w.decoder);
  });
  auto merge = [](std::vector<std::span<float>>& dst, const std::vector<std::span<float>>& src) {
    for (std::size_t s = 0; s < dst.size(); ++s) {
      for (std::size_t k = 0; k < dst[s].size(); ++k) dst[s][k] += src[s][k];
    }
  };
  for (auto& w : local) {
    merge(grads.opacity, w.opacity);
    merge(grads.appearance, w.appearance);
    merge(grads.decoder, w.decoder);
  }
  for (const auto& c : chunks) out.stats += c.stats;
  return out;
}

void save_depth(const std::filesystem::path& path, int width, int height, std::span<const double> depth) {
  if (depth.size() != static_cast<std::size_t>(width) * height) throw ConfigError("depth map size mismatch");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const auto w = static_cast<std::uint32_t>(width);
  const auto h = static_cast<std::uint32_t>(height);
  os.write("DPTH", 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  os.write(reinterpret_cast<const char*>(&h), 4);
  for (double d : depth) {
    const auto v = static_cast<float>(d);
    os.write(reinterpret_cast<const char*>(&v), 4);
  }
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<float> load_depth(const std::filesystem::path& path, int& width, int& height) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  std::uint32_t w = 0, h = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  is.read(reinterpret_cast<char*>(&h), 4);
  if (!is || std::memcmp(magic, "DPTH", 4) != 0 || w > 65536 || h > 65536) {
    throw IoError(path.string() + " is not a depth file");
  }
  std::vector<float> data(static_cast<std::size_t>(w) * h);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!is) throw IoError("truncated depth file " + path.string());
  width = static_cast<int>(w);
  height = static_cast<int>(h);
  return data;
}

}  // namespace hexplane
