#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hexplane/parallel.hpp"
#include "hexplane/render.hpp"

namespace hexplane {

std::array<int, 3> EmptinessVoxel::cell_of(const Point4& p) const {
  std::array<int, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - domain.space_min[a]) / (domain.space_max[a] - domain.space_min[a]);
    idx[a] = std::clamp(static_cast<int>(std::floor(u * res)), 0, res - 1);
  }
  return idx;
}

bool EmptinessVoxel::occupied(const Point4& p) const {
  if (res == 0) return true;
  const auto c = cell_of(p);
  return occupancy[cell(c[0], c[1], c[2])] != 0;
}

std::size_t EmptinessVoxel::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

Point4 EmptinessVoxel::cell_center(int ix, int iy, int iz) const {
  const int idx[3] = {ix, iy, iz};
  Point4 p{0.0, 0.0, 0.0, domain.time_min};
  for (int a = 0; a < 3; ++a) {
    p[a] = domain.space_min[a] + (idx[a] + 0.5) / res * (domain.space_max[a] - domain.space_min[a]);
  }
  return p;
}

EmptinessVoxel build_emptiness_voxel(const SigmaFunction& sigma, const AxisDomain& domain, int res,
                                     int n_time_samples, double threshold, int threads) {
  if (res < 2) throw ConfigError("emptiness voxel needs res >= 2");
  if (n_time_samples < 1) throw ConfigError("emptiness voxel needs at least one time sample");
  EmptinessVoxel raw;
  raw.res = res;
  raw.domain = domain;
  raw.occupancy.assign(static_cast<std::size_t>(res) * res * res, 0);
  parallel_for(static_cast<std::size_t>(res), threads, [&](std::size_t ix, int) {
    for (int iy = 0; iy < res; ++iy) {
      for (int iz = 0; iz < res; ++iz) {
        Point4 p = raw.cell_center(static_cast<int>(ix), iy, iz);
        double peak = 0.0;
        for (int k = 0; k < n_time_samples; ++k) {
          const double f = n_time_samples == 1 ? 0.5 : static_cast<double>(k) / (n_time_samples - 1);
          p[3] = domain.time_min + f * (domain.time_max - domain.time_min);
          peak = std::max(peak, sigma(p));
          if (peak >= threshold) break;
        }
        raw.occupancy[raw.cell(static_cast<int>(ix), iy, iz)] = peak >= threshold ? 1 : 0;
      }
    }
  });
  EmptinessVoxel out = raw;
  for (int ix = 0; ix < res; ++ix) {
    for (int iy = 0; iy < res; ++iy) {
      for (int iz = 0; iz < res; ++iz) {
        if (!raw.occupancy[raw.cell(ix, iy, iz)]) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dz = -1; dz <= 1; ++dz) {
              const int x = ix + dx, y = iy + dy, z = iz + dz;
              if (x < 0 || y < 0 || z < 0 || x >= res || y >= res || z >= res) continue;
              out.occupancy[out.cell(x, y, z)] = 1;
            }
          }
        }
      }
    }
  }
  return out;
}

EmptinessVoxel build_emptiness_voxel(const Field& opacity, double density_shift, int res, int n_time_samples,
                                     double threshold, int threads) {
  const AxisDomain& domain = opacity.domain();
  return build_emptiness_voxel(
      [&](const Point4& p) {
        double raw = 0.0;
        opacity.query_normalized(normalize_point(domain, p), {&raw, 1});
        return softplus(raw + density_shift);
      },
      domain, res, n_time_samples, threshold, threads);
}

void save_voxel(const std::filesystem::path& path, const EmptinessVoxel& voxel) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const std::uint32_t version = 1;
  const auto res = static_cast<std::uint32_t>(voxel.res);
  os.write("HEXV", 4);
  os.write(reinterpret_cast<const char*>(&version), 4);
  os.write(reinterpret_cast<const char*>(&res), 4);
  const double bounds[8] = {voxel.domain.space_min[0], voxel.domain.space_min[1], voxel.domain.space_min[2],
                            voxel.domain.space_max[0], voxel.domain.space_max[1], voxel.domain.space_max[2],
                            voxel.domain.time_min, voxel.domain.time_max};
  os.write(reinterpret_cast<const char*>(bounds), sizeof(bounds));
  os.write(reinterpret_cast<const char*>(voxel.occupancy.data()), static_cast<std::streamsize>(voxel.occupancy.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

EmptinessVoxel load_voxel(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  std::uint32_t version = 0, res = 0;
  double bounds[8];
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), 4);
  is.read(reinterpret_cast<char*>(&res), 4);
  is.read(reinterpret_cast<char*>(bounds), sizeof(bounds));
  if (!is || std::memcmp(magic, "HEXV", 4) != 0 || version != 1 || res > 4096) {
    throw IoError(path.string() + " is not a voxel file");
  }
  EmptinessVoxel v;
  v.res = static_cast<int>(res);
  v.domain.space_min = Eigen::Vector3d(bounds[0], bounds[1], bounds[2]);
  v.domain.space_max = Eigen::Vector3d(bounds[3], bounds[4], bounds[5]);
  v.domain.time_min = bounds[6];
  v.domain.time_max = bounds[7];
  v.occupancy.resize(static_cast<std::size_t>(res) * res * res);
  is.read(reinterpret_cast<char*>(v.occupancy.data()), static_cast<std::streamsize>(v.occupancy.size()));
  if (!is) throw IoError("truncated voxel file " + path.string());
  return v;
}

}  // namespace hexplane
