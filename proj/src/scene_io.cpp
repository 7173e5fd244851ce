#include "splat/scene_io.hpp"

#include <Eigen/Dense>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splat {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  out.write(reinterpret_cast<const char*>(&f), 4);
}

double read_f32(std::istream& in) {
  float f = 0.0f;
  in.read(reinterpret_cast<char*>(&f), 4);
  return f;
}

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace

void save_checkpoint(const GaussianCloud& cloud, const std::string& path,
                     const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, cloud.size());
  for (int c = 0; c < 3; ++c) write_f32(out, cloud.global_light[c]);
  write_u32(out, uint32_t(config_echo.size()));
  out.write(config_echo.data(), std::streamsize(config_echo.size()));

  auto write_each = [&](auto&& get) {
    for (const auto& g : cloud.gaussians) get(g);
  };
  write_each([&](const Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) write_f32(out, g.position[c]);
  });
  write_each([&](const Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) write_f32(out, g.log_scale[c]);
  });
  write_each([&](const Gaussian3D& g) {
    for (int c = 0; c < 4; ++c) write_f32(out, g.rotation[c]);
  });
  write_each([&](const Gaussian3D& g) { write_f32(out, g.opacity_logit); });
  write_each([&](const Gaussian3D& g) {
    for (int r = 0; r < kShCoeffCount; ++r)
      for (int c = 0; c < 3; ++c) write_f32(out, g.sh_diffuse(r, c));
  });
  write_each([&](const Gaussian3D& g) {
    for (int r = 0; r < kShCoeffCount; ++r)
      for (int c = 0; c < 3; ++c) write_f32(out, g.sh_specular(r, c));
  });
  write_each([&](const Gaussian3D& g) { write_f32(out, g.specular_logit); });
  write_each([&](const Gaussian3D& g) { write_f32(out, g.visibility); });
  write_each([&](const Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) write_f32(out, g.local_light[c]);
  });
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint");
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("load_checkpoint: unsupported version " +
                             std::to_string(version));
  }
  const uint64_t count = read_u64(in);
  CheckpointData data;
  for (int c = 0; c < 3; ++c) data.cloud.global_light[c] = read_f32(in);
  const uint32_t echo_len = read_u32(in);
  data.config_echo.resize(echo_len);
  in.read(data.config_echo.data(), echo_len);

  data.cloud.gaussians.resize(count);
  auto read_each = [&](auto&& set) {
    for (auto& g : data.cloud.gaussians) set(g);
  };
  read_each([&](Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) g.position[c] = read_f32(in);
  });
  read_each([&](Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) g.log_scale[c] = read_f32(in);
  });
  read_each([&](Gaussian3D& g) {
    for (int c = 0; c < 4; ++c) g.rotation[c] = read_f32(in);
  });
  read_each([&](Gaussian3D& g) { g.opacity_logit = read_f32(in); });
  read_each([&](Gaussian3D& g) {
    for (int r = 0; r < kShCoeffCount; ++r)
      for (int c = 0; c < 3; ++c) g.sh_diffuse(r, c) = read_f32(in);
  });
  read_each([&](Gaussian3D& g) {
    for (int r = 0; r < kShCoeffCount; ++r)
      for (int c = 0; c < 3; ++c) g.sh_specular(r, c) = read_f32(in);
  });
  read_each([&](Gaussian3D& g) { g.specular_logit = read_f32(in); });
  read_each([&](Gaussian3D& g) { g.visibility = read_f32(in); });
  read_each([&](Gaussian3D& g) {
    for (int c = 0; c < 3; ++c) g.local_light[c] = read_f32(in);
  });
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  data.cloud.update_bbox();
  return data;
}

namespace {

constexpr double kShC0 = 0.28209479177387814;

Gaussian3D point_to_gaussian(const Vec3& p, const Vec3* color) {
  Gaussian3D g;
  g.position = p;
  g.opacity_logit = logit(0.1);
  g.specular_logit = logit(0.1);
  if (color) {
    for (int c = 0; c < 3; ++c) g.sh_diffuse(0, c) = ((*color)[c] - 0.5) / kShC0;
  }
  return g;
}

void assign_neighbor_scales(GaussianCloud& cloud) {
  const size_t n = cloud.size();
  for (size_t i = 0; i < n; ++i) {
    // Brute-force 3 nearest neighbors; point files are desk scale.
    double best[3] = {1e300, 1e300, 1e300};
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d =
          (cloud.gaussians[j].position - cloud.gaussians[i].position).norm();
      if (d < best[0]) {
        best[2] = best[1];
        best[1] = best[0];
        best[0] = d;
      } else if (d < best[1]) {
        best[2] = best[1];
        best[1] = d;
      } else if (d < best[2]) {
        best[2] = d;
      }
    }
    int found = 0;
    double sum = 0.0;
    for (double d : best) {
      if (d < 1e300) {
        sum += d;
        ++found;
      }
    }
    const double mean = found > 0 ? sum / found : 0.1;
    cloud.gaussians[i].log_scale =
        Vec3::Constant(std::log(std::max(mean, kScaleFloor)));
  }
}

GaussianCloud load_points_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_points: cannot open " + path);
  GaussianCloud cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      throw std::runtime_error("load_points: malformed record at " + path +
                               ":" + std::to_string(line_no));
    }
    double r, g, b;
    if (ss >> r) {
      if (!(ss >> g >> b)) {
        throw std::runtime_error("load_points: incomplete color at " + path +
                                 ":" + std::to_string(line_no));
      }
      const Vec3 color(r, g, b);
      cloud.gaussians.push_back(point_to_gaussian(Vec3(x, y, z), &color));
    } else {
      cloud.gaussians.push_back(point_to_gaussian(Vec3(x, y, z), nullptr));
    }
  }
  return cloud;
}

GaussianCloud load_points_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_points: cannot open " + path);
  const uint32_t count = read_u32(in);
  const uint32_t has_color = read_u32(in);
  if (!in || has_color > 1) {
    throw std::runtime_error("load_points: malformed header at " + path +
                             " offset 0");
  }
  GaussianCloud cloud;
  cloud.gaussians.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Vec3 p, c;
    for (int k = 0; k < 3; ++k) p[k] = read_f32(in);
    if (has_color) {
      for (int k = 0; k < 3; ++k) c[k] = read_f32(in);
    }
    if (!in) {
      throw std::runtime_error("load_points: truncated record at " + path +
                               " offset " + std::to_string(size_t(in.tellg())));
    }
    cloud.gaussians.push_back(point_to_gaussian(p, has_color ? &c : nullptr));
  }
  return cloud;
}

}  // namespace

GaussianCloud load_points(const std::string& path) {
  GaussianCloud cloud = path.ends_with(".bin") ? load_points_binary(path)
                                               : load_points_text(path);
  assign_neighbor_scales(cloud);
  cloud.update_bbox();
  return cloud;
}

std::vector<CameraRecord> load_cameras(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_cameras: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::vector<CameraRecord> cams;
  CameraRecord current;
  bool have_view = false, have_pose = false;
  std::string line;
  int line_no = 0;

  auto flush = [&] {
    if (!have_view) return;
    if (!have_pose) {
      throw std::runtime_error("load_cameras: view without pose in " + path);
    }
    current.camera.validate();
    cams.push_back(current);
    current = CameraRecord{};
    have_view = have_pose = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "view") {
      flush();
      Camera& c = current.camera;
      if (!(ss >> c.width >> c.height >> c.fx >> c.fy >> c.cx >> c.cy >>
            c.near >> c.far)) {
        throw std::runtime_error("load_cameras: malformed view at " + path +
                                 ":" + std::to_string(line_no));
      }
      have_view = true;
    } else if (tag == "pose") {
      Mat3 r;
      Vec3 t;
      if (!(ss >> r(0, 0) >> r(0, 1) >> r(0, 2) >> t[0] >> r(1, 0) >> r(1, 1) >>
            r(1, 2) >> t[1] >> r(2, 0) >> r(2, 1) >> r(2, 2) >> t[2])) {
        throw std::runtime_error("load_cameras: malformed pose at " + path +
                                 ":" + std::to_string(line_no));
      }
      const double drift = (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
      if (drift > 1e-3) {
        throw std::runtime_error("load_cameras: rotation drift " +
                                 std::to_string(drift) + " beyond tolerance at " +
                                 path + ":" + std::to_string(line_no));
      }
      if (drift > 1e-12) {
        Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 fixed = svd.matrixU() * svd.matrixV().transpose();
        if (fixed.determinant() < 0) {
          Mat3 flip = Mat3::Identity();
          flip(2, 2) = -1;
          fixed = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        r = fixed;
      }
      current.camera.rotation = r;
      current.camera.translation = t;
      have_pose = true;
    } else if (tag == "image") {
      std::string rel;
      ss >> rel;
      current.image_path = (base / rel).string();
    } else {
      throw std::runtime_error("load_cameras: unknown tag '" + tag + "' at " +
                               path + ":" + std::to_string(line_no));
    }
  }
  flush();
  return cams;
}

void save_cameras(const std::vector<CameraRecord>& cams, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_cameras: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  out.precision(17);
  out << "# splat cameras v1\n";
  for (const auto& rec : cams) {
    const Camera& c = rec.camera;
    out << "view " << c.width << " " << c.height << " " << c.fx << " " << c.fy
        << " " << c.cx << " " << c.cy << " " << c.near << " " << c.far << "\n";
    out << "pose";
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) out << " " << c.rotation(row, col);
      out << " " << c.translation[row];
    }
    out << "\n";
    if (!rec.image_path.empty()) {
      out << "image "
          << std::filesystem::proximate(rec.image_path, base).string() << "\n";
    }
  }
  if (!out) throw std::runtime_error("save_cameras: write failed for " + path);
}

}  // namespace splat
