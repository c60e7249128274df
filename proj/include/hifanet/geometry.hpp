#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hifanet/errors.hpp"

namespace hifanet::geo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform x_cam = rotation * x_world + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  /// Position of the frame origin expressed in world coordinates. For a
  /// world-to-camera pose this is the camera center.
  Vec3 center() const { return -(rotation.transpose() * translation); }

  double orthonormality_residual() const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  }
  bool is_valid(double tol = 1e-9) const {
    return orthonormality_residual() < tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

struct CameraIntrinsics {
  double fx = 500.0, fy = 500.0;
  double cx = 512.0, cy = 256.0;
  int width = 1024, height = 512;

  bool is_valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 &&
           cy < height;
  }
};

struct PixelCoord {
  double u = 0.0, v = 0.0;
  double depth = 0.0;
};

/// Integer pixel a real coordinate falls on, rounding half up.
struct PixelIndex {
  long col = 0, row = 0;
};

inline PixelIndex round_pixel(const PixelCoord& p) {
  return {static_cast<long>(std::floor(p.u + 0.5)), static_cast<long>(std::floor(p.v + 0.5))};
}

inline bool inside_image(const PixelCoord& p, int width, int height) {
  const PixelIndex px = round_pixel(p);
  return px.col >= 0 && px.col < width && px.row >= 0 && px.row < height;
}

inline constexpr double kMinDepth = 1e-9;

inline PixelCoord project_point(const Vec3& point, const Pose& pose, const CameraIntrinsics& intr) {
  const Vec3 cam = pose.apply(point);
  if (!(cam.z() > kMinDepth))
    throw BehindCamera("point has camera-frame depth " + std::to_string(cam.z()));
  return {intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy, cam.z()};
}

/// Rotation from Euler angles (radians) applied about X, then Y, then Z.
inline Mat3 euler_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Vec3::UnitZ()) * Eigen::AngleAxisd(ay, Vec3::UnitY()) *
          Eigen::AngleAxisd(ax, Vec3::UnitX()))
      .toRotationMatrix();
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Calibration-style pose error: one Gaussian draw per Euler angle and per
/// translation axis. The noise rotation is applied on the left (R' = Rn R).
inline Pose perturb_pose(const Pose& pose, double sigma_rot_deg, double sigma_trans, std::uint64_t seed) {
  if (sigma_rot_deg < 0 || sigma_trans < 0)
    throw ConfigInvalid("pose noise sigmas must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sr = deg2rad(sigma_rot_deg);
  const double ax = sr * unit(rng), ay = sr * unit(rng), az = sr * unit(rng);
  Vec3 dt;
  for (int i = 0; i < 3; ++i) dt[i] = sigma_trans * unit(rng);

  Pose out = pose;
  if (sigma_rot_deg > 0) out.rotation = euler_xyz(ax, ay, az) * pose.rotation;
  if (sigma_trans > 0) out.translation = pose.translation + dt;
  return out;
}

struct ProjectionErrorRow {
  double distance = 0.0;
  double mean_error_px = 0.0;
  double p95_error_px = 0.0;
};

/// Lateral offset (meters, camera x axis) of the test point used by
/// projection_error_study.
inline constexpr double kStudyLateralOffset = 1.0;

/// Pixel displacement of a test point at each distance when the
/// camera pose is perturbed, over `trials` seeded draws.
inline std::vector<ProjectionErrorRow> projection_error_study(std::span<const double> distances,
                                                              double sigma_rot_deg, double sigma_trans,
                                                              const CameraIntrinsics& intr, int trials,
                                                              std::uint64_t seed) {
  if (trials < 100) throw ConfigInvalid("projection_error_study needs at least 100 trials");
  std::vector<ProjectionErrorRow> rows;
  std::seed_seq seq{seed};
  std::mt19937_64 seeder(seq);
  // Every distance sees the same pose draws, so rows differ only by geometry.
  std::vector<std::uint64_t> trial_seeds(static_cast<std::size_t>(trials));
  for (auto& s : trial_seeds) s = seeder();
  for (double distance : distances) {
    if (!(distance > 0)) throw ConfigInvalid("distances must be positive");
    const Vec3 point(kStudyLateralOffset, 0.0, distance);
    const Pose clean = Pose::identity();
    const PixelCoord ref = project_point(point, clean, intr);
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
      const Pose noisy = perturb_pose(clean, sigma_rot_deg, sigma_trans, trial_seeds[static_cast<std::size_t>(t)]);
      const Vec3 cam = noisy.apply(point);
      if (!(cam.z() > kMinDepth)) continue;
      const PixelCoord p = project_point(point, noisy, intr);
      errors.push_back(std::hypot(p.u - ref.u, p.v - ref.v));
    }
    ProjectionErrorRow row{distance, 0.0, 0.0};
    if (!errors.empty()) {
      double total = 0.0;
      for (double e : errors) total += e;
      row.mean_error_px = total / static_cast<double>(errors.size());
      std::sort(errors.begin(), errors.end());
      // nearest-rank percentile
      const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(errors.size())));
      row.p95_error_px = errors[std::max<std::size_t>(rank, 1) - 1];
    }
    rows.push_back(row);
  }
  return rows;
}

struct RegisteredPoints {
  std::vector<Vec3> points;
  std::vector<std::size_t> frame_of_origin;
};

/// Moves every frame's points into the common world frame. `odometry[i]` maps
/// frame-i coordinates to world coordinates.
inline RegisteredPoints register_frames(const std::vector<std::vector<Vec3>>& frames,
                                        const std::vector<Pose>& odometry) {
  if (frames.size() != odometry.size())
    throw MismatchedLengths(std::to_string(frames.size()) + " frames but " +
                            std::to_string(odometry.size()) + " odometry poses");
  RegisteredPoints out;
  for (std::size_t f = 0; f < frames.size(); ++f)
    for (const Vec3& p : frames[f]) {
      out.points.push_back(odometry[f].apply(p));
      out.frame_of_origin.push_back(f);
    }
  return out;
}

/// Visible-frame test shared by frame selection and patch extraction: the
/// projection succeeds and its rounded pixel lies inside the image.
inline bool observes(const Vec3& point, const Pose& pose, const CameraIntrinsics& intr, PixelCoord* out = nullptr) {
  const Vec3 cam = pose.apply(point);
  if (!(cam.z() > kMinDepth)) return false;
  const PixelCoord p{intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy, cam.z()};
  if (!inside_image(p, intr.width, intr.height)) return false;
  if (out) *out = p;
  return true;
}

/// Up to n observing frames ordered by distance from the point to the camera
/// center (ties by index). An empty result marks a void point.
inline std::vector<std::size_t> select_bag_of_frames(const Vec3& point, std::span<const Pose> camera_poses,
                                                     const CameraIntrinsics& intr, std::size_t n) {
  if (n == 0) throw ConfigInvalid("bag-of-frames size must be at least 1");
  struct Candidate {
    double dist;
    std::size_t index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < camera_poses.size(); ++i)
    if (observes(point, camera_poses[i], intr))
      candidates.push_back({(point - camera_poses[i].center()).norm(), i});
  const std::size_t keep = std::min(n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.dist != b.dist ? a.dist < b.dist : a.index < b.index;
                    });
  std::vector<std::size_t> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(candidates[i].index);
  return out;
}

/// Indices of points that find exactly n observing frames.
inline std::vector<std::size_t> filter_void_points(std::span<const Vec3> points, std::span<const Pose> camera_poses,
                                                   const CameraIntrinsics& intr, std::size_t n) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (select_bag_of_frames(points[i], camera_poses, intr, n).size() == n) kept.push_back(i);
  return kept;
}

/// H x W x channels image stored row-major, channels fastest.
template <typename T>
struct Image {
  int height = 0, width = 0, channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int h, int w, int c, T fill = T{})
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {}

  T* pixel(int row, int col) { return data.data() + (static_cast<std::size_t>(row) * width + col) * channels; }
  const T* pixel(int row, int col) const {
    return data.data() + (static_cast<std::size_t>(row) * width + col) * channels;
  }
};

using FeatureMap = Image<float>;
using LabelMap = Image<std::uint16_t>;

/// k x k window (row-major, channels fastest) around the rounded center.
/// Cells outside the image repeat the nearest edge pixel.
template <typename T>
std::vector<T> extract_patch(const Image<T>& map, const PixelCoord& center, int k) {
  if (k < 1 || k % 2 == 0) throw ConfigInvalid("patch size must be odd and positive, got " + std::to_string(k));
  if (map.height <= 0 || map.width <= 0 || map.channels <= 0) throw ConfigInvalid("empty feature map");
  const PixelIndex c = round_pixel(center);
  if (c.col < 0 || c.col >= map.width || c.row < 0 || c.row >= map.height)
    throw CenterOutsideImage("patch center (" + std::to_string(c.col) + ", " + std::to_string(c.row) +
                             ") outside " + std::to_string(map.width) + "x" + std::to_string(map.height));
  const int half = k / 2;
  std::vector<T> out(static_cast<std::size_t>(k) * k * map.channels);
  T* dst = out.data();
  for (int dr = -half; dr <= half; ++dr) {
    const int row = std::clamp(static_cast<int>(c.row) + dr, 0, map.height - 1);
    for (int dc = -half; dc <= half; ++dc) {
      const int col = std::clamp(static_cast<int>(c.col) + dc, 0, map.width - 1);
      dst = std::copy_n(map.pixel(row, col), map.channels, dst);
    }
  }
  return out;
}

}  // namespace hifanet::geo
