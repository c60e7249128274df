#pragma once

// Synthetic multi-view scenes.
//
// The world is a ground plane split into lateral bands (one class each) with
// axis-aligned boxes standing on it (box-like and pole-like classes). A row of
// cameras drives along +x looking forward-down. Each frame is ray cast into a
// per-pixel class; the feature map holds that class's prototype plus Gaussian
// noise and the label map holds the class, flipped to a wrong class with the
// configured probability.
//
// Layout rules keep different-class geometry apart so that, without noise,
// the pixel a labeled point rounds to always shows the point's own class:
//  - object points lie on the surface of their box shrunk by kSurfaceInset,
//    which exceeds the half-pixel footprint at working depths;
//  - ground points keep a distance from band borders and from every object
//    footprint (its shadow under steep viewing);
//  - objects keep shadow-sized gaps between each other.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hifanet/config.hpp"
#include "hifanet/errors.hpp"
#include "hifanet/geometry.hpp"
#include "hifanet/observation.hpp"
#include "json.hpp"

namespace hifanet::data {

using geo::CameraIntrinsics;
using geo::Pose;
using geo::Vec3;

struct PoseNoise {
  double sigma_rot_deg = 0.0;
  double sigma_trans = 0.0;  // meters

  bool operator==(const PoseNoise&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PoseNoise, sigma_rot_deg, sigma_trans)

struct SceneConfig {
  std::size_t class_count = 13;
  std::size_t points_per_class = 385;
  double world_extent = 100.0;   // scene length along the trajectory, meters
  double lateral_extent = 7.0;   // half-width of the populated strip, meters
  std::size_t camera_count = 50;
  double camera_spacing = 2.0;   // meters between consecutive cameras
  double camera_height = 12.0;
  double camera_pitch_deg = 80.0;  // below the horizon
  int image_width = 128;
  int image_height = 96;
  double focal_length = 90.0;    // pixels, fx = fy
  std::size_t feature_dim = 32;
  double feature_noise_sigma = 0.3;
  double label_corruption_rate = 0.15;
  PoseNoise pose_noise;
  std::size_t objects_per_class = 2;
  std::uint64_t seed = 1;
  std::uint64_t prototype_seed = 0;  // class prototypes are shared across layout seeds

  CameraIntrinsics intrinsics() const {
    return {focal_length, focal_length, (image_width - 1) / 2.0, (image_height - 1) / 2.0, image_width,
            image_height};
  }

  void validate() const {
    if (class_count == 0 || class_count > 65535) throw ConfigInvalid("scene: class_count must be in [1, 65535]");
    if (points_per_class == 0) throw ConfigInvalid("scene: points_per_class must be positive");
    if (camera_count == 0) throw ConfigInvalid("scene: camera_count must be positive");
    if (feature_dim == 0) throw ConfigInvalid("scene: feature_dim must be positive");
    if (objects_per_class == 0) throw ConfigInvalid("scene: objects_per_class must be positive");
    if (!(world_extent > 0) || !(lateral_extent > 0) || !(camera_spacing >= 0) || !(camera_height > 0))
      throw ConfigInvalid("scene: extents and camera height must be positive");
    if (!(camera_pitch_deg > 0 && camera_pitch_deg < 180)) throw ConfigInvalid("scene: pitch must be in (0, 180)");
    if (image_width <= 0 || image_height <= 0 || !(focal_length > 0))
      throw ConfigInvalid("scene: image size and focal length must be positive");
    if (!(feature_noise_sigma >= 0)) throw ConfigInvalid("scene: feature_noise_sigma must be non-negative");
    if (!(label_corruption_rate >= 0 && label_corruption_rate <= 1))
      throw ConfigInvalid("scene: label_corruption_rate must be in [0, 1]");
    if (!(pose_noise.sigma_rot_deg >= 0 && pose_noise.sigma_trans >= 0))
      throw ConfigInvalid("scene: pose noise must be non-negative");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SceneConfig, class_count, points_per_class, world_extent,
                                                lateral_extent, camera_count, camera_spacing, camera_height,
                                                camera_pitch_deg, image_width, image_height, focal_length,
                                                feature_dim, feature_noise_sigma, label_corruption_rate,
                                                pose_noise, objects_per_class, seed, prototype_seed)

enum class ClassShape { ground, box, pole };

struct Box {
  Vec3 lo, hi;
  std::uint16_t label = 0;
};

struct Band {
  double y_lo = 0.0, y_hi = 0.0;  // outermost bands are rendered as unbounded
  std::uint16_t label = 0;
};

struct SceneDataset {
  SceneConfig config;
  std::vector<Vec3> points;
  std::vector<std::uint16_t> labels;
  std::vector<Pose> poses;  // world -> camera, noise free
  CameraIntrinsics intrinsics;
  std::vector<geo::FeatureMap> feature_maps;
  std::vector<geo::LabelMap> label_maps;
  std::vector<float> prototypes;  // class_count x feature_dim
  std::vector<ClassShape> class_shapes;
  std::vector<Band> bands;
  std::vector<Box> boxes;
};

inline constexpr double kSurfaceInset = 0.2;   // object points sit this far inside their box
inline constexpr double kBandMargin = 0.4;     // ground points keep this far from band borders
inline constexpr double kShadowFactor = 1.3;   // occlusion reach per meter of object height
inline constexpr double kShadowSlack = 0.5;

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

inline std::size_t ground_class_count(std::size_t class_count) {
  const auto n = static_cast<std::size_t>(std::ceil(0.3 * double(class_count)));
  return std::clamp<std::size_t>(n, 1, class_count);
}

inline std::vector<ClassShape> class_shapes(std::size_t class_count) {
  const std::size_t ground = ground_class_count(class_count);
  std::vector<ClassShape> out(class_count);
  for (std::size_t c = 0; c < class_count; ++c)
    out[c] = c < ground ? ClassShape::ground : ((c - ground) % 2 == 0 ? ClassShape::box : ClassShape::pole);
  return out;
}

/// Forward-down camera at `center`: image right is world -y, the optical axis
/// is pitched `pitch_deg` below the +x direction.
inline Pose camera_pose(const Vec3& center, double pitch_deg) {
  const double p = geo::deg2rad(pitch_deg);
  const Vec3 forward(std::cos(p), 0.0, -std::sin(p));
  const Vec3 right(0.0, -1.0, 0.0);
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -(pose.rotation * center);
  return pose;
}

inline std::vector<Pose> camera_trajectory(const SceneConfig& cfg) {
  std::vector<Pose> poses;
  const double span = double(cfg.camera_count - 1) * cfg.camera_spacing;
  const double x0 = (cfg.world_extent - span) / 2.0;
  for (std::size_t i = 0; i < cfg.camera_count; ++i)
    poses.push_back(camera_pose(Vec3(x0 + double(i) * cfg.camera_spacing, 0.0, cfg.camera_height),
                                cfg.camera_pitch_deg));
  return poses;
}

inline std::vector<float> class_prototypes(std::size_t class_count, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x9a70));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<float> out(class_count * dim);
  std::vector<double> v(dim);
  for (std::size_t c = 0; c < class_count; ++c) {
    double norm = 0.0;
    for (double& x : v) {
      x = unit(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) out[c * dim + i] = static_cast<float>(v[i] / norm);
  }
  return out;
}

/// Horizontal distance from (x, y) to a box footprint; zero inside it.
inline double footprint_distance(const Box& b, double x, double y) {
  const double dx = std::max({b.lo.x() - x, 0.0, x - b.hi.x()});
  const double dy = std::max({b.lo.y() - y, 0.0, y - b.hi.y()});
  return std::hypot(dx, dy);
}

inline double footprint_gap(const Box& a, const Box& b) {
  const double dx = std::max({a.lo.x() - b.hi.x(), 0.0, b.lo.x() - a.hi.x()});
  const double dy = std::max({a.lo.y() - b.hi.y(), 0.0, b.lo.y() - a.hi.y()});
  return std::hypot(dx, dy);
}

inline double shadow_reach(const Box& b) { return kShadowFactor * (b.hi.z() - b.lo.z()) + kShadowSlack; }

/// Ray parameter of the first intersection with an axis-aligned box.
inline bool intersect_box(const Vec3& origin, const Vec3& dir, const Box& b, double& t_hit) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < b.lo[a] || origin[a] > b.hi[a]) return false;
      continue;
    }
    double ta = (b.lo[a] - origin[a]) / dir[a];
    double tb = (b.hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  t_hit = t0;
  return true;
}

inline std::uint16_t band_label(std::span<const Band> bands, double y) {
  for (std::size_t i = 0; i < bands.size(); ++i)
    if (y < bands[i].y_hi || i + 1 == bands.size()) return bands[i].label;
  return 0;
}

/// Class seen along a world ray; 0 when nothing is hit.
inline std::uint16_t cast_ray(const Vec3& origin, const Vec3& dir, std::span<const Band> bands,
                              std::span<const Box> boxes) {
  double best = std::numeric_limits<double>::infinity();
  std::uint16_t label = 0;
  bool hit = false;
  if (dir.z() < 0) {
    best = -origin.z() / dir.z();
    label = band_label(bands, origin.y() + best * dir.y());
    hit = true;
  }
  for (const Box& b : boxes) {
    double t;
    if (intersect_box(origin, dir, b, t) && t < best) {
      best = t;
      label = b.label;
      hit = true;
    }
  }
  return hit ? label : 0;
}

namespace detail {

inline std::vector<Band> layout_bands(const SceneConfig& cfg, std::span<const ClassShape> shapes, std::mt19937_64& rng) {
  std::vector<std::uint16_t> ground;
  for (std::size_t c = 0; c < shapes.size(); ++c)
    if (shapes[c] == ClassShape::ground) ground.push_back(static_cast<std::uint16_t>(c));
  std::shuffle(ground.begin(), ground.end(), rng);
  std::uniform_real_distribution<double> width(0.7, 1.3);
  std::vector<double> w(ground.size());
  for (double& x : w) x = width(rng);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Band> bands;
  double y = -cfg.lateral_extent;
  for (std::size_t i = 0; i < ground.size(); ++i) {
    const double next = y + 2.0 * cfg.lateral_extent * w[i] / total;
    bands.push_back({y, i + 1 == ground.size() ? cfg.lateral_extent : next, ground[i]});
    y = next;
  }
  return bands;
}

inline std::vector<Box> place_objects(const SceneConfig& cfg, std::span<const ClassShape> shapes, std::mt19937_64& rng) {
  std::vector<Box> boxes;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t c = 0; c < shapes.size(); ++c) {
    if (shapes[c] == ClassShape::ground) continue;
    double sx, sy, sz;
    if (shapes[c] == ClassShape::box) {
      sx = 2.5 + 2.5 * u01(rng);
      sy = 1.5 + 1.0 * u01(rng);
      sz = 1.0 + 1.0 * u01(rng);
    } else {
      sx = sy = 0.5 + 0.2 * u01(rng);
      sz = 2.5 + 1.0 * u01(rng);
    }
    for (std::size_t inst = 0; inst < cfg.objects_per_class; ++inst) {
      bool placed = false;
      for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
        const double x = 2.0 + sx / 2 + (cfg.world_extent - 4.0 - sx) * u01(rng);
        const double ylim = cfg.lateral_extent - sy / 2 - 0.5;
        if (ylim <= 0) break;
        const double y = -ylim + 2 * ylim * u01(rng);
        Box b{Vec3(x - sx / 2, y - sy / 2, 0.0), Vec3(x + sx / 2, y + sy / 2, sz), static_cast<std::uint16_t>(c)};
        placed = std::all_of(boxes.begin(), boxes.end(), [&](const Box& o) {
          return footprint_gap(b, o) >= std::max(shadow_reach(b), shadow_reach(o));
        });
        if (placed) boxes.push_back(b);
      }
      if (!placed) throw ConfigInvalid("scene too crowded: could not place every object");
    }
  }
  return boxes;
}

inline Vec3 sample_on_box(const Box& b, std::mt19937_64& rng) {
  const Vec3 lo = b.lo + Vec3::Constant(kSurfaceInset);
  const Vec3 hi = b.hi - Vec3::Constant(kSurfaceInset);
  const Vec3 s = hi - lo;
  // top, -x, +x, -y, +y faces (the bottom is never seen)
  const std::array<double, 5> area{s.x() * s.y(), s.y() * s.z(), s.y() * s.z(), s.x() * s.z(), s.x() * s.z()};
  std::discrete_distribution<int> face(area.begin(), area.end());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vec3 p(lo.x() + s.x() * u01(rng), lo.y() + s.y() * u01(rng), lo.z() + s.z() * u01(rng));
  switch (face(rng)) {
    case 0: p.z() = hi.z(); break;
    case 1: p.x() = lo.x(); break;
    case 2: p.x() = hi.x(); break;
    case 3: p.y() = lo.y(); break;
    default: p.y() = hi.y(); break;
  }
  return p;
}

}  // namespace detail

/// Renders one frame's true per-pixel classes.
inline geo::LabelMap render_classes(const Pose& pose, const CameraIntrinsics& intr, std::span<const Band> bands,
                                    std::span<const Box> boxes) {
  geo::LabelMap out(intr.height, intr.width, 1);
  const Vec3 origin = pose.center();
  for (int row = 0; row < intr.height; ++row)
    for (int col = 0; col < intr.width; ++col) {
      const Vec3 cam_dir((col - intr.cx) / intr.fx, (row - intr.cy) / intr.fy, 1.0);
      *out.pixel(row, col) = cast_ray(origin, pose.rotation.transpose() * cam_dir, bands, boxes);
    }
  return out;
}

inline SceneDataset generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  SceneDataset scene;
  scene.config = cfg;
  scene.intrinsics = cfg.intrinsics();
  scene.class_shapes = class_shapes(cfg.class_count);
  scene.prototypes = class_prototypes(cfg.class_count, cfg.feature_dim, cfg.prototype_seed);

  std::mt19937_64 layout_rng(derive_seed(cfg.seed, 1));
  scene.bands = detail::layout_bands(cfg, scene.class_shapes, layout_rng);
  scene.boxes = detail::place_objects(cfg, scene.class_shapes, layout_rng);

  std::mt19937_64 point_rng(derive_seed(cfg.seed, 2));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t c = 0; c < cfg.class_count; ++c) {
    const auto label = static_cast<std::uint16_t>(c);
    if (scene.class_shapes[c] == ClassShape::ground) {
      const Band& band = *std::find_if(scene.bands.begin(), scene.bands.end(),
                                       [&](const Band& b) { return b.label == label; });
      const double ylo = band.y_lo + (band.y_lo > -cfg.lateral_extent ? kBandMargin : 0.0);
      const double yhi = band.y_hi - (band.y_hi < cfg.lateral_extent ? kBandMargin : 0.0);
      if (!(yhi > ylo)) throw ConfigInvalid("scene: ground band too narrow");
      std::size_t made = 0;
      for (std::size_t attempt = 0; made < cfg.points_per_class; ++attempt) {
        if (attempt > 1000 * cfg.points_per_class) throw ConfigInvalid("scene: no room for ground points");
        const double x = cfg.world_extent * u01(point_rng);
        const double y = ylo + (yhi - ylo) * u01(point_rng);
        const bool clear = std::all_of(scene.boxes.begin(), scene.boxes.end(),
                                       [&](const Box& b) { return footprint_distance(b, x, y) >= shadow_reach(b); });
        if (!clear) continue;
        scene.points.emplace_back(x, y, 0.0);
        scene.labels.push_back(label);
        ++made;
      }
    } else {
      std::vector<const Box*> mine;
      for (const Box& b : scene.boxes)
        if (b.label == label) mine.push_back(&b);
      std::uniform_int_distribution<std::size_t> pick(0, mine.size() - 1);
      for (std::size_t i = 0; i < cfg.points_per_class; ++i) {
        scene.points.push_back(detail::sample_on_box(*mine[pick(point_rng)], point_rng));
        scene.labels.push_back(label);
      }
    }
  }

  scene.poses = camera_trajectory(cfg);
  const std::size_t d = cfg.feature_dim;
  for (std::size_t f = 0; f < scene.poses.size(); ++f) {
    geo::LabelMap truth = render_classes(scene.poses[f], scene.intrinsics, scene.bands, scene.boxes);
    geo::FeatureMap features(truth.height, truth.width, static_cast<int>(d));
    geo::LabelMap predicted(truth.height, truth.width, 1);
    std::mt19937_64 rng(derive_seed(cfg.seed, 3, f));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> flip(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> other(1, std::max<std::size_t>(cfg.class_count - 1, 1));
    for (std::size_t px = 0; px < truth.data.size(); ++px) {
      const std::uint16_t c = truth.data[px];
      const float* proto = scene.prototypes.data() + c * d;
      float* dst = features.data.data() + px * d;
      if (cfg.feature_noise_sigma > 0)
        for (std::size_t i = 0; i < d; ++i)
          dst[i] = static_cast<float>(proto[i] + cfg.feature_noise_sigma * noise(rng));
      else
        std::copy_n(proto, d, dst);
      std::uint16_t shown = c;
      if (cfg.class_count > 1 && cfg.label_corruption_rate > 0 && flip(rng) < cfg.label_corruption_rate)
        shown = static_cast<std::uint16_t>((c + other(rng)) % cfg.class_count);
      predicted.data[px] = shown;
    }
    scene.feature_maps.push_back(std::move(features));
    scene.label_maps.push_back(std::move(predicted));
  }
  return scene;
}

/// Camera poses as seen by the projection step: every camera's extrinsics
/// perturbed once, independently.
inline std::vector<Pose> noisy_poses(std::span<const Pose> poses, const PoseNoise& noise, std::uint64_t seed) {
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    out.push_back(geo::perturb_pose(poses[i], noise.sigma_rot_deg, noise.sigma_trans, derive_seed(seed, 4, i)));
  return out;
}

enum class Grouping { spatial, temporal };

/// Splits points into chains of m. Spatial: start at the unassigned point
/// with the smallest x and repeatedly append the nearest unassigned point to
/// the chain's tail. Temporal: order by `order_key` and cut consecutive runs.
/// Points left over after the last full group are dropped.
inline std::vector<std::vector<std::size_t>> group_points(std::span<const Vec3> points,
                                                          std::span<const std::size_t> candidates, std::size_t m,
                                                          Grouping mode = Grouping::spatial,
                                                          std::span<const std::size_t> order_key = {}) {
  std::vector<std::vector<std::size_t>> groups;
  if (m == 0) throw ConfigInvalid("group size must be positive");
  std::vector<std::size_t> pending(candidates.begin(), candidates.end());
  if (mode == Grouping::temporal) {
    std::stable_sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
      return order_key.empty() ? a < b : order_key[a] < order_key[b];
    });
    for (std::size_t i = 0; i + m <= pending.size(); i += m)
      groups.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(i),
                          pending.begin() + static_cast<std::ptrdiff_t>(i + m));
    return groups;
  }
  std::sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
    return points[a].x() != points[b].x() ? points[a].x() < points[b].x() : a < b;
  });
  std::vector<bool> used(pending.size(), false);
  std::size_t remaining = pending.size(), cursor = 0;
  while (remaining >= m) {
    while (used[cursor]) ++cursor;
    std::vector<std::size_t> chain{pending[cursor]};
    used[cursor] = true;
    --remaining;
    while (chain.size() < m) {
      const Vec3& tail = points[chain.back()];
      std::size_t best = pending.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = cursor; j < pending.size(); ++j) {
        if (used[j]) continue;
        const double dist = (points[pending[j]] - tail).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = j;
        }
      }
      used[best] = true;
      --remaining;
      chain.push_back(pending[best]);
    }
    groups.push_back(std::move(chain));
  }
  return groups;
}

struct ObservationBuild {
  std::vector<ObservationTensor> groups;
  std::vector<std::size_t> retained;  // indices of points with a full bag of frames
  std::size_t total_points = 0;

  double coverage() const { return total_points ? double(retained.size()) / double(total_points) : 0.0; }
};

/// Projects every point through (noisy) cameras, keeps points with a full bag
/// of N frames, groups them into M-point sequences and cuts k x k patches.
inline ObservationBuild build_observation_tensors(const SceneDataset& scene, const HiFANetConfig& cfg,
                                                  const PoseNoise& noise, std::uint64_t noise_seed,
                                                  Grouping mode = Grouping::spatial) {
  if (cfg.d != scene.config.feature_dim) throw ConfigInvalid("model feature width does not match the scene");
  if (cfg.class_count != scene.config.class_count) throw ConfigInvalid("model class count does not match the scene");
  if (cfg.k % 2 == 0 || cfg.k == 0) throw ConfigInvalid("patch size must be odd");
  const auto poses = noisy_poses(scene.poses, noise, noise_seed);
  ObservationBuild out;
  out.total_points = scene.points.size();
  out.retained = geo::filter_void_points(scene.points, poses, scene.intrinsics, cfg.n);

  std::vector<std::vector<std::size_t>> bags(scene.points.size());
  std::vector<std::size_t> first_frame(scene.points.size(), 0);
  for (std::size_t i : out.retained) {
    bags[i] = geo::select_bag_of_frames(scene.points[i], poses, scene.intrinsics, cfg.n);
    first_frame[i] = bags[i].front();
  }
  const auto chains = group_points(scene.points, out.retained, cfg.m, mode, first_frame);

  const int k = static_cast<int>(cfg.k);
  const std::size_t patch_len = cfg.k * cfg.k;
  for (const auto& chain : chains) {
    ObservationTensor obs(cfg.m, cfg.n, cfg.k, cfg.d);
    for (std::size_t p = 0; p < chain.size(); ++p) {
      const std::size_t idx = chain[p];
      const Vec3& point = scene.points[idx];
      for (int c = 0; c < 3; ++c) obs.coords[p * 3 + c] = point[c];
      obs.labels[p] = scene.labels[idx];
      for (std::size_t f = 0; f < cfg.n; ++f) {
        const std::size_t frame = bags[idx][f];
        obs.frame_ids[p * cfg.n + f] = static_cast<std::uint32_t>(frame);
        const geo::PixelCoord px = geo::project_point(point, poses[frame], scene.intrinsics);
        const auto feat = geo::extract_patch(scene.feature_maps[frame], px, k);
        std::copy(feat.begin(), feat.end(), obs.patch_features(p, f));
        const auto lab = geo::extract_patch(scene.label_maps[frame], px, k);
        std::copy_n(lab.begin(), patch_len, obs.patch_label_data(p, f));
      }
    }
    out.groups.push_back(std::move(obs));
  }
  return out;
}

}  // namespace hifanet::data
