#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

enum class SampleMethod { random, voxel_grid, fps };

struct SampleSpec {
    SampleMethod method = SampleMethod::fps;
    std::size_t target_count = 1024;
    double voxel_size = 0.05;
    std::uint64_t rng_seed = 0;
};

enum class Axis { x, y, z };

/// Augmentation is applied to normalized clusters and is off unless a spec
/// is supplied.
struct AugmentSpec {
    Axis rotation_axis = Axis::z;
    double rotation_lo = 0.0;
    double rotation_hi = 0.0;
    double jitter_sigma = 0.01;
    double jitter_clip = 0.05;
    std::uint64_t rng_seed = 0;
};

/// k points drawn uniformly without replacement, kept in input order.
/// Throws TooFewPoints when k > n.
std::vector<Point3> random_sample(std::span<const Point3> points, std::size_t k, std::uint64_t rng_seed);

/// Voxel index of p is floor((p - min_corner) / voxel_size) per axis with
/// min_corner the per-axis minimum of the input. Returns one centroid per
/// occupied voxel, ordered lexicographically by voxel index.
std::vector<Point3> voxel_grid_filter(std::span<const Point3> points, double voxel_size);

/// Index of the point nearest the centroid (lowest index on ties).
std::size_t nearest_to_centroid(std::span<const Point3> points);

/// Greedy farthest point sampling. Starts at `seed_index` (default:
/// nearest_to_centroid), then repeatedly picks the point maximizing the
/// minimum distance to the selection, lowest index on ties. Returns indices
/// in selection order. Throws TooFewPoints unless 1 <= k <= n.
std::vector<std::size_t> fps(std::span<const Point3> points, std::size_t k,
                             std::optional<std::size_t> seed_index = std::nullopt);

std::vector<Point3> gather(std::span<const Point3> points, std::span<const std::size_t> indices);

/// Centers on the centroid and scales so the farthest point has norm 1
/// (never above 1). Throws DegenerateCluster when all points coincide.
std::vector<Point3> normalize(std::span<const Point3> points);

/// Rotation by theta ~ U[lo, hi] about the axis, then per-axis Gaussian
/// jitter clipped to +-jitter_clip.
std::vector<Point3> augment(std::span<const Point3> points, const AugmentSpec& spec, std::mt19937_64& rng);

/// Downsampling per `spec` followed by normalize.
std::vector<Point3> preprocess_cluster(std::span<const Point3> points, const SampleSpec& spec);

}  // namespace pedcloud
