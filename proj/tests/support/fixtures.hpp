#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pedcloud/classifier.hpp"
#include "pedcloud/types.hpp"

namespace pedcloud::fixtures {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Uniform in the cube [lo, hi]^3.
std::vector<Point3> random_cloud(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

/// Pinhole camera: f, principal point (cx, cy), no skew, no translation.
CameraProjection pinhole(double f, double cx, double cy, int width = 1224, int height = 1024);

/// Points that project strictly inside `box` under a pinhole camera, at
/// depths drawn from [near, far]. Built by inverting the projection.
std::vector<Point3> points_in_box(const Box2D& box, const CameraProjection& camera, std::size_t n,
                                  std::mt19937_64& rng, double near = 5.0, double far = 20.0);

/// Points whose projection falls in no box of `avoid` (and inside the image).
std::vector<Point3> points_outside(const std::vector<Box2D>& avoid, const CameraProjection& camera, std::size_t n,
                                   std::mt19937_64& rng);

Box2D make_box(double x0, double y0, double x1, double y1, std::string label = "pedestrian");
Box2D scored(Box2D b, double score);

/// "Head + body": an upright Gaussian body, round in plan view and cut off at
/// the ground, with a separate small head blob about four body SDs above
/// the body center.
std::vector<Point3> pedestrian_shape(std::size_t n, std::mt19937_64& rng);

/// One of: noisy plane, box surface, single anisotropic blob.
std::vector<Point3> non_pedestrian_shape(std::size_t n, std::mt19937_64& rng);

/// Normalized clusters, `positives` of them labeled 1, then `negatives`
/// labeled 0, in shuffled order.
std::vector<Sample> synthetic_samples(std::size_t positives, std::size_t negatives, std::size_t points,
                                      std::uint64_t seed);

/// Manifest with the per-split class counts of the reference pedestrian
/// dataset: scene "test" holds 345 / 3,040 clusters, eight other scenes
/// hold the remaining 8,665 / 75,486. 10% of pedestrian clusters are
/// manual-source. No files are referenced on disk.
ClusterManifest reference_split_manifest();

/// ModelNet40 per-class object counts (train + test) in listing form.
/// `reference_subset` removes three training objects to match the 12,308
/// objects of the reference binary dataset (see README).
std::string modelnet40_listing(bool reference_subset);

/// 1-layer SSG spec small enough for finite-difference checks.
NetSpec tiny_spec();

}  // namespace pedcloud::fixtures
