#include "pedcloud/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>

#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace {

double sq_dist(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

double norm(const Point3& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }

Point3 centroid(std::span<const Point3> points) {
    Point3 c;
    for (const auto& p : points) {
        c.x += p.x;
        c.y += p.y;
        c.z += p.z;
    }
    const double n = static_cast<double>(points.size());
    return {c.x / n, c.y / n, c.z / n};
}

}  // namespace

std::vector<Point3> random_sample(std::span<const Point3> points, std::size_t k, std::uint64_t rng_seed) {
    if (k > points.size()) {
        throw TooFewPoints("random_sample: asked for " + std::to_string(k) + " of " +
                           std::to_string(points.size()) + " points");
    }
    std::mt19937_64 rng(rng_seed);
    std::vector<Point3> out;
    out.reserve(k);
    // Selection sampling over a forward range keeps the input order.
    std::sample(points.begin(), points.end(), std::back_inserter(out), k, rng);
    return out;
}

std::vector<Point3> voxel_grid_filter(std::span<const Point3> points, double voxel_size) {
    if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_size must be positive");
    if (points.empty()) return {};
    Point3 lo = points.front();
    for (const auto& p : points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
    }
    using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    struct Acc {
        double x = 0, y = 0, z = 0;
        std::size_t n = 0;
    };
    std::map<Key, Acc> voxels;
    for (const auto& p : points) {
        const Key key{static_cast<std::int64_t>(std::floor((p.x - lo.x) / voxel_size)),
                      static_cast<std::int64_t>(std::floor((p.y - lo.y) / voxel_size)),
                      static_cast<std::int64_t>(std::floor((p.z - lo.z) / voxel_size))};
        auto& a = voxels[key];
        a.x += p.x;
        a.y += p.y;
        a.z += p.z;
        ++a.n;
    }
    std::vector<Point3> out;
    out.reserve(voxels.size());
    for (const auto& [key, a] : voxels) {
        const double n = static_cast<double>(a.n);
        out.push_back({a.x / n, a.y / n, a.z / n});
    }
    return out;
}

std::size_t nearest_to_centroid(std::span<const Point3> points) {
    if (points.empty()) throw TooFewPoints("nearest_to_centroid on an empty cloud");
    const Point3 c = centroid(points);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = sq_dist(points[i], c);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> fps(std::span<const Point3> points, std::size_t k,
                             std::optional<std::size_t> seed_index) {
    const std::size_t n = points.size();
    if (k < 1 || k > n) {
        throw TooFewPoints("fps: cannot select " + std::to_string(k) + " of " + std::to_string(n) + " points");
    }
    const std::size_t seed = seed_index.value_or(nearest_to_centroid(points));
    if (seed >= n) throw std::out_of_range("fps: seed index out of range");

    std::vector<std::size_t> selected;
    selected.reserve(k);
    selected.push_back(seed);
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::vector<bool> taken(n, false);
    taken[seed] = true;
    std::size_t last = seed;
    while (selected.size() < k) {
        std::size_t best = n;
        double best_d = -1.0;
        const Point3 anchor = points[last];
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double d = std::min(min_d[i], sq_dist(points[i], anchor));
            min_d[i] = d;
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        taken[best] = true;
        selected.push_back(best);
        last = best;
    }
    return selected;
}

std::vector<Point3> gather(std::span<const Point3> points, std::span<const std::size_t> indices) {
    std::vector<Point3> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(points[i]);
    return out;
}

std::vector<Point3> normalize(std::span<const Point3> points) {
    if (points.empty()) throw DegenerateCluster("cannot normalize an empty cluster");
    const Point3 c = centroid(points);
    std::vector<Point3> out;
    out.reserve(points.size());
    double scale = 0.0;
    for (const auto& p : points) {
        out.push_back({p.x - c.x, p.y - c.y, p.z - c.z});
        scale = std::max(scale, norm(out.back()));
    }
    if (!(scale > 0.0)) throw DegenerateCluster("all points coincide; cannot scale to the unit sphere");
    // Division can leave the farthest norm an ulp above 1; shrink until it is not.
    for (int round = 0; round < 8 && scale > 0.0; ++round) {
        double max_norm = 0.0;
        for (auto& p : out) {
            p.x /= scale;
            p.y /= scale;
            p.z /= scale;
            max_norm = std::max(max_norm, norm(p));
        }
        if (max_norm <= 1.0) break;
        scale = std::nextafter(max_norm, std::numeric_limits<double>::infinity());
    }
    return out;
}

std::vector<Point3> augment(std::span<const Point3> points, const AugmentSpec& spec, std::mt19937_64& rng) {
    if (spec.jitter_sigma < 0.0 || spec.jitter_clip < 0.0) {
        throw std::invalid_argument("jitter sigma and clip must be non-negative");
    }
    double theta = spec.rotation_lo;
    if (spec.rotation_hi > spec.rotation_lo) {
        theta = std::uniform_real_distribution<double>(spec.rotation_lo, spec.rotation_hi)(rng);
    }
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    std::normal_distribution<double> noise(0.0, spec.jitter_sigma > 0.0 ? spec.jitter_sigma : 1.0);
    auto jitter = [&]() {
        if (spec.jitter_sigma == 0.0) return 0.0;
        return std::clamp(noise(rng), -spec.jitter_clip, spec.jitter_clip);
    };

    std::vector<Point3> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        Point3 r;
        switch (spec.rotation_axis) {
            case Axis::x: r = {p.x, c * p.y - s * p.z, s * p.y + c * p.z}; break;
            case Axis::y: r = {c * p.x + s * p.z, p.y, -s * p.x + c * p.z}; break;
            case Axis::z: r = {c * p.x - s * p.y, s * p.x + c * p.y, p.z}; break;
        }
        if (theta == 0.0) r = p;
        r.x += jitter();
        r.y += jitter();
        r.z += jitter();
        out.push_back(r);
    }
    return out;
}

std::vector<Point3> preprocess_cluster(std::span<const Point3> points, const SampleSpec& spec) {
    switch (spec.method) {
        case SampleMethod::random:
            return normalize(random_sample(points, spec.target_count, spec.rng_seed));
        case SampleMethod::voxel_grid:
            return normalize(voxel_grid_filter(points, spec.voxel_size));
        case SampleMethod::fps: {
            const auto idx = fps(points, spec.target_count);
            return normalize(gather(points, idx));
        }
    }
    return {};
}

}  // namespace pedcloud
