#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

/// Width, height and aspect ratio (height / width) statistics, in pixels.
struct BoxStats {
    double mean_w = 0.0;
    double sd_w = 0.0;
    double mean_h = 0.0;
    double sd_h = 0.0;
    double mean_ar = 0.0;
    double sd_ar = 0.0;
};

/// Pedestrian box statistics measured on the reference dataset.
inline constexpr BoxStats kReferencePedestrianStats{95.3, 56.9, 266.3, 145.6, 2.9, 0.9};

struct GenConfig {
    BoxStats target;
    std::size_t count = 0;
    std::optional<double> max_pairwise_iou;
    double max_pbb_iou = 0.1;
    std::uint64_t rng_seed = 0;
    std::size_t max_attempts_per_box = 1000;
};

inline constexpr double kMinBoxSide = 4.0;

/// Population mean and SD of width, height and height/width.
/// Throws EmptyInput.
BoxStats fit_box_stats(std::span<const Box2D> boxes);

/// round(pbb_count * (1 - f) / f). Throws InvalidFraction unless 0 < f < 1.
std::size_t compute_npbb_count(std::size_t pbb_count, double pixel_fraction);

struct NormalParams {
    double mu = 0.0;
    double sigma = 0.0;
};

/// Location and scale of the normal whose restriction to [lo, hi] has the
/// given mean and SD. Returns nullopt when no such normal exists (the mean
/// sits too close to a bound for the requested spread).
std::optional<NormalParams> match_truncated_moments(double mean, double sd, double lo, double hi);

/// Width and height drawn independently from normals truncated to
/// [4 px, image dimension] by resampling. The underlying normals are chosen
/// so the truncated draws keep the target mean and SD; when that is
/// impossible the target values are used as-is. The top-left corner is
/// uniform over positions keeping the box inside the image. Throws
/// Infeasible when a dimension cannot be drawn within `max_attempts`.
Box2D sample_box(const BoxStats& target, int image_w, int image_h, std::mt19937_64& rng,
                 std::size_t max_attempts = 1000);

/// Rejection sampling of `config.count` non-pedestrian boxes. Throws
/// GenerationExhausted (carrying the boxes made so far) when one box fails
/// the overlap constraints max_attempts_per_box times.
std::vector<Box2D> generate_npbb_set(const GenConfig& config, std::span<const Box2D> pbbs,
                                     int image_w, int image_h);

/// Per-frame stream seed: seed XOR FNV-1a(frame_id).
std::uint64_t frame_seed(std::uint64_t seed, std::string_view frame_id);

struct OverlapReport {
    std::size_t pairs = 0;
    double mean_iou = 0.0;
    double max_iou = 0.0;
    std::array<std::size_t, 10> histogram{};  // IOU bins of width 0.1; 1.0 falls in the last
};

OverlapReport overlap_report(std::span<const Box2D> boxes);

}  // namespace pedcloud
