#include "pedcloud/npbb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "pedcloud/detection_eval.hpp"
#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments population_moments(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Mean and SD of N(mu, sigma^2) restricted to [lo, hi].
std::optional<Moments> truncated_moments(double mu, double sigma, double lo, double hi) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    const double z = std_normal_cdf(b) - std_normal_cdf(a);
    if (!(z > 1e-300)) return std::nullopt;
    const double pa = std_normal_pdf(a);
    const double pb = std_normal_pdf(b);
    const double ta = std::isfinite(a) ? a * pa : 0.0;
    const double tb = std::isfinite(b) ? b * pb : 0.0;
    const double shift = (pa - pb) / z;
    const double var = sigma * sigma * (1.0 + (ta - tb) / z - shift * shift);
    if (!(var > 0.0)) return std::nullopt;
    return Moments{mu + sigma * shift, std::sqrt(var)};
}

struct DimensionKey {
    double mean, sd, upper;
    bool operator==(const DimensionKey&) const = default;
};

// Sampling the same targets over and over is the common case; remember the
// last solve per thread.
NormalParams underlying_normal(double mean, double sd, double upper) {
    thread_local DimensionKey last{-1.0, -1.0, -1.0};
    thread_local NormalParams cached;
    const DimensionKey key{mean, sd, upper};
    if (key == last) return cached;
    cached = match_truncated_moments(mean, sd, kMinBoxSide, upper).value_or(NormalParams{mean, sd});
    last = key;
    return cached;
}

double draw_dimension(double mean, double sd, double upper, std::mt19937_64& rng,
                      std::size_t max_attempts, const char* what) {
    if (sd == 0.0) {
        if (mean >= kMinBoxSide && mean <= upper) return mean;
        throw Infeasible(std::string("target ") + what + " outside [4, image size]");
    }
    const auto params = underlying_normal(mean, sd, upper);
    std::normal_distribution<double> dist(params.mu, params.sigma);
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        const double v = dist(rng);
        if (v >= kMinBoxSide && v <= upper) return v;
    }
    throw Infeasible(std::string("could not draw a ") + what + " within the image after " +
                     std::to_string(max_attempts) + " attempts");
}

}  // namespace

std::optional<NormalParams> match_truncated_moments(double mean, double sd, double lo, double hi) {
    if (!(sd > 0.0) || !(mean > lo && mean < hi)) return std::nullopt;
    // Fixed-point iteration: move mu by the mean error, scale sigma by the
    // SD ratio. Converges in a few dozen steps for feasible targets.
    NormalParams p{mean, sd};
    for (int iter = 0; iter < 500; ++iter) {
        const auto m = truncated_moments(p.mu, p.sigma, lo, hi);
        if (!m) return std::nullopt;
        const double dm = mean - m->mean;
        const double ratio = sd / m->sd;
        if (std::abs(dm) <= 1e-12 * mean && std::abs(ratio - 1.0) <= 1e-12) return p;
        p.mu += dm;
        p.sigma *= ratio;
        if (!std::isfinite(p.mu) || !(p.sigma > 0.0) || p.sigma > 1e6 * (hi - lo)) return std::nullopt;
    }
    const auto m = truncated_moments(p.mu, p.sigma, lo, hi);
    if (m && std::abs(m->mean - mean) <= 1e-9 * mean && std::abs(m->sd - sd) <= 1e-9 * sd) return p;
    return std::nullopt;
}

BoxStats fit_box_stats(std::span<const Box2D> boxes) {
    if (boxes.empty()) throw EmptyInput("fit_box_stats needs at least one box");
    std::vector<double> w, h, ar;
    w.reserve(boxes.size());
    h.reserve(boxes.size());
    ar.reserve(boxes.size());
    for (const auto& b : boxes) {
        w.push_back(b.width());
        h.push_back(b.height());
        ar.push_back(b.height() / b.width());
    }
    const auto mw = population_moments(w);
    const auto mh = population_moments(h);
    const auto ma = population_moments(ar);
    return {mw.mean, mw.sd, mh.mean, mh.sd, ma.mean, ma.sd};
}

std::size_t compute_npbb_count(std::size_t pbb_count, double pixel_fraction) {
    if (!(pixel_fraction > 0.0 && pixel_fraction < 1.0)) {
        throw InvalidFraction("pixel fraction must lie in (0, 1)");
    }
    const double n = static_cast<double>(pbb_count) * (1.0 - pixel_fraction) / pixel_fraction;
    return static_cast<std::size_t>(std::llround(n));
}

Box2D sample_box(const BoxStats& target, int image_w, int image_h, std::mt19937_64& rng,
                 std::size_t max_attempts) {
    if (image_w <= 0 || image_h <= 0) throw Infeasible("image dimensions must be positive");
    const double W = image_w;
    const double H = image_h;
    const double w = draw_dimension(target.mean_w, target.sd_w, W, rng, max_attempts, "width");
    const double h = draw_dimension(target.mean_h, target.sd_h, H, rng, max_attempts, "height");
    std::uniform_real_distribution<double> ux(0.0, W - w);
    std::uniform_real_distribution<double> uy(0.0, H - h);
    Box2D box;
    box.label = std::string(kNonPedestrian);
    box.x_min = W > w ? ux(rng) : 0.0;
    box.y_min = H > h ? uy(rng) : 0.0;
    box.x_max = std::min(box.x_min + w, W);
    box.y_max = std::min(box.y_min + h, H);
    return box;
}

std::vector<Box2D> generate_npbb_set(const GenConfig& config, std::span<const Box2D> pbbs,
                                     int image_w, int image_h) {
    if (config.max_pbb_iou < 0.0 || config.max_pbb_iou > 1.0 ||
        (config.max_pairwise_iou && (*config.max_pairwise_iou < 0.0 || *config.max_pairwise_iou > 1.0))) {
        throw Infeasible("overlap thresholds must lie in [0, 1]");
    }
    std::mt19937_64 rng(config.rng_seed);
    std::vector<Box2D> out;
    out.reserve(config.count);
    for (std::size_t n = 0; n < config.count; ++n) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < config.max_attempts_per_box && !placed; ++attempt) {
            Box2D cand = sample_box(config.target, image_w, image_h, rng, config.max_attempts_per_box);
            const bool clear_of_pbb = std::all_of(pbbs.begin(), pbbs.end(), [&](const Box2D& p) {
                return iou(cand, p) <= config.max_pbb_iou;
            });
            if (!clear_of_pbb) continue;
            if (config.max_pairwise_iou) {
                const double cap = *config.max_pairwise_iou;
                const bool clear = std::all_of(out.begin(), out.end(),
                                               [&](const Box2D& o) { return iou(cand, o) <= cap; });
                if (!clear) continue;
            }
            out.push_back(std::move(cand));
            placed = true;
        }
        if (!placed) {
            throw GenerationExhausted("box " + std::to_string(n) + " failed the overlap constraints " +
                                          std::to_string(config.max_attempts_per_box) + " times",
                                      std::move(out));
        }
    }
    return out;
}

std::uint64_t frame_seed(std::uint64_t seed, std::string_view frame_id) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : frame_id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return seed ^ h;
}

OverlapReport overlap_report(std::span<const Box2D> boxes) {
    OverlapReport r;
    double sum = 0.0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            const double v = iou(boxes[i], boxes[j]);
            sum += v;
            r.max_iou = std::max(r.max_iou, v);
            const auto bin = std::min<std::size_t>(static_cast<std::size_t>(v * 10.0), 9);
            ++r.histogram[bin];
            ++r.pairs;
        }
    }
    if (r.pairs > 0) r.mean_iou = sum / static_cast<double>(r.pairs);
    return r;
}

}  // namespace pedcloud
