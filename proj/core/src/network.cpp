#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "network_internal.hpp"
#include "pedcloud/classifier.hpp"
#include "pedcloud/errors.hpp"
#include "pedcloud/sampling.hpp"

namespace pedcloud {

// --- specs -----------------------------------------------------------------

NetSpec default_ssg_spec() {
    NetSpec s;
    s.input_points = 1024;
    s.sa_layers = {
        {512, {{0.2, 32, {64, 64, 128}}}},
        {128, {{0.4, 64, {128, 128, 256}}}},
    };
    s.global_mlp_widths = {256, 512, 1024};
    s.head_widths = {512, 256, 2};
    s.dropout_keep = 0.5;
    return s;
}

NetSpec default_msg_spec() {
    NetSpec s;
    s.input_points = 1024;
    s.sa_layers = {
        {512, {{0.1, 16, {32, 32, 64}}, {0.2, 32, {64, 64, 128}}, {0.4, 128, {64, 96, 128}}}},
        {128, {{0.2, 32, {64, 64, 128}}, {0.4, 64, {128, 128, 256}}, {0.8, 128, {128, 128, 256}}}},
    };
    s.global_mlp_widths = {256, 512, 1024};
    s.head_widths = {512, 256, 2};
    s.dropout_keep = 0.5;
    return s;
}

NetSpec reduced_ssg_spec() {
    NetSpec s;
    s.input_points = 1024;
    s.sa_layers = {
        {32, {{0.3, 16, {16, 16, 32}}}},
        {8, {{0.6, 8, {32, 32, 64}}}},
    };
    s.global_mlp_widths = {64, 128};
    s.head_widths = {32, 2};
    s.dropout_keep = 0.8;
    return s;
}

void validate_spec(const NetSpec& spec) {
    auto fail = [](const std::string& why) { throw std::invalid_argument("invalid NetSpec: " + why); };
    if (spec.input_points < 1) fail("input_points must be >= 1");
    std::size_t level = spec.input_points;
    for (std::size_t l = 0; l < spec.sa_layers.size(); ++l) {
        const auto& sa = spec.sa_layers[l];
        const auto at = "sa_layers[" + std::to_string(l) + "]";
        if (sa.num_centroids < 1) fail(at + ".num_centroids must be >= 1");
        if (sa.num_centroids > level) fail(at + ".num_centroids exceeds the points of its input level");
        if (sa.branches.empty()) fail(at + " has no branches");
        for (const auto& b : sa.branches) {
            if (!(b.radius > 0.0) || !std::isfinite(b.radius)) fail(at + " branch radius must be > 0");
            if (b.max_neighbors < 1) fail(at + " branch max_neighbors must be >= 1");
            if (b.mlp_widths.empty()) fail(at + " branch has no MLP widths");
            if (std::find(b.mlp_widths.begin(), b.mlp_widths.end(), 0u) != b.mlp_widths.end()) {
                fail(at + " branch MLP width 0");
            }
        }
        level = sa.num_centroids;
    }
    if (spec.global_mlp_widths.empty()) fail("global_mlp_widths is empty");
    if (spec.head_widths.empty()) fail("head_widths is empty");
    for (auto w : spec.global_mlp_widths) {
        if (w < 1) fail("global MLP width 0");
    }
    for (auto w : spec.head_widths) {
        if (w < 1) fail("head width 0");
    }
    if (spec.num_classes() < 2) fail("need at least two classes");
    if (!(spec.dropout_keep > 0.0 && spec.dropout_keep <= 1.0)) fail("dropout_keep must lie in (0, 1]");
}

std::vector<LayerShape> layer_shapes(const NetSpec& spec) {
    std::vector<LayerShape> shapes;
    std::size_t channels = 0;
    for (const auto& sa : spec.sa_layers) {
        std::size_t out_channels = 0;
        for (const auto& b : sa.branches) {
            std::size_t in = 3 + channels;
            for (auto w : b.mlp_widths) {
                shapes.push_back({in, w});
                in = w;
            }
            out_channels += b.mlp_widths.back();
        }
        channels = out_channels;
    }
    std::size_t in = 3 + channels;
    for (auto w : spec.global_mlp_widths) {
        shapes.push_back({in, w});
        in = w;
    }
    for (auto w : spec.head_widths) {
        shapes.push_back({in, w});
        in = w;
    }
    return shapes;
}

// --- parameters ------------------------------------------------------------

template <typename Scalar>
Scalar& NetParamsT<Scalar>::coordinate(std::size_t index) {
    for (auto& l : layers) {
        if (index < l.weight.size()) return l.weight[index];
        index -= l.weight.size();
        if (index < l.bias.size()) return l.bias[index];
        index -= l.bias.size();
    }
    throw std::out_of_range("parameter coordinate out of range");
}

template <typename Scalar>
Scalar NetParamsT<Scalar>::coordinate(std::size_t index) const {
    return const_cast<NetParamsT*>(this)->coordinate(index);
}

template struct NetParamsT<double>;
template struct NetParamsT<long double>;

NetParams init_params(const NetSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    std::mt19937_64 rng(seed);
    NetParams p;
    for (const auto& s : layer_shapes(spec)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer<double> d{s.in, s.out, std::vector<double>(s.in * s.out), std::vector<double>(s.out, 0.0)};
        for (auto& w : d.weight) w = dist(rng);
        p.layers.push_back(std::move(d));
    }
    return p;
}

template <typename Scalar>
NetParamsT<Scalar> zeros_like(const NetParamsT<Scalar>& params) {
    NetParamsT<Scalar> out;
    out.layers.reserve(params.layers.size());
    for (const auto& l : params.layers) {
        out.layers.push_back({l.in, l.out, std::vector<Scalar>(l.weight.size(), Scalar{0}),
                              std::vector<Scalar>(l.bias.size(), Scalar{0})});
    }
    return out;
}

template NetParamsT<double> zeros_like(const NetParamsT<double>&);
template NetParamsT<long double> zeros_like(const NetParamsT<long double>&);

// --- grouping ----------------------------------------------------------------

std::vector<std::size_t> ball_query(std::span<const Point3> points, std::size_t centroid_index,
                                    double radius, std::size_t k) {
    if (centroid_index >= points.size()) throw std::out_of_range("ball_query: centroid index out of range");
    if (k < 1) throw std::invalid_argument("ball_query: k must be >= 1");
    const Point3 c = points[centroid_index];
    const double r2 = radius * radius;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < points.size() && out.size() < k; ++i) {
        const double dx = points[i].x - c.x;
        const double dy = points[i].y - c.y;
        const double dz = points[i].z - c.z;
        if (dx * dx + dy * dy + dz * dz <= r2) out.push_back(i);
    }
    // The centroid is always in its own ball, so out is non-empty.
    while (out.size() < k) out.push_back(out.front());
    return out;
}

std::vector<std::size_t> canonical_order(std::span<const Point3> points) {
    auto mix = [](std::uint64_t h, double v) {
        // splitmix64 finalizer over the running hash and the value's bits;
        // +0.0 added so that -0.0 and 0.0 hash alike.
        h ^= std::bit_cast<std::uint64_t>(v + 0.0) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
        h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
        return h ^ (h >> 31);
    };
    std::vector<std::uint64_t> keys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        keys[i] = mix(mix(mix(0, points[i].x), points[i].y), points[i].z);
    }
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] < keys[b];
        const auto& p = points[a];
        const auto& q = points[b];
        if (p.x != q.x) return p.x < q.x;
        if (p.y != q.y) return p.y < q.y;
        return p.z < q.z;
    });
    return order;
}

GroupingPlan plan_grouping(const NetSpec& spec, std::span<const Point3> cluster) {
    if (cluster.size() != spec.input_points) {
        throw ShapeError("cluster has " + std::to_string(cluster.size()) + " points, network expects " +
                         std::to_string(spec.input_points));
    }
    const auto order = canonical_order(cluster);

    GroupingPlan plan;
    plan.level_points.push_back(gather(cluster, order));
    for (const auto& sa : spec.sa_layers) {
        const auto& pts = plan.level_points.back();
        if (sa.num_centroids > pts.size()) throw ShapeError("more centroids than points at a level");
        const auto centroids = fps(pts, sa.num_centroids);
        std::vector<std::vector<std::size_t>> per_branch;
        for (const auto& b : sa.branches) {
            std::vector<std::size_t> flat;
            flat.reserve(centroids.size() * b.max_neighbors);
            for (std::size_t c : centroids) {
                const auto nb = ball_query(pts, c, b.radius, b.max_neighbors);
                flat.insert(flat.end(), nb.begin(), nb.end());
            }
            per_branch.push_back(std::move(flat));
        }
        plan.neighbors.push_back(std::move(per_branch));
        plan.level_points.push_back(gather(pts, centroids));
    }
    return plan;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) return {};
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

namespace detail {

namespace {

template <typename S>
S relu(S v) {
    return v > S{0} ? v : S{0};
}

// Row-wise shared MLP with ReLU after every layer, then max-pool over
// consecutive groups of `group_size` rows. Returns pooled groups x out.
template <typename S>
std::vector<S> run_mlp(const NetParamsT<S>& params, std::size_t first_layer, std::size_t num_layers,
                       std::vector<S> input, std::size_t rows, std::size_t group_size, MlpTrace<S>& t) {
    t.rows = rows;
    t.group_size = group_size;
    t.input = std::move(input);
    t.acts.assign(num_layers, {});
    const std::vector<S>* x = &t.input;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto& layer = params.layers[first_layer + l];
        auto& y = t.acts[l];
        y.assign(rows * layer.out, S{0});
        for (std::size_t r = 0; r < rows; ++r) {
            const S* xr = x->data() + r * layer.in;
            S* yr = y.data() + r * layer.out;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const S* w = layer.weight.data() + o * layer.in;
                S acc = layer.bias[o];
                for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * xr[i];
                yr[o] = relu(acc);
            }
        }
        x = &y;
    }
    const std::size_t channels = params.layers[first_layer + num_layers - 1].out;
    const std::size_t groups = rows / group_size;
    std::vector<S> pooled(groups * channels);
    t.argmax.assign(groups * channels, 0);
    const auto& a = t.acts.back();
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t c = 0; c < channels; ++c) {
            std::size_t best = g * group_size;
            S best_v = a[best * channels + c];
            for (std::size_t r = best + 1; r < (g + 1) * group_size; ++r) {
                if (a[r * channels + c] > best_v) {
                    best_v = a[r * channels + c];
                    best = r;
                }
            }
            pooled[g * channels + c] = best_v;
            t.argmax[g * channels + c] = best;
        }
    }
    return pooled;
}

// Back through pool and MLP. dpooled is groups x out_last. Returns d(input)
// when want_input_grad, else an empty vector.
template <typename S>
std::vector<S> mlp_backward(const NetParamsT<S>& params, std::size_t first_layer, const MlpTrace<S>& t,
                            std::span<const S> dpooled, NetParamsT<S>& grads, bool want_input_grad) {
    const std::size_t num_layers = t.acts.size();
    const std::size_t channels = params.layers[first_layer + num_layers - 1].out;
    std::vector<S> da(t.rows * channels, S{0});
    for (std::size_t k = 0; k < dpooled.size(); ++k) {
        const std::size_t c = k % channels;
        da[t.argmax[k] * channels + c] += dpooled[k];
    }
    for (std::size_t l = num_layers; l-- > 0;) {
        const auto& layer = params.layers[first_layer + l];
        auto& g = grads.layers[first_layer + l];
        const auto& a = t.acts[l];
        const auto& x = l == 0 ? t.input : t.acts[l - 1];
        const bool need_dx = l > 0 || want_input_grad;
        std::vector<S> dx(need_dx ? t.rows * layer.in : 0, S{0});
        for (std::size_t r = 0; r < t.rows; ++r) {
            const S* xr = x.data() + r * layer.in;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const std::size_t k = r * layer.out + o;
                if (!(a[k] > S{0})) continue;
                const S dz = da[k];
                if (dz == S{0}) continue;
                g.bias[o] += dz;
                S* gw = g.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) gw[i] += dz * xr[i];
                if (need_dx) {
                    const S* w = layer.weight.data() + o * layer.in;
                    S* dxr = dx.data() + r * layer.in;
                    for (std::size_t i = 0; i < layer.in; ++i) dxr[i] += dz * w[i];
                }
            }
        }
        da = std::move(dx);
    }
    return da;
}

}  // namespace

void check_normalized(std::span<const Point3> cluster) {
    double cx = 0, cy = 0, cz = 0, max_norm = 0;
    for (const auto& p : cluster) {
        cx += p.x;
        cy += p.y;
        cz += p.z;
        max_norm = std::max(max_norm, std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z));
    }
    const double n = static_cast<double>(cluster.size());
    const double c = std::sqrt(cx * cx + cy * cy + cz * cz) / n;
    if (!(c <= 1e-6) || !(max_norm <= 1.0 + 1e-6)) {
        throw ShapeError("cluster is not normalized (centroid offset " + std::to_string(c) + ", max norm " +
                         std::to_string(max_norm) + ")");
    }
}

template <typename S>
void forward_trace(const NetSpec& spec, const NetParamsT<S>& params, const GroupingPlan& plan,
                   bool train_mode, std::mt19937_64& rng, SampleTrace<S>& t) {
    const std::size_t levels = spec.sa_layers.size();
    t.features.assign(levels + 1, {});
    t.sa.assign(levels, {});
    std::size_t layer = 0;
    std::size_t channels = 0;
    for (std::size_t l = 0; l < levels; ++l) {
        const auto& sa = spec.sa_layers[l];
        const auto& pts = plan.level_points[l];
        const auto& cents = plan.level_points[l + 1];
        const auto& feats = t.features[l];
        const std::size_t m = cents.size();
        t.sa[l].resize(sa.branches.size());
        std::size_t out_channels = 0;
        for (const auto& b : sa.branches) out_channels += b.mlp_widths.back();
        auto& next = t.features[l + 1];
        next.assign(m * out_channels, S{0});

        std::size_t offset = 0;
        for (std::size_t bi = 0; bi < sa.branches.size(); ++bi) {
            const auto& b = sa.branches[bi];
            const auto& nbr = plan.neighbors[l][bi];
            const std::size_t k = b.max_neighbors;
            const std::size_t in = 3 + channels;
            std::vector<S> x(m * k * in);
            for (std::size_t c = 0; c < m; ++c) {
                for (std::size_t j = 0; j < k; ++j) {
                    const std::size_t src = nbr[c * k + j];
                    S* row = x.data() + (c * k + j) * in;
                    row[0] = S(pts[src].x) - S(cents[c].x);
                    row[1] = S(pts[src].y) - S(cents[c].y);
                    row[2] = S(pts[src].z) - S(cents[c].z);
                    for (std::size_t f = 0; f < channels; ++f) row[3 + f] = feats[src * channels + f];
                }
            }
            const auto pooled = run_mlp(params, layer, b.mlp_widths.size(), std::move(x), m * k, k, t.sa[l][bi]);
            layer += b.mlp_widths.size();
            const std::size_t bc = b.mlp_widths.back();
            for (std::size_t c = 0; c < m; ++c) {
                std::copy_n(pooled.begin() + static_cast<std::ptrdiff_t>(c * bc), bc,
                            next.begin() + static_cast<std::ptrdiff_t>(c * out_channels + offset));
            }
            offset += bc;
        }
        channels = out_channels;
    }

    // Global level groups every remaining point using absolute coordinates.
    const auto& pts = plan.level_points.back();
    const auto& feats = t.features.back();
    const std::size_t rows = pts.size();
    const std::size_t in = 3 + channels;
    std::vector<S> x(rows * in);
    for (std::size_t r = 0; r < rows; ++r) {
        S* row = x.data() + r * in;
        row[0] = S(pts[r].x);
        row[1] = S(pts[r].y);
        row[2] = S(pts[r].z);
        for (std::size_t f = 0; f < channels; ++f) row[3 + f] = feats[r * channels + f];
    }
    t.pooled = run_mlp(params, layer, spec.global_mlp_widths.size(), std::move(x), rows, rows, t.global);
    layer += spec.global_mlp_widths.size();

    const std::size_t head = spec.head_widths.size();
    t.head_in.assign(head, {});
    t.head_pre.assign(head, {});
    t.masks.assign(head, {});
    std::vector<S> h = t.pooled;
    std::bernoulli_distribution keep(spec.dropout_keep);
    const S scale = S{1} / S(spec.dropout_keep);
    for (std::size_t i = 0; i < head; ++i) {
        const auto& lw = params.layers[layer + i];
        std::vector<S> z(lw.out);
        for (std::size_t o = 0; o < lw.out; ++o) {
            const S* w = lw.weight.data() + o * lw.in;
            S acc = lw.bias[o];
            for (std::size_t j = 0; j < lw.in; ++j) acc += w[j] * h[j];
            z[o] = acc;
        }
        t.head_in[i] = std::move(h);
        t.head_pre[i] = z;
        if (i + 1 == head) {
            t.logits = std::move(z);
            break;
        }
        h.assign(lw.out, S{0});
        for (std::size_t o = 0; o < lw.out; ++o) h[o] = relu(z[o]);
        if (train_mode && spec.dropout_keep < 1.0) {
            auto& mask = t.masks[i];
            mask.resize(lw.out);
            for (std::size_t o = 0; o < lw.out; ++o) {
                mask[o] = keep(rng) ? scale : S{0};
                h[o] *= mask[o];
            }
        }
    }
    for (const S& v : t.logits) {
        if (!std::isfinite(static_cast<double>(v))) throw NonFiniteActivation("non-finite logit");
    }
}

template <typename S>
void backward_trace(const NetSpec& spec, const NetParamsT<S>& params, const GroupingPlan& plan,
                    const SampleTrace<S>& t, std::span<const S> dlogits, NetParamsT<S>& grads) {
    const std::size_t head = spec.head_widths.size();
    const std::size_t head_first = params.layers.size() - head;
    std::vector<S> dz(dlogits.begin(), dlogits.end());
    std::vector<S> dh;
    for (std::size_t i = head; i-- > 0;) {
        const auto& lw = params.layers[head_first + i];
        auto& g = grads.layers[head_first + i];
        const auto& x = t.head_in[i];
        dh.assign(lw.in, S{0});
        for (std::size_t o = 0; o < lw.out; ++o) {
            if (dz[o] == S{0}) continue;
            g.bias[o] += dz[o];
            S* gw = g.weight.data() + o * lw.in;
            const S* w = lw.weight.data() + o * lw.in;
            for (std::size_t j = 0; j < lw.in; ++j) {
                gw[j] += dz[o] * x[j];
                dh[j] += dz[o] * w[j];
            }
        }
        if (i == 0) break;
        const auto& pre = t.head_pre[i - 1];
        const auto& mask = t.masks[i - 1];
        dz.assign(pre.size(), S{0});
        for (std::size_t o = 0; o < pre.size(); ++o) {
            if (!(pre[o] > S{0})) continue;
            dz[o] = mask.empty() ? dh[o] : dh[o] * mask[o];
        }
    }

    const std::size_t global_first = head_first - spec.global_mlp_widths.size();
    const std::size_t levels = spec.sa_layers.size();
    const bool need_features = levels > 0;
    auto dx = mlp_backward(params, global_first, t.global, std::span<const S>(dh), grads, need_features);
    if (!need_features) return;

    // d(features) of the last level from the global MLP input columns 3..
    std::size_t channels = t.features.back().size() / plan.level_points.back().size();
    std::vector<S> dfeat(t.features.back().size(), S{0});
    {
        const std::size_t in = 3 + channels;
        for (std::size_t r = 0; r < plan.level_points.back().size(); ++r) {
            for (std::size_t f = 0; f < channels; ++f) dfeat[r * channels + f] = dx[r * in + 3 + f];
        }
    }

    // First layer index of every SA level.
    std::vector<std::size_t> level_first(levels);
    {
        std::size_t layer = 0;
        for (std::size_t l = 0; l < levels; ++l) {
            level_first[l] = layer;
            for (const auto& b : spec.sa_layers[l].branches) layer += b.mlp_widths.size();
        }
    }

    for (std::size_t l = levels; l-- > 0;) {
        const auto& sa = spec.sa_layers[l];
        const std::size_t m = plan.level_points[l + 1].size();
        const std::size_t prev_points = plan.level_points[l].size();
        const std::size_t prev_channels = l == 0 ? 0 : t.features[l].size() / prev_points;
        std::vector<S> dprev(prev_points * prev_channels, S{0});
        std::size_t layer = level_first[l];
        std::size_t offset = 0;
        for (std::size_t bi = 0; bi < sa.branches.size(); ++bi) {
            const auto& b = sa.branches[bi];
            const std::size_t bc = b.mlp_widths.back();
            std::vector<S> dpooled(m * bc);
            for (std::size_t c = 0; c < m; ++c) {
                for (std::size_t f = 0; f < bc; ++f) dpooled[c * bc + f] = dfeat[c * channels + offset + f];
            }
            const bool want = l > 0;
            const auto dxb = mlp_backward(params, layer, t.sa[l][bi], std::span<const S>(dpooled), grads, want);
            if (want) {
                const auto& nbr = plan.neighbors[l][bi];
                const std::size_t in = 3 + prev_channels;
                for (std::size_t r = 0; r < nbr.size(); ++r) {
                    S* dst = dprev.data() + nbr[r] * prev_channels;
                    const S* src = dxb.data() + r * in + 3;
                    for (std::size_t f = 0; f < prev_channels; ++f) dst[f] += src[f];
                }
            }
            layer += b.mlp_widths.size();
            offset += bc;
        }
        dfeat = std::move(dprev);
        channels = prev_channels;
    }
}

template <typename S>
void accumulate_batch(const NetSpec& spec, const NetParamsT<S>& params,
                      std::span<const GroupingPlan* const> plans, std::span<const int> labels,
                      std::span<const double> class_weights, bool train_mode, std::mt19937_64& rng,
                      NetParamsT<S>& grads, S& loss_sum, S& weight_sum) {
    const std::size_t classes = spec.num_classes();
    SampleTrace<S> trace;
    std::vector<S> dlogits(classes);
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) throw std::invalid_argument("label out of range");
        const S w = class_weights.empty() ? S{1} : S(class_weights[static_cast<std::size_t>(y)]);
        forward_trace(spec, params, *plans[i], train_mode, rng, trace);
        const auto& z = trace.logits;
        const S mx = *std::max_element(z.begin(), z.end());
        S sum{0};
        for (const S& v : z) sum += std::exp(v - mx);
        const S lse = mx + std::log(sum);
        loss_sum += w * (lse - z[static_cast<std::size_t>(y)]);
        weight_sum += w;
        if (w == S{0}) continue;
        for (std::size_t c = 0; c < classes; ++c) {
            const S p = std::exp(z[c] - lse);
            dlogits[c] = w * (p - (static_cast<std::size_t>(y) == c ? S{1} : S{0}));
        }
        backward_trace(spec, params, *plans[i], trace, std::span<const S>(dlogits), grads);
    }
}

template void forward_trace(const NetSpec&, const NetParamsT<double>&, const GroupingPlan&, bool,
                            std::mt19937_64&, SampleTrace<double>&);
template void accumulate_batch(const NetSpec&, const NetParamsT<double>&, std::span<const GroupingPlan* const>,
                               std::span<const int>, std::span<const double>, bool, std::mt19937_64&,
                               NetParamsT<double>&, double&, double&);

}  // namespace detail

ForwardResult forward_planned(const NetSpec& spec, const NetParams& params, const GroupingPlan& plan,
                              bool train_mode, std::mt19937_64& rng) {
    detail::SampleTrace<double> trace;
    detail::forward_trace(spec, params, plan, train_mode, rng, trace);
    ForwardResult r;
    r.logits = std::move(trace.logits);
    r.probabilities = softmax(r.logits);
    return r;
}

ForwardResult forward(const NetSpec& spec, const NetParams& params, std::span<const Point3> cluster,
                      bool train_mode, std::mt19937_64& rng) {
    const auto plan = plan_grouping(spec, cluster);
    detail::check_normalized(cluster);
    return forward_planned(spec, params, plan, train_mode, rng);
}

namespace {

template <typename S>
void check_params(const NetSpec& spec, const NetParamsT<S>& params) {
    const auto shapes = layer_shapes(spec);
    if (shapes.size() != params.layers.size()) throw ShapeError("parameter layer count does not match the spec");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& l = params.layers[i];
        if (l.in != shapes[i].in || l.out != shapes[i].out || l.weight.size() != l.in * l.out ||
            l.bias.size() != l.out) {
            throw ShapeError("parameter layer " + std::to_string(i) + " has the wrong shape");
        }
    }
}

}  // namespace

template <typename Scalar>
LossGrad<Scalar> loss_and_grad(const NetSpec& spec, const NetParamsT<Scalar>& params,
                               std::span<const Sample> batch, std::span<const double> class_weights,
                               bool train_mode, std::mt19937_64& rng) {
    if (batch.empty()) throw EmptyDataset("loss_and_grad on an empty batch");
    check_params(spec, params);
    if (!class_weights.empty() && class_weights.size() != spec.num_classes()) {
        throw std::invalid_argument("class_weights must have one entry per class");
    }
    std::vector<GroupingPlan> plans;
    std::vector<const GroupingPlan*> ptrs;
    std::vector<int> labels;
    plans.reserve(batch.size());
    for (const auto& s : batch) {
        plans.push_back(plan_grouping(spec, s.points));
        labels.push_back(s.label);
    }
    for (const auto& p : plans) ptrs.push_back(&p);

    LossGrad<Scalar> out;
    out.grads = zeros_like(params);
    Scalar loss_sum{0};
    Scalar weight_sum{0};
    detail::accumulate_batch<Scalar>(spec, params, ptrs, labels, class_weights, train_mode, rng, out.grads,
                                     loss_sum, weight_sum);
    if (!(weight_sum > Scalar{0})) throw std::invalid_argument("class weights sum to zero over the batch");
    out.loss = loss_sum / weight_sum;
    for (auto& l : out.grads.layers) {
        for (auto& v : l.weight) v /= weight_sum;
        for (auto& v : l.bias) v /= weight_sum;
    }
    return out;
}

template <typename Scalar>
Scalar loss_only(const NetSpec& spec, const NetParamsT<Scalar>& params, std::span<const Sample> batch,
                 std::span<const double> class_weights) {
    if (batch.empty()) throw EmptyDataset("loss_only on an empty batch");
    const std::size_t classes = spec.num_classes();
    std::mt19937_64 rng(0);
    detail::SampleTrace<Scalar> trace;
    Scalar loss_sum{0};
    Scalar weight_sum{0};
    for (const auto& s : batch) {
        const auto plan = plan_grouping(spec, s.points);
        detail::forward_trace(spec, params, plan, false, rng, trace);
        const auto& z = trace.logits;
        const Scalar mx = *std::max_element(z.begin(), z.end());
        Scalar sum{0};
        for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - mx);
        const Scalar w = class_weights.empty() ? Scalar{1} : Scalar(class_weights[static_cast<std::size_t>(s.label)]);
        loss_sum += w * (mx + std::log(sum) - z[static_cast<std::size_t>(s.label)]);
        weight_sum += w;
    }
    return loss_sum / weight_sum;
}

template LossGrad<double> loss_and_grad(const NetSpec&, const NetParamsT<double>&, std::span<const Sample>,
                                        std::span<const double>, bool, std::mt19937_64&);
template LossGrad<long double> loss_and_grad(const NetSpec&, const NetParamsT<long double>&,
                                             std::span<const Sample>, std::span<const double>, bool,
                                             std::mt19937_64&);
template double loss_only(const NetSpec&, const NetParamsT<double>&, std::span<const Sample>,
                          std::span<const double>);
template long double loss_only(const NetSpec&, const NetParamsT<long double>&, std::span<const Sample>,
                               std::span<const double>);

}  // namespace pedcloud
