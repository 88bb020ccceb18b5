#pragma once

// Hierarchical point-set classifier: set-abstraction levels (farthest point
// centroids, ball-query grouping, shared per-point MLP, max-pool), a global
// MLP over the remaining points, and a fully connected head.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pedcloud/sampling.hpp"
#include "pedcloud/types.hpp"

namespace pedcloud {

struct GroupingBranch {
    double radius = 0.2;
    std::size_t max_neighbors = 32;
    std::vector<std::size_t> mlp_widths;

    friend bool operator==(const GroupingBranch&, const GroupingBranch&) = default;
};

/// One set-abstraction level. A single branch is single-scale grouping;
/// several branches are multi-scale grouping with concatenated outputs.
struct SALayerSpec {
    std::size_t num_centroids = 1;
    std::vector<GroupingBranch> branches;

    friend bool operator==(const SALayerSpec&, const SALayerSpec&) = default;
};

struct NetSpec {
    std::size_t input_points = 1024;
    std::vector<SALayerSpec> sa_layers;
    std::vector<std::size_t> global_mlp_widths;
    std::vector<std::size_t> head_widths;  // last entry is the class count
    double dropout_keep = 0.5;

    std::size_t num_classes() const { return head_widths.empty() ? 0 : head_widths.back(); }

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Single-scale classification network of the reference implementation.
NetSpec default_ssg_spec();
/// Multi-scale variant of the same.
NetSpec default_msg_spec();
/// Small single-scale network for CPU training on desk-scale data.
NetSpec reduced_ssg_spec();

/// Throws std::invalid_argument describing the first violated invariant.
void validate_spec(const NetSpec& spec);

std::string write_net_spec(const NetSpec& spec);
NetSpec parse_net_spec(std::string_view text);

template <typename Scalar>
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<Scalar> weight;  // out x in, row-major
    std::vector<Scalar> bias;    // out

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

inline constexpr int kParamsLayoutVersion = 1;

/// Layers in network order: every SA level's branches (each branch's MLP
/// in order), then the global MLP, then the head.
template <typename Scalar>
struct NetParamsT {
    std::vector<DenseLayer<Scalar>> layers;

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }
    /// Flat view across all layers: each layer's weights, then its biases.
    Scalar& coordinate(std::size_t index);
    Scalar coordinate(std::size_t index) const;

    friend bool operator==(const NetParamsT&, const NetParamsT&) = default;
};

using NetParams = NetParamsT<double>;

struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;
};

std::vector<LayerShape> layer_shapes(const NetSpec& spec);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
NetParams init_params(const NetSpec& spec, std::uint64_t seed);

template <typename Scalar>
NetParamsT<Scalar> zeros_like(const NetParamsT<Scalar>& params);

template <typename To, typename From>
NetParamsT<To> cast_params(const NetParamsT<From>& params) {
    NetParamsT<To> out;
    out.layers.reserve(params.layers.size());
    for (const auto& l : params.layers) {
        DenseLayer<To> d{l.in, l.out, {}, {}};
        d.weight.assign(l.weight.begin(), l.weight.end());
        d.bias.assign(l.bias.begin(), l.bias.end());
        out.layers.push_back(std::move(d));
    }
    return out;
}

/// Indices of points within `radius` of points[centroid_index], ascending,
/// truncated to k and padded to k by repeating the first index found.
std::vector<std::size_t> ball_query(std::span<const Point3> points, std::size_t centroid_index,
                                    double radius, std::size_t k);

/// Order of the points by a hash of their coordinate bits, ties broken
/// lexicographically. Depends only on the multiset of points, and unlike a
/// plain coordinate sort it does not make "the first k points in a ball"
/// a spatially one-sided subset.
std::vector<std::size_t> canonical_order(std::span<const Point3> points);

/// Parameter-independent part of a forward pass: the input in canonical
/// order, the centroid positions of each level, and the neighbor lists of
/// every branch. Reordering the input first makes the whole network
/// invariant to the order of the input points.
struct GroupingPlan {
    std::vector<std::vector<Point3>> level_points;                // [level]; level 0 is the input
    std::vector<std::vector<std::vector<std::size_t>>> neighbors;  // [sa layer][branch], M*K flat

    friend bool operator==(const GroupingPlan&, const GroupingPlan&) = default;
};

/// Throws ShapeError when the cluster size differs from spec.input_points.
GroupingPlan plan_grouping(const NetSpec& spec, std::span<const Point3> cluster);

struct ForwardResult {
    std::vector<double> logits;
    std::vector<double> probabilities;
};

/// Throws ShapeError for a wrong point count or a cluster that is not
/// normalized (centroid within 1e-6 of 0, max norm <= 1 + 1e-6), and
/// NonFiniteActivation. Dropout is active only in train_mode.
ForwardResult forward(const NetSpec& spec, const NetParams& params, std::span<const Point3> cluster,
                      bool train_mode, std::mt19937_64& rng);

ForwardResult forward_planned(const NetSpec& spec, const NetParams& params, const GroupingPlan& plan,
                              bool train_mode, std::mt19937_64& rng);

std::vector<double> softmax(std::span<const double> logits);

struct Sample {
    std::vector<Point3> points;
    int label = 0;  // 1 = pedestrian
};

template <typename Scalar>
struct LossGrad {
    Scalar loss{};
    NetParamsT<Scalar> grads;
};

/// Weighted mean cross-entropy sum_i w[y_i] * CE_i / sum_i w[y_i] and its
/// gradient. Empty class_weights means unit weights. Max-pool routes the
/// gradient to the lowest-index maximum.
template <typename Scalar>
LossGrad<Scalar> loss_and_grad(const NetSpec& spec, const NetParamsT<Scalar>& params,
                               std::span<const Sample> batch, std::span<const double> class_weights,
                               bool train_mode, std::mt19937_64& rng);

template <typename Scalar>
Scalar loss_only(const NetSpec& spec, const NetParamsT<Scalar>& params, std::span<const Sample> batch,
                 std::span<const double> class_weights);

enum class OptimizerKind { sgd_momentum, adam };

struct TrainSpec {
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::optional<AugmentSpec> augment;
    std::uint64_t rng_seed = 0;
    std::vector<double> class_weights;
    /// 1 = serial and bit-reproducible; more splits each batch across
    /// threads and sums partial gradients.
    std::size_t threads = 1;
};

struct Metrics {
    double accuracy = 0.0;
    double avg_class_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Class 1 is the positive class for precision / recall / F1.
Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion);

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    Metrics val;

    friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
    NetParams params;  // best validation F1, ties to lower validation loss
    std::size_t best_epoch = 0;
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Throws EmptyDataset on an empty training set and DivergedLoss when the
/// loss stops being finite.
TrainResult train(const NetSpec& spec, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainSpec& tspec, const EpochCallback& on_epoch = {});

/// Argmax predictions (lowest class on ties). Throws EmptyDataset.
Metrics evaluate(const NetSpec& spec, const NetParams& params, std::span<const Sample> test_set);

std::string write_metrics_log(std::span<const EpochLog> log);

inline constexpr int kCheckpointSchemaVersion = 1;

struct Checkpoint {
    NetSpec spec;
    NetParams params;
};

/// JSON {"schema_version", "spec", "layers": [{"in", "out", "weight", "bias"}]}.
/// Values are written in shortest round-trip form.
void save_params(const NetSpec& spec, const NetParams& params, const std::filesystem::path& path);

/// Throws VersionError, ParseError (malformed or invalid spec) or
/// ShapeError (arrays inconsistent with the spec).
Checkpoint load_params(const std::filesystem::path& path);

/// As above, additionally throwing ShapeError when the stored spec differs
/// from `expected`.
Checkpoint load_params(const std::filesystem::path& path, const NetSpec& expected);

std::string write_checkpoint(const NetSpec& spec, const NetParams& params);
Checkpoint parse_checkpoint(std::string_view text);

}  // namespace pedcloud
