#pragma once

// Forward/backward machinery shared by network.cpp and training.cpp.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "pedcloud/classifier.hpp"

namespace pedcloud::detail {

/// Activations of one shared MLP applied row-wise, followed by a max-pool
/// over consecutive groups of rows.
template <typename S>
struct MlpTrace {
    std::size_t rows = 0;
    std::size_t group_size = 0;
    std::vector<S> input;                 // rows x in
    std::vector<std::vector<S>> acts;     // per layer, rows x out, after ReLU
    std::vector<std::size_t> argmax;      // groups x out_last, row index of the winner
};

template <typename S>
struct SampleTrace {
    std::vector<std::vector<S>> features;       // per level, points x channels
    std::vector<std::vector<MlpTrace<S>>> sa;   // [sa layer][branch]
    MlpTrace<S> global;
    std::vector<S> pooled;
    std::vector<std::vector<S>> head_in;        // input of each head layer
    std::vector<std::vector<S>> head_pre;       // pre-activation of each head layer
    std::vector<std::vector<S>> masks;          // dropout mask per hidden head layer, empty if off
    std::vector<S> logits;
};

template <typename S>
void forward_trace(const NetSpec& spec, const NetParamsT<S>& params, const GroupingPlan& plan,
                   bool train_mode, std::mt19937_64& rng, SampleTrace<S>& trace);

/// Accumulates parameter gradients given d(loss)/d(logits).
template <typename S>
void backward_trace(const NetSpec& spec, const NetParamsT<S>& params, const GroupingPlan& plan,
                    const SampleTrace<S>& trace, std::span<const S> dlogits, NetParamsT<S>& grads);

/// Adds sum_i w_i * CE_i to loss_sum, sum_i w_i to weight_sum and the
/// unnormalized gradient to grads.
template <typename S>
void accumulate_batch(const NetSpec& spec, const NetParamsT<S>& params,
                      std::span<const GroupingPlan* const> plans, std::span<const int> labels,
                      std::span<const double> class_weights, bool train_mode, std::mt19937_64& rng,
                      NetParamsT<S>& grads, S& loss_sum, S& weight_sum);

void check_normalized(std::span<const Point3> cluster);

}  // namespace pedcloud::detail
