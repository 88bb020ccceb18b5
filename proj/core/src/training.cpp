#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include <json.hpp>

#include "network_internal.hpp"
#include "pedcloud/classifier.hpp"
#include "pedcloud/detection_eval.hpp"
#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace {

class Optimizer {
public:
    Optimizer(const TrainSpec& t, const NetParams& like) : t_(t), m_(zeros_like(like)), v_(zeros_like(like)) {}

    void step(NetParams& params, const NetParams& grads) {
        ++steps_;
        const double b1t = 1.0 - std::pow(t_.beta1, static_cast<double>(steps_));
        const double b2t = 1.0 - std::pow(t_.beta2, static_cast<double>(steps_));
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            update(params.layers[l].weight, grads.layers[l].weight, m_.layers[l].weight, v_.layers[l].weight, b1t, b2t);
            update(params.layers[l].bias, grads.layers[l].bias, m_.layers[l].bias, v_.layers[l].bias, b1t, b2t);
        }
    }

private:
    void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                std::vector<double>& v, double b1t, double b2t) const {
        if (t_.optimizer == OptimizerKind::sgd_momentum) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = t_.momentum * m[i] - t_.learning_rate * g[i];
                p[i] += m[i];
            }
            return;
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = t_.beta1 * m[i] + (1.0 - t_.beta1) * g[i];
            v[i] = t_.beta2 * v[i] + (1.0 - t_.beta2) * g[i] * g[i];
            const double mh = m[i] / b1t;
            const double vh = v[i] / b2t;
            p[i] -= t_.learning_rate * mh / (std::sqrt(vh) + t_.epsilon);
        }
    }

    TrainSpec t_;
    NetParams m_;
    NetParams v_;
    std::size_t steps_ = 0;
};

void add_into(NetParams& dst, const NetParams& src) {
    for (std::size_t l = 0; l < dst.layers.size(); ++l) {
        for (std::size_t i = 0; i < dst.layers[l].weight.size(); ++i) dst.layers[l].weight[i] += src.layers[l].weight[i];
        for (std::size_t i = 0; i < dst.layers[l].bias.size(); ++i) dst.layers[l].bias[i] += src.layers[l].bias[i];
    }
}

void scale(NetParams& p, double s) {
    for (auto& l : p.layers) {
        for (auto& v : l.weight) v *= s;
        for (auto& v : l.bias) v *= s;
    }
}

std::vector<GroupingPlan> plan_all(const NetSpec& spec, std::span<const Sample> set) {
    std::vector<GroupingPlan> plans;
    plans.reserve(set.size());
    for (const auto& s : set) plans.push_back(plan_grouping(spec, s.points));
    return plans;
}

struct EvalPass {
    Metrics metrics;
    double loss = 0.0;
};

EvalPass evaluate_plans(const NetSpec& spec, const NetParams& params, std::span<const GroupingPlan> plans,
                        std::span<const Sample> set) {
    const std::size_t classes = spec.num_classes();
    std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
    std::mt19937_64 rng(0);
    detail::SampleTrace<double> trace;
    double loss = 0.0;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        detail::forward_trace(spec, params, plans[i], false, rng, trace);
        const auto& z = trace.logits;
        const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        const auto y = static_cast<std::size_t>(set[i].label);
        if (y >= classes) throw std::invalid_argument("label out of range");
        ++confusion[y][pred];
        const double mx = z[pred];
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - mx);
        loss += mx + std::log(sum) - z[y];
    }
    EvalPass r;
    r.metrics = metrics_from_confusion(confusion);
    r.loss = plans.empty() ? 0.0 : loss / static_cast<double>(plans.size());
    return r;
}

}  // namespace

Metrics metrics_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
    Metrics m;
    m.confusion = confusion;
    const std::size_t classes = confusion.size();
    std::size_t total = 0;
    std::size_t correct = 0;
    double recall_sum = 0.0;
    std::size_t supported = 0;
    for (std::size_t t = 0; t < classes; ++t) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < classes; ++p) row += confusion[t][p];
        total += row;
        correct += confusion[t][t];
        if (row > 0) {
            recall_sum += static_cast<double>(confusion[t][t]) / static_cast<double>(row);
            ++supported;
        }
    }
    m.accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    m.avg_class_accuracy = supported == 0 ? 0.0 : recall_sum / static_cast<double>(supported);
    if (classes >= 2) {
        const std::size_t tp = confusion[1][1];
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t k = 0; k < classes; ++k) {
            if (k == 1) continue;
            fp += confusion[k][1];
            fn += confusion[1][k];
        }
        const auto s = scores_from_counts(tp, fp, fn);
        m.precision = s.precision;
        m.recall = s.recall;
        m.f1 = s.f1;
    }
    return m;
}

Metrics evaluate(const NetSpec& spec, const NetParams& params, std::span<const Sample> test_set) {
    if (test_set.empty()) throw EmptyDataset("evaluate on an empty test set");
    const auto plans = plan_all(spec, test_set);
    return evaluate_plans(spec, params, plans, test_set).metrics;
}

TrainResult train(const NetSpec& spec, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainSpec& tspec, const EpochCallback& on_epoch) {
    validate_spec(spec);
    if (train_set.empty()) throw EmptyDataset("training set is empty");
    if (tspec.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(tspec.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!tspec.class_weights.empty() && tspec.class_weights.size() != spec.num_classes()) {
        throw std::invalid_argument("class_weights must have one entry per class");
    }

    // Independent streams for init, shuffling, dropout and augmentation.
    std::seed_seq seq{tspec.rng_seed, tspec.rng_seed >> 32};
    std::array<std::uint64_t, 4> seeds{};
    {
        std::array<std::uint32_t, 8> raw{};
        seq.generate(raw.begin(), raw.end());
        for (std::size_t i = 0; i < 4; ++i) seeds[i] = (std::uint64_t{raw[2 * i]} << 32) | raw[2 * i + 1];
    }
    TrainResult result;
    NetParams params = init_params(spec, seeds[0]);
    std::mt19937_64 shuffle_rng(seeds[1]);
    std::mt19937_64 dropout_rng(seeds[2]);
    std::mt19937_64 augment_rng(seeds[3]);

    const bool augmenting = tspec.augment.has_value();
    std::vector<GroupingPlan> train_plans;
    if (!augmenting) train_plans = plan_all(spec, train_set);
    const auto val_plans = plan_all(spec, val_set);

    Optimizer opt(tspec, params);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t threads = std::max<std::size_t>(1, tspec.threads);
    double best_f1 = -1.0;
    double best_loss = 0.0;
    NetParams grads = zeros_like(params);

    for (std::size_t epoch = 1; epoch <= tspec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        double epoch_weight = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tspec.batch_size) {
            const std::size_t end = std::min(order.size(), start + tspec.batch_size);
            std::vector<GroupingPlan> fresh;
            std::vector<const GroupingPlan*> plans;
            std::vector<int> labels;
            if (augmenting) fresh.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const auto& s = train_set[order[k]];
                labels.push_back(s.label);
                if (augmenting) {
                    fresh.push_back(plan_grouping(spec, augment(s.points, *tspec.augment, augment_rng)));
                    plans.push_back(&fresh.back());
                } else {
                    plans.push_back(&train_plans[order[k]]);
                }
            }

            for (auto& l : grads.layers) {
                std::fill(l.weight.begin(), l.weight.end(), 0.0);
                std::fill(l.bias.begin(), l.bias.end(), 0.0);
            }
            double loss_sum = 0.0;
            double weight_sum = 0.0;
            try {
                if (threads == 1 || plans.size() < 2) {
                    detail::accumulate_batch<double>(spec, params, plans, labels, tspec.class_weights, true,
                                                     dropout_rng, grads, loss_sum, weight_sum);
                } else {
                    const std::size_t parts = std::min(threads, plans.size());
                    std::vector<NetParams> partial(parts, zeros_like(params));
                    std::vector<double> part_loss(parts, 0.0);
                    std::vector<double> part_weight(parts, 0.0);
                    std::vector<std::mt19937_64> rngs;
                    for (std::size_t p = 0; p < parts; ++p) rngs.emplace_back(dropout_rng());
                    std::vector<std::thread> pool;
                    std::vector<std::exception_ptr> errors(parts);
                    for (std::size_t p = 0; p < parts; ++p) {
                        pool.emplace_back([&, p] {
                            try {
                                const std::size_t lo = plans.size() * p / parts;
                                const std::size_t hi = plans.size() * (p + 1) / parts;
                                detail::accumulate_batch<double>(
                                    spec, params, std::span(plans).subspan(lo, hi - lo),
                                    std::span<const int>(labels).subspan(lo, hi - lo), tspec.class_weights, true,
                                    rngs[p], partial[p], part_loss[p], part_weight[p]);
                            } catch (...) {
                                errors[p] = std::current_exception();
                            }
                        });
                    }
                    for (auto& th : pool) th.join();
                    for (auto& e : errors) {
                        if (e) std::rethrow_exception(e);
                    }
                    for (std::size_t p = 0; p < parts; ++p) {
                        add_into(grads, partial[p]);
                        loss_sum += part_loss[p];
                        weight_sum += part_weight[p];
                    }
                }
            } catch (const NonFiniteActivation& e) {
                throw DivergedLoss("training diverged in epoch " + std::to_string(epoch) + " at sample " +
                                   std::to_string(start) + ": " + e.what());
            }
            if (!(weight_sum > 0.0)) continue;
            const double batch_loss = loss_sum / weight_sum;
            if (!std::isfinite(batch_loss)) {
                throw DivergedLoss("loss became non-finite in epoch " + std::to_string(epoch) + " at sample " +
                                   std::to_string(start));
            }
            scale(grads, 1.0 / weight_sum);
            opt.step(params, grads);
            epoch_loss += loss_sum;
            epoch_weight += weight_sum;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_weight > 0.0 ? epoch_loss / epoch_weight : 0.0;
        if (!val_plans.empty()) {
            const auto pass = evaluate_plans(spec, params, val_plans, val_set);
            entry.val = pass.metrics;
            entry.val_loss = pass.loss;
        }
        const double score = val_plans.empty() ? static_cast<double>(epoch) : entry.val.f1;
        // Ties on F1 go to the lower validation loss, so a saturated F1 does
        // not pin the earliest epoch that reached it.
        if (score > best_f1 || (score == best_f1 && entry.val_loss < best_loss)) {
            best_f1 = score;
            best_loss = entry.val_loss;
            result.best_epoch = epoch;
            result.params = params;
        }
        result.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    if (result.best_epoch == 0) result.params = params;
    return result;
}

std::string write_metrics_log(std::span<const EpochLog> log) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : log) {
        arr.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"val_accuracy", e.val.accuracy},
                       {"val_avg_class_accuracy", e.val.avg_class_accuracy},
                       {"val_precision", e.val.precision},
                       {"val_recall", e.val.recall},
                       {"val_f1", e.val.f1},
                       {"val_confusion", e.val.confusion}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace pedcloud
