#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deer/data.hpp"
#include "deer/metrics.hpp"
#include "deer/net.hpp"

namespace deer {

// ---------------------------------------------------------------------------
// CCC training loss for the point-prediction baselines: 1 - ccc per
// attribute over the mini-batch sequence, combined with the epsilon weights.
// The loss couples all items in a batch through the batch statistics, so the
// gradient is computed for the whole hypothesis sequence at once.

inline double ccc_loss(const std::vector<std::vector<double>>& hyp,
                       const std::vector<std::vector<double>>& ref,
                       const std::vector<double>& epsilons) {
    if (hyp.size() != ref.size() || hyp.size() != epsilons.size() || hyp.empty())
        throw std::invalid_argument("ccc_loss: per-attribute lists misaligned");
    double loss = 0.0;
    for (std::size_t a = 0; a < hyp.size(); ++a)
        loss += epsilons[a] * (1.0 - ccc(hyp[a], ref[a]));
    return loss;
}

// d(1 - ccc)/d hyp_i for one attribute sequence
inline std::vector<double> ccc_loss_grad_single(const std::vector<double>& hyp,
                                                const std::vector<double>& ref) {
    if (hyp.size() != ref.size() || hyp.size() < 2)
        throw std::invalid_argument("ccc_loss_grad: need aligned sequences of length >= 2");
    const std::size_t n = hyp.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double mh = 0.0, mr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mh += hyp[i];
        mr += ref[i];
    }
    mh *= inv_n;
    mr *= inv_n;
    double var_h = 0.0, var_r = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var_h += (hyp[i] - mh) * (hyp[i] - mh);
        var_r += (ref[i] - mr) * (ref[i] - mr);
        cov += (hyp[i] - mh) * (ref[i] - mr);
    }
    var_h *= inv_n;
    var_r *= inv_n;
    cov *= inv_n;
    const double dm = mh - mr;
    const double denom = var_h + var_r + dm * dm;
    std::vector<double> grad(n, 0.0);
    if (denom == 0.0) return grad;  // flat at the degenerate point
    const double scale = 2.0 * inv_n / (denom * denom);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_ccc =
            scale * ((ref[i] - mr) * denom - 2.0 * cov * ((hyp[i] - mh) + dm));
        grad[i] = -d_ccc;
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Point-head training (shared by the MC-dropout and ensemble baselines).
// Targets are the averaged labels; batches of size one are dropped because
// the batch CCC is undefined there.

inline std::pair<BatchBreakdown, std::vector<double>> point_batch_backward(
    const Mlp& net, const Dataset& data, const std::vector<std::size_t>& batch,
    const DropoutPlan* plan, const std::vector<double>& epsilons) {
    if (batch.size() < 2)
        throw std::invalid_argument("ccc batch: need at least two items");
    const std::size_t n_attr = data.attributes.size();
    if (net.shape.output != n_attr)
        throw std::invalid_argument("point head width must be N");
    if (epsilons.size() != n_attr)
        throw std::invalid_argument("epsilon list must have length N");

    std::vector<ForwardTrace> traces;
    traces.reserve(batch.size());
    std::vector<std::vector<double>> hyp(n_attr, std::vector<double>(batch.size()));
    std::vector<std::vector<double>> ref(n_attr, std::vector<double>(batch.size()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const AnnotatedItem& item = data.items[batch[b]];
        const ItemMasks* masks = plan ? &(*plan)[b] : nullptr;
        traces.push_back(forward_trace(net, item.features, masks));
        const auto& out = traces.back().output();
        for (std::size_t a = 0; a < n_attr; ++a) {
            hyp[a][b] = out[a];
            ref[a][b] = item.labels.at(data.attributes[a]).mean();
        }
    }

    BatchBreakdown stats;
    stats.total = ccc_loss(hyp, ref, epsilons);
    stats.nll = stats.total;

    std::vector<double> grads(net.params.size(), 0.0);
    std::vector<std::vector<double>> d_out(batch.size(),
                                           std::vector<double>(n_attr, 0.0));
    for (std::size_t a = 0; a < n_attr; ++a) {
        const auto g = ccc_loss_grad_single(hyp[a], ref[a]);
        for (std::size_t b = 0; b < batch.size(); ++b)
            d_out[b][a] = epsilons[a] * g[b];
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const ItemMasks* masks = plan ? &(*plan)[b] : nullptr;
        backprop(net, traces[b], d_out[b], masks, grads);
    }
    return {stats, std::move(grads)};
}

inline double point_validation_loss(const Mlp& net, const Dataset& val,
                                    const std::vector<double>& epsilons) {
    const std::size_t n_attr = val.attributes.size();
    std::vector<std::vector<double>> hyp(n_attr), ref(n_attr);
    for (const auto& item : val.items) {
        const auto out = forward(net, item.features);
        for (std::size_t a = 0; a < n_attr; ++a) {
            hyp[a].push_back(out[a]);
            ref[a].push_back(item.labels.at(val.attributes[a]).mean());
        }
    }
    return ccc_loss(hyp, ref, epsilons);
}

inline std::pair<Mlp, TrainTrace> train_point(const Dataset& train,
                                              const Dataset* val,
                                              const TrainConfig& cfg) {
    if (train.items.empty()) throw std::invalid_argument("train: empty dataset");
    const std::size_t n_attr = train.attributes.size();
    std::vector<double> epsilons = cfg.epsilons;
    if (epsilons.empty())
        epsilons.assign(n_attr, 1.0 / static_cast<double>(n_attr));
    if (epsilons.size() != n_attr)
        throw std::invalid_argument("train: epsilon list must have length N");

    Rng rng(cfg.seed);
    MlpShape shape{train.feature_dim, cfg.hidden, n_attr};
    Mlp net = make_mlp(shape, cfg.dropout_rate, rng);
    AdamState adam = make_adam(net.params.size(), cfg.adam);

    std::vector<std::size_t> order(train.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainTrace trace;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            if (len < 2) continue;  // CCC undefined for a single item
            std::vector<std::size_t> batch(order.begin() + start,
                                           order.begin() + start + len);
            DropoutPlan plan =
                sample_dropout_plan(shape, net.dropout_rate, len, rng);
            auto [stats, grads] =
                point_batch_backward(net, train, batch, &plan, epsilons);
            adam_step(adam, net.params, grads);
            epoch_loss += stats.total;
            ++batches;
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_total = batches > 0 ? epoch_loss / static_cast<double>(batches)
                                        : std::numeric_limits<double>::quiet_NaN();
        stats.train_nll = stats.train_total;
        if (val != nullptr)
            stats.val_total = point_validation_loss(net, *val, epsilons);
        trace.push_back(stats);
    }
    return {std::move(net), std::move(trace)};
}

// Independently seeded members; member j trains with seed cfg.seed + j.
inline std::vector<Mlp> train_ensemble(std::size_t k, const Dataset& train,
                                       const Dataset* val, const TrainConfig& cfg) {
    if (k < 2) throw std::invalid_argument("train_ensemble: need k >= 2 members");
    std::vector<Mlp> members;
    members.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        TrainConfig member_cfg = cfg;
        member_cfg.seed = cfg.seed + j;
        members.push_back(train_point(train, val, member_cfg).first);
    }
    return members;
}

// Train-mode forward passes with independently drawn dropout masks; returns
// per-attribute sample lists of length `passes`.
inline std::vector<std::vector<double>> mc_dropout_predict(
    const Mlp& net, const std::vector<double>& features, std::size_t passes,
    std::uint64_t seed) {
    if (passes < 2)
        throw std::invalid_argument("mc_dropout_predict: need passes >= 2");
    Rng rng(seed);
    std::vector<std::vector<double>> samples(net.shape.output,
                                             std::vector<double>(passes));
    for (std::size_t p = 0; p < passes; ++p) {
        const ItemMasks masks = sample_masks(net.shape, net.dropout_rate, rng);
        const auto out = forward_trace(net, features, &masks).output();
        for (std::size_t a = 0; a < out.size(); ++a) samples[a][p] = out[a];
    }
    return samples;
}

// Eval-mode member outputs; per-attribute sample lists of length k.
inline std::vector<std::vector<double>> ensemble_predict(
    const std::vector<Mlp>& members, const std::vector<double>& features) {
    if (members.empty())
        throw std::invalid_argument("ensemble_predict: no members");
    std::vector<std::vector<double>> samples(members.front().shape.output,
                                             std::vector<double>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
        const auto out = forward(members[j], features);
        for (std::size_t a = 0; a < out.size(); ++a) samples[a][j] = out[a];
    }
    return samples;
}

}  // namespace deer
