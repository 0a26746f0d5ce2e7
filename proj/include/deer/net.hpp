#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deer/data.hpp"
#include "deer/evidential.hpp"
#include "deer/rng.hpp"

namespace deer {

// ---------------------------------------------------------------------------
// Dense feed-forward body. Parameters live in one flat vector (per layer:
// weight matrix row-major, then bias) so the optimiser and the
// finite-difference checker can treat the network as a single point in R^P.

struct MlpShape {
    std::size_t input = 0;
    std::vector<std::size_t> hidden;
    std::size_t output = 0;

    std::vector<std::size_t> widths() const {
        std::vector<std::size_t> w;
        w.push_back(input);
        for (auto h : hidden) w.push_back(h);
        w.push_back(output);
        return w;
    }

    std::size_t layer_count() const { return hidden.size() + 1; }

    std::size_t param_count() const {
        const auto w = widths();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l + 1] * (w[l] + 1);
        return n;
    }

    // offset of layer l's weight block; bias follows the weights
    std::size_t layer_offset(std::size_t layer) const {
        const auto w = widths();
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) off += w[l + 1] * (w[l] + 1);
        return off;
    }
};

struct Mlp {
    MlpShape shape;
    double dropout_rate = 0.0;
    std::vector<double> params;
};

inline Mlp make_mlp(const MlpShape& shape, double dropout_rate, Rng& rng) {
    if (shape.input == 0 || shape.output == 0)
        throw std::invalid_argument("make_mlp: zero-width layer");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("make_mlp: dropout_rate must be in [0,1)");
    Mlp net{shape, dropout_rate, std::vector<double>(shape.param_count(), 0.0)};
    const auto w = shape.widths();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w[l] + w[l + 1]));
        for (std::size_t i = 0; i < w[l + 1] * w[l]; ++i)
            net.params[off + i] = rng.uniform(-limit, limit);
        off += w[l + 1] * (w[l] + 1);  // biases stay zero
    }
    return net;
}

inline double gelu(double x) {
    return 0.5 * x * std::erfc(-x * 0.70710678118654752440084436210485);
}

inline double gelu_derivative(double x) {
    static constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
    const double cdf = 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
    return cdf + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Inverted-dropout scale factors, one vector per hidden layer: 0 for dropped
// units, 1/(1-rate) for kept ones. An empty plan means no dropout (eval mode).
using ItemMasks = std::vector<std::vector<double>>;

inline ItemMasks sample_masks(const MlpShape& shape, double rate, Rng& rng) {
    ItemMasks masks(shape.hidden.size());
    if (rate <= 0.0) {
        for (std::size_t l = 0; l < shape.hidden.size(); ++l)
            masks[l].assign(shape.hidden[l], 1.0);
        return masks;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t l = 0; l < shape.hidden.size(); ++l) {
        masks[l].resize(shape.hidden[l]);
        for (auto& m : masks[l]) m = rng.bernoulli(rate) ? 0.0 : keep_scale;
    }
    return masks;
}

struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;  // z per layer
    std::vector<std::vector<double>> act;  // post-GELU, post-dropout, hidden only

    const std::vector<double>& output() const { return pre.back(); }
};

inline ForwardTrace forward_trace(const Mlp& net, const std::vector<double>& x,
                                  const ItemMasks* masks = nullptr) {
    if (x.size() != net.shape.input)
        throw std::invalid_argument("forward: feature width mismatch");
    const auto w = net.shape.widths();
    ForwardTrace trace;
    trace.input = x;
    trace.pre.resize(net.shape.layer_count());
    trace.act.resize(net.shape.hidden.size());

    const std::vector<double>* in = &trace.input;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const std::size_t rows = w[l + 1], cols = w[l];
        const double* weight = net.params.data() + net.shape.layer_offset(l);
        const double* bias = weight + rows * cols;
        auto& z = trace.pre[l];
        z.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = bias[i];
            const double* row = weight + i * cols;
            for (std::size_t j = 0; j < cols; ++j) s += row[j] * (*in)[j];
            z[i] = s;
        }
        if (l < net.shape.hidden.size()) {
            auto& a = trace.act[l];
            a.resize(rows);
            for (std::size_t i = 0; i < rows; ++i) {
                double v = gelu(z[i]);
                if (masks) v *= (*masks)[l][i];
                a[i] = v;
            }
            in = &a;
        }
    }
    return trace;
}

// Eval-mode forward: no dropout, returns the raw output.
inline std::vector<double> forward(const Mlp& net, const std::vector<double>& x) {
    return forward_trace(net, x).output();
}

// Accumulates dL/dparams into `grads` given dL/d(raw output).
inline void backprop(const Mlp& net, const ForwardTrace& trace,
                     const std::vector<double>& d_output,
                     const ItemMasks* masks, std::vector<double>& grads) {
    const auto w = net.shape.widths();
    if (grads.size() != net.params.size())
        throw std::invalid_argument("backprop: gradient buffer size mismatch");
    std::vector<double> delta = d_output;
    for (std::size_t l = net.shape.layer_count(); l-- > 0;) {
        const std::size_t rows = w[l + 1], cols = w[l];
        const std::size_t off = net.shape.layer_offset(l);
        const std::vector<double>& in =
            (l == 0) ? trace.input : trace.act[l - 1];
        double* g_weight = grads.data() + off;
        double* g_bias = g_weight + rows * cols;
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = delta[i];
            g_bias[i] += d;
            double* g_row = g_weight + i * cols;
            for (std::size_t j = 0; j < cols; ++j) g_row[j] += d * in[j];
        }
        if (l == 0) break;
        const double* weight = net.params.data() + off;
        std::vector<double> prev(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const double d = delta[i];
            const double* row = weight + i * cols;
            for (std::size_t j = 0; j < cols; ++j) prev[j] += d * row[j];
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double m = masks ? (*masks)[l - 1][j] : 1.0;
            prev[j] *= m * gelu_derivative(trace.pre[l - 1][j]);
        }
        delta = std::move(prev);
    }
}

// ---------------------------------------------------------------------------
// Evidential head: raw 4N outputs -> N NIG parameter sets. Softplus keeps
// (upsilon, alpha-1, beta) positive; the floor keeps the NIGParams invariants
// intact even when softplus underflows for extreme raw values.

inline constexpr double kHeadFloor = 1e-15;

inline NIGParams head_params(const double* raw) {
    return NIGParams(raw[0], std::fmax(softplus(raw[1]), kHeadFloor),
                     1.0 + std::fmax(softplus(raw[2]), kHeadFloor),
                     std::fmax(softplus(raw[3]), kHeadFloor));
}

inline std::vector<NIGParams> head_params(const std::vector<double>& raw) {
    if (raw.size() % 4 != 0)
        throw std::invalid_argument("head_params: raw width must be 4N");
    std::vector<NIGParams> out;
    out.reserve(raw.size() / 4);
    for (std::size_t n = 0; n < raw.size() / 4; ++n)
        out.push_back(head_params(raw.data() + 4 * n));
    return out;
}

inline void head_backprop(const double* raw, const NIGGrad& grad, double* d_raw) {
    d_raw[0] = grad.d_gamma;
    d_raw[1] = grad.d_upsilon * sigmoid(raw[1]);
    d_raw[2] = grad.d_alpha * sigmoid(raw[2]);
    d_raw[3] = grad.d_beta * sigmoid(raw[3]);
}

// Eval-mode forward straight to NIG parameters.
inline std::vector<NIGParams> forward_evidential(const Mlp& net,
                                                 const std::vector<double>& x) {
    return head_params(forward(net, x));
}

// ---------------------------------------------------------------------------
// Batch objective for the evidential model. Per item the loss is the
// epsilon-weighted sum of attribute losses; the batch loss is the item mean.

struct LossWeights {
    std::vector<double> epsilons;
    std::vector<double> lambdas;
};

inline LossWeights default_loss_weights(std::size_t n_attributes) {
    LossWeights w;
    w.epsilons.assign(n_attributes, 1.0 / static_cast<double>(n_attributes));
    w.lambdas.assign(n_attributes, 0.1);
    return w;
}

struct BatchBreakdown {
    double total = 0.0;
    double nll = 0.0;
    double reg_mean = 0.0;
    double reg_var = 0.0;
};

using DropoutPlan = std::vector<ItemMasks>;  // one mask set per batch item

inline DropoutPlan sample_dropout_plan(const MlpShape& shape, double rate,
                                       std::size_t batch_size, Rng& rng) {
    DropoutPlan plan;
    plan.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i)
        plan.push_back(sample_masks(shape, rate, rng));
    return plan;
}

namespace detail {

inline void check_deer_batch(const Mlp& net, const Dataset& data,
                             const std::vector<std::size_t>& batch,
                             const LossWeights& weights) {
    if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
    const std::size_t n = data.attributes.size();
    if (net.shape.output != 4 * n)
        throw std::invalid_argument("evidential head width must be 4N");
    if (weights.epsilons.size() != n || weights.lambdas.size() != n)
        throw std::invalid_argument("loss weight lists must have length N");
}

}  // namespace detail

inline BatchBreakdown deer_batch_loss(const Mlp& net, const Dataset& data,
                                      const std::vector<std::size_t>& batch,
                                      const DropoutPlan* plan,
                                      const LossWeights& weights,
                                      const LossOptions& opts = {}) {
    detail::check_deer_batch(net, data, batch, weights);
    BatchBreakdown sum;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const AnnotatedItem& item = data.items[batch[b]];
        const ItemMasks* masks = plan ? &(*plan)[b] : nullptr;
        const auto trace = forward_trace(net, item.features, masks);
        const auto& raw = trace.output();
        for (std::size_t a = 0; a < data.attributes.size(); ++a) {
            const LabelSet& labels = item.labels.at(data.attributes[a]);
            const NIGParams w = head_params(raw.data() + 4 * a);
            const LossBreakdown lb =
                attribute_loss(labels, w, weights.lambdas[a], opts);
            sum.total += weights.epsilons[a] * lb.total;
            sum.nll += weights.epsilons[a] * lb.nll;
            sum.reg_mean += weights.epsilons[a] * lb.reg_mean;
            sum.reg_var += weights.epsilons[a] * lb.reg_var;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    sum.total *= inv;
    sum.nll *= inv;
    sum.reg_mean *= inv;
    sum.reg_var *= inv;
    return sum;
}

inline std::pair<BatchBreakdown, std::vector<double>> deer_batch_backward(
    const Mlp& net, const Dataset& data, const std::vector<std::size_t>& batch,
    const DropoutPlan* plan, const LossWeights& weights,
    const LossOptions& opts = {}) {
    detail::check_deer_batch(net, data, batch, weights);
    BatchBreakdown sum;
    std::vector<double> grads(net.params.size(), 0.0);
    const double inv = 1.0 / static_cast<double>(batch.size());
    std::vector<double> d_raw(net.shape.output);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const AnnotatedItem& item = data.items[batch[b]];
        const ItemMasks* masks = plan ? &(*plan)[b] : nullptr;
        const auto trace = forward_trace(net, item.features, masks);
        const auto& raw = trace.output();
        for (std::size_t a = 0; a < data.attributes.size(); ++a) {
            const LabelSet& labels = item.labels.at(data.attributes[a]);
            const NIGParams w = head_params(raw.data() + 4 * a);
            const LossBreakdown lb =
                attribute_loss(labels, w, weights.lambdas[a], opts);
            sum.total += weights.epsilons[a] * lb.total;
            sum.nll += weights.epsilons[a] * lb.nll;
            sum.reg_mean += weights.epsilons[a] * lb.reg_mean;
            sum.reg_var += weights.epsilons[a] * lb.reg_var;
            NIGGrad g = attribute_loss_grad(labels, w, weights.lambdas[a], opts);
            g *= weights.epsilons[a] * inv;
            head_backprop(raw.data() + 4 * a, g, d_raw.data() + 4 * a);
        }
        backprop(net, trace, d_raw, masks, grads);
    }
    sum.total *= inv;
    sum.nll *= inv;
    sum.reg_mean *= inv;
    sum.reg_var *= inv;
    return {sum, std::move(grads)};
}

// ---------------------------------------------------------------------------
// Adam optimiser with bias correction.

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::size_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

inline AdamState make_adam(std::size_t param_count, const AdamConfig& cfg = {}) {
    return {cfg, 0, std::vector<double>(param_count, 0.0),
            std::vector<double>(param_count, 0.0)};
}

inline void adam_step(AdamState& state, std::vector<double>& params,
                      const std::vector<double>& grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.cfg.beta1 * state.m[i] + (1.0 - state.cfg.beta1) * grads[i];
        state.v[i] = state.cfg.beta2 * state.v[i] +
                     (1.0 - state.cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.cfg.learning_rate * m_hat /
                     (std::sqrt(v_hat) + state.cfg.eps_hat);
    }
}

// ---------------------------------------------------------------------------
// Training loop. Single-threaded and fully deterministic for a given
// (dataset, config) pair.

struct TrainConfig {
    std::vector<std::size_t> hidden = {128, 128};
    double dropout_rate = 0.3;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    AdamConfig adam;
    std::vector<double> epsilons;  // empty: equal weights
    std::vector<double> lambdas;   // empty: 0.1 per attribute
    LossOptions loss;
    std::size_t early_stop_patience = 0;  // 0: disabled
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_total = 0.0;
    double train_nll = 0.0;
    double train_reg_mean = 0.0;
    double train_reg_var = 0.0;
    double val_total = std::numeric_limits<double>::quiet_NaN();
};

using TrainTrace = std::vector<EpochStats>;

inline LossWeights resolve_loss_weights(const TrainConfig& cfg,
                                        std::size_t n_attributes) {
    LossWeights w = default_loss_weights(n_attributes);
    if (!cfg.epsilons.empty()) w.epsilons = cfg.epsilons;
    if (!cfg.lambdas.empty()) w.lambdas = cfg.lambdas;
    if (w.epsilons.size() != n_attributes || w.lambdas.size() != n_attributes)
        throw std::invalid_argument("train: epsilon/lambda lists must have length N");
    return w;
}

inline double validation_loss(const Mlp& net, const Dataset& val,
                              const LossWeights& weights,
                              const LossOptions& opts) {
    std::vector<std::size_t> all(val.items.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return deer_batch_loss(net, val, all, nullptr, weights, opts).total;
}

inline std::pair<Mlp, TrainTrace> train_deer(const Dataset& train,
                                             const Dataset* val,
                                             const TrainConfig& cfg) {
    if (train.items.empty()) throw std::invalid_argument("train: empty dataset");
    const std::size_t n_attr = train.attributes.size();
    const LossWeights weights = resolve_loss_weights(cfg, n_attr);

    Rng rng(cfg.seed);
    MlpShape shape{train.feature_dim, cfg.hidden, 4 * n_attr};
    Mlp net = make_mlp(shape, cfg.dropout_rate, rng);
    AdamState adam = make_adam(net.params.size(), cfg.adam);

    std::vector<std::size_t> order(train.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainTrace trace;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = net.params;
    std::size_t epochs_since_best = 0;
    const bool early_stop = val != nullptr && cfg.early_stop_patience > 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        BatchBreakdown epoch_sum;
        std::size_t items_seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            std::vector<std::size_t> batch(order.begin() + start,
                                           order.begin() + start + len);
            DropoutPlan plan =
                sample_dropout_plan(shape, net.dropout_rate, len, rng);
            auto [stats, grads] =
                deer_batch_backward(net, train, batch, &plan, weights, cfg.loss);
            adam_step(adam, net.params, grads);
            epoch_sum.total += stats.total * static_cast<double>(len);
            epoch_sum.nll += stats.nll * static_cast<double>(len);
            epoch_sum.reg_mean += stats.reg_mean * static_cast<double>(len);
            epoch_sum.reg_var += stats.reg_var * static_cast<double>(len);
            items_seen += len;
        }
        EpochStats stats;
        stats.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(items_seen);
        stats.train_total = epoch_sum.total * inv;
        stats.train_nll = epoch_sum.nll * inv;
        stats.train_reg_mean = epoch_sum.reg_mean * inv;
        stats.train_reg_var = epoch_sum.reg_var * inv;
        if (val != nullptr)
            stats.val_total = validation_loss(net, *val, weights, cfg.loss);
        trace.push_back(stats);

        if (early_stop) {
            if (stats.val_total < best_val) {
                best_val = stats.val_total;
                best_params = net.params;
                epochs_since_best = 0;
            } else if (++epochs_since_best >= cfg.early_stop_patience) {
                net.params = best_params;
                break;
            }
        }
    }
    if (early_stop && !trace.empty()) net.params = best_params;
    return {std::move(net), std::move(trace)};
}

}  // namespace deer
