#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deer/evidential.hpp"
#include "deer/special_math.hpp"

namespace deer {

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace detail

// Concordance correlation coefficient with population (1/T) variances:
//   2 cov / (var_hyp + var_ref + (mean_hyp - mean_ref)^2)
// A zero denominator (both sequences constant and equal) yields 0.
inline double ccc(const std::vector<double>& hyp, const std::vector<double>& ref) {
    if (hyp.size() != ref.size())
        throw std::invalid_argument("ccc: sequence lengths differ");
    if (hyp.size() < 2)
        throw std::invalid_argument("ccc: need at least two points");
    const double mh = detail::mean_of(hyp);
    const double mr = detail::mean_of(ref);
    double var_h = 0.0, var_r = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        const double dh = hyp[i] - mh;
        const double dr = ref[i] - mr;
        var_h += dh * dh;
        var_r += dr * dr;
        cov += dh * dr;
    }
    const double n = static_cast<double>(hyp.size());
    var_h /= n;
    var_r /= n;
    cov /= n;
    const double denom = var_h + var_r + (mh - mr) * (mh - mr);
    if (denom == 0.0) return 0.0;
    return 2.0 * cov / denom;
}

inline double rmse(const std::vector<double>& hyp, const std::vector<double>& ref) {
    if (hyp.size() != ref.size())
        throw std::invalid_argument("rmse: sequence lengths differ");
    if (hyp.empty()) throw std::invalid_argument("rmse: empty sequences");
    double s = 0.0;
    for (std::size_t i = 0; i < hyp.size(); ++i)
        s += (hyp[i] - ref[i]) * (hyp[i] - ref[i]);
    return std::sqrt(s / static_cast<double>(hyp.size()));
}

// Corpus NLLs against the evidential predictive posterior, unweighted mean
// over items. nll_avg scores the averaged label, nll_all every raw label.
inline double nll_avg(const std::vector<NIGParams>& predictions,
                      const std::vector<LabelSet>& labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw std::invalid_argument("nll_avg: misaligned inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        s -= predictive_logpdf(labels[i].mean(), predictions[i]);
    return s / static_cast<double>(predictions.size());
}

inline double nll_all(const std::vector<NIGParams>& predictions,
                      const std::vector<LabelSet>& labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw std::invalid_argument("nll_all: misaligned inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        s += nll_per_observation(labels[i], predictions[i]);
    return s / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------------------
// Gaussian kernel density scoring for sample-based predictors.

struct BandwidthRule {
    enum class Kind { silverman, fixed };
    Kind kind = Kind::silverman;
    double value = 0.0;

    static BandwidthRule silverman() { return {Kind::silverman, 0.0}; }
    static BandwidthRule fixed(double h) {
        if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
        return {Kind::fixed, h};
    }
};

inline constexpr double kBandwidthFloor = 1e-3;

inline double silverman_bandwidth(std::vector<double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("silverman_bandwidth: need >= 2 samples");
    const double mean = detail::mean_of(samples);
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        return samples[lo] * (1.0 - frac) + samples[hi] * frac;
    };
    const double iqr_scaled = (quantile(0.75) - quantile(0.25)) / 1.34;

    double spread;
    if (sd > 0.0 && iqr_scaled > 0.0)
        spread = std::min(sd, iqr_scaled);
    else
        spread = std::max(sd, iqr_scaled);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, kBandwidthFloor);
}

inline double resolve_bandwidth(const std::vector<double>& samples,
                                const BandwidthRule& rule) {
    return rule.kind == BandwidthRule::Kind::fixed ? rule.value
                                                   : silverman_bandwidth(samples);
}

// log of the KDE density (1/K) sum_j N(t; s_j, h^2), evaluated stably
inline double kde_logpdf(const std::vector<double>& samples, double bandwidth,
                         double t) {
    if (samples.size() < 2)
        throw std::invalid_argument("kde_logpdf: need >= 2 samples");
    if (!(bandwidth > 0.0))
        throw std::invalid_argument("kde_logpdf: bandwidth must be positive");
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const double z = (t - samples[j]) / bandwidth;
        terms[j] = -0.5 * z * z;
        max_term = std::max(max_term, terms[j]);
    }
    double s = 0.0;
    for (double term : terms) s += std::exp(term - max_term);
    static constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;
    return max_term + std::log(s / static_cast<double>(samples.size())) -
           kHalfLog2Pi - std::log(bandwidth);
}

// KDE-based corpus NLLs: `samples` holds one prediction sample set per item.
inline std::pair<double, double> nll_kde(
    const std::vector<std::vector<double>>& samples,
    const std::vector<LabelSet>& labels, const BandwidthRule& rule) {
    if (samples.size() != labels.size() || samples.empty())
        throw std::invalid_argument("nll_kde: misaligned inputs");
    double avg = 0.0, all = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double h = resolve_bandwidth(samples[i], rule);
        avg -= kde_logpdf(samples[i], h, labels[i].mean());
        double item = 0.0;
        for (double y : labels[i].values()) item -= kde_logpdf(samples[i], h, y);
        all += item / static_cast<double>(labels[i].count());
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    return {avg * inv, all * inv};
}

// ---------------------------------------------------------------------------
// Reject option: drop the least confident share of items and measure the
// error on the remainder.

struct RejectEntry {
    std::string id;
    double prediction = 0.0;
    double reference = 0.0;
    double uncertainty = 0.0;
};

struct RejectPoint {
    double fraction = 0.0;
    double coverage = 0.0;
    double rmse = 0.0;
};

struct RejectCurve {
    std::vector<RejectPoint> points;
};

inline RejectCurve reject_curve(std::vector<RejectEntry> entries,
                                const std::vector<double>& fractions) {
    if (entries.empty()) throw std::invalid_argument("reject_curve: no predictions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] < 0.0 || fractions[i] >= 1.0)
            throw std::invalid_argument("reject_curve: fractions must lie in [0,1)");
        if (i > 0 && fractions[i] <= fractions[i - 1])
            throw std::invalid_argument("reject_curve: fractions must be strictly increasing");
    }
    // most uncertain first; equal uncertainties resolved by ascending id
    std::sort(entries.begin(), entries.end(),
              [](const RejectEntry& a, const RejectEntry& b) {
                  if (a.uncertainty != b.uncertainty)
                      return a.uncertainty > b.uncertainty;
                  return a.id < b.id;
              });
    const std::size_t n = entries.size();
    RejectCurve curve;
    for (double f : fractions) {
        const std::size_t rejected = static_cast<std::size_t>(
            std::floor(f * static_cast<double>(n) + 1e-9));
        const std::size_t kept = n - rejected;  // == ceil((1-f) n)
        double s = 0.0;
        for (std::size_t i = rejected; i < n; ++i) {
            const double d = entries[i].prediction - entries[i].reference;
            s += d * d;
        }
        curve.points.push_back(
            {f, 1.0 - f, std::sqrt(s / static_cast<double>(kept))});
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Per-attribute evaluation summary, serialisable as a delimited table.

struct AttributeEval {
    std::string attribute;
    double ccc = 0.0;
    double rmse = 0.0;
    double nll_avg = 0.0;
    double nll_all = 0.0;
};

struct EvalSummary {
    std::vector<AttributeEval> per_attribute;
};

}  // namespace deer
