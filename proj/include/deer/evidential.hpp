#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deer/special_math.hpp"

namespace deer {

// Hyper-parameters of the normal-inverse-gamma evidential distribution for a
// single attribute: a Gaussian prior N(gamma, sigma^2/upsilon) over the mean
// and an inverse-gamma prior IG(alpha, beta) over the variance.
struct NIGParams {
    double gamma;
    double upsilon;
    double alpha;
    double beta;

    NIGParams(double gamma_, double upsilon_, double alpha_, double beta_)
        : gamma(gamma_), upsilon(upsilon_), alpha(alpha_), beta(beta_) {
        if (!std::isfinite(gamma))
            throw std::domain_error("NIGParams: gamma must be finite");
        if (!(upsilon > 0.0) || !std::isfinite(upsilon))
            throw std::domain_error("NIGParams: upsilon must be positive");
        if (!(alpha > 1.0) || !std::isfinite(alpha))
            throw std::domain_error("NIGParams: alpha must exceed 1");
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw std::domain_error("NIGParams: beta must be positive");
    }
};

// Mean prediction plus the three analytic variance terms. `total` is computed
// as the sum of the other two, so the law-of-total-variance identity holds
// exactly in floating point.
struct UncertaintyReport {
    double mean;
    double aleatoric;  // E[sigma^2]
    double epistemic;  // Var[mu]
    double total;      // Var[y] = aleatoric + epistemic
};

inline UncertaintyReport uncertainty(const NIGParams& w) {
    const double aleatoric = w.beta / (w.alpha - 1.0);
    const double epistemic = aleatoric / w.upsilon;
    return {w.gamma, aleatoric, epistemic, aleatoric + epistemic};
}

// Reciprocal of the total uncertainty; scales both calibration penalties.
inline double uncertainty_weight(const NIGParams& w) {
    return w.upsilon * (w.alpha - 1.0) / (w.beta * (1.0 + w.upsilon));
}

// The raw annotator labels of one item/attribute. Mean and variance use the
// 1/M population normaliser.
class LabelSet {
public:
    explicit LabelSet(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty())
            throw std::invalid_argument("LabelSet: at least one label required");
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t count() const { return values_.size(); }

    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s / static_cast<double>(values_.size());
    }

    double variance() const {
        const double m = mean();
        double s = 0.0;
        for (double v : values_) s += (v - m) * (v - m);
        return s / static_cast<double>(values_.size());
    }

private:
    std::vector<double> values_;
};

// ln of the NIG density p(mu, sigma^2 | Omega).
inline double nig_logpdf(double mu, double sigma2, const NIGParams& w) {
    if (!(sigma2 > 0.0))
        throw std::domain_error("nig_logpdf: sigma2 must be positive");
    return gaussian_logpdf(mu, w.gamma, sigma2 / w.upsilon) +
           invgamma_logpdf(sigma2, w.alpha, w.beta);
}

// Marginal likelihood of an observation under the NIG distribution; also the
// test-time predictive posterior. A Student-t with 2*alpha degrees of
// freedom, location gamma and squared scale beta(1+upsilon)/(upsilon*alpha).
inline double predictive_logpdf(double y, const NIGParams& w) {
    return student_t_logpdf(
        y, StudentTParams{2.0 * w.alpha, w.gamma,
                          w.beta * (1.0 + w.upsilon) / (w.upsilon * w.alpha)});
}

// Per-observation NLL: every annotator label scored against the marginal.
inline double nll_per_observation(const LabelSet& labels, const NIGParams& w) {
    double s = 0.0;
    for (double y : labels.values()) s += predictive_logpdf(y, w);
    return -s / static_cast<double>(labels.count());
}

// Averaged-label NLL: only the label mean is scored.
inline double nll_averaged(const LabelSet& labels, const NIGParams& w) {
    return -predictive_logpdf(labels.mean(), w);
}

// Penalty on the mean prediction, scaled by the inverse total uncertainty.
inline double reg_mean(const LabelSet& labels, const NIGParams& w) {
    return uncertainty_weight(w) * std::fabs(labels.mean() - w.gamma);
}

// Penalty on the aleatoric estimate against the observed label variance.
inline double reg_var(const LabelSet& labels, const NIGParams& w) {
    const double aleatoric = w.beta / (w.alpha - 1.0);
    return uncertainty_weight(w) * std::fabs(labels.variance() - aleatoric);
}

struct LossOptions {
    bool averaged_nll = false;       // use nll_averaged instead of per-observation
    bool use_reg_var = true;         // include the variance-calibration penalty
    bool grad_through_weight = true; // propagate gradients through the 1/Var[y] factor
};

struct LossBreakdown {
    double nll = 0.0;
    double reg_mean = 0.0;
    double reg_var = 0.0;
    double total = 0.0;
};

// Single-attribute loss: NLL + lambda * (mean penalty + variance penalty).
inline LossBreakdown attribute_loss(const LabelSet& labels, const NIGParams& w,
                                    double lambda,
                                    const LossOptions& opts = {}) {
    if (lambda < 0.0)
        throw std::invalid_argument("attribute_loss: lambda must be nonnegative");
    LossBreakdown out;
    out.nll = opts.averaged_nll ? nll_averaged(labels, w)
                                : nll_per_observation(labels, w);
    out.reg_mean = reg_mean(labels, w);
    out.reg_var = opts.use_reg_var ? reg_var(labels, w) : 0.0;
    out.total = out.nll + lambda * (out.reg_mean + out.reg_var);
    return out;
}

// Weighted sum over attributes; the weights must sum to one.
inline double multi_attribute_loss(const std::vector<LabelSet>& labels,
                                   const std::vector<NIGParams>& omegas,
                                   const std::vector<double>& epsilons,
                                   const std::vector<double>& lambdas,
                                   const LossOptions& opts = {}) {
    const std::size_t n = labels.size();
    if (omegas.size() != n || epsilons.size() != n || lambdas.size() != n)
        throw std::invalid_argument("multi_attribute_loss: list lengths differ");
    double weight_sum = 0.0;
    for (double e : epsilons) weight_sum += e;
    if (std::fabs(weight_sum - 1.0) > 1e-9)
        throw std::invalid_argument("multi_attribute_loss: weights must sum to 1");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        total += epsilons[i] *
                 attribute_loss(labels[i], omegas[i], lambdas[i], opts).total;
    return total;
}

// ---------------------------------------------------------------------------
// Analytic gradients with respect to the four NIG hyper-parameters. These
// feed the network backward pass; each term is finite-difference checked in
// the test suite.

struct NIGGrad {
    double d_gamma = 0.0;
    double d_upsilon = 0.0;
    double d_alpha = 0.0;
    double d_beta = 0.0;

    NIGGrad& operator+=(const NIGGrad& o) {
        d_gamma += o.d_gamma;
        d_upsilon += o.d_upsilon;
        d_alpha += o.d_alpha;
        d_beta += o.d_beta;
        return *this;
    }
    NIGGrad& operator*=(double s) {
        d_gamma *= s;
        d_upsilon *= s;
        d_alpha *= s;
        d_beta *= s;
        return *this;
    }
};

// d/dOmega ln p(y | Omega). Writing A = upsilon (y-gamma)^2 and
// B = 2 beta (1+upsilon):
//   ln p = lnG(a+1/2) - lnG(a) + ln(upsilon)/2 - ln(pi)/2
//        + a ln B - (a+1/2) ln(A+B)
inline NIGGrad predictive_logpdf_grad(double y, const NIGParams& w) {
    const double r = y - w.gamma;
    const double a = w.alpha;
    const double big_a = w.upsilon * r * r;
    const double big_b = 2.0 * w.beta * (1.0 + w.upsilon);
    const double q = big_a + big_b;

    NIGGrad g;
    g.d_gamma = (2.0 * a + 1.0) * w.upsilon * r / q;
    g.d_upsilon = 0.5 / w.upsilon + a / (1.0 + w.upsilon) -
                  (a + 0.5) * (r * r + 2.0 * w.beta) / q;
    g.d_alpha = digamma(a + 0.5) - digamma(a) + std::log(big_b) - std::log(q);
    g.d_beta = a / w.beta - (a + 0.5) * 2.0 * (1.0 + w.upsilon) / q;
    return g;
}

namespace detail {

// subgradient convention: sign(0) = 0 at the |.| kinks
inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// gradient of the weight Phi = upsilon (alpha-1) / (beta (1+upsilon))
inline NIGGrad weight_grad(const NIGParams& w) {
    const double phi = uncertainty_weight(w);
    NIGGrad g;
    g.d_upsilon = (w.alpha - 1.0) / (w.beta * (1.0 + w.upsilon) * (1.0 + w.upsilon));
    g.d_alpha = w.upsilon / (w.beta * (1.0 + w.upsilon));
    g.d_beta = -phi / w.beta;
    return g;
}

}  // namespace detail

inline NIGGrad reg_mean_grad(const LabelSet& labels, const NIGParams& w,
                             bool grad_through_weight = true) {
    const double phi = uncertainty_weight(w);
    const double err = labels.mean() - w.gamma;
    NIGGrad g;
    g.d_gamma = -phi * detail::sgn(err);
    if (grad_through_weight) {
        NIGGrad wg = detail::weight_grad(w);
        wg *= std::fabs(err);
        g += wg;
    }
    return g;
}

inline NIGGrad reg_var_grad(const LabelSet& labels, const NIGParams& w,
                            bool grad_through_weight = true) {
    const double phi = uncertainty_weight(w);
    const double aleatoric = w.beta / (w.alpha - 1.0);
    const double diff = labels.variance() - aleatoric;
    const double s = detail::sgn(diff);
    NIGGrad g;
    // d/dtheta |var - E[sigma^2]| = -sgn(diff) * dE/dtheta
    g.d_alpha = phi * s * w.beta / ((w.alpha - 1.0) * (w.alpha - 1.0));
    g.d_beta = -phi * s / (w.alpha - 1.0);
    if (grad_through_weight) {
        NIGGrad wg = detail::weight_grad(w);
        wg *= std::fabs(diff);
        g += wg;
    }
    return g;
}

inline NIGGrad attribute_loss_grad(const LabelSet& labels, const NIGParams& w,
                                   double lambda,
                                   const LossOptions& opts = {}) {
    NIGGrad g;
    if (opts.averaged_nll) {
        g = predictive_logpdf_grad(labels.mean(), w);
        g *= -1.0;
    } else {
        for (double y : labels.values()) {
            NIGGrad t = predictive_logpdf_grad(y, w);
            t *= -1.0 / static_cast<double>(labels.count());
            g += t;
        }
    }
    if (lambda > 0.0) {
        NIGGrad rm = reg_mean_grad(labels, w, opts.grad_through_weight);
        rm *= lambda;
        g += rm;
        if (opts.use_reg_var) {
            NIGGrad rv = reg_var_grad(labels, w, opts.grad_through_weight);
            rv *= lambda;
            g += rv;
        }
    }
    return g;
}

}  // namespace deer
