#pragma once

// Test-only oracles: a self-contained adaptive Gauss-Kronrod integrator and a
// brute-force marginal likelihood computed by nested quadrature. Reference
// densities here go through std::lgamma so the oracle shares no code with the
// library implementations it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "deer/evidential.hpp"

namespace oracle {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss on [-1, 1]
inline constexpr double kNodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};

inline constexpr double kWeightsK[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};

inline constexpr double kWeightsG[4] = {0.129484966168870, 0.279705391489277,
                                        0.381830050505119, 0.417959183673469};

template <typename F>
void gauss_kronrod(const F& f, double a, double b, double& k15, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fk[15];
    for (int i = 0; i < 15; ++i) fk[i] = f(mid + half * kNodes[i]);
    k15 = 0.0;
    for (int i = 0; i < 15; ++i) k15 += kWeightsK[i] * fk[i];
    double g7 = kWeightsG[3] * fk[7];
    g7 += kWeightsG[0] * (fk[1] + fk[13]);
    g7 += kWeightsG[1] * (fk[3] + fk[11]);
    g7 += kWeightsG[2] * (fk[5] + fk[9]);
    k15 *= half;
    g7 *= half;
    err = std::fabs(k15 - g7);
}

}  // namespace detail

// Adaptive bisection until the summed Kronrod error estimate satisfies the
// absolute-or-relative tolerance. The range is pre-split into uniform panels
// first so narrow peaks cannot slip between the nodes of one wide interval.
template <typename F>
QuadResult integrate(const F& f, double a, double b, double rel_tol = 1e-10,
                     double abs_tol = 0.0, int initial_panels = 16,
                     int max_intervals = 4000) {
    struct Interval {
        double a, b, value, error;
    };
    std::vector<Interval> intervals;
    for (int p = 0; p < initial_panels; ++p) {
        const double lo = a + (b - a) * p / initial_panels;
        const double hi = a + (b - a) * (p + 1) / initial_panels;
        double v, e;
        detail::gauss_kronrod(f, lo, hi, v, e);
        intervals.push_back({lo, hi, v, e});
    }
    for (int iter = 0; iter < max_intervals; ++iter) {
        double total = 0.0, total_err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            total += intervals[i].value;
            total_err += intervals[i].error;
            if (intervals[i].error > intervals[worst].error) worst = i;
        }
        const double bound = std::max(abs_tol, rel_tol * std::fabs(total));
        if (total_err <= bound) return {total, total_err, true};
        Interval w = intervals[worst];
        intervals.erase(intervals.begin() + static_cast<std::ptrdiff_t>(worst));
        const double mid = 0.5 * (w.a + w.b);
        Interval left{w.a, mid, 0.0, 0.0}, right{mid, w.b, 0.0, 0.0};
        detail::gauss_kronrod(f, left.a, left.b, left.value, left.error);
        detail::gauss_kronrod(f, right.a, right.b, right.value, right.error);
        intervals.push_back(left);
        intervals.push_back(right);
    }
    double total = 0.0, total_err = 0.0;
    for (const auto& iv : intervals) {
        total += iv.value;
        total_err += iv.error;
    }
    return {total, total_err,
            total_err <= std::max(abs_tol, rel_tol * std::fabs(total))};
}

// Reference densities, deliberately written against std::lgamma.
inline double ref_gaussian_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) /
           std::sqrt(6.283185307179586476925287 * var);
}

inline double ref_invgamma_pdf(double x, double shape, double rate) {
    return std::exp(shape * std::log(rate) - std::lgamma(shape) -
                    (shape + 1.0) * std::log(x) - rate / x);
}

inline double ref_nig_pdf(double mu, double sigma2, const deer::NIGParams& w) {
    return ref_gaussian_pdf(mu, w.gamma, sigma2 / w.upsilon) *
           ref_invgamma_pdf(sigma2, w.alpha, w.beta);
}

// ln p(y | Omega) by brute force: the inner integral runs over mu for fixed
// sigma^2, the outer over u = ln sigma^2 (which makes the inverse-gamma tails
// smooth). Throws if the outer quadrature fails to converge at 1e-8 relative.
//
// Integration windows: for fixed sigma^2 the mu-integrand is proportional to
// a Gaussian centred at (y + upsilon gamma)/(1 + upsilon) with standard
// deviation sigma/sqrt(1 + upsilon); in u the mass sits near ln of
// beta' = beta + upsilon (y-gamma)^2 / (2 (1+upsilon)), with a doubly
// exponential left tail and an exp(-(alpha+1/2) u) right tail.
inline double marginal_logpdf(double y, const deer::NIGParams& w) {
    const auto inner = [&](double u) {
        const double sigma2 = std::exp(u);
        const double sigma = std::sqrt(sigma2);
        const double centre = (y + w.upsilon * w.gamma) / (1.0 + w.upsilon);
        const double sd = sigma / std::sqrt(1.0 + w.upsilon);
        const auto f = [&](double mu) {
            return ref_gaussian_pdf(y, mu, sigma2) * ref_nig_pdf(mu, sigma2, w);
        };
        const QuadResult r =
            integrate(f, centre - 12.0 * sd, centre + 12.0 * sd, 1e-11, 1e-300, 8);
        return r.value * sigma2;  // Jacobian d(sigma^2) = e^u du
    };
    const double beta_post = w.beta + w.upsilon * (y - w.gamma) * (y - w.gamma) /
                                          (2.0 * (1.0 + w.upsilon));
    const double u_lo = std::log(beta_post) - 7.0;
    const double u_hi =
        std::log(beta_post) + std::max(12.0, 40.0 / (w.alpha + 0.5));
    const QuadResult r = integrate(inner, u_lo, u_hi, 1e-9, 1e-300, 24);
    if (!r.converged || !(r.value > 0.0))
        throw std::runtime_error("marginal oracle quadrature did not converge");
    return std::log(r.value);
}

// central finite difference
template <typename F>
double central_diff(const F& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double guard = 1e-8) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), guard});
}

}  // namespace oracle
