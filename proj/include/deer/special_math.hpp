#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace deer {

// Student-t density parameters in the (dof, location, squared-scale) form:
// St_dof(t | loc, scale). Note that `scale` is the squared scale, i.e. the
// density contains (t - loc)^2 / (dof * scale).
struct StudentTParams {
    double dof;
    double loc;
    double scale;

    StudentTParams(double dof_, double loc_, double scale_)
        : dof(dof_), loc(loc_), scale(scale_) {
        if (!(dof > 0.0) || !std::isfinite(dof))
            throw std::domain_error("StudentTParams: dof must be positive");
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw std::domain_error("StudentTParams: scale must be positive");
        if (!std::isfinite(loc))
            throw std::domain_error("StudentTParams: loc must be finite");
    }
};

// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 coefficients).
// Relative error is a few ulp over the whole positive axis.
inline double log_gamma(double x) {
    if (!(x > 0.0) || std::isnan(x))
        throw std::domain_error("log_gamma: argument must be positive");

    static constexpr double kCoeffs[9] = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    static constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

    if (x < 0.5) {
        // reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x)
        const double pi = 3.14159265358979323846264338327950288;
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }

    const double z = x - 1.0;
    double series = kCoeffs[0];
    for (int k = 1; k < 9; ++k) series += kCoeffs[k] / (z + k);
    const double t = z + 7.5;  // z + g + 0.5
    return kHalfLog2Pi + (z + 0.5) * std::log(t) - t + std::log(series);
}

// psi(x) = d/dx ln Gamma(x) for x > 0. Recurrence up to x >= 12, then the
// asymptotic Bernoulli series; absolute error well below 1e-12.
inline double digamma(double x) {
    if (!(x > 0.0) || std::isnan(x))
        throw std::domain_error("digamma: argument must be positive");

    double result = 0.0;
    while (x < 12.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_2n / (2n x^2n)
    double series = inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                    inv2 * (1.0 / 252.0 -
                    inv2 * (1.0 / 240.0 -
                    inv2 * (1.0 / 132.0)))));
    return result + std::log(x) - 0.5 * inv - series;
}

// ln(1 + exp(x)) without overflow; result is clamped away from zero so the
// output stays strictly positive even when exp(x) underflows.
inline double softplus(double x) {
    const double v = std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    return std::fmax(v, std::numeric_limits<double>::min());
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ln St_dof(t | loc, scale) with `scale` the squared scale:
//   Gamma((dof+1)/2) / (Gamma(dof/2) sqrt(pi dof scale))
//     * (1 + (t-loc)^2/(dof scale))^(-(dof+1)/2)
inline double student_t_logpdf(double t, const StudentTParams& p) {
    static constexpr double kLogPi = 1.1447298858494001741434273513531;
    const double half_dofp1 = 0.5 * (p.dof + 1.0);
    const double z = (t - p.loc) * (t - p.loc) / (p.dof * p.scale);
    return log_gamma(half_dofp1) - log_gamma(0.5 * p.dof) -
           0.5 * (kLogPi + std::log(p.dof) + std::log(p.scale)) -
           half_dofp1 * std::log1p(z);
}

inline double gaussian_logpdf(double x, double mean, double variance) {
    if (!(variance > 0.0))
        throw std::domain_error("gaussian_logpdf: variance must be positive");
    static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    const double d = x - mean;
    return -0.5 * (kLog2Pi + std::log(variance) + d * d / variance);
}

inline double invgamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0.0) || !(shape > 0.0) || !(rate > 0.0))
        throw std::domain_error("invgamma_logpdf: arguments must be positive");
    return shape * std::log(rate) - log_gamma(shape) -
           (shape + 1.0) * std::log(x) - rate / x;
}

}  // namespace deer
