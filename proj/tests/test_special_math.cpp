#include <catch2/catch.hpp>

#include <cmath>

#include "deer/special_math.hpp"
#include "support/oracles.hpp"

using deer::StudentTParams;

TEST_CASE("log_gamma known values") {
    CHECK(deer::log_gamma(1.0) == Approx(0.0).margin(1e-14));
    CHECK(deer::log_gamma(0.5) ==
          Approx(0.5 * std::log(3.14159265358979323846)).margin(1e-13));
    CHECK(deer::log_gamma(5.0) == Approx(std::log(24.0)).margin(1e-12));
}

TEST_CASE("log_gamma matches std::lgamma over the working range") {
    // absolute agreement where the magnitude permits it, relative beyond
    for (double x = 1e-3; x < 1.1e6; x *= 1.37) {
        const double ours = deer::log_gamma(x);
        const double ref = std::lgamma(x);
        const double tol = std::max(1e-12, 1e-12 * std::fabs(ref));
        INFO("x=" << x);
        CHECK(std::fabs(ours - ref) < tol);
    }
}

TEST_CASE("log_gamma recurrence") {
    for (double x = 0.5; x <= 100.0; x += 0.7) {
        INFO("x=" << x);
        CHECK(deer::log_gamma(x + 1.0) ==
              Approx(deer::log_gamma(x) + std::log(x)).margin(1e-10));
    }
}

TEST_CASE("log_gamma rejects nonpositive input") {
    CHECK_THROWS_AS(deer::log_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(deer::log_gamma(-1.5), std::domain_error);
}

TEST_CASE("digamma known values") {
    constexpr double kEulerMascheroni = 0.57721566490153286060651209008240;
    CHECK(deer::digamma(1.0) == Approx(-kEulerMascheroni).margin(1e-12));
    CHECK(deer::digamma(2.0) == Approx(1.0 - kEulerMascheroni).margin(1e-12));
}

TEST_CASE("digamma matches finite differences of log_gamma") {
    const auto lg = [](double x) { return deer::log_gamma(x); };
    CHECK(deer::digamma(10.0) ==
          Approx(oracle::central_diff(lg, 10.0, 1e-6)).margin(1e-6));
    for (double x : {0.05, 0.3, 1.7, 4.2, 25.0, 400.0}) {
        INFO("x=" << x);
        CHECK(deer::digamma(x) ==
              Approx(oracle::central_diff(lg, x, 1e-6 * std::max(1.0, x)))
                  .margin(1e-6 * std::max(1.0, x)));
    }
}

TEST_CASE("digamma recurrence and domain") {
    for (double x : {0.01, 0.9, 3.3, 11.5}) {
        INFO("x=" << x);
        CHECK(deer::digamma(x + 1.0) ==
              Approx(deer::digamma(x) + 1.0 / x).margin(1e-10));
    }
    CHECK_THROWS_AS(deer::digamma(0.0), std::domain_error);
    CHECK_THROWS_AS(deer::digamma(-2.0), std::domain_error);
}

TEST_CASE("softplus values and stability") {
    CHECK(deer::softplus(0.0) == Approx(std::log(2.0)).margin(1e-15));
    CHECK(deer::softplus(100.0) == Approx(100.0).margin(1e-12));
    CHECK(deer::softplus(-100.0) == Approx(3.7200759760208360e-44).epsilon(1e-12));
    CHECK(deer::softplus(-100.0) > 0.0);
    CHECK(deer::softplus(1e4) == Approx(1e4).margin(1e-9));
    CHECK(deer::softplus(-1e4) > 0.0);
    CHECK(std::isfinite(deer::softplus(1e4)));

    double prev = deer::softplus(-30.0);
    for (double x = -29.5; x <= 30.0; x += 0.5) {
        const double v = deer::softplus(x);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("student_t_logpdf closed-form points") {
    // dof 4: Gamma(2.5) = 0.75 sqrt(pi) gives density 3/8 at the centre
    CHECK(deer::student_t_logpdf(0.0, {4.0, 0.0, 1.0}) ==
          Approx(std::log(0.375)).margin(1e-12));
    // dof 2: density 1/(2 sqrt(2)) at the centre
    CHECK(deer::student_t_logpdf(0.0, {2.0, 0.0, 1.0}) ==
          Approx(std::log(1.0 / (2.0 * std::sqrt(2.0)))).margin(1e-12));
}

TEST_CASE("student_t density normalises to one") {
    // substitute t = loc + sqrt(dof*scale) tan(u) to compactify the tails
    for (const StudentTParams p :
         {StudentTParams{4.0, 0.0, 1.0}, StudentTParams{2.0, 1.5, 0.7},
          StudentTParams{9.0, -3.0, 2.5}}) {
        const double c = std::sqrt(p.dof * p.scale);
        const auto f = [&](double u) {
            const double t = p.loc + c * std::tan(u);
            const double sec2 = 1.0 / (std::cos(u) * std::cos(u));
            return std::exp(deer::student_t_logpdf(t, p)) * c * sec2;
        };
        const auto r = oracle::integrate(f, -1.5707963267948966 + 1e-12,
                                         1.5707963267948966 - 1e-12, 1e-9);
        REQUIRE(r.converged);
        INFO("dof=" << p.dof);
        CHECK(r.value == Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("student_t symmetric and unimodal around loc") {
    const StudentTParams p{5.0, 0.7, 1.3};
    const double peak = deer::student_t_logpdf(p.loc, p);
    for (double d = 0.25; d < 6.0; d += 0.25) {
        INFO("d=" << d);
        CHECK(deer::student_t_logpdf(p.loc + d, p) ==
              Approx(deer::student_t_logpdf(p.loc - d, p)).margin(1e-12));
        CHECK(deer::student_t_logpdf(p.loc + d, p) < peak);
        // density decreases away from the mode
        CHECK(deer::student_t_logpdf(p.loc + d + 0.25, p) <
              deer::student_t_logpdf(p.loc + d, p));
    }
}

TEST_CASE("student_t rejects invalid parameters") {
    CHECK_THROWS_AS(StudentTParams(0.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(StudentTParams(2.0, 0.0, -1.0), std::domain_error);
}

TEST_CASE("gaussian and inverse-gamma reference densities") {
    CHECK(deer::gaussian_logpdf(0.0, 0.0, 1.0) ==
          Approx(-0.91893853320467274).margin(1e-14));
    CHECK_THROWS_AS(deer::gaussian_logpdf(0.0, 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(deer::invgamma_logpdf(-1.0, 2.0, 1.0), std::domain_error);
}
