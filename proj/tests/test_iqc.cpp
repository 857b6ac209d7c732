#include <doctest.h>

#include "lpvds/iqc.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace lpvds;

namespace {

// Transfer-function route for the multiplier entries, written out directly
// from the closed-form expressions; independent of the realization code.
std::complex<double> phi_direct(int which, const MultiplierParams& p, double tau, std::complex<double> s) {
    const std::complex<double> t2s2 = tau * tau * s * s;
    if (which == 1)
        return *p.k1 * (t2s2 + p.c1 * tau * s) / (t2s2 + *p.a1 * tau * s + *p.k1 * p.c1) + p.epsilon;
    return p.k2 * (t2s2 + p.c2 * tau * s) / (t2s2 + p.a2 * tau * s + p.b2) + p.delta;
}

Matrix multisine(std::mt19937_64& rng, int n_u, int samples, double dt, double w_max) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.05, w_max), phase(0.0, 6.28);
    Matrix u = Matrix::Zero(n_u, samples);
    for (int c = 0; c < n_u; ++c)
        for (int k = 0; k < 6; ++k) {
            const double a = amp(rng), w = freq(rng), ph = phase(rng);
            for (int i = 0; i < samples; ++i) u(c, i) += a * std::sin(w * i * dt + ph);
        }
    return u;
}

Vector sin_delay(std::mt19937_64& rng, double tau_bar, double r, int samples, double dt) {
    std::uniform_real_distribution<double> phase(0.0, 6.28), frac(0.3, 0.95);
    const double w = r > 0.0 ? frac(rng) * 2.0 * r / tau_bar : 0.0;
    const double ph = phase(rng);
    Vector tau(samples);
    for (int i = 0; i < samples; ++i) tau(i) = 0.5 * tau_bar * (1.0 + std::sin(w * i * dt + ph));
    return tau;
}

double l2_norm_sq(const Matrix& u, double dt) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < u.cols(); ++i)
        acc += 0.5 * dt * (u.col(i).squaredNorm() + u.col(i + 1).squaredNorm());
    return acc;
}

}  // namespace

TEST_CASE("multiplier parameter closed forms") {
    SUBCASE("r = 0") {
        const auto p = multiplier_params(0.0);
        REQUIRE(p.k1.has_value());
        CHECK(*p.k1 == doctest::Approx(2.0));
        CHECK(*p.a1 == doctest::Approx(2.0));
        CHECK(p.k2 == doctest::Approx(2.0));
        CHECK(p.b2 == doctest::Approx(std::sqrt(50.0)));
        CHECK(p.c2 == doctest::Approx(std::sqrt(12.5)));
        CHECK(p.a2 == doctest::Approx(std::sqrt(6.5 + 2.0 * std::sqrt(50.0))));
    }
    SUBCASE("r = 0.9") {
        const auto p = multiplier_params(0.9);
        REQUIRE(p.k1.has_value());
        CHECK(*p.k1 == doctest::Approx(1.0 + 1.0 / std::sqrt(0.1)).epsilon(1e-12));
        CHECK(*p.k1 == doctest::Approx(4.16227766).epsilon(1e-8));
    }
    SUBCASE("r = 1.5 drops family 1") {
        const auto p = multiplier_params(1.5);
        CHECK(!p.k1.has_value());
        CHECK(p.k2 == doctest::Approx(4.0));
        CHECK(select_multipliers(1.5) == std::vector<int>{2});
    }
    SUBCASE("r >= 2 is rejected") {
        CHECK_THROWS_AS(multiplier_params(2.0), ModelError);
        CHECK_THROWS_AS(multiplier_params(2.5), ModelError);
    }
}

TEST_CASE("factor realizations match the closed-form entries") {
    SUBCASE("family 1 at tau_bar = 1") {
        const auto p = multiplier_params(0.5);
        const auto f = build_factor(1, 1.0, 0.5, p);
        const double k1 = *p.k1, a1 = *p.a1, c1 = p.c1;
        CHECK(f.C_psi(0, 0) == doctest::Approx(-k1 * k1 * c1));
        CHECK(f.C_psi(0, 1) == doctest::Approx(k1 * (c1 - a1)));
        CHECK(f.D_psi1(0, 0) == doctest::Approx(k1 + p.epsilon));
        CHECK(f.B_psi2.norm() == 0.0);
        CHECK(f.D_psi2.norm() == 0.0);
    }
    SUBCASE("family 2 at tau_bar = 2, r = 0") {
        const auto p = multiplier_params(0.0);
        const auto f = build_factor(2, 2.0, 0.0, p);
        Matrix expected(2, 2);
        expected << 0.0, 1.0, -p.b2 / 4.0, -p.a2 / 2.0;
        CHECK((f.A_psi - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("family 1 requires r < 1") {
        const auto p = multiplier_params(1.2);
        CHECK_THROWS_AS(build_factor(1, 1.0, 1.2, p), ModelError);
    }
    SUBCASE("A_psi is Hurwitz across the delay settings") {
        for (double tau : {0.5, 1.0, 2.5, 5.0})
            for (double r : {0.0, 0.5, 0.9, 1.5, 1.7}) {
                const auto p = multiplier_params(r);
                for (int which : select_multipliers(r)) {
                    const auto f = build_factor(which, tau, r, p);
                    CHECK(is_hurwitz(f.A_psi, -1e-9));
                }
            }
    }
}

TEST_CASE("factor frequency response") {
    const auto p = multiplier_params(0.5);
    const auto f1 = build_factor(1, 1.0, 0.5, p);

    SUBCASE("high-frequency limit approaches the feedthrough") {
        const ComplexMatrix resp = factor_frequency_response(f1, 1e7);
        CHECK(std::abs(resp(0, 0) - std::complex<double>(f1.D_psi1(0, 0), 0.0)) < 1e-5);
    }
    SUBCASE("zero frequency of family 1 collapses to epsilon") {
        const ComplexMatrix resp = factor_frequency_response(f1, 0.0);
        CHECK(std::abs(resp(0, 0) - std::complex<double>(p.epsilon, 0.0)) < 1e-12);
    }
    SUBCASE("state-space route matches the transfer-function route, both families") {
        for (int which : {1, 2}) {
            const auto f = build_factor(which, 2.5, 0.5, p);
            for (double w : log_spaced_frequencies(1e-3, 1e3, 100)) {
                const std::complex<double> ss = factor_frequency_response(f, w)(0, 0);
                const std::complex<double> tf = phi_direct(which, p, 2.5, {0.0, w});
                CHECK(std::abs(std::abs(ss) - std::abs(tf)) < 1e-9 * (1.0 + std::abs(tf)));
            }
        }
    }
    SUBCASE("second block row is exactly [0 I] at every frequency") {
        for (double w : log_spaced_frequencies(1e-2, 1e2, 20)) {
            const ComplexMatrix resp = factor_frequency_response(f1, w);
            CHECK(std::abs(resp(1, 0)) == 0.0);
            CHECK(std::abs(resp(1, 1) - 1.0) == 0.0);
        }
    }
}

TEST_CASE("factorization identity Psi~ W Psi = Pi") {
    const auto freqs = log_spaced_frequencies(1e-3, 1e3, 100);

    SUBCASE("scalar case, X = 1") {
        const auto p = multiplier_params(0.5);
        const auto f = build_factor(1, 1.0, 0.5, p);
        const double res = verify_factorization(f, Matrix::Ones(1, 1), freqs);
        CHECK(res < 1e-9);
    }
    SUBCASE("scaling X by 2 keeps the identity") {
        const auto p = multiplier_params(0.5);
        const auto f = build_factor(2, 1.0, 0.5, p);
        CHECK(verify_factorization(f, 2.0 * Matrix::Ones(1, 1), freqs) < 1e-9);
    }
    SUBCASE("all delay settings from the benchmark sweep") {
        for (double tau : {0.5, 1.0, 2.5, 5.0})
            for (double r : {0.0, 0.5, 0.9, 1.5, 1.7}) {
                const auto p = multiplier_params(r);
                for (int which : select_multipliers(r)) {
                    const auto f = build_factor(which, tau, r, p);
                    CHECK(verify_factorization(f, Matrix::Ones(1, 1), freqs) < 1e-6);
                }
            }
    }
    SUBCASE("matrix channel case") {
        const auto p = multiplier_params(0.3);
        const auto f = build_factor(1, 1.5, 0.3, p, 2);
        Matrix xk(2, 2);
        xk << 2.0, 0.3, 0.3, 1.0;
        CHECK(verify_factorization(f, xk, freqs) < 1e-9);
    }
    SUBCASE("perturbed feedthrough is rejected") {
        const auto p = multiplier_params(0.5);
        auto f = build_factor(1, 1.0, 0.5, p);
        f.D_psi1 *= 1.1;
        CHECK_THROWS_AS(verify_factorization(f, Matrix::Ones(1, 1), freqs), Error);
    }
}

TEST_CASE("hard IQC time-domain residual") {
    const double dt = 1e-3;
    const int samples = 20001;  // 20 s
    const auto p = multiplier_params(0.5);
    const auto f1 = build_factor(1, 1.0, 0.5, p);
    const Matrix xk = Matrix::Ones(1, 1);

    SUBCASE("zero input gives a zero residual") {
        const Vector res =
            hard_iqc_residual(f1, xk, Matrix::Zero(1, 201), Vector::Constant(201, 0.4), dt);
        CHECK(res.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero delay makes the integrand pointwise nonnegative") {
        std::mt19937_64 rng(3);
        const Matrix u = multisine(rng, 1, 2001, dt, 3.0);
        const Vector res = hard_iqc_residual(f1, xk, u, Vector::Zero(2001), dt);
        for (Eigen::Index i = 1; i < res.size(); ++i) CHECK(res(i) >= res(i - 1) - 1e-12);
        CHECK(res(res.size() - 1) >= 0.0);
    }
    SUBCASE("random ensemble stays nonnegative within discretization slack") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 50; ++trial) {
            const Matrix u = multisine(rng, 1, samples, dt, 3.0);
            const Vector tau = sin_delay(rng, 1.0, 0.5, samples, dt);
            for (const auto& f : {f1, build_factor(2, 1.0, 0.5, p)}) {
                const Vector res = hard_iqc_residual(f, xk, u, tau, dt);
                CHECK(res.minCoeff() >= -1e-6 * l2_norm_sq(u, dt));
            }
        }
    }
    SUBCASE("inadmissible delay trajectories are rejected") {
        const Matrix u = Matrix::Zero(1, 101);
        Vector tau = Vector::Constant(101, 0.5);
        tau(50) = 1.5;  // outside [0, tau_bar]
        CHECK_THROWS_AS(hard_iqc_residual(f1, xk, u, tau, dt), SimulationError);
        tau(50) = 0.6;  // jump of 0.1 in one millisecond step: rate 100 > r
        CHECK_THROWS_AS(hard_iqc_residual(f1, xk, u, tau, dt), SimulationError);
    }
}
