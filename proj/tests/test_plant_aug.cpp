#include <doctest.h>

#include "lpvds/plant_aug.hpp"
#include "test_helpers.hpp"

#include <random>

using namespace lpvds;
using lpvds::testing::load_benchmark;
using lpvds::testing::random_matrix;

namespace {

ControllerGains random_gains(std::mt19937_64& rng, int n_c, int n_u, int n_y) {
    ControllerGains g;
    g.A_c = random_matrix(rng, n_c, n_c);
    g.B_c1 = random_matrix(rng, n_c, n_y);
    g.B_c2 = random_matrix(rng, n_c, n_u);
    g.C_c = random_matrix(rng, n_u, n_c);
    g.D_c1 = random_matrix(rng, n_u, n_y);
    g.D_c2 = random_matrix(rng, n_u, n_u);
    return g;
}

// Dense evaluation of the affine closed-loop formula
//   CL = base + inject * Sigma * select
// written independently of the library assembly.
ClosedLoopPoint brute_force_close(const AugmentedPoint& pt, const ControllerGains& g) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_c = g.A_c.rows();
    const auto n_u = pt.B_aug2.cols();
    const auto n_d = pt.B_aug1.cols();
    const auto n_z = pt.C_aug0.rows();
    const auto n_e = pt.C_aug1.rows();
    const auto n_y = pt.C_aug2.rows();

    const auto rows = n_aug + n_c + n_z + n_e;
    const auto cols = n_aug + n_c + n_u + n_d;
    Matrix base = Matrix::Zero(rows, cols);
    base.block(0, 0, n_aug, n_aug) = pt.A_aug;
    base.block(0, n_aug + n_c, n_aug, n_u) = pt.B_aug0;
    base.block(0, n_aug + n_c + n_u, n_aug, n_d) = pt.B_aug1;
    base.block(n_aug + n_c, 0, n_z, n_aug) = pt.C_aug0;
    base.block(n_aug + n_c, n_aug + n_c, n_z, n_u) = pt.D_psi2;
    base.block(n_aug + n_c + n_z, 0, n_e, n_aug) = pt.C_aug1;
    base.block(n_aug + n_c + n_z, n_aug + n_c, n_e, n_u) = -pt.D_p12;
    base.block(n_aug + n_c + n_z, n_aug + n_c + n_u, n_e, n_d) = pt.D_p11;

    Matrix inject = Matrix::Zero(rows, n_c + n_u);
    inject.block(0, n_c, n_aug, n_u) = pt.B_aug2;
    inject.block(n_aug, 0, n_c, n_c) = Matrix::Identity(n_c, n_c);
    inject.block(n_aug + n_c, n_c, n_z, n_u) = pt.D_psi1;
    inject.block(n_aug + n_c + n_z, n_c, n_e, n_u) = pt.D_p12;

    Matrix sigma = Matrix::Zero(n_c + n_u, n_c + n_u + n_y);
    sigma.block(0, 0, n_c, n_c) = g.A_c;
    sigma.block(0, n_c, n_c, n_u) = g.B_c2;
    sigma.block(0, n_c + n_u, n_c, n_y) = g.B_c1;
    sigma.block(n_c, 0, n_u, n_c) = g.C_c;
    sigma.block(n_c, n_c, n_u, n_u) = g.D_c2;
    sigma.block(n_c, n_c + n_u, n_u, n_y) = g.D_c1;

    Matrix select = Matrix::Zero(n_c + n_u + n_y, cols);
    select.block(0, n_aug, n_c, n_c) = Matrix::Identity(n_c, n_c);
    select.block(n_c, n_aug + n_c, n_u, n_u) = Matrix::Identity(n_u, n_u);
    select.block(n_c + n_u, 0, n_y, n_aug) = pt.C_aug2;
    select.block(n_c + n_u, n_aug + n_c + n_u, n_y, n_d) = pt.D_p21;

    const Matrix cl = base + inject * sigma * select;
    ClosedLoopPoint out;
    out.A_cl = cl.block(0, 0, n_aug + n_c, n_aug + n_c);
    out.B_cl1 = cl.block(0, n_aug + n_c, n_aug + n_c, n_u);
    out.B_cl2 = cl.block(0, n_aug + n_c + n_u, n_aug + n_c, n_d);
    out.C_cl1 = cl.block(n_aug + n_c, 0, n_z, n_aug + n_c);
    out.D_cl11 = cl.block(n_aug + n_c, n_aug + n_c, n_z, n_u);
    out.D_cl12 = cl.block(n_aug + n_c, n_aug + n_c + n_u, n_z, n_d);
    out.C_cl2 = cl.block(n_aug + n_c + n_z, 0, n_e, n_aug + n_c);
    out.D_cl21 = cl.block(n_aug + n_c + n_z, n_aug + n_c, n_e, n_u);
    out.D_cl22 = cl.block(n_aug + n_c + n_z, n_aug + n_c + n_u, n_e, n_d);
    return out;
}

double max_block_diff(const ClosedLoopPoint& a, const ClosedLoopPoint& b) {
    double m = 0.0;
    auto upd = [&](const Matrix& x, const Matrix& y) {
        m = std::max(m, (x - y).cwiseAbs().maxCoeff());
    };
    upd(a.A_cl, b.A_cl);
    upd(a.B_cl1, b.B_cl1);
    upd(a.B_cl2, b.B_cl2);
    upd(a.C_cl1, b.C_cl1);
    upd(a.D_cl11, b.D_cl11);
    upd(a.D_cl12, b.D_cl12);
    upd(a.C_cl2, b.C_cl2);
    upd(a.D_cl21, b.D_cl21);
    upd(a.D_cl22, b.D_cl22);
    return m;
}

}  // namespace

TEST_CASE("augmentation of the benchmark plant with both factors") {
    const LpvPlant plant = load_benchmark();
    const auto factors = build_default_factors(plant.delay, plant.n_u);
    REQUIRE(factors.size() == 2);
    const AugmentedPlant aug = augment(plant, factors);
    CHECK(aug.n_aug == 6);
    CHECK(aug.n_psi == 4);
    CHECK(aug.n_lambda == 2);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int i = 0; i < 5; ++i) {
        Vector rho(1);
        rho << dist(rng);
        const Matrix a_aug = aug.A_aug.eval(rho);
        CHECK((a_aug.topLeftCorner(2, 2) - plant.A_p.eval(rho)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(a_aug.topRightCorner(2, 4).norm() == 0.0);
        CHECK(a_aug.bottomLeftCorner(4, 2).norm() == 0.0);
        // Measurement never sees the filter states.
        CHECK(aug.C_aug2.eval(rho).rightCols(4).norm() == 0.0);
        // B_aug0 = [-B_p2; B_psi2] and B_aug2 = [B_p2; B_psi1].
        CHECK((aug.B_aug0.eval(rho).topRows(2) + plant.B_p2.eval(rho)).norm() == 0.0);
        CHECK((aug.B_aug2.eval(rho).topRows(2) - plant.B_p2.eval(rho)).norm() == 0.0);
    }
}

TEST_CASE("degenerate augmentation with zero factors") {
    const LpvPlant plant = load_benchmark();
    const AugmentedPlant aug = augment(plant, {});
    CHECK(aug.n_aug == plant.n_p);
    Vector rho(1);
    rho << 2.0;
    CHECK((aug.A_aug.eval(rho) - plant.A_p.eval(rho)).norm() == 0.0);
    CHECK((aug.B_aug0.eval(rho) + plant.B_p2.eval(rho)).norm() == 0.0);
}

TEST_CASE("factor channel mismatch is rejected") {
    const LpvPlant plant = load_benchmark();
    const auto params = multiplier_params(plant.delay.rate_bound);
    const auto wide = build_factor(2, plant.delay.tau_bar, plant.delay.rate_bound, params, 2);
    CHECK_THROWS_AS(augment(plant, {wide}), ModelError);
}

TEST_CASE("u -> z1 path of the augmented plant reproduces the factor responses") {
    const LpvPlant plant = load_benchmark();
    const auto factors = build_default_factors(plant.delay, plant.n_u);
    const AugmentedPlant aug = augment(plant, factors);
    const AugmentedPoint pt = evaluate_augmented(aug, Vector::Zero(1));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int i = 0; i < 20; ++i) {
        const double w = std::pow(10.0, dist(rng));
        const std::complex<double> jw(0.0, w);
        const ComplexMatrix resolvent =
            (jw * ComplexMatrix::Identity(aug.n_aug, aug.n_aug) - pt.A_aug.cast<std::complex<double>>())
                .partialPivLu()
                .solve(pt.B_aug2.cast<std::complex<double>>());
        const ComplexMatrix z1 =
            pt.C_aug0.cast<std::complex<double>>() * resolvent + pt.D_psi1.cast<std::complex<double>>();
        for (std::size_t k = 0; k < factors.size(); ++k) {
            const std::complex<double> expected = factor_frequency_response(factors[k], w)(0, 0);
            CHECK(std::abs(z1(static_cast<Eigen::Index>(k), 0) - expected) < 1e-10 * (1.0 + std::abs(expected)));
        }
    }
}

TEST_CASE("closed-loop assembly") {
    const LpvPlant plant = load_benchmark();
    const auto factors = build_default_factors(plant.delay, plant.n_u);
    const AugmentedPlant aug = augment(plant, factors);
    Vector rho(1);
    rho << 1.5;
    const AugmentedPoint pt = evaluate_augmented(aug, rho);

    SUBCASE("zero controller decouples") {
        ControllerGains g;
        const int n_c = 3;
        g.A_c = Matrix::Zero(n_c, n_c);
        g.B_c1 = Matrix::Zero(n_c, aug.n_y);
        g.B_c2 = Matrix::Zero(n_c, aug.n_u);
        g.C_c = Matrix::Zero(aug.n_u, n_c);
        g.D_c1 = Matrix::Zero(aug.n_u, aug.n_y);
        g.D_c2 = Matrix::Zero(aug.n_u, aug.n_u);
        const ClosedLoopPoint cl = close_loop(pt, g);
        CHECK((cl.A_cl.topLeftCorner(aug.n_aug, aug.n_aug) - pt.A_aug).norm() == 0.0);
        CHECK(cl.A_cl.bottomRightCorner(n_c, n_c).norm() == 0.0);
        CHECK(cl.A_cl.topRightCorner(aug.n_aug, n_c).norm() == 0.0);
        CHECK((cl.D_cl22 - pt.D_p11).norm() == 0.0);
    }
    SUBCASE("random controller matches the brute-force dense product") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            const auto g = random_gains(rng, 4, aug.n_u, aug.n_y);
            CHECK(max_block_diff(close_loop(pt, g), brute_force_close(pt, g)) < 1e-12);
        }
    }
    SUBCASE("block formulas for the e row") {
        std::mt19937_64 rng(23);
        const auto g = random_gains(rng, aug.n_aug, aug.n_u, aug.n_y);
        const ClosedLoopPoint cl = close_loop(pt, g);
        CHECK((cl.C_cl2.leftCols(aug.n_aug) - (pt.C_aug1 + pt.D_p12 * g.D_c1 * pt.C_aug2)).norm() < 1e-13);
        CHECK((cl.C_cl2.rightCols(aug.n_aug) - pt.D_p12 * g.C_c).norm() < 1e-13);
    }
    SUBCASE("closed loop is affine in each controller gain") {
        std::mt19937_64 rng(31);
        const auto g0 = random_gains(rng, 4, aug.n_u, aug.n_y);
        auto g1 = g0;
        auto g2 = g0;
        g1.A_c(1, 2) += 1.0;
        g2.A_c(1, 2) += 2.0;
        // Second difference of an affine map is zero.
        const ClosedLoopPoint c0 = close_loop(pt, g0), c1 = close_loop(pt, g1), c2 = close_loop(pt, g2);
        CHECK(((c2.A_cl - c1.A_cl) - (c1.A_cl - c0.A_cl)).norm() < 1e-13);

        auto g3 = g0;
        auto g4 = g0;
        g3.D_c1(0, 0) += 0.5;
        g4.D_c1(0, 0) += 1.0;
        const ClosedLoopPoint c3 = close_loop(pt, g3), c4 = close_loop(pt, g4);
        CHECK(((c4.C_cl2 - c3.C_cl2) - (c3.C_cl2 - c0.C_cl2)).norm() < 1e-13);
        CHECK(((c4.D_cl22 - c3.D_cl22) - (c3.D_cl22 - c0.D_cl22)).norm() < 1e-13);
    }
}
