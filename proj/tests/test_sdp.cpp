#include <doctest.h>

#include "lpvds/sdp.hpp"
#include "test_helpers.hpp"

#include <cstdio>
#include <random>

using namespace lpvds;
using lpvds::testing::random_matrix;

namespace {

Matrix random_sym(std::mt19937_64& rng, int n) {
    const Matrix m = random_matrix(rng, n, n);
    return 0.5 * (m + m.transpose());
}

Matrix random_orthogonal(std::mt19937_64& rng, int n) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
    return qr.householderQ();
}

}  // namespace

TEST_CASE("scalar bound: min x subject to x >= 1") {
    SdpProblem p;
    p.num_vars = 1;
    p.objective = Vector::Ones(1);
    LinearMatrixExpr blk;
    blk.F0 = -Matrix::Ones(1, 1);
    blk.terms.emplace_back(0, Matrix::Ones(1, 1));
    p.blocks.push_back(blk);

    const SdpResult res = solve_sdp(p);
    REQUIRE(res.status == SdpStatus::Optimal);
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("largest t with M - t I >= 0 equals the smallest eigenvalue") {
    Matrix m(2, 2);
    m << 1.0, 0.5, 0.5, 1.0;
    SdpProblem p;
    p.num_vars = 1;
    p.objective = -Vector::Ones(1);  // maximize t
    LinearMatrixExpr blk;
    blk.F0 = m;
    blk.terms.emplace_back(0, Matrix(-Matrix::Identity(2, 2)));
    p.blocks.push_back(blk);

    const SdpResult res = solve_sdp(p);
    REQUIRE(res.status == SdpStatus::Optimal);
    CHECK(res.x(0) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("constructed optimum with strict complementarity is recovered") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 6, m = 4, rank_x = 2;
        std::vector<Matrix> f(m);
        for (auto& fi : f) fi = random_sym(rng, n);
        Vector y_star = random_matrix(rng, m, 1).col(0);
        const Matrix q = random_orthogonal(rng, n);
        Vector dx = Vector::Zero(n), ds = Vector::Zero(n);
        std::uniform_real_distribution<double> pos(0.5, 2.0);
        for (int i = 0; i < rank_x; ++i) dx(i) = pos(rng);
        for (int i = rank_x; i < n; ++i) ds(i) = pos(rng);
        const Matrix x_star = q * dx.asDiagonal() * q.transpose();
        const Matrix s_star = q * ds.asDiagonal() * q.transpose();

        SdpProblem p;
        p.num_vars = m;
        p.objective = Vector::Zero(m);
        LinearMatrixExpr blk;
        blk.F0 = s_star;
        for (int i = 0; i < m; ++i) {
            blk.F0 -= y_star(i) * f[static_cast<std::size_t>(i)];
            blk.terms.emplace_back(i, f[static_cast<std::size_t>(i)]);
            p.objective(i) = f[static_cast<std::size_t>(i)].cwiseProduct(x_star).sum();
        }
        p.blocks.push_back(blk);

        const SdpResult res = solve_sdp(p);
        REQUIRE(res.usable());
        const double expected = p.objective.dot(y_star);
        CHECK(std::abs(res.objective - expected) < 1e-6 * (1.0 + std::abs(expected)));
        CHECK(res.block_min_eig[0] > -1e-7);
    }
}

TEST_CASE("Lyapunov feasibility as a multi-term SDP") {
    Matrix a(3, 3);
    a << -1.0, 2.0, 0.0, 0.0, -2.0, 1.0, -0.5, 0.0, -3.0;
    // Variables: vech(P). minimize tr(P) with A'P + PA <= -I and P >= 0.01 I.
    const int n = 3;
    std::vector<std::pair<int, int>> idx;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) idx.emplace_back(i, j);
    SdpProblem p;
    p.num_vars = static_cast<int>(idx.size());
    p.objective = Vector::Zero(p.num_vars);
    LinearMatrixExpr lyap, pos;
    lyap.F0 = -Matrix::Identity(n, n);
    pos.F0 = -0.01 * Matrix::Identity(n, n);
    for (int v = 0; v < p.num_vars; ++v) {
        auto [i, j] = idx[static_cast<std::size_t>(v)];
        Matrix e = Matrix::Zero(n, n);
        e(i, j) = e(j, i) = 1.0;
        p.objective(v) = i == j ? 1.0 : 0.0;
        lyap.terms.emplace_back(v, Matrix(-(a.transpose() * e + e * a)));
        pos.terms.emplace_back(v, e);
    }
    p.blocks.push_back(lyap);
    p.blocks.push_back(pos);

    const SdpResult res = solve_sdp(p);
    REQUIRE(res.usable());
    Matrix sol = Matrix::Zero(n, n);
    for (int v = 0; v < p.num_vars; ++v) {
        auto [i, j] = idx[static_cast<std::size_t>(v)];
        sol(i, j) = sol(j, i) = res.x(v);
    }
    CHECK(max_eig_sym(a.transpose() * sol + sol * a + Matrix::Identity(n, n)) < 1e-6);
    CHECK(min_eig_sym(sol) > 0.0099);
}

TEST_CASE("infeasible pair is certified by the feasibility probe") {
    SdpProblem p;
    p.num_vars = 1;
    p.objective = Vector::Ones(1);
    LinearMatrixExpr ge;  // x - 1 >= 0
    ge.F0 = -Matrix::Ones(1, 1);
    ge.terms.emplace_back(0, Matrix::Ones(1, 1));
    ge.label = "lower";
    LinearMatrixExpr le;  // -x >= 0
    le.F0 = Matrix::Zero(1, 1);
    le.terms.emplace_back(0, Matrix(-Matrix::Ones(1, 1)));
    le.label = "upper";
    p.blocks.push_back(ge);
    p.blocks.push_back(le);

    const FeasibilityReport report = probe_feasibility(p);
    CHECK(!report.feasible);
    CHECK(report.t == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(!report.violated_blocks.empty());
}

TEST_CASE("feasibility probe confirms a strictly feasible problem") {
    SdpProblem p;
    p.num_vars = 1;
    p.objective = Vector::Ones(1);
    LinearMatrixExpr blk;  // x + 2 >= 0 (x = 0 already strictly inside)
    blk.F0 = 2.0 * Matrix::Ones(1, 1);
    blk.terms.emplace_back(0, Matrix::Ones(1, 1));
    p.blocks.push_back(blk);
    const FeasibilityReport report = probe_feasibility(p);
    CHECK(report.feasible);
    CHECK(report.t < 0.0);
}

TEST_CASE("SDPA sparse export round-trips") {
    std::mt19937_64 rng(777);
    SdpProblem p;
    p.num_vars = 3;
    p.objective = Vector::Zero(3);
    p.objective << 1.0, -0.5, 0.25;
    for (int b = 0; b < 2; ++b) {
        LinearMatrixExpr blk;
        blk.F0 = random_sym(rng, 3) + 4.0 * Matrix::Identity(3, 3);
        blk.terms.emplace_back(b, random_sym(rng, 3));
        blk.terms.emplace_back(2, random_sym(rng, 3));
        p.blocks.push_back(blk);
    }
    const std::string path = "sdpa_roundtrip_test.dat-s";
    write_sdpa_sparse(p, path);
    const SdpProblem q = read_sdpa_sparse(path);
    std::remove(path.c_str());

    REQUIRE(q.num_vars == p.num_vars);
    REQUIRE(q.blocks.size() == p.blocks.size());
    CHECK((q.objective - p.objective).norm() == 0.0);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        CHECK((q.blocks[b].F0 - p.blocks[b].F0).norm() < 1e-15);
        Vector x = Vector::Zero(3);
        x << 0.3, -0.7, 1.1;
        CHECK((q.blocks[b].eval(x) - p.blocks[b].eval(x)).norm() < 1e-12);
    }
}
