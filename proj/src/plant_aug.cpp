#include "lpvds/plant_aug.hpp"

namespace lpvds {

namespace {

// Places every coefficient of `f` into a larger zero matrix at (row, col).
LpvMatrixFunction embed(const LpvMatrixFunction& f, int rows, int cols, int row, int col) {
    LpvMatrixFunction out(rows, cols, f.num_params());
    for (const auto& t : f.terms()) {
        Matrix big = Matrix::Zero(rows, cols);
        big.block(row, col, f.rows(), f.cols()) = t.coeff;
        out.add_term(t.basis, big);
    }
    return out;
}

}  // namespace

AugmentedPlant augment(const LpvPlant& plant, const std::vector<DelayIqcFactor>& factors) {
    for (const auto& f : factors) {
        if (f.num_channels() != plant.n_u)
            throw ModelError("augment: factor channel count " + std::to_string(f.num_channels()) +
                             " does not match plant n_u = " + std::to_string(plant.n_u));
    }

    AugmentedPlant aug;
    aug.factors = factors;
    aug.params = plant.params;
    aug.delay = plant.delay;
    aug.n_p = plant.n_p;
    aug.n_u = plant.n_u;
    aug.n_d = plant.n_d;
    aug.n_e = plant.n_e;
    aug.n_y = plant.n_y;
    aug.n_lambda = static_cast<int>(factors.size());
    aug.n_psi = 0;
    for (const auto& f : factors) aug.n_psi += f.num_states();
    aug.n_aug = aug.n_p + aug.n_psi;

    const int s = plant.params.size();
    const int n_aug = aug.n_aug;
    const int nz1 = aug.z1_rows();

    // A_aug = blkdiag(A_p, A_psi_1, ..., A_psi_N)
    aug.A_aug = embed(plant.A_p, n_aug, n_aug, 0, 0);
    {
        Matrix a_psi = Matrix::Zero(n_aug, n_aug);
        int off = aug.n_p;
        for (const auto& f : factors) {
            a_psi.block(off, off, f.num_states(), f.num_states()) = f.A_psi;
            off += f.num_states();
        }
        aug.A_aug.add_term(monomial_one(s), a_psi);
    }

    // B_aug0 = [-B_p2; B_psi2 stack], B_aug1 = [B_p1; 0], B_aug2 = [B_p2; B_psi1 stack]
    aug.B_aug0 = embed(plant.B_p2.scaled(-1.0), n_aug, plant.n_u, 0, 0);
    aug.B_aug2 = embed(plant.B_p2, n_aug, plant.n_u, 0, 0);
    {
        Matrix b0 = Matrix::Zero(n_aug, plant.n_u);
        Matrix b2 = Matrix::Zero(n_aug, plant.n_u);
        int off = aug.n_p;
        for (const auto& f : factors) {
            b0.block(off, 0, f.num_states(), plant.n_u) = f.B_psi2;
            b2.block(off, 0, f.num_states(), plant.n_u) = f.B_psi1;
            off += f.num_states();
        }
        aug.B_aug0.add_term(monomial_one(s), b0);
        aug.B_aug2.add_term(monomial_one(s), b2);
    }
    aug.B_aug1 = embed(plant.B_p1, n_aug, plant.n_d, 0, 0);

    // Output rows.
    aug.C_aug1 = embed(plant.C_p1, plant.n_e, n_aug, 0, 0);
    aug.C_aug2 = embed(plant.C_p2, plant.n_y, n_aug, 0, 0);

    aug.C_aug0 = Matrix::Zero(nz1, n_aug);
    aug.D_psi1 = Matrix::Zero(nz1, plant.n_u);
    aug.D_psi2 = Matrix::Zero(nz1, plant.n_u);
    {
        int row = 0;
        int off = aug.n_p;
        for (const auto& f : factors) {
            aug.C_aug0.block(row, off, plant.n_u, f.num_states()) = f.C_psi;
            aug.D_psi1.block(row, 0, plant.n_u, plant.n_u) = f.D_psi1;
            aug.D_psi2.block(row, 0, plant.n_u, plant.n_u) = f.D_psi2;
            row += plant.n_u;
            off += f.num_states();
        }
    }

    aug.D_p11 = plant.D_p11;
    aug.D_p12 = plant.D_p12;
    aug.D_p21 = plant.D_p21;
    return aug;
}

AugmentedPoint evaluate_augmented(const AugmentedPlant& aug, const Vector& rho) {
    AugmentedPoint p;
    p.A_aug = evaluate(aug.A_aug, rho, aug.params);
    p.B_aug0 = aug.B_aug0.eval(rho);
    p.B_aug1 = aug.B_aug1.eval(rho);
    p.B_aug2 = aug.B_aug2.eval(rho);
    p.C_aug0 = aug.C_aug0;
    p.D_psi1 = aug.D_psi1;
    p.D_psi2 = aug.D_psi2;
    p.C_aug1 = aug.C_aug1.eval(rho);
    p.C_aug2 = aug.C_aug2.eval(rho);
    p.D_p11 = aug.D_p11.eval(rho);
    p.D_p12 = aug.D_p12.eval(rho);
    p.D_p21 = aug.D_p21.eval(rho);
    return p;
}

ClosedLoopPoint close_loop(const AugmentedPoint& pt, const ControllerGains& g) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_c = g.A_c.rows();
    const auto n_u = pt.B_aug2.cols();
    const auto n_y = pt.C_aug2.rows();
    if (g.B_c1.rows() != n_c || g.B_c1.cols() != n_y || g.B_c2.rows() != n_c ||
        g.B_c2.cols() != n_u || g.C_c.rows() != n_u || g.C_c.cols() != n_c ||
        g.D_c1.rows() != n_u || g.D_c1.cols() != n_y || g.D_c2.rows() != n_u ||
        g.D_c2.cols() != n_u)
        throw ModelError("close_loop: controller gain dimensions inconsistent with the plant");

    ClosedLoopPoint cl;
    cl.A_cl = Matrix::Zero(n_aug + n_c, n_aug + n_c);
    cl.A_cl.topLeftCorner(n_aug, n_aug) = pt.A_aug + pt.B_aug2 * g.D_c1 * pt.C_aug2;
    cl.A_cl.topRightCorner(n_aug, n_c) = pt.B_aug2 * g.C_c;
    cl.A_cl.bottomLeftCorner(n_c, n_aug) = g.B_c1 * pt.C_aug2;
    cl.A_cl.bottomRightCorner(n_c, n_c) = g.A_c;

    cl.B_cl1 = Matrix::Zero(n_aug + n_c, n_u);
    cl.B_cl1.topRows(n_aug) = pt.B_aug0 + pt.B_aug2 * g.D_c2;
    cl.B_cl1.bottomRows(n_c) = g.B_c2;

    cl.B_cl2 = Matrix::Zero(n_aug + n_c, pt.B_aug1.cols());
    cl.B_cl2.topRows(n_aug) = pt.B_aug1 + pt.B_aug2 * g.D_c1 * pt.D_p21;
    cl.B_cl2.bottomRows(n_c) = g.B_c1 * pt.D_p21;

    cl.C_cl1 = Matrix::Zero(pt.C_aug0.rows(), n_aug + n_c);
    cl.C_cl1.leftCols(n_aug) = pt.C_aug0 + pt.D_psi1 * g.D_c1 * pt.C_aug2;
    cl.C_cl1.rightCols(n_c) = pt.D_psi1 * g.C_c;
    cl.D_cl11 = pt.D_psi2 + pt.D_psi1 * g.D_c2;
    cl.D_cl12 = pt.D_psi1 * g.D_c1 * pt.D_p21;

    cl.C_cl2 = Matrix::Zero(pt.C_aug1.rows(), n_aug + n_c);
    cl.C_cl2.leftCols(n_aug) = pt.C_aug1 + pt.D_p12 * g.D_c1 * pt.C_aug2;
    cl.C_cl2.rightCols(n_c) = pt.D_p12 * g.C_c;
    cl.D_cl21 = -pt.D_p12 + pt.D_p12 * g.D_c2;
    cl.D_cl22 = pt.D_p11 + pt.D_p12 * g.D_c1 * pt.D_p21;
    return cl;
}

ClosedLoopPoint close_loop(const AugmentedPlant& aug, const ControllerGains& gains, const Vector& rho) {
    return close_loop(evaluate_augmented(aug, rho), gains);
}

}  // namespace lpvds
