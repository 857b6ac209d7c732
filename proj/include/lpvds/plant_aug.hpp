#pragma once

#include "lpvds/common.hpp"
#include "lpvds/iqc.hpp"
#include "lpvds/model.hpp"

#include <vector>

namespace lpvds {

// ---------------------------------------------------------------------------
// Plant augmented with the stacked multiplier filters. State ordering is
// [x_p; x_psi,1; ...; x_psi,N]; channel ordering [w; d; u] on the input side
// and [z1 stack; z2; e; y] on the output side.
// ---------------------------------------------------------------------------
struct AugmentedPlant {
    // Parameter-dependent blocks.
    LpvMatrixFunction A_aug;   // n_aug x n_aug
    LpvMatrixFunction B_aug0;  // n_aug x n_u   (w column)
    LpvMatrixFunction B_aug1;  // n_aug x n_d   (d column)
    LpvMatrixFunction B_aug2;  // n_aug x n_u   (u column)
    LpvMatrixFunction C_aug1;  // n_e x n_aug
    LpvMatrixFunction C_aug2;  // n_y x n_aug

    // Constant blocks from the filters (z1 rows, stacked over multipliers).
    Matrix C_aug0;  // (N n_u) x n_aug
    Matrix D_psi1;  // (N n_u) x n_u
    Matrix D_psi2;  // (N n_u) x n_u

    // Plant feedthroughs kept as functions for the e/y rows.
    LpvMatrixFunction D_p11;  // n_e x n_d
    LpvMatrixFunction D_p12;  // n_e x n_u
    LpvMatrixFunction D_p21;  // n_y x n_d

    std::vector<DelayIqcFactor> factors;
    ParameterBox params;
    DelaySpec delay;

    int n_p = 0;
    int n_psi = 0;
    int n_aug = 0;
    int n_u = 0;
    int n_d = 0;
    int n_e = 0;
    int n_y = 0;
    int n_lambda = 0;  // number of multipliers

    int z1_rows() const { return n_lambda * n_u; }
};

// Numeric snapshot of the augmented plant at one parameter value.
struct AugmentedPoint {
    Matrix A_aug, B_aug0, B_aug1, B_aug2;
    Matrix C_aug0, D_psi1, D_psi2;
    Matrix C_aug1, C_aug2;
    Matrix D_p11, D_p12, D_p21;
};

// Numeric controller gains at one (rho, rho_dot).
struct ControllerGains {
    Matrix A_c;
    Matrix B_c1;  // from y
    Matrix B_c2;  // from the delay-difference of u
    Matrix C_c;
    Matrix D_c1;
    Matrix D_c2;

    int n_c() const { return static_cast<int>(A_c.rows()); }
};

// Closed-loop matrices at one point, channels [w; d] -> [z1 stack; e]
// (the z2 row is identically [0 I 0] and is not stored).
struct ClosedLoopPoint {
    Matrix A_cl;
    Matrix B_cl1, B_cl2;
    Matrix C_cl1, D_cl11, D_cl12;  // stacked over multipliers
    Matrix C_cl2, D_cl21, D_cl22;
};

// Interconnects the plant with the stacked filters. Factor input width must
// equal the plant's n_u; factor states are stacked in list order.
AugmentedPlant augment(const LpvPlant& plant, const std::vector<DelayIqcFactor>& factors);

// Box-checked pointwise evaluation of every block.
AugmentedPoint evaluate_augmented(const AugmentedPlant& aug, const Vector& rho);

// Closed-loop assembly with numeric gains (pure).
ClosedLoopPoint close_loop(const AugmentedPoint& point, const ControllerGains& gains);
ClosedLoopPoint close_loop(const AugmentedPlant& aug, const ControllerGains& gains, const Vector& rho);

}  // namespace lpvds
