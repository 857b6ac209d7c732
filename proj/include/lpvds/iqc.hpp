#pragma once

#include "lpvds/common.hpp"
#include "lpvds/model.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace lpvds {

// ---------------------------------------------------------------------------
// Parameters of the two shipped delay multiplier families. Family 1 is only
// defined for delay-rate bounds r < 1; family 2 covers r < 2.
// ---------------------------------------------------------------------------
struct MultiplierParams {
    double rate_bound = 0.0;  // r used to build the parameters

    std::optional<double> k1;  // 1 + 1/sqrt(1-r), only for r < 1
    std::optional<double> a1;  // sqrt(2 k1 c1)
    double c1 = 1.0;
    double epsilon = 1e-7;

    double k2 = 0.0;  // sqrt(8/(2-r))
    double a2 = 0.0;  // sqrt(6.5 + 2 b2)
    double b2 = 0.0;  // sqrt(50)
    double c2 = 0.0;  // sqrt(12.5)
    double delta = 1e-3;
};

// Throws ModelError for r outside [0, 2).
MultiplierParams multiplier_params(double r, double c1 = 1.0, double epsilon = 1e-7,
                                   double delta = 1e-3);

// Multiplier ids valid for a given rate bound: {1, 2} for r < 1, else {2}.
std::vector<int> select_multipliers(double r);

// ---------------------------------------------------------------------------
// Stable filter realization of one multiplier factor:
//   x'   = A_psi x + B_psi1 u + B_psi2 w
//   z1   = C_psi x + D_psi1 u + D_psi2 w
//   z2   = w
// The signature weight for the factor is W = diag(X_k, -X_k) with X_k > 0
// supplied separately (it is a synthesis decision variable).
// ---------------------------------------------------------------------------
struct DelayIqcFactor {
    Matrix A_psi;
    Matrix B_psi1;
    Matrix B_psi2;
    Matrix C_psi;
    Matrix D_psi1;
    Matrix D_psi2;

    int which = 0;  // multiplier id (1 or 2)
    double tau_bar = 0.0;
    MultiplierParams params;

    int num_states() const { return static_cast<int>(A_psi.rows()); }
    int num_channels() const { return static_cast<int>(D_psi1.rows()); }  // n_u
};

// Builds the 2-state-per-channel realization of multiplier `which`.
// which == 1 requires r < 1.
DelayIqcFactor build_factor(int which, double tau_bar, double r, const MultiplierParams& params,
                            int n_u = 1);

// Both default factors for the delay class (family 1 included only when r < 1).
std::vector<DelayIqcFactor> build_default_factors(const DelaySpec& delay, int n_u = 1);

// Scalar transfer function of the nontrivial multiplier entry, evaluated at
// a complex frequency. This is the route independent of the state-space
// realization; verify_factorization compares the two.
std::complex<double> multiplier_scalar_response(int which, const MultiplierParams& params,
                                                double tau_bar, std::complex<double> s);

// Frequency response of the stacked [u; w] -> [z1; z2] map at s = j*omega.
ComplexMatrix factor_frequency_response(const DelayIqcFactor& factor, double omega);

// Multiplier value Pi(j*omega) = diag(|phi|^2 X_k, -X_k) built from the
// transfer-function route.
ComplexMatrix multiplier_value(const DelayIqcFactor& factor, const Matrix& X_k, double omega);

// Max over `frequencies` of ||Psi~ W Psi - Pi||_F / (1 + ||Pi||_F).
// Throws Error if the relative residual exceeds `tolerance` anywhere.
double verify_factorization(const DelayIqcFactor& factor, const Matrix& X_k,
                            const std::vector<double>& frequencies, double tolerance = 1e-6);

// Cumulative integral of z^T W z along a sampled input/delay trajectory,
// with w(t) = u(t) - u(t - tau(t)) and zero filter initial state. Returns
// the running integral at every sample time. Throws SimulationError if the
// delay trajectory violates the class (range or discrete rate surrogate).
Vector hard_iqc_residual(const DelayIqcFactor& factor, const Matrix& X_k, const Matrix& u_samples,
                         const Vector& tau_samples, double dt);

// Log-spaced frequency grid, endpoints included.
std::vector<double> log_spaced_frequencies(double w_min, double w_max, int count);

}  // namespace lpvds
