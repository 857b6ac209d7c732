#pragma once

#include "lpvds/common.hpp"
#include "lpvds/plant_aug.hpp"
#include "lpvds/sdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lpvds {

// ---------------------------------------------------------------------------
// Uniform product grid over the parameter box.
// ---------------------------------------------------------------------------
struct GridSpec {
    std::vector<int> points_per_axis;

    static GridSpec uniform(int points, int num_params);

    std::vector<Vector> points(const ParameterBox& box) const;
    GridSpec refined(int factor) const;
};

// Basis selections for the decision functions R, S, X, X_k.
struct SynthesisBases {
    std::string name;
    std::vector<Monomial> R_basis;
    std::vector<Monomial> S_basis;
    std::vector<Monomial> X_basis;
    std::vector<Monomial> Xk_basis;

    // All-constant decision functions.
    static SynthesisBases quadratic(int num_params);
    // R affine in each parameter, S constant, X/X_k affine.
    static SynthesisBases case1(int num_params);
    // R constant, S affine, X/X_k affine.
    static SynthesisBases case2(int num_params);

    static SynthesisBases by_name(const std::string& name, int num_params);
};

// ---------------------------------------------------------------------------
// Decision vector layout: symmetric coefficient blocks for each R_i, S_i,
// X_{k,i}, square blocks for X_i, and the scalar gamma last.
// ---------------------------------------------------------------------------
class DecisionLayout {
public:
    DecisionLayout(int n_aug, int n_u, int n_lambda, const SynthesisBases& bases,
                   bool tie_X_to_X1 = false);

    int total() const { return total_; }
    int gamma_index() const { return total_ - 1; }
    const SynthesisBases& bases() const { return bases_; }
    bool tied() const { return tie_; }

    // Numeric values of the decision functions at one parameter point.
    struct Values {
        Matrix R, S, X;
        std::vector<Matrix> Xk;
        std::vector<Matrix> dR;  // partial derivatives of R per parameter axis
        std::vector<Matrix> dS;
        double gamma = 0.0;
    };
    Values values_at(const Vector& x, const Vector& rho) const;

    // Recovers the basis-expansion functions from a decision vector.
    LpvMatrixFunction unpack_R(const Vector& x, int num_params) const;
    LpvMatrixFunction unpack_S(const Vector& x, int num_params) const;
    LpvMatrixFunction unpack_X(const Vector& x, int num_params) const;
    std::vector<LpvMatrixFunction> unpack_Xk(const Vector& x, int num_params) const;

private:
    Matrix sym_from(const Vector& x, int offset, int n) const;
    Matrix full_from(const Vector& x, int offset, int n) const;

    int n_aug_, n_u_, n_lambda_;
    SynthesisBases bases_;
    bool tie_;
    int r_off_, s_off_, x_off_, xk_off_, total_;
    int t_aug_, t_u_;
};

// ---------------------------------------------------------------------------
// Constraint assembly. The inner matrices are affine in the decision values;
// the kernel congruence preserves that.
// ---------------------------------------------------------------------------

// Columns form an orthonormal basis of the null space of m (SVD; singular
// values below tol_factor * sigma_max count as zero).
Matrix kernel_basis(const Matrix& m, double tol_factor = 1e-10);

// Kernel rows for the two projected inequalities at one plant point.
Matrix kernel_row_lmi1(const AugmentedPoint& pt);
Matrix kernel_row_lmi2(const AugmentedPoint& pt);

// Inner (unprojected) matrices.
Matrix assemble_lmi1_inner(const AugmentedPoint& pt, const DecisionLayout::Values& v,
                           const Vector& rate_vertex);
Matrix assemble_lmi2_inner(const AugmentedPoint& pt, const DecisionLayout::Values& v,
                           const Vector& rate_vertex);
Matrix assemble_coupling(const DecisionLayout::Values& v);

// Projected constraint blocks (kernel congruence applied).
Matrix assemble_lmi1(const AugmentedPoint& pt, const Matrix& kernel,
                     const DecisionLayout::Values& v, const Vector& rate_vertex);
Matrix assemble_lmi2(const AugmentedPoint& pt, const Matrix& kernel,
                     const DecisionLayout::Values& v, const Vector& rate_vertex);

// ---------------------------------------------------------------------------
// Synthesis driver.
// ---------------------------------------------------------------------------
struct SynthesisOptions {
    GridSpec grid;                  // default: 41 points per axis
    SynthesisBases bases;           // default: quadratic
    std::vector<int> multipliers;   // empty = automatic selection from r
    double margin_scale = 1e-7;     // strictness margin per unit of block scale
    SdpOptions sdp;
    bool tie_X_to_X1 = false;
    std::string sdpa_export_path;   // when set, dump the assembled SDP
    bool post_check_dense_grid = true;
};

struct SynthesisCertificate {
    LpvMatrixFunction R, S, X;
    std::vector<LpvMatrixFunction> Xk;
    double gamma = 0.0;

    GridSpec grid;
    ParameterBox params;
    DelaySpec delay;
    std::vector<int> multipliers;
    MultiplierParams mult_params;
    std::string bases_name;
    double margin_scale = 1e-7;

    // Post-solve diagnostics.
    double min_margin_grid = 0.0;    // min over grid constraints, positive = strict
    double min_margin_dense = 0.0;   // re-check on a 4x denser grid
    double min_Xk_eig = 0.0;
    double max_X_cond = 0.0;
    SdpStatus solver_status = SdpStatus::Failed;
    int solver_iterations = 0;
    double solver_gap = 0.0;
    double solve_seconds = 0.0;

    DecisionLayout::Values values_at(const Vector& rho) const;
    std::vector<DelayIqcFactor> build_factors(int n_u) const;
};

// Solves min gamma subject to the projected inequalities on the grid at
// every rate vertex plus the coupling condition. Throws InfeasibleError
// (with the violated block labels) or SolverError.
SynthesisCertificate minimize_gamma(const LpvPlant& plant, const SynthesisOptions& options);

// Constraint margins of a certificate re-evaluated on an arbitrary grid:
// min over points/vertices of (-lambda_max) for the two inequalities and
// lambda_min for the coupling block, normalized by the block scale.
double certificate_min_margin(const AugmentedPlant& aug, const SynthesisCertificate& cert,
                              const std::vector<Vector>& grid_points);

// Certificate (de)serialization.
std::string serialize_certificate(const SynthesisCertificate& cert);
SynthesisCertificate parse_certificate(const std::string& text);
SynthesisCertificate load_certificate_file(const std::string& path);

}  // namespace lpvds
