#pragma once

#include "lpvds/common.hpp"

#include <string>
#include <vector>

namespace lpvds {

// ---------------------------------------------------------------------------
// Scheduling-parameter box with per-axis rate bounds.
// ---------------------------------------------------------------------------
struct ParameterBox {
    Vector lower;        // component-wise lower bounds of the parameter set
    Vector upper;        // component-wise upper bounds
    Vector rate_lower;   // lower bounds on each parameter rate
    Vector rate_upper;   // upper bounds on each parameter rate

    int size() const { return static_cast<int>(lower.size()); }

    // Throws ModelError on inconsistent dimensions or lower > upper.
    void validate() const;

    bool contains(const Vector& rho, double tol = 0.0) const;

    // All 2^s corners of the rate polytope.
    std::vector<Vector> rate_vertices() const;

    Vector center() const { return 0.5 * (lower + upper); }
};

// ---------------------------------------------------------------------------
// Bounded time-varying delay class: tau(t) in [0, tau_bar], |tau'(t)| <= r.
// ---------------------------------------------------------------------------
struct DelaySpec {
    double tau_bar = 0.0;
    double rate_bound = 0.0;  // r

    void validate() const;
};

// ---------------------------------------------------------------------------
// Multivariate monomial basis function: prod_k rho_k^exp[k].
// Total degree is capped at 2 (enough for the supported plant families
// while keeping derivatives exact).
// ---------------------------------------------------------------------------
struct Monomial {
    std::vector<int> exponents;  // one entry per scheduling parameter

    static constexpr int kMaxTotalDegree = 2;

    int num_params() const { return static_cast<int>(exponents.size()); }
    int total_degree() const;
    bool is_constant() const { return total_degree() == 0; }

    double eval(const Vector& rho) const;

    // d/d rho_k, returned as (scale, monomial). Scale is 0 for constants.
    std::pair<double, Monomial> derivative(int k) const;

    bool operator==(const Monomial& other) const { return exponents == other.exponents; }

    std::string to_string() const;
};

// Convenience constructors for the common 1-parameter bases.
Monomial monomial_one(int num_params);
Monomial monomial_rho(int num_params, int k = 0, int power = 1);

// ---------------------------------------------------------------------------
// Matrix-valued function of the scheduling parameter, stored as a finite
// basis expansion sum_i basis_i(rho) * coeff_i.
// ---------------------------------------------------------------------------
class LpvMatrixFunction {
public:
    struct Term {
        Monomial basis;
        Matrix coeff;
    };

    LpvMatrixFunction() = default;
    LpvMatrixFunction(int rows, int cols, int num_params);

    static LpvMatrixFunction constant(const Matrix& value, int num_params);
    static LpvMatrixFunction zero(int rows, int cols, int num_params);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int num_params() const { return num_params_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_constant() const;

    // Adds basis * coeff; merges with an existing term carrying the same basis.
    void add_term(const Monomial& basis, const Matrix& coeff);

    // Plain evaluation; does not know about the parameter box.
    Matrix eval(const Vector& rho) const;

    // One function per scheduling parameter.
    std::vector<LpvMatrixFunction> partial_derivatives() const;
    LpvMatrixFunction partial_derivative(int k) const;

    LpvMatrixFunction transpose() const;
    LpvMatrixFunction scaled(double alpha) const;
    LpvMatrixFunction operator+(const LpvMatrixFunction& other) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    int num_params_ = 0;
    std::vector<Term> terms_;
};

// Box-checked evaluation: certificates are only valid on the parameter set,
// so rho outside the box is an error rather than an extrapolation.
Matrix evaluate(const LpvMatrixFunction& f, const Vector& rho, const ParameterBox& box);

// ---------------------------------------------------------------------------
// LPV plant with a single delayed input channel:
//   dx/dt = A_p x + B_p1 d + B_p2 u(t - tau(t))
//   e     = C_p1 x + D_p11 d + D_p12 u(t - tau(t))
//   y     = C_p2 x + D_p21 d
// ---------------------------------------------------------------------------
struct LpvPlant {
    LpvMatrixFunction A_p, B_p1, B_p2;
    LpvMatrixFunction C_p1, D_p11, D_p12;
    LpvMatrixFunction C_p2, D_p21;
    DelaySpec delay;
    ParameterBox params;

    int n_p = 0;
    int n_u = 0;
    int n_d = 0;
    int n_e = 0;
    int n_y = 0;

    // Dimension consistency only (cheap).
    void validate_dimensions() const;

    // Checks D_p12 full column rank / D_p21 full row rank at every point of
    // a validation grid; throws ModelError naming the offending rho.
    void validate_rank_assumptions(int points_per_axis = 41) const;
};

// Parses the JSON model document (schema in README). Performs dimension,
// basis, and rank-assumption validation.
LpvPlant parse_model(const std::string& text);
LpvPlant load_model_file(const std::string& path);

// Inverse of parse_model; parse(serialize(p)) reproduces p exactly.
std::string serialize_model(const LpvPlant& plant);

}  // namespace lpvds
