#include "lpvds/synthesis.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lpvds {

using nlohmann::json;

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

GridSpec GridSpec::uniform(int points, int num_params) {
    GridSpec g;
    g.points_per_axis.assign(static_cast<std::size_t>(num_params), points);
    return g;
}

std::vector<Vector> GridSpec::points(const ParameterBox& box) const {
    const int s = box.size();
    if (static_cast<int>(points_per_axis.size()) != s)
        throw ModelError("grid axes do not match the parameter box dimension");
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(s));
    for (int k = 0; k < s; ++k) {
        const int n = points_per_axis[static_cast<std::size_t>(k)];
        if (n < 1) throw ModelError("grid needs at least one point per axis");
        for (int i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
            axes[static_cast<std::size_t>(k)].push_back(box.lower(k) + t * (box.upper(k) - box.lower(k)));
        }
    }
    std::vector<Vector> pts;
    std::vector<std::size_t> idx(static_cast<std::size_t>(s), 0);
    while (true) {
        Vector p(s);
        for (int k = 0; k < s; ++k) p(k) = axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]];
        pts.push_back(p);
        int k = 0;
        for (; k < s; ++k) {
            if (++idx[static_cast<std::size_t>(k)] < axes[static_cast<std::size_t>(k)].size()) break;
            idx[static_cast<std::size_t>(k)] = 0;
        }
        if (k == s) break;
    }
    return pts;
}

GridSpec GridSpec::refined(int factor) const {
    GridSpec g;
    for (int n : points_per_axis) g.points_per_axis.push_back(n > 1 ? (n - 1) * factor + 1 : n);
    return g;
}

// ---------------------------------------------------------------------------
// SynthesisBases
// ---------------------------------------------------------------------------

namespace {
std::vector<Monomial> affine_basis(int s) {
    std::vector<Monomial> out{monomial_one(s)};
    for (int k = 0; k < s; ++k) out.push_back(monomial_rho(s, k));
    return out;
}
}  // namespace

// The "quadratic" method fixes the Lyapunov variables R and S constant; the
// multiplier scalings X, X_k stay parameter-dependent in every method.
SynthesisBases SynthesisBases::quadratic(int s) {
    SynthesisBases b;
    b.name = "quadratic";
    b.R_basis = {monomial_one(s)};
    b.S_basis = {monomial_one(s)};
    b.X_basis = affine_basis(s);
    b.Xk_basis = affine_basis(s);
    return b;
}

SynthesisBases SynthesisBases::case1(int s) {
    SynthesisBases b;
    b.name = "case1";
    b.R_basis = affine_basis(s);
    b.S_basis = {monomial_one(s)};
    b.X_basis = affine_basis(s);
    b.Xk_basis = affine_basis(s);
    return b;
}

SynthesisBases SynthesisBases::case2(int s) {
    SynthesisBases b;
    b.name = "case2";
    b.R_basis = {monomial_one(s)};
    b.S_basis = affine_basis(s);
    b.X_basis = affine_basis(s);
    b.Xk_basis = affine_basis(s);
    return b;
}

SynthesisBases SynthesisBases::by_name(const std::string& name, int s) {
    if (name == "quadratic") return quadratic(s);
    if (name == "case1") return case1(s);
    if (name == "case2") return case2(s);
    throw ModelError("unknown basis case: " + name);
}

namespace {
bool basis_all_constant(const std::vector<Monomial>& basis) {
    for (const auto& m : basis)
        if (!m.is_constant()) return false;
    return true;
}
}  // namespace

// ---------------------------------------------------------------------------
// DecisionLayout
// ---------------------------------------------------------------------------

DecisionLayout::DecisionLayout(int n_aug, int n_u, int n_lambda, const SynthesisBases& bases,
                               bool tie_X_to_X1)
    : n_aug_(n_aug), n_u_(n_u), n_lambda_(n_lambda), bases_(bases), tie_(tie_X_to_X1) {
    if (bases_.R_basis.empty() || bases_.S_basis.empty() || bases_.X_basis.empty() ||
        bases_.Xk_basis.empty())
        throw ModelError("decision bases must be non-empty");
    if (n_lambda_ < 1) throw ModelError("synthesis needs at least one multiplier");
    if (tie_ && (n_lambda_ != 1 || !(bases_.X_basis.size() == bases_.Xk_basis.size())))
        throw ModelError("tying X to X_1 requires a single multiplier and matching bases");

    t_aug_ = n_aug_ * (n_aug_ + 1) / 2;
    t_u_ = n_u_ * (n_u_ + 1) / 2;
    r_off_ = 0;
    s_off_ = r_off_ + static_cast<int>(bases_.R_basis.size()) * t_aug_;
    x_off_ = s_off_ + static_cast<int>(bases_.S_basis.size()) * t_aug_;
    xk_off_ = x_off_ + (tie_ ? 0 : static_cast<int>(bases_.X_basis.size()) * n_u_ * n_u_);
    total_ = xk_off_ + n_lambda_ * static_cast<int>(bases_.Xk_basis.size()) * t_u_ + 1;
}

Matrix DecisionLayout::sym_from(const Vector& x, int offset, int n) const {
    Matrix m(n, n);
    int idx = offset;
    for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
            m(p, q) = x(idx);
            m(q, p) = x(idx);
            ++idx;
        }
    return m;
}

Matrix DecisionLayout::full_from(const Vector& x, int offset, int n) const {
    Matrix m(n, n);
    int idx = offset;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) m(p, q) = x(idx++);
    return m;
}

DecisionLayout::Values DecisionLayout::values_at(const Vector& x, const Vector& rho) const {
    Values v;
    const int s = static_cast<int>(rho.size());
    v.R = Matrix::Zero(n_aug_, n_aug_);
    v.S = Matrix::Zero(n_aug_, n_aug_);
    v.X = Matrix::Zero(n_u_, n_u_);
    v.Xk.assign(static_cast<std::size_t>(n_lambda_), Matrix::Zero(n_u_, n_u_));
    v.dR.assign(static_cast<std::size_t>(s), Matrix::Zero(n_aug_, n_aug_));
    v.dS.assign(static_cast<std::size_t>(s), Matrix::Zero(n_aug_, n_aug_));

    for (std::size_t i = 0; i < bases_.R_basis.size(); ++i) {
        const Matrix ri = sym_from(x, r_off_ + static_cast<int>(i) * t_aug_, n_aug_);
        v.R += bases_.R_basis[i].eval(rho) * ri;
        for (int k = 0; k < s; ++k) {
            auto [scale, mono] = bases_.R_basis[i].derivative(k);
            if (scale != 0.0) v.dR[static_cast<std::size_t>(k)] += scale * mono.eval(rho) * ri;
        }
    }
    for (std::size_t i = 0; i < bases_.S_basis.size(); ++i) {
        const Matrix si = sym_from(x, s_off_ + static_cast<int>(i) * t_aug_, n_aug_);
        v.S += bases_.S_basis[i].eval(rho) * si;
        for (int k = 0; k < s; ++k) {
            auto [scale, mono] = bases_.S_basis[i].derivative(k);
            if (scale != 0.0) v.dS[static_cast<std::size_t>(k)] += scale * mono.eval(rho) * si;
        }
    }
    for (int kk = 0; kk < n_lambda_; ++kk)
        for (std::size_t i = 0; i < bases_.Xk_basis.size(); ++i) {
            const int off = xk_off_ + (kk * static_cast<int>(bases_.Xk_basis.size()) + static_cast<int>(i)) * t_u_;
            v.Xk[static_cast<std::size_t>(kk)] += bases_.Xk_basis[i].eval(rho) * sym_from(x, off, n_u_);
        }
    if (tie_) {
        v.X = v.Xk[0];
    } else {
        for (std::size_t i = 0; i < bases_.X_basis.size(); ++i)
            v.X += bases_.X_basis[i].eval(rho) *
                   full_from(x, x_off_ + static_cast<int>(i) * n_u_ * n_u_, n_u_);
    }
    v.gamma = x(gamma_index());
    return v;
}

LpvMatrixFunction DecisionLayout::unpack_R(const Vector& x, int s) const {
    LpvMatrixFunction f(n_aug_, n_aug_, s);
    for (std::size_t i = 0; i < bases_.R_basis.size(); ++i)
        f.add_term(bases_.R_basis[i], sym_from(x, r_off_ + static_cast<int>(i) * t_aug_, n_aug_));
    return f;
}

LpvMatrixFunction DecisionLayout::unpack_S(const Vector& x, int s) const {
    LpvMatrixFunction f(n_aug_, n_aug_, s);
    for (std::size_t i = 0; i < bases_.S_basis.size(); ++i)
        f.add_term(bases_.S_basis[i], sym_from(x, s_off_ + static_cast<int>(i) * t_aug_, n_aug_));
    return f;
}

LpvMatrixFunction DecisionLayout::unpack_X(const Vector& x, int s) const {
    if (tie_) {
        auto xk = unpack_Xk(x, s);
        return xk[0];
    }
    LpvMatrixFunction f(n_u_, n_u_, s);
    for (std::size_t i = 0; i < bases_.X_basis.size(); ++i)
        f.add_term(bases_.X_basis[i], full_from(x, x_off_ + static_cast<int>(i) * n_u_ * n_u_, n_u_));
    return f;
}

std::vector<LpvMatrixFunction> DecisionLayout::unpack_Xk(const Vector& x, int s) const {
    std::vector<LpvMatrixFunction> out;
    for (int kk = 0; kk < n_lambda_; ++kk) {
        LpvMatrixFunction f(n_u_, n_u_, s);
        for (std::size_t i = 0; i < bases_.Xk_basis.size(); ++i) {
            const int off = xk_off_ + (kk * static_cast<int>(bases_.Xk_basis.size()) + static_cast<int>(i)) * t_u_;
            f.add_term(bases_.Xk_basis[i], sym_from(x, off, n_u_));
        }
        out.push_back(std::move(f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kernel bases and inner matrices
// ---------------------------------------------------------------------------

Matrix kernel_basis(const Matrix& m, double tol_factor) {
    if (m.rows() == 0) return Matrix::Identity(m.cols(), m.cols());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? tol_factor * sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return svd.matrixV().rightCols(m.cols() - rank);
}

Matrix kernel_row_lmi1(const AugmentedPoint& pt) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_u = pt.B_aug0.cols();
    const auto n_d = pt.B_aug1.cols();
    const auto nz = pt.C_aug0.rows();
    const auto n_e = pt.C_aug1.rows();
    Matrix row = Matrix::Zero(n_u, n_aug + n_u + n_d + nz + n_e);
    row.block(0, 0, n_u, n_aug) = pt.B_aug2.transpose();
    row.block(0, n_aug + n_u + n_d, n_u, nz) = pt.D_psi1.transpose();
    row.block(0, n_aug + n_u + n_d + nz, n_u, n_e) = pt.D_p12.transpose();
    return row;
}

Matrix kernel_row_lmi2(const AugmentedPoint& pt) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_y = pt.C_aug2.rows();
    const auto nz = pt.C_aug0.rows();
    const auto n_e = pt.C_aug1.rows();
    const auto n_d = pt.B_aug1.cols();
    Matrix row = Matrix::Zero(n_y, n_aug + nz + n_e + n_d);
    row.block(0, 0, n_y, n_aug) = pt.C_aug2;
    row.block(0, n_aug + nz + n_e, n_y, n_d) = pt.D_p21;
    return row;
}

namespace {

Matrix block_diag(const std::vector<Matrix>& blocks) {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    Matrix out = Matrix::Zero(n, n);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        out.block(off, off, b.rows(), b.cols()) = b;
        off += b.rows();
    }
    return out;
}

std::vector<Matrix> lambda_blocks(const DecisionLayout::Values& v) {
    return v.Xk;
}

}  // namespace

Matrix assemble_lmi1_inner(const AugmentedPoint& pt, const DecisionLayout::Values& v,
                           const Vector& rate_vertex) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_u = pt.B_aug0.cols();
    const auto n_d = pt.B_aug1.cols();
    const auto nz = pt.C_aug0.rows();
    const auto n_e = pt.C_aug1.rows();
    const auto n_lambda = static_cast<Eigen::Index>(v.Xk.size());

    Matrix dRv = Matrix::Zero(n_aug, n_aug);
    for (Eigen::Index k = 0; k < rate_vertex.size(); ++k)
        dRv += rate_vertex(k) * v.dR[static_cast<std::size_t>(k)];

    Matrix sumX = Matrix::Zero(n_u, n_u);
    for (const auto& xk : v.Xk) sumX += v.X + v.X.transpose() - xk;

    const Eigen::Index o_w = n_aug, o_d = o_w + n_u, o_z = o_d + n_d, o_e = o_z + nz;
    const Eigen::Index n = o_e + n_e;
    Matrix m = Matrix::Zero(n, n);

    m.block(0, 0, n_aug, n_aug) = he(pt.A_aug * v.R) - dRv;
    m.block(o_w, 0, n_u, n_aug) = v.X.transpose() * pt.B_aug0.transpose();
    m.block(o_w, o_w, n_u, n_u) = -sumX;
    m.block(o_d, 0, n_d, n_aug) = pt.B_aug1.transpose();
    m.block(o_d, o_d, n_d, n_d) = -v.gamma * Matrix::Identity(n_d, n_d);
    m.block(o_z, 0, nz, n_aug) = pt.C_aug0 * v.R;
    m.block(o_z, o_w, nz, n_u) = pt.D_psi2 * v.X;
    m.block(o_z, o_z, nz, nz) = -block_diag(lambda_blocks(v));
    m.block(o_e, 0, n_e, n_aug) = pt.C_aug1 * v.R;
    m.block(o_e, o_w, n_e, n_u) = -pt.D_p12 * v.X;
    m.block(o_e, o_d, n_e, n_d) = pt.D_p11;
    m.block(o_e, o_e, n_e, n_e) = -v.gamma * Matrix::Identity(n_e, n_e);

    // Mirror the strictly lower part.
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i);
    (void)n_lambda;
    return m;
}

Matrix assemble_lmi2_inner(const AugmentedPoint& pt, const DecisionLayout::Values& v,
                           const Vector& rate_vertex) {
    const auto n_aug = pt.A_aug.rows();
    const auto n_d = pt.B_aug1.cols();
    const auto nz = pt.C_aug0.rows();
    const auto n_e = pt.C_aug1.rows();

    Matrix dSv = Matrix::Zero(n_aug, n_aug);
    for (Eigen::Index k = 0; k < rate_vertex.size(); ++k)
        dSv += rate_vertex(k) * v.dS[static_cast<std::size_t>(k)];

    const Eigen::Index o_z = n_aug, o_e = o_z + nz, o_d = o_e + n_e;
    const Eigen::Index n = o_d + n_d;
    Matrix m = Matrix::Zero(n, n);

    m.block(0, 0, n_aug, n_aug) = he(v.S * pt.A_aug) + dSv;
    m.block(o_z, 0, nz, n_aug) = pt.C_aug0;
    m.block(o_z, o_z, nz, nz) = -block_diag(lambda_blocks(v));
    m.block(o_e, 0, n_e, n_aug) = pt.C_aug1;
    m.block(o_e, o_e, n_e, n_e) = -v.gamma * Matrix::Identity(n_e, n_e);
    m.block(o_d, 0, n_d, n_aug) = pt.B_aug1.transpose() * v.S;
    m.block(o_d, o_e, n_d, n_e) = pt.D_p11.transpose();
    m.block(o_d, o_d, n_d, n_d) = -v.gamma * Matrix::Identity(n_d, n_d);

    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = m(j, i);
    return m;
}

Matrix assemble_coupling(const DecisionLayout::Values& v) {
    const auto n = v.R.rows();
    Matrix m = Matrix::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = v.R;
    m.topRightCorner(n, n) = Matrix::Identity(n, n);
    m.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
    m.bottomRightCorner(n, n) = v.S;
    return m;
}

Matrix assemble_lmi1(const AugmentedPoint& pt, const Matrix& kernel,
                     const DecisionLayout::Values& v, const Vector& rate_vertex) {
    return symmetrize(kernel.transpose() * assemble_lmi1_inner(pt, v, rate_vertex) * kernel);
}

Matrix assemble_lmi2(const AugmentedPoint& pt, const Matrix& kernel,
                     const DecisionLayout::Values& v, const Vector& rate_vertex) {
    return symmetrize(kernel.transpose() * assemble_lmi2_inner(pt, v, rate_vertex) * kernel);
}

// ---------------------------------------------------------------------------
// minimize_gamma
// ---------------------------------------------------------------------------

namespace {

std::string point_label(const Vector& rho) {
    std::ostringstream os;
    os << "rho=(";
    for (Eigen::Index i = 0; i < rho.size(); ++i) os << (i ? "," : "") << rho(i);
    os << ")";
    return os.str();
}

// Probes an affine matrix-valued map at unit decision vectors and appends
// the result as an SDP block requiring  map(x) <= -margin*I, i.e.
// -map(x) - margin*I >= 0. Blocks are normalized by their data scale.
template <typename MapFn>
void append_negdef_block(SdpProblem& sdp, const std::string& label, int num_vars,
                         double margin_scale, MapFn&& map) {
    const Matrix m0 = map(Vector::Zero(num_vars));
    const double scale = 1.0 + m0.norm();
    const double mu = margin_scale * scale;
    LinearMatrixExpr blk;
    blk.label = label;
    blk.F0 = (-m0 - mu * Matrix::Identity(m0.rows(), m0.cols())) / scale;
    Vector probe = Vector::Zero(num_vars);
    for (int j = 0; j < num_vars; ++j) {
        probe(j) = 1.0;
        Matrix fj = -(map(probe) - m0) / scale;
        probe(j) = 0.0;
        if (fj.cwiseAbs().maxCoeff() > 0.0) blk.terms.emplace_back(j, symmetrize(fj));
    }
    sdp.blocks.push_back(std::move(blk));
}

// Same for map(x) >= +margin*I.
template <typename MapFn>
void append_posdef_block(SdpProblem& sdp, const std::string& label, int num_vars,
                         double margin_scale, MapFn&& map) {
    const Matrix m0 = map(Vector::Zero(num_vars));
    const double scale = 1.0 + m0.norm();
    const double mu = margin_scale * scale;
    LinearMatrixExpr blk;
    blk.label = label;
    blk.F0 = (m0 - mu * Matrix::Identity(m0.rows(), m0.cols())) / scale;
    Vector probe = Vector::Zero(num_vars);
    for (int j = 0; j < num_vars; ++j) {
        probe(j) = 1.0;
        Matrix fj = (map(probe) - m0) / scale;
        probe(j) = 0.0;
        if (fj.cwiseAbs().maxCoeff() > 0.0) blk.terms.emplace_back(j, symmetrize(fj));
    }
    sdp.blocks.push_back(std::move(blk));
}

}  // namespace

std::vector<DelayIqcFactor> SynthesisCertificate::build_factors(int n_u) const {
    std::vector<DelayIqcFactor> out;
    for (int which : multipliers)
        out.push_back(build_factor(which, delay.tau_bar, delay.rate_bound, mult_params, n_u));
    return out;
}

DecisionLayout::Values SynthesisCertificate::values_at(const Vector& rho) const {
    DecisionLayout::Values v;
    v.R = R.eval(rho);
    v.S = S.eval(rho);
    v.X = X.eval(rho);
    for (const auto& xk : Xk) v.Xk.push_back(xk.eval(rho));
    const int s = params.size();
    for (int k = 0; k < s; ++k) {
        v.dR.push_back(R.partial_derivative(k).eval(rho));
        v.dS.push_back(S.partial_derivative(k).eval(rho));
    }
    v.gamma = gamma;
    return v;
}

SynthesisCertificate minimize_gamma(const LpvPlant& plant, const SynthesisOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    const int s = plant.params.size();

    SynthesisOptions opts = options;
    if (opts.grid.points_per_axis.empty()) opts.grid = GridSpec::uniform(41, s);
    if (opts.bases.R_basis.empty()) opts.bases = SynthesisBases::quadratic(s);
    std::vector<int> which = opts.multipliers;
    if (which.empty()) which = select_multipliers(plant.delay.rate_bound);

    const bool r_varies = !basis_all_constant(opts.bases.R_basis);
    const bool s_varies = !basis_all_constant(opts.bases.S_basis);
    if (r_varies || s_varies || !basis_all_constant(opts.bases.X_basis)) {
        for (int n : opts.grid.points_per_axis)
            if (n < 2) throw ModelError("nonconstant bases require at least 2 grid points per axis");
    }

    const MultiplierParams mparams = multiplier_params(plant.delay.rate_bound);
    std::vector<DelayIqcFactor> factors;
    for (int w : which)
        factors.push_back(build_factor(w, plant.delay.tau_bar, plant.delay.rate_bound, mparams, plant.n_u));
    const AugmentedPlant aug = augment(plant, factors);

    const DecisionLayout layout(aug.n_aug, aug.n_u, aug.n_lambda, opts.bases, opts.tie_X_to_X1);
    const std::vector<Vector> grid_points = opts.grid.points(plant.params);
    const std::vector<Vector> vertices = plant.params.rate_vertices();
    const Vector zero_vertex = Vector::Zero(s);

    SdpProblem sdp;
    sdp.num_vars = layout.total();
    sdp.objective = Vector::Zero(layout.total());
    sdp.objective(layout.gamma_index()) = 1.0;

    Eigen::Index k1_cols = -1, k2_cols = -1;
    for (std::size_t g = 0; g < grid_points.size(); ++g) {
        const Vector& rho = grid_points[g];
        const AugmentedPoint pt = evaluate_augmented(aug, rho);
        const Matrix k1 = kernel_basis(kernel_row_lmi1(pt));
        const Matrix k2 = kernel_basis(kernel_row_lmi2(pt));
        if (k1_cols < 0) {
            k1_cols = k1.cols();
            k2_cols = k2.cols();
        } else if (k1.cols() != k1_cols || k2.cols() != k2_cols) {
            throw ModelError("kernel rank changes across the grid near " + point_label(rho) +
                             "; the model violates the uniform-rank requirement");
        }

        const auto& verts1 = r_varies ? vertices : std::vector<Vector>{zero_vertex};
        for (std::size_t vi = 0; vi < verts1.size(); ++vi) {
            append_negdef_block(sdp, "lmi1 " + point_label(rho) + " vertex " + std::to_string(vi),
                                layout.total(), opts.margin_scale, [&](const Vector& x) {
                                    return assemble_lmi1(pt, k1, layout.values_at(x, rho), verts1[vi]);
                                });
        }
        const auto& verts2 = s_varies ? vertices : std::vector<Vector>{zero_vertex};
        for (std::size_t vi = 0; vi < verts2.size(); ++vi) {
            append_negdef_block(sdp, "lmi2 " + point_label(rho) + " vertex " + std::to_string(vi),
                                layout.total(), opts.margin_scale, [&](const Vector& x) {
                                    return assemble_lmi2(pt, k2, layout.values_at(x, rho), verts2[vi]);
                                });
        }
        // Constant R and S make the coupling block identical at every grid
        // point; a single instance carries the same constraint.
        const bool coupling_varies = r_varies || s_varies;
        if (coupling_varies || g == 0) {
            append_posdef_block(sdp, "coupling " + point_label(rho), layout.total(),
                                opts.margin_scale, [&](const Vector& x) {
                                    return assemble_coupling(layout.values_at(x, rho));
                                });
        }
    }

    if (!opts.sdpa_export_path.empty()) write_sdpa_sparse(sdp, opts.sdpa_export_path);

    // Feasibility phase: certify feasibility and produce a strictly feasible
    // interior point of moderate norm that seeds the gamma minimization. The
    // margin cap keeps the probe from running to the feasibility radius; if
    // the modest cap fails, retry uncapped before declaring infeasibility.
    SdpOptions sdp_opts = opts.sdp;
    {
        // Radius ladder: a small box keeps the seed norm moderate; widen only
        // if the probe cannot find an interior point inside it.
        FeasibilityReport probe;
        for (double radius : {1e2, 1e4, opts.sdp.variable_bound}) {
            SdpOptions probe_opts = opts.sdp;
            probe_opts.variable_bound = std::min(radius, opts.sdp.variable_bound);
            if (radius < opts.sdp.variable_bound)
                probe_opts.max_iterations = std::min(opts.sdp.max_iterations, 120);
            probe = probe_feasibility(sdp, probe_opts);
            if (probe.feasible || radius >= opts.sdp.variable_bound) break;
        }
        if (!probe.feasible) {
            if (std::isnan(probe.t))
                throw SolverError("feasibility phase did not converge: " +
                                  (probe.violated_blocks.empty() ? std::string("no details")
                                                                 : probe.violated_blocks.front()));
            std::ostringstream os;
            os << "synthesis inequalities are infeasible (uniform shift t = " << probe.t
               << " required); binding constraints at the best iterate:";
            for (std::size_t i = 0; i < probe.violated_blocks.size() && i < 8; ++i)
                os << "\n  " << probe.violated_blocks[i];
            if (probe.violated_blocks.size() > 8)
                os << "\n  ... (" << probe.violated_blocks.size() << " total)";
            throw InfeasibleError(os.str());
        }
        // Polish the seed: gamma only loosens the inequalities as it grows,
        // so walk it down to just above the smallest value this seed can
        // certify. Shortens the path the main solve must travel.
        Vector seed = probe.x;
        const int gi = layout.gamma_index();
        auto feasible_at = [&](double gamma_try) {
            Vector trial = seed;
            trial(gi) = gamma_try;
            for (const auto& blk : sdp.blocks)
                if (min_eig_sym(blk.eval(trial)) <= 0.0) return false;
            return true;
        };
        double hi = seed(gi);
        double lo = 0.0;
        for (int it = 0; it < 40 && hi - lo > 1e-3 * (1.0 + hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible_at(mid) ? hi : lo) = mid;
        }
        seed(gi) = std::min(seed(gi), hi * 1.05 + 1e-6);
        sdp_opts.initial_x = seed;
    }

    SdpResult res = solve_sdp(sdp, sdp_opts);
    if (!res.usable())
        throw SolverError("interior-point solve failed: " + res.message + " (gap " +
                          std::to_string(res.gap) + ")");

    SynthesisCertificate cert;
    cert.R = layout.unpack_R(res.x, s);
    cert.S = layout.unpack_S(res.x, s);
    cert.X = layout.unpack_X(res.x, s);
    cert.Xk = layout.unpack_Xk(res.x, s);
    cert.gamma = res.x(layout.gamma_index());
    cert.grid = opts.grid;
    cert.params = plant.params;
    cert.delay = plant.delay;
    cert.multipliers = which;
    cert.mult_params = mparams;
    cert.bases_name = opts.bases.name.empty() ? "custom" : opts.bases.name;
    cert.margin_scale = opts.margin_scale;
    cert.solver_status = res.status;
    cert.solver_iterations = res.iterations;
    cert.solver_gap = res.gap;

    cert.min_margin_grid = certificate_min_margin(aug, cert, grid_points);
    if (opts.post_check_dense_grid)
        cert.min_margin_dense = certificate_min_margin(aug, cert, opts.grid.refined(4).points(plant.params));
    else
        cert.min_margin_dense = cert.min_margin_grid;

    cert.min_Xk_eig = std::numeric_limits<double>::infinity();
    cert.max_X_cond = 0.0;
    for (const Vector& rho : grid_points) {
        for (const auto& xk : cert.Xk) cert.min_Xk_eig = std::min(cert.min_Xk_eig, min_eig_sym(xk.eval(rho)));
        cert.max_X_cond = std::max(cert.max_X_cond, cond2(cert.X.eval(rho)));
    }
    if (cert.min_Xk_eig <= 0.0)
        LPVDS_WARN("certificate has a non-positive multiplier scaling on the grid");
    if (!(cert.max_X_cond < 1e12))
        LPVDS_WARN("certificate X(rho) is numerically singular somewhere on the grid");

    cert.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return cert;
}

double certificate_min_margin(const AugmentedPlant& aug, const SynthesisCertificate& cert,
                              const std::vector<Vector>& grid_points) {
    const std::vector<Vector> vertices = cert.params.rate_vertices();
    const Vector zero_vertex = Vector::Zero(cert.params.size());
    const bool r_varies = !cert.R.is_constant();
    const bool s_varies = !cert.S.is_constant();

    double min_margin = std::numeric_limits<double>::infinity();
    for (const Vector& rho : grid_points) {
        const AugmentedPoint pt = evaluate_augmented(aug, rho);
        const Matrix k1 = kernel_basis(kernel_row_lmi1(pt));
        const Matrix k2 = kernel_basis(kernel_row_lmi2(pt));
        const auto v = cert.values_at(rho);

        for (const Vector& vtx : r_varies ? vertices : std::vector<Vector>{zero_vertex}) {
            const Matrix m = assemble_lmi1(pt, k1, v, vtx);
            min_margin = std::min(min_margin, -max_eig_sym(m) / (1.0 + m.norm()));
        }
        for (const Vector& vtx : s_varies ? vertices : std::vector<Vector>{zero_vertex}) {
            const Matrix m = assemble_lmi2(pt, k2, v, vtx);
            min_margin = std::min(min_margin, -max_eig_sym(m) / (1.0 + m.norm()));
        }
        const Matrix c = assemble_coupling(v);
        min_margin = std::min(min_margin, min_eig_sym(c) / (1.0 + c.norm()));
    }
    return min_margin;
}

// ---------------------------------------------------------------------------
// Certificate serialization
// ---------------------------------------------------------------------------

namespace {

json function_to_json(const LpvMatrixFunction& f) {
    json terms = json::array();
    for (const auto& t : f.terms()) {
        json coeff = json::array();
        for (int i = 0; i < f.rows(); ++i)
            for (int j = 0; j < f.cols(); ++j) coeff.push_back(t.coeff(i, j));
        terms.push_back({{"basis", t.basis.exponents}, {"coeff", std::move(coeff)}});
    }
    return {{"rows", f.rows()}, {"cols", f.cols()}, {"terms", std::move(terms)}};
}

LpvMatrixFunction function_from_json(const json& j, int s) {
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    LpvMatrixFunction f(rows, cols, s);
    for (const auto& t : j.at("terms")) {
        Monomial mono;
        for (const auto& e : t.at("basis")) mono.exponents.push_back(e.get<int>());
        Matrix coeff(rows, cols);
        const auto& ce = t.at("coeff");
        for (int i = 0; i < rows; ++i)
            for (int jj = 0; jj < cols; ++jj) coeff(i, jj) = ce[static_cast<std::size_t>(i * cols + jj)].get<double>();
        f.add_term(mono, coeff);
    }
    return f;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

}  // namespace

std::string serialize_certificate(const SynthesisCertificate& cert) {
    json doc;
    doc["format"] = "lpvds-certificate-v1";
    doc["gamma"] = cert.gamma;
    doc["R"] = function_to_json(cert.R);
    doc["S"] = function_to_json(cert.S);
    doc["X"] = function_to_json(cert.X);
    json xks = json::array();
    for (const auto& xk : cert.Xk) xks.push_back(function_to_json(xk));
    doc["Xk"] = std::move(xks);
    doc["grid_points_per_axis"] = cert.grid.points_per_axis;
    doc["param_box"] = {{"lower", vector_to_json(cert.params.lower)},
                        {"upper", vector_to_json(cert.params.upper)},
                        {"rate_lower", vector_to_json(cert.params.rate_lower)},
                        {"rate_upper", vector_to_json(cert.params.rate_upper)}};
    doc["delay"] = {{"tau_bar", cert.delay.tau_bar}, {"r", cert.delay.rate_bound}};
    doc["multipliers"] = cert.multipliers;
    doc["multiplier_params"] = {{"c1", cert.mult_params.c1},
                                {"epsilon", cert.mult_params.epsilon},
                                {"delta", cert.mult_params.delta}};
    doc["bases"] = cert.bases_name;
    doc["margin_scale"] = cert.margin_scale;
    doc["diagnostics"] = {{"min_margin_grid", cert.min_margin_grid},
                          {"min_margin_dense", cert.min_margin_dense},
                          {"min_Xk_eig", cert.min_Xk_eig},
                          {"max_X_cond", cert.max_X_cond},
                          {"solver_status", to_string(cert.solver_status)},
                          {"solver_iterations", cert.solver_iterations},
                          {"solver_gap", cert.solver_gap},
                          {"solve_seconds", cert.solve_seconds}};
    return doc.dump(2);
}

SynthesisCertificate parse_certificate(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("certificate is not valid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "lpvds-certificate-v1")
        throw ModelError("unrecognized certificate format tag");

    SynthesisCertificate cert;
    const auto& box = doc.at("param_box");
    cert.params.lower = vector_from_json(box.at("lower"));
    cert.params.upper = vector_from_json(box.at("upper"));
    cert.params.rate_lower = vector_from_json(box.at("rate_lower"));
    cert.params.rate_upper = vector_from_json(box.at("rate_upper"));
    const int s = cert.params.size();

    cert.gamma = doc.at("gamma").get<double>();
    cert.R = function_from_json(doc.at("R"), s);
    cert.S = function_from_json(doc.at("S"), s);
    cert.X = function_from_json(doc.at("X"), s);
    for (const auto& xk : doc.at("Xk")) cert.Xk.push_back(function_from_json(xk, s));
    cert.grid.points_per_axis = doc.at("grid_points_per_axis").get<std::vector<int>>();
    cert.delay.tau_bar = doc.at("delay").at("tau_bar").get<double>();
    cert.delay.rate_bound = doc.at("delay").at("r").get<double>();
    cert.multipliers = doc.at("multipliers").get<std::vector<int>>();
    const auto& mp = doc.at("multiplier_params");
    cert.mult_params = multiplier_params(cert.delay.rate_bound, mp.at("c1").get<double>(),
                                         mp.at("epsilon").get<double>(), mp.at("delta").get<double>());
    cert.bases_name = doc.value("bases", "custom");
    cert.margin_scale = doc.value("margin_scale", 1e-7);
    if (doc.contains("diagnostics")) {
        const auto& d = doc["diagnostics"];
        cert.min_margin_grid = d.value("min_margin_grid", 0.0);
        cert.min_margin_dense = d.value("min_margin_dense", 0.0);
        cert.min_Xk_eig = d.value("min_Xk_eig", 0.0);
        cert.max_X_cond = d.value("max_X_cond", 0.0);
        cert.solver_iterations = d.value("solver_iterations", 0);
        cert.solver_gap = d.value("solver_gap", 0.0);
        cert.solve_seconds = d.value("solve_seconds", 0.0);
        cert.solver_status = SdpStatus::Optimal;
    }
    return cert;
}

SynthesisCertificate load_certificate_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open certificate file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_certificate(buf.str());
}

}  // namespace lpvds
