#include "lpvds/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lpvds {

Matrix LinearMatrixExpr::eval(const Vector& x) const {
    Matrix out = F0;
    for (const auto& [idx, coeff] : terms) out += x(idx) * coeff;
    return out;
}

void SdpProblem::validate() const {
    if (objective.size() != num_vars) throw SolverError("sdp: objective length != num_vars");
    for (const auto& blk : blocks) {
        if (blk.F0.rows() != blk.F0.cols()) throw SolverError("sdp: block F0 not square");
        for (const auto& [idx, coeff] : blk.terms) {
            if (idx < 0 || idx >= num_vars) throw SolverError("sdp: variable index out of range");
            if (coeff.rows() != blk.F0.rows() || coeff.cols() != blk.F0.cols())
                throw SolverError("sdp: coefficient dimension mismatch in block " + blk.label);
        }
    }
}

const char* to_string(SdpStatus status) {
    switch (status) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Inaccurate: return "inaccurate";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::Failed: return "failed";
    }
    return "unknown";
}

namespace {

// Largest alpha in (0, cap] with P + alpha*D >= 0, given P > 0.
double max_psd_step(const Matrix& p, const Matrix& d, double cap) {
    Eigen::LLT<Matrix> llt(p);
    if (llt.info() != Eigen::Success) return 0.0;
    const Matrix l = llt.matrixL();
    Matrix t = l.triangularView<Eigen::Lower>().solve(d);
    t = l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0.0) return cap;
    return std::min(cap, -1.0 / lmin);
}

struct BlockState {
    Matrix x;      // primal block
    Matrix s;      // dual slack block
    Matrix s_inv;  // refreshed once per iteration
    Matrix w;      // Nesterov-Todd scaling point: w s w = x
};

// Nesterov-Todd scaling point W with W S W = X, for X, S > 0.
bool nt_scaling(const Matrix& x, const Matrix& s, Matrix& w, Matrix& s_inv) {
    Eigen::SelfAdjointEigenSolver<Matrix> es_s(s);
    if (es_s.info() != Eigen::Success || es_s.eigenvalues().minCoeff() <= 0.0) return false;
    const Matrix s_half = es_s.eigenvectors() * es_s.eigenvalues().cwiseSqrt().asDiagonal() *
                          es_s.eigenvectors().transpose();
    const Matrix s_half_inv = es_s.eigenvectors() *
                              es_s.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                              es_s.eigenvectors().transpose();
    s_inv = s_half_inv * s_half_inv;
    Eigen::SelfAdjointEigenSolver<Matrix> es_t(Matrix(s_half * x * s_half));
    if (es_t.info() != Eigen::Success || es_t.eigenvalues().minCoeff() <= 0.0) return false;
    const Matrix t_half = es_t.eigenvectors() * es_t.eigenvalues().cwiseSqrt().asDiagonal() *
                          es_t.eigenvectors().transpose();
    w = s_half_inv * t_half * s_half_inv;
    return true;
}

}  // namespace

namespace {

SdpResult solve_sdp_core(const SdpProblem& problem, const SdpOptions& options);

}  // namespace

SdpResult solve_sdp(const SdpProblem& problem, const SdpOptions& options) {
    problem.validate();
    if (options.variable_bound <= 0.0) return solve_sdp_core(problem, options);

    // Feasibility-radius box, stored in the normalized form 1 -/+ x_i/B >= 0
    // so the extra blocks share the unit scale of the problem blocks.
    SdpProblem boxed = problem;
    const double bound = options.variable_bound;
    for (int i = 0; i < problem.num_vars; ++i) {
        LinearMatrixExpr hi, lo;
        hi.label = "radius+";
        hi.F0 = Matrix::Ones(1, 1);
        hi.terms.emplace_back(i, Matrix(-Matrix::Ones(1, 1) / bound));
        lo.label = "radius-";
        lo.F0 = Matrix::Ones(1, 1);
        lo.terms.emplace_back(i, Matrix(Matrix::Ones(1, 1) / bound));
        boxed.blocks.push_back(std::move(hi));
        boxed.blocks.push_back(std::move(lo));
    }
    SdpResult res = solve_sdp_core(boxed, options);
    if (res.x.size() == problem.num_vars && res.x.cwiseAbs().maxCoeff() > 0.99 * bound)
        LPVDS_WARN("sdp: feasibility radius " + std::to_string(bound) +
                   " is active at the solution; result may be distorted");
    if (!res.block_min_eig.empty()) res.block_min_eig.resize(problem.blocks.size());
    return res;
}

namespace {

SdpResult solve_sdp_core(const SdpProblem& problem, const SdpOptions& options) {
    const int m = problem.num_vars;
    const std::size_t nb = problem.blocks.size();
    const Vector& c = problem.objective;

    SdpResult result;
    if (m == 0 || nb == 0) {
        result.status = SdpStatus::Failed;
        result.message = "empty problem";
        return result;
    }

    double total_dim = 0.0;
    for (const auto& blk : problem.blocks) total_dim += blk.dim();

    // Initial point. Default: x = 0, X = S = beta*I per block with beta
    // matched to the data scale. With a strictly feasible initial_x: S is the
    // exact slack there and X sits on the central path (X = mu0 S^-1), which
    // keeps the dual side feasible for the entire run.
    std::vector<BlockState> st(nb);
    Vector x = Vector::Zero(m);
    bool warm = false;
    if (options.initial_x && options.initial_x->size() == m) {
        std::vector<Matrix> slacks(nb);
        warm = true;
        for (std::size_t b = 0; b < nb && warm; ++b) {
            slacks[b] = problem.blocks[b].eval(*options.initial_x);
            if (min_eig_sym(slacks[b]) <= 0.0) warm = false;
        }
        if (warm) {
            x = *options.initial_x;
            double mu0 = 0.0;
            double dim_sum = 0.0;
            for (std::size_t b = 0; b < nb; ++b) {
                mu0 += slacks[b].trace();
                dim_sum += slacks[b].rows();
            }
            mu0 = std::max(mu0 / dim_sum, 1e-3);
            for (std::size_t b = 0; b < nb; ++b) {
                st[b].s = slacks[b];
                st[b].x = mu0 * slacks[b].llt().solve(
                                    Matrix::Identity(slacks[b].rows(), slacks[b].cols()));
                st[b].x = 0.5 * (st[b].x + st[b].x.transpose());
            }
        } else {
            LPVDS_WARN("sdp: initial point is not strictly feasible; using the cold start");
        }
    }
    if (!warm) {
        for (std::size_t b = 0; b < nb; ++b) {
            const auto& blk = problem.blocks[b];
            double beta = 1.0 + blk.F0.norm();
            for (const auto& [idx, coeff] : blk.terms) beta = std::max(beta, 1.0 + coeff.norm());
            beta = std::max(beta, std::sqrt(static_cast<double>(blk.dim())));
            st[b].x = beta * Matrix::Identity(blk.dim(), blk.dim());
            st[b].s = beta * Matrix::Identity(blk.dim(), blk.dim());
        }
    }

    const double c_scale = 1.0 + c.norm();

    auto fill_result = [&](SdpStatus status, int iter, double gap, double rp, double rd) {
        result.status = status;
        result.x = x;
        result.objective = c.dot(x);
        result.iterations = iter;
        result.gap = gap;
        result.primal_residual = rp;
        result.dual_residual = rd;
        result.block_min_eig.clear();
        for (const auto& blk : problem.blocks) result.block_min_eig.push_back(min_eig_sym(blk.eval(x)));
    };

    std::vector<Matrix> rd(nb);           // dual residual per block
    std::vector<std::vector<Matrix>> g(nb);  // sym(X F_j S^-1) per block/var
    std::vector<Matrix> ds_aff(nb), dx_aff(nb), ds_cor(nb), dx_cor(nb);

    double best_score = std::numeric_limits<double>::infinity();
    Vector best_x = x;
    std::string extra_diag;
    double stagnation_ref = std::numeric_limits<double>::infinity();
    int stagnation_count = 0;

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        // Residuals and complementarity.
        double mu = 0.0;
        double rd_norm = 0.0;
        Vector rp = -c;  // r_p,i = -c_i + sum_b <F_i, X_b>
        for (std::size_t b = 0; b < nb; ++b) {
            const auto& blk = problem.blocks[b];
            mu += st[b].x.cwiseProduct(st[b].s).sum();
            rd[b] = blk.F0 - st[b].s;
            for (const auto& [idx, coeff] : blk.terms) {
                rd[b] += x(idx) * coeff;
                rp(idx) += coeff.cwiseProduct(st[b].x).sum();
            }
            rd_norm = std::max(rd_norm, rd[b].norm() / (1.0 + blk.F0.norm()));
        }
        mu /= total_dim;
        const double rp_norm = rp.norm() / c_scale;

        double pobj = 0.0;  // <F0, X>
        for (std::size_t b = 0; b < nb; ++b) pobj += problem.blocks[b].F0.cwiseProduct(st[b].x).sum();
        const double dobj = -c.dot(x);
        const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        if (options.verbose) {
            std::ostringstream os;
            os << "iter " << iter << " mu=" << mu << " gap=" << gap << " rp=" << rp_norm
               << " rd=" << rd_norm << " obj=" << c.dot(x) << " " << extra_diag;
            LPVDS_INFO(os.str());
        }

        const double score = gap + rp_norm + rd_norm;
        if (score < best_score) {
            best_score = score;
            best_x = x;
        }

        if (gap < options.tol_gap && rp_norm < options.tol_feas && rd_norm < options.tol_feas) {
            fill_result(SdpStatus::Optimal, iter, gap, rp_norm, rd_norm);
            return result;
        }
        if (options.stop_when_below && x(options.stop_when_below->first) < options.stop_when_below->second) {
            best_x = x;
            break;
        }

        // Refresh the NT scaling per block.
        bool scaling_ok = true;
        for (std::size_t b = 0; b < nb; ++b) {
            if (!nt_scaling(st[b].x, st[b].s, st[b].w, st[b].s_inv)) {
                scaling_ok = false;
                break;
            }
        }
        if (!scaling_ok) break;

        // Schur complement M_ij = sum_b <F_i, W F_j W> (symmetric PD).
        Matrix schur = Matrix::Zero(m, m);
        for (std::size_t b = 0; b < nb; ++b) {
            const auto& blk = problem.blocks[b];
            const std::size_t nt = blk.terms.size();
            g[b].assign(nt, Matrix());
            for (std::size_t j = 0; j < nt; ++j)
                g[b][j] = st[b].w * blk.terms[j].second * st[b].w;
            for (std::size_t i = 0; i < nt; ++i) {
                const int vi = blk.terms[i].first;
                for (std::size_t j = 0; j <= i; ++j) {
                    const int vj = blk.terms[j].first;
                    const double v = blk.terms[i].second.cwiseProduct(g[b][j]).sum();
                    schur(vi, vj) += v;
                    if (vi != vj) schur(vj, vi) += v;
                }
            }
        }
        // Jacobi equilibration plus iterative refinement keeps the Newton
        // directions accurate when slack blocks leave parts of the decision
        // space weakly observed (the Schur matrix gets badly conditioned).
        Vector scal(m);
        for (int i = 0; i < m; ++i) scal(i) = 1.0 / std::sqrt(std::max(schur(i, i), 1e-300));
        Matrix schur_eq = scal.asDiagonal() * schur * scal.asDiagonal();
        const double lift = 1e-13;
        schur_eq.diagonal().array() += lift;
        Eigen::LDLT<Matrix> schur_fact(schur_eq);
        if (schur_fact.info() != Eigen::Success) break;
        auto schur_solve = [&](const Vector& rhs) {
            const Vector rhs_eq = scal.asDiagonal() * rhs;
            Vector y = schur_fact.solve(rhs_eq);
            for (int ref = 0; ref < 3; ++ref) y += schur_fact.solve(rhs_eq - schur_eq * y);
            return Vector(scal.asDiagonal() * y);
        };

        // NT Newton system:
        //   sum_i dx_i F_i - dS = -rd,   <F_i, dX> = -rp_i,
        //   dX + W dS W = sigma*mu*S^-1 - X.
        auto solve_direction = [&](double sigma_mu, Vector& dx_out, std::vector<Matrix>& dS,
                                   std::vector<Matrix>& dX) {
            Vector h = rp;
            for (std::size_t b = 0; b < nb; ++b) {
                const auto& blk = problem.blocks[b];
                const Matrix base =
                    sigma_mu * st[b].s_inv - st[b].x - st[b].w * rd[b] * st[b].w;
                for (std::size_t i = 0; i < blk.terms.size(); ++i)
                    h(blk.terms[i].first) += blk.terms[i].second.cwiseProduct(base).sum();
            }
            dx_out = schur_solve(h);
            for (std::size_t b = 0; b < nb; ++b) {
                const auto& blk = problem.blocks[b];
                dS[b] = rd[b];
                for (const auto& [idx, coeff] : blk.terms) dS[b] += dx_out(idx) * coeff;
                dX[b] = symmetrize(sigma_mu * st[b].s_inv - st[b].x - st[b].w * dS[b] * st[b].w);
            }
        };

        // Predictor (affine scaling) fixes the centering weight.
        Vector dx_a(m);
        solve_direction(0.0, dx_a, ds_aff, dx_aff);
        double alpha_p = 1.0, alpha_d = 1.0;
        for (std::size_t b = 0; b < nb; ++b) {
            alpha_p = std::min(alpha_p, max_psd_step(st[b].x, dx_aff[b], 1.0));
            alpha_d = std::min(alpha_d, max_psd_step(st[b].s, ds_aff[b], 1.0));
        }
        double mu_aff = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            mu_aff += (st[b].x + alpha_p * dx_aff[b]).cwiseProduct(st[b].s + alpha_d * ds_aff[b]).sum();
        }
        mu_aff = std::max(mu_aff / total_dim, 0.0);
        double sigma = std::pow(mu_aff / mu, 3.0);
        sigma = std::min(std::max(sigma, 1e-8), 1.0);

        // Centering step at sigma*mu.
        Vector dx_c(m);
        solve_direction(sigma * mu, dx_c, ds_cor, dx_cor);

        double step_p = options.step_fraction, step_d = options.step_fraction;
        for (std::size_t b = 0; b < nb; ++b) {
            step_p = std::min(step_p, options.step_fraction * max_psd_step(st[b].x, dx_cor[b], 10.0));
            step_d = std::min(step_d, options.step_fraction * max_psd_step(st[b].s, ds_cor[b], 10.0));
        }
        if (options.verbose) {
            Eigen::SelfAdjointEigenSolver<Matrix> es_m(schur, Eigen::EigenvaluesOnly);
            std::ostringstream ds;
            ds << "ap=" << step_p << " ad=" << step_d << " sigma=" << sigma
               << " |dx|=" << dx_c.norm() << " aaff=" << std::min(alpha_p, alpha_d)
               << " condM=" << es_m.eigenvalues().maxCoeff() / es_m.eigenvalues().minCoeff();
            extra_diag = ds.str();
        }
        if (step_p < 1e-10 && step_d < 1e-10) break;  // stalled

        // At extreme conditioning the boundary estimate can overshoot the
        // cone; back the steps off until both factors stay positive.
        auto steps_ok = [&](double sp, double sd) {
            for (std::size_t b = 0; b < nb; ++b) {
                Eigen::LLT<Matrix> lx(Matrix(st[b].x + sp * dx_cor[b]));
                if (lx.info() != Eigen::Success) return false;
                Eigen::LLT<Matrix> ls(Matrix(st[b].s + sd * ds_cor[b]));
                if (ls.info() != Eigen::Success) return false;
            }
            return true;
        };
        int backoff = 0;
        while (!steps_ok(step_p, step_d) && backoff < 40) {
            step_p *= 0.5;
            step_d *= 0.5;
            ++backoff;
        }
        if (backoff >= 40) break;

        x += step_d * dx_c;
        for (std::size_t b = 0; b < nb; ++b) {
            st[b].x += step_p * dx_cor[b];
            st[b].s += step_d * ds_cor[b];
            st[b].x = 0.5 * (st[b].x + st[b].x.transpose());
            st[b].s = 0.5 * (st[b].s + st[b].s.transpose());
        }

        // Give up once the score has stagnated for a stretch.
        if (score < stagnation_ref * 0.98) {
            stagnation_ref = score;
            stagnation_count = 0;
        } else if (++stagnation_count > 60) {
            break;
        }
    }

    // Did not reach full tolerance; report the best iterate with its residuals.
    x = best_x;
    double mu = 0.0, rd_norm = 0.0;
    Vector rp = -c;
    for (std::size_t b = 0; b < nb; ++b) {
        const auto& blk = problem.blocks[b];
        Matrix rdb = blk.F0 - st[b].s;
        for (const auto& [idx, coeff] : blk.terms) {
            rdb += x(idx) * coeff;
            rp(idx) += coeff.cwiseProduct(st[b].x).sum();
        }
        mu += st[b].x.cwiseProduct(st[b].s).sum();
        rd_norm = std::max(rd_norm, rdb.norm() / (1.0 + blk.F0.norm()));
    }
    mu /= total_dim;
    const double rp_norm = rp.norm() / c_scale;
    const double gap = best_score;
    const bool decent = best_score < 5e-3;
    fill_result(decent ? SdpStatus::Inaccurate : SdpStatus::Failed, iter, gap, rp_norm, rd_norm);
    std::ostringstream os;
    os << "stopped after " << iter << " iterations with score " << best_score << " (mu " << mu << ")";
    result.message = os.str();
    return result;
}

}  // namespace

FeasibilityReport probe_feasibility(const SdpProblem& problem, const SdpOptions& options,
                                    double margin_cap) {
    // minimize t subject to F_b(x) + t I >= 0 and margin_cap + t >= 0.
    SdpProblem aux;
    aux.num_vars = problem.num_vars + 1;
    aux.objective = Vector::Zero(aux.num_vars);
    const int t_idx = problem.num_vars;
    aux.objective(t_idx) = 1.0;
    for (const auto& blk : problem.blocks) {
        LinearMatrixExpr shifted = blk;
        shifted.terms.emplace_back(t_idx, Matrix::Identity(blk.dim(), blk.dim()));
        aux.blocks.push_back(std::move(shifted));
    }
    LinearMatrixExpr bound;
    bound.label = "t lower bound";
    bound.F0 = margin_cap * Matrix::Ones(1, 1);
    bound.terms.emplace_back(t_idx, Matrix::Ones(1, 1));
    aux.blocks.push_back(std::move(bound));

    SdpOptions opts = options;
    opts.tol_gap = std::max(options.tol_gap, 1e-9);
    opts.stop_when_below = std::make_pair(t_idx, -1e-4 * margin_cap);
    if (options.initial_x && options.initial_x->size() == problem.num_vars) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& blk : problem.blocks)
            worst = std::min(worst, min_eig_sym(blk.eval(*options.initial_x)));
        Vector seed(aux.num_vars);
        seed.head(problem.num_vars) = *options.initial_x;
        seed(t_idx) = worst > 0.0 ? std::max(-0.5 * worst, -0.9 * margin_cap)
                                  : 2.0 * std::abs(worst) + 1e-6;
        opts.initial_x = seed;
    }
    SdpResult res = solve_sdp(aux, opts);

    FeasibilityReport report;
    if (res.x.size() != aux.num_vars) {
        report.t = std::numeric_limits<double>::quiet_NaN();
        report.feasible = false;
        report.violated_blocks.push_back("feasibility probe returned no iterate: " + res.message);
        return report;
    }

    // Feasibility is decided by direct evaluation at the returned point, so
    // an early stop on the (flat) optimal face still counts when the point
    // is strictly inside the cone.
    report.x = res.x.head(problem.num_vars);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& blk : problem.blocks)
        worst = std::min(worst, min_eig_sym(blk.eval(report.x)));
    report.t = -worst;
    if (worst > 0.0) {
        report.feasible = true;
        return report;
    }
    report.feasible = false;
    if (res.usable() && res.x(t_idx) > 1e-9) {
        // Converged with a positive shift: certified infeasible.
        for (const auto& blk : problem.blocks) {
            const double lmin = min_eig_sym(blk.eval(report.x));
            if (lmin <= -0.5 * res.x(t_idx)) report.violated_blocks.push_back(blk.label);
        }
        report.t = res.x(t_idx);
    } else {
        report.t = std::numeric_limits<double>::quiet_NaN();
        report.violated_blocks.push_back("feasibility probe did not converge: " + res.message);
    }
    return report;
}

// ---------------------------------------------------------------------------
// SDPA sparse format. Conventions of the .dat-s initial data file:
//   minimize c.x  s.t.  X = sum_i x_i F_i - F0 >= 0,
// entries listed as "matno blkno i j value" over the upper triangle, 1-based.
// Our blocks are F0_ours + sum x_i F_i >= 0, so F0_sdpa = -F0_ours.
// ---------------------------------------------------------------------------

void write_sdpa_sparse(const SdpProblem& problem, const std::string& path) {
    problem.validate();
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "* exported semidefinite program\n";
    out << problem.num_vars << " = mDIM\n";
    out << problem.blocks.size() << " = nBLOCK\n";
    for (std::size_t b = 0; b < problem.blocks.size(); ++b)
        out << problem.blocks[b].dim() << (b + 1 < problem.blocks.size() ? " " : "");
    out << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < problem.num_vars; ++i)
        out << problem.objective(i) << (i + 1 < problem.num_vars ? " " : "");
    out << "\n";
    auto write_entries = [&](int matno, std::size_t blkno, const Matrix& mat) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i)
            for (Eigen::Index j = i; j < mat.cols(); ++j)
                if (mat(i, j) != 0.0)
                    out << matno << " " << blkno + 1 << " " << i + 1 << " " << j + 1 << " "
                        << mat(i, j) << "\n";
    };
    for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
        write_entries(0, b, Matrix(-problem.blocks[b].F0));
        for (const auto& [idx, coeff] : problem.blocks[b].terms) write_entries(idx + 1, b, coeff);
    }
}

SdpProblem read_sdpa_sparse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::string line;
    auto next_data_line = [&]() -> std::string {
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '*' || line[0] == '"') continue;
            return line;
        }
        throw Error("unexpected end of SDPA file");
    };
    SdpProblem p;
    p.num_vars = std::stoi(next_data_line());
    const int nblocks = std::stoi(next_data_line());
    {
        std::istringstream bs(next_data_line());
        for (int b = 0; b < nblocks; ++b) {
            int dim = 0;
            bs >> dim;
            LinearMatrixExpr blk;
            blk.F0 = Matrix::Zero(std::abs(dim), std::abs(dim));
            p.blocks.push_back(std::move(blk));
        }
    }
    {
        p.objective = Vector::Zero(p.num_vars);
        std::istringstream cs(next_data_line());
        for (int i = 0; i < p.num_vars; ++i) cs >> p.objective(i);
    }
    std::vector<std::vector<Matrix>> coeffs(static_cast<std::size_t>(nblocks));
    for (int b = 0; b < nblocks; ++b)
        coeffs[static_cast<std::size_t>(b)]
            .assign(static_cast<std::size_t>(p.num_vars) + 1,
                    Matrix::Zero(p.blocks[static_cast<std::size_t>(b)].dim(),
                                 p.blocks[static_cast<std::size_t>(b)].dim()));
    int matno, blkno, i, j;
    double value;
    while (in >> matno >> blkno >> i >> j >> value) {
        auto& mat = coeffs[static_cast<std::size_t>(blkno - 1)][static_cast<std::size_t>(matno)];
        mat(i - 1, j - 1) = value;
        mat(j - 1, i - 1) = value;
    }
    for (int b = 0; b < nblocks; ++b) {
        auto& blk = p.blocks[static_cast<std::size_t>(b)];
        blk.F0 = -coeffs[static_cast<std::size_t>(b)][0];
        for (int v = 0; v < p.num_vars; ++v) {
            const Matrix& coeff = coeffs[static_cast<std::size_t>(b)][static_cast<std::size_t>(v) + 1];
            if (coeff.norm() != 0.0) blk.terms.emplace_back(v, coeff);
        }
    }
    return p;
}

}  // namespace lpvds
