#pragma once

#include "lpvds/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lpvds {

// ---------------------------------------------------------------------------
// One affine symmetric-matrix constraint  F0 + sum_i x_i F_i  >= 0 (PSD).
// ---------------------------------------------------------------------------
struct LinearMatrixExpr {
    std::string label;  // provenance tag for diagnostics (grid point, LMI id)
    Matrix F0;
    std::vector<std::pair<int, Matrix>> terms;  // (variable index, sym coefficient)

    int dim() const { return static_cast<int>(F0.rows()); }
    Matrix eval(const Vector& x) const;
};

// minimize objective . x  subject to every block PSD.
struct SdpProblem {
    int num_vars = 0;
    Vector objective;
    std::vector<LinearMatrixExpr> blocks;

    void validate() const;
};

enum class SdpStatus {
    Optimal,     // converged to tolerance
    Inaccurate,  // stalled; best iterate returned
    Infeasible,  // no PSD-feasible point exists (from the feasibility phase)
    Failed,      // no usable iterate
};

const char* to_string(SdpStatus status);

struct SdpOptions {
    int max_iterations = 200;
    double tol_gap = 1e-9;      // relative duality gap
    double tol_feas = 1e-9;     // relative primal/dual residual
    double step_fraction = 0.98;
    // Feasibility radius: every decision variable is boxed to [-B, B].
    // Keeps the feasible set compact and the primal side strictly feasible;
    // a warning is logged if the bound is active at the solution. 0 disables.
    double variable_bound = 1e6;
    // Optional strictly feasible start: requires F_b(x0) > 0 for every block
    // (checked); the primal side is then initialized on the central path.
    std::optional<Vector> initial_x;
    // Early exit: stop as soon as variable .first drops below .second (used
    // by the feasibility probe, which only needs a strictly interior point).
    std::optional<std::pair<int, double>> stop_when_below;
    bool verbose = false;
};

struct SdpResult {
    SdpStatus status = SdpStatus::Failed;
    Vector x;
    double objective = 0.0;
    int iterations = 0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<double> block_min_eig;  // of each block at the returned x
    std::string message;

    bool usable() const { return status == SdpStatus::Optimal || status == SdpStatus::Inaccurate; }
};

// Primal-dual interior-point solve (HKM direction, Mehrotra
// predictor-corrector, infeasible start).
SdpResult solve_sdp(const SdpProblem& problem, const SdpOptions& options = {});

// Feasibility probe: minimizes t subject to  F_b(x) + t I >= 0  and
// t >= -margin_cap. A positive optimal t certifies that no PSD-feasible
// point exists; margin_cap limits how deep into the interior the probe
// pushes, which keeps the returned point at a moderate norm.
struct FeasibilityReport {
    double t = 0.0;   // optimal uniform eigenvalue shift
    Vector x;         // best point found
    bool feasible = false;
    std::vector<std::string> violated_blocks;  // labels binding at the optimum
};
FeasibilityReport probe_feasibility(const SdpProblem& problem, const SdpOptions& options = {},
                                    double margin_cap = 1.0);

// Writes the problem in the sparse SDPA initial-data format (.dat-s).
void write_sdpa_sparse(const SdpProblem& problem, const std::string& path);

// Reads a .dat-s file back (used for round-trip checks of the exporter).
SdpProblem read_sdpa_sparse(const std::string& path);

}  // namespace lpvds
