#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lpvds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed model document, dimension mismatch, violated model assumption.
class ModelError : public Error {
public:
    explicit ModelError(const std::string& what) : Error(what) {}
};

// SDP solver failed to converge or returned an unusable iterate.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& what) : Error(what) {}
};

// Synthesis problem certified (or strongly suspected) infeasible.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// Controller recovery failed (singular transform, conditioning, ...).
class ReconstructionError : public Error {
public:
    explicit ReconstructionError(const std::string& what) : Error(what) {}
};

// Simulation diverged or was driven by inadmissible signals.
class SimulationError : public Error {
public:
    explicit SimulationError(const std::string& what) : Error(what) {}
};

// He{M} = M + M^T
inline Matrix he(const Matrix& m) { return m + m.transpose(); }

// Exact symmetrization; used after long products to scrub rounding skew.
inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Largest eigenvalue of a symmetric matrix.
double max_eig_sym(const Matrix& m);

// Smallest eigenvalue of a symmetric matrix.
double min_eig_sym(const Matrix& m);

// True if every eigenvalue of the (not necessarily symmetric) matrix has
// real part below the given bound.
bool is_hurwitz(const Matrix& a, double real_part_bound = 0.0);

// 2-norm condition number via SVD.
double cond2(const Matrix& m);

// splitmix64 step; used to derive independent per-task seeds from one
// master seed so parallel order cannot change the streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Logging. Level comes from the LPVDS_LOG environment variable:
// error | warn | info | debug (default warn).
// ---------------------------------------------------------------------------
enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void log_message(LogLevel level, const std::string& msg);

#define LPVDS_LOG_AT(level, msg)                                     \
    do {                                                             \
        if (static_cast<int>(level) <= static_cast<int>(::lpvds::log_level())) \
            ::lpvds::log_message(level, (msg));                      \
    } while (0)

#define LPVDS_INFO(msg) LPVDS_LOG_AT(::lpvds::LogLevel::Info, msg)
#define LPVDS_WARN(msg) LPVDS_LOG_AT(::lpvds::LogLevel::Warn, msg)
#define LPVDS_DEBUG(msg) LPVDS_LOG_AT(::lpvds::LogLevel::Debug, msg)

}  // namespace lpvds
