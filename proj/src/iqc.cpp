#include "lpvds/iqc.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace lpvds {

namespace {

// kron(A, I_n) with block ordering [a_ij * I].
Matrix kron_identity(const Matrix& a, int n) {
    Matrix out = Matrix::Zero(a.rows() * n, a.cols() * n);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * n, j * n, n, n) = a(i, j) * Matrix::Identity(n, n);
    return out;
}

}  // namespace

MultiplierParams multiplier_params(double r, double c1, double epsilon, double delta) {
    if (!(r >= 0.0) || !(r < 2.0))
        throw ModelError("multiplier parameters require 0 <= r < 2, got r = " + std::to_string(r));
    if (!(c1 > 0.0) || !(epsilon > 0.0) || !(delta > 0.0))
        throw ModelError("multiplier parameters require c1, epsilon, delta > 0");

    MultiplierParams p;
    p.rate_bound = r;
    p.c1 = c1;
    p.epsilon = epsilon;
    p.delta = delta;
    if (r < 1.0) {
        const double k1 = 1.0 + 1.0 / std::sqrt(1.0 - r);
        if (!(c1 < 2.0 * k1))
            throw ModelError("multiplier family 1 requires c1 < 2 k1");
        p.k1 = k1;
        p.a1 = std::sqrt(2.0 * k1 * c1);
    }
    p.b2 = std::sqrt(50.0);
    p.c2 = std::sqrt(12.5);
    p.a2 = std::sqrt(6.5 + 2.0 * p.b2);
    p.k2 = std::sqrt(8.0 / (2.0 - r));
    return p;
}

std::vector<int> select_multipliers(double r) {
    if (r < 1.0) return {1, 2};
    return {2};
}

DelayIqcFactor build_factor(int which, double tau_bar, double r, const MultiplierParams& params,
                            int n_u) {
    if (!(tau_bar > 0.0)) throw ModelError("build_factor: tau_bar must be > 0");
    if (which != 1 && which != 2) throw ModelError("build_factor: multiplier id must be 1 or 2");
    if (which == 1 && (!params.k1 || r >= 1.0))
        throw ModelError("multiplier family 1 is undefined for r >= 1");

    // Companion realization of
    //   psi(s) = (c_1 s + c_0) / (s^2 + alpha s + beta) + d,
    // replicated across the n_u input channels.
    double alpha = 0.0, beta = 0.0, c_1 = 0.0, c_0 = 0.0, d = 0.0;
    if (which == 1) {
        const double k1 = *params.k1;
        const double a1 = *params.a1;
        const double c1 = params.c1;
        // Denominator follows the transfer function s^2 + (a1/tau) s + k1 c1 / tau^2.
        alpha = a1 / tau_bar;
        beta = k1 * c1 / (tau_bar * tau_bar);
        c_1 = k1 * (c1 - a1) / tau_bar;
        c_0 = -k1 * k1 * c1 / (tau_bar * tau_bar);
        d = k1 + params.epsilon;
    } else {
        alpha = params.a2 / tau_bar;
        beta = params.b2 / (tau_bar * tau_bar);
        c_1 = params.k2 * (params.c2 - params.a2) / tau_bar;
        c_0 = -params.b2 * params.k2 / (tau_bar * tau_bar);
        d = params.k2 + params.delta;
    }

    Matrix a(2, 2), b(2, 1), c(1, 2);
    a << 0.0, 1.0, -beta, -alpha;
    b << 0.0, 1.0;
    c << c_0, c_1;

    DelayIqcFactor f;
    f.A_psi = kron_identity(a, n_u);
    f.B_psi1 = kron_identity(b, n_u);
    f.B_psi2 = Matrix::Zero(2 * n_u, n_u);
    f.C_psi = kron_identity(c, n_u);
    f.D_psi1 = d * Matrix::Identity(n_u, n_u);
    f.D_psi2 = Matrix::Zero(n_u, n_u);
    f.which = which;
    f.tau_bar = tau_bar;
    f.params = params;

    if (!is_hurwitz(f.A_psi, -1e-9))
        throw ModelError("constructed factor realization is not Hurwitz");
    return f;
}

std::vector<DelayIqcFactor> build_default_factors(const DelaySpec& delay, int n_u) {
    const MultiplierParams params = multiplier_params(delay.rate_bound);
    std::vector<DelayIqcFactor> out;
    for (int which : select_multipliers(delay.rate_bound))
        out.push_back(build_factor(which, delay.tau_bar, delay.rate_bound, params, n_u));
    return out;
}

std::complex<double> multiplier_scalar_response(int which, const MultiplierParams& params,
                                                double tau_bar, std::complex<double> s) {
    const std::complex<double> t2s2 = tau_bar * tau_bar * s * s;
    if (which == 1) {
        if (!params.k1) throw ModelError("multiplier family 1 undefined for this rate bound");
        const double k1 = *params.k1;
        const double a1 = *params.a1;
        const double c1 = params.c1;
        return k1 * (t2s2 + c1 * tau_bar * s) / (t2s2 + a1 * tau_bar * s + k1 * c1) + params.epsilon;
    }
    return params.k2 * (t2s2 + params.c2 * tau_bar * s) /
               (t2s2 + params.a2 * tau_bar * s + params.b2) +
           params.delta;
}

ComplexMatrix factor_frequency_response(const DelayIqcFactor& factor, double omega) {
    const int n_u = factor.num_channels();
    const int n_x = factor.num_states();
    const std::complex<double> jw(0.0, omega);

    ComplexMatrix resolvent =
        (jw * ComplexMatrix::Identity(n_x, n_x) - factor.A_psi.cast<std::complex<double>>())
            .partialPivLu()
            .solve(ComplexMatrix::Identity(n_x, n_x));

    ComplexMatrix out = ComplexMatrix::Zero(2 * n_u, 2 * n_u);
    ComplexMatrix cres = factor.C_psi.cast<std::complex<double>>() * resolvent;
    out.topLeftCorner(n_u, n_u) =
        cres * factor.B_psi1.cast<std::complex<double>>() + factor.D_psi1.cast<std::complex<double>>();
    out.topRightCorner(n_u, n_u) =
        cres * factor.B_psi2.cast<std::complex<double>>() + factor.D_psi2.cast<std::complex<double>>();
    out.bottomRightCorner(n_u, n_u) = ComplexMatrix::Identity(n_u, n_u);
    return out;
}

ComplexMatrix multiplier_value(const DelayIqcFactor& factor, const Matrix& X_k, double omega) {
    const int n_u = factor.num_channels();
    const std::complex<double> phi =
        multiplier_scalar_response(factor.which, factor.params, factor.tau_bar, {0.0, omega});
    ComplexMatrix pi = ComplexMatrix::Zero(2 * n_u, 2 * n_u);
    pi.topLeftCorner(n_u, n_u) = std::norm(phi) * X_k.cast<std::complex<double>>();
    pi.bottomRightCorner(n_u, n_u) = -X_k.cast<std::complex<double>>();
    return pi;
}

double verify_factorization(const DelayIqcFactor& factor, const Matrix& X_k,
                            const std::vector<double>& frequencies, double tolerance) {
    const int n_u = factor.num_channels();
    if (min_eig_sym(X_k) <= 0.0) throw ModelError("verify_factorization: X_k must be positive definite");

    Matrix w = Matrix::Zero(2 * n_u, 2 * n_u);
    w.topLeftCorner(n_u, n_u) = X_k;
    w.bottomRightCorner(n_u, n_u) = -X_k;

    double worst = 0.0;
    double worst_omega = 0.0;
    for (double omega : frequencies) {
        const ComplexMatrix psi = factor_frequency_response(factor, omega);
        const ComplexMatrix lhs = psi.adjoint() * w.cast<std::complex<double>>() * psi;
        const ComplexMatrix pi = multiplier_value(factor, X_k, omega);
        const double rel = (lhs - pi).norm() / (1.0 + pi.norm());
        if (rel > worst) {
            worst = rel;
            worst_omega = omega;
        }
    }
    if (worst > tolerance) {
        std::ostringstream os;
        os << "factorization mismatch for multiplier " << factor.which << ": relative residual "
           << worst << " at omega = " << worst_omega << " exceeds " << tolerance;
        throw Error(os.str());
    }
    return worst;
}

namespace {

// Linear interpolation into column samples; zero before t = 0.
Vector sample_at(const Matrix& samples, double dt, double t) {
    const Eigen::Index n = samples.cols();
    if (t < 0.0) return Vector::Zero(samples.rows());
    const double pos = t / dt;
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    if (i0 >= n - 1) return samples.col(n - 1);
    const double frac = pos - static_cast<double>(i0);
    return (1.0 - frac) * samples.col(i0) + frac * samples.col(i0 + 1);
}

double scalar_at(const Vector& samples, double dt, double t) {
    const Eigen::Index n = samples.size();
    if (t <= 0.0) return samples(0);
    const double pos = t / dt;
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    if (i0 >= n - 1) return samples(n - 1);
    const double frac = pos - static_cast<double>(i0);
    return (1.0 - frac) * samples(i0) + frac * samples(i0 + 1);
}

}  // namespace

Vector hard_iqc_residual(const DelayIqcFactor& factor, const Matrix& X_k, const Matrix& u_samples,
                         const Vector& tau_samples, double dt) {
    const Eigen::Index n_samples = u_samples.cols();
    if (tau_samples.size() != n_samples)
        throw SimulationError("hard_iqc_residual: u and tau sample counts differ");
    if (!(dt > 0.0)) throw SimulationError("hard_iqc_residual: dt must be > 0");

    // Discrete admissibility surrogate for the delay class.
    const double slack = 1e-9;
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        if (tau_samples(i) < -slack || tau_samples(i) > factor.tau_bar + slack)
            throw SimulationError("delay trajectory leaves [0, tau_bar] at sample " + std::to_string(i));
        if (i + 1 < n_samples) {
            const double rate = std::abs(tau_samples(i + 1) - tau_samples(i)) / dt;
            if (rate > factor.params.rate_bound * (1.0 + 1e-6) + slack)
                throw SimulationError("delay trajectory violates rate bound at sample " + std::to_string(i));
        }
    }

    const int n_u = factor.num_channels();
    auto w_at = [&](double t) -> Vector {
        const Vector u_now = sample_at(u_samples, dt, t);
        const double tau = scalar_at(tau_samples, dt, t);
        return u_now - sample_at(u_samples, dt, t - tau);
    };
    auto deriv = [&](double t, const Vector& x) -> Vector {
        return factor.A_psi * x + factor.B_psi1 * sample_at(u_samples, dt, t) + factor.B_psi2 * w_at(t);
    };
    auto integrand = [&](double t, const Vector& x) -> double {
        const Vector u_now = sample_at(u_samples, dt, t);
        const Vector w_now = w_at(t);
        const Vector z1 = factor.C_psi * x + factor.D_psi1 * u_now + factor.D_psi2 * w_now;
        return z1.dot(X_k * z1) - w_now.dot(X_k * w_now);
    };

    Vector x = Vector::Zero(factor.num_states());
    Vector cumulative(n_samples);
    cumulative(0) = 0.0;
    double acc = 0.0;
    double g_prev = integrand(0.0, x);
    for (Eigen::Index i = 0; i + 1 < n_samples; ++i) {
        const double t = static_cast<double>(i) * dt;
        const Vector k1 = deriv(t, x);
        const Vector k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1);
        const Vector k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2);
        const Vector k4 = deriv(t + dt, x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double g_next = integrand(t + dt, x);
        acc += 0.5 * dt * (g_prev + g_next);
        g_prev = g_next;
        cumulative(i + 1) = acc;
        (void)n_u;
    }
    return cumulative;
}

std::vector<double> log_spaced_frequencies(double w_min, double w_max, int count) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    const double l0 = std::log10(w_min);
    const double l1 = std::log10(w_max);
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::pow(10.0, l0 + t * (l1 - l0)));
    }
    return out;
}

}  // namespace lpvds
