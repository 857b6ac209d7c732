#pragma once

#include "lpvds/model.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace lpvds::testing {

inline std::string benchmark_model_path() {
    return std::string(LPVDS_SOURCE_DIR) + "/models/input_delay_benchmark.json";
}

inline LpvPlant load_benchmark() { return load_model_file(benchmark_model_path()); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline Matrix random_spd(std::mt19937_64& rng, int n, double shift = 0.5) {
    Matrix m = random_matrix(rng, n, n);
    return Matrix(m * m.transpose()) + shift * Matrix::Identity(n, n);
}

// Central finite differences of an LpvMatrixFunction; the independent
// oracle for partial_derivatives.
inline Matrix fd_partial(const LpvMatrixFunction& f, const Vector& rho, int k, double h) {
    Vector lo = rho, hi = rho;
    lo(k) -= h;
    hi(k) += h;
    return (f.eval(hi) - f.eval(lo)) / (2.0 * h);
}

}  // namespace lpvds::testing
