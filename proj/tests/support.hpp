#pragma once

// Test-only helpers: random generators and a finite-difference oracle that
// evaluates plain value functions, independent of the tape.

#include "dmidas/matrix.hpp"
#include "dmidas/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace dmidas::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.uniform(lo, hi);
    return m;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Central differences of a scalar function of a flat vector.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double up = f(x);
        x[i] = orig - eps;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

/// Count of interior points whose second difference exceeds `threshold`.
inline std::size_t slope_changes(const std::vector<double>& y, double threshold = 1e-9) {
    std::size_t n = 0;
    for (std::size_t t = 1; t + 1 < y.size(); ++t) {
        if (std::abs(y[t - 1] - 2.0 * y[t] + y[t + 1]) > threshold) ++n;
    }
    return n;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "dmidas_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace dmidas::testing
