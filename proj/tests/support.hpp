#pragma once

#include "stf/tensor.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

namespace stf::testing {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("stf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path_ / name) << text;
        return path_ / name;
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Tensor random_tensor(const Dims& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Tensor x(dims);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = normal(rng);
    return x;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
    return m;
}

// Multi-index of a flat position, mode 0 fastest.
inline std::vector<std::size_t> index_of(std::size_t flat, const Dims& dims) {
    std::vector<std::size_t> idx(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        idx[k] = flat % dims[k];
        flat /= dims[k];
    }
    return idx;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
    const double denom = std::max(b.norm(), 1e-300);
    return (a - b).norm() / denom;
}

inline double relative_error(const Tensor& a, const Tensor& b) {
    return frobenius_norm(a - b) / std::max(frobenius_norm(b), 1e-300);
}

}  // namespace stf::testing
