#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace stf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<std::size_t>;

std::size_t product(std::span<const std::size_t> extents);

// Dense multi-way array. Entries are stored with the first mode varying
// fastest, so the mode-0 unfolding is the data viewed as a column-major
// p0 x (p1*...*pK-1) matrix. Modes are numbered from 0.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Dims dims, double fill = 0.0);
    Tensor(Dims dims, std::vector<double> data);

    static Tensor from_vector(const Vector& v);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t extent(std::size_t mode) const { return dims_.at(mode); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::size_t offset(std::span<const std::size_t> index) const;
    double& operator()(std::span<const std::size_t> index) { return data_[offset(index)]; }
    double operator()(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    double& operator()(std::initializer_list<std::size_t> index);
    double operator()(std::initializer_list<std::size_t> index) const;

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    bool all_finite() const noexcept;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double s);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Dims dims_;
    std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double s, Tensor a);

// Mode-k matricization. Columns enumerate the remaining modes in ascending
// order with the lowest remaining mode varying fastest.
Matrix unfold(const Tensor& x, std::size_t mode);

// Inverse of unfold for a tensor of extents `dims`.
Tensor refold(const Matrix& m, std::size_t mode, const Dims& dims);

// Premultiplies every mode-k fiber of x by a.
Tensor mode_product(const Tensor& x, const Matrix& a, std::size_t mode);

// x x_0 mats[0] x_1 mats[1] ... ; an empty matrix skips that mode.
Tensor multi_mode_product(const Tensor& x, std::span<const Matrix> mats);

Matrix kron(const Matrix& a, const Matrix& b);

// a[n-1] (x) ... (x) a[0], the ordering used for unfolded Tucker products.
Matrix kron_reverse(std::span<const Matrix> mats);

Tensor hadamard(const Tensor& x, const Tensor& y);

double frobenius_norm(const Tensor& x);
double squared_norm(const Tensor& x);

struct EigenPairs {
    Matrix vectors;  // columns, orthonormal
    Vector values;   // descending
};

// Leading k eigenpairs of a symmetric matrix. Each eigenvector is signed so
// that its largest-magnitude entry (first one on ties) is positive.
EigenPairs top_eigenvectors(const Matrix& s, std::size_t k);

// All eigenvalues of a symmetric matrix in descending order.
Vector symmetric_eigenvalues(const Matrix& s);

// sin of the largest principal angle between the column spaces of a and b.
double subspace_distance(const Matrix& a, const Matrix& b);

}  // namespace stf
