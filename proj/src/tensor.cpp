#include "stf/tensor.hpp"

#include "stf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stf {

std::size_t product(std::span<const std::size_t> extents) {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1},
                           std::multiplies<>());
}

namespace {

void check_dims(const Dims& dims) {
    if (dims.empty()) throw std::invalid_argument("tensor needs at least one mode");
    for (auto d : dims)
        if (d == 0) throw std::invalid_argument("tensor extents must be positive");
}

// Splits dims around `mode` into (left, right) block sizes.
std::pair<std::size_t, std::size_t> blocks(const Dims& dims, std::size_t mode) {
    std::size_t left = 1, right = 1;
    for (std::size_t j = 0; j < mode; ++j) left *= dims[j];
    for (std::size_t j = mode + 1; j < dims.size(); ++j) right *= dims[j];
    return {left, right};
}

void check_mode(const Tensor& x, std::size_t mode) {
    if (mode >= x.order())
        throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for order-" +
                                    std::to_string(x.order()) + " tensor");
}

}  // namespace

Tensor::Tensor(Dims dims, double fill) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(product(dims_), fill);
}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != product(dims_))
        throw std::invalid_argument("tensor data length does not match extents");
}

Tensor Tensor::from_vector(const Vector& v) {
    return Tensor({static_cast<std::size_t>(v.size())}, std::vector<double>(v.begin(), v.end()));
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw std::invalid_argument("index order mismatch");
    std::size_t flat = 0, stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (index[k] >= dims_[k]) throw std::out_of_range("tensor index out of range");
        flat += index[k] * stride;
        stride *= dims_[k];
    }
    return flat;
}

double& Tensor::operator()(std::initializer_list<std::size_t> index) {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double Tensor::operator()(std::initializer_list<std::size_t> index) const {
    return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (dims_ != other.dims_) throw std::invalid_argument("tensor dims mismatch in +");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (dims_ != other.dims_) throw std::invalid_argument("tensor dims mismatch in -");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(double s, Tensor a) { return a *= s; }

Matrix unfold(const Tensor& x, std::size_t mode) {
    check_mode(x, mode);
    const auto& dims = x.dims();
    const auto [left, right] = blocks(dims, mode);
    const std::size_t pk = dims[mode];
    Matrix m(pk, left * right);
    const auto data = x.data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < pk; ++i)
            for (std::size_t l = 0; l < left; ++l)
                m(i, l + left * r) = data[l + left * (i + pk * r)];
    return m;
}

Tensor refold(const Matrix& m, std::size_t mode, const Dims& dims) {
    check_dims(dims);
    if (mode >= dims.size()) throw std::invalid_argument("refold mode out of range");
    const auto [left, right] = blocks(dims, mode);
    const std::size_t pk = dims[mode];
    if (static_cast<std::size_t>(m.rows()) != pk || static_cast<std::size_t>(m.cols()) != left * right)
        throw std::invalid_argument("refold: matrix shape does not match extents");
    Tensor x(dims);
    auto data = x.data();
    for (std::size_t r = 0; r < right; ++r)
        for (std::size_t i = 0; i < pk; ++i)
            for (std::size_t l = 0; l < left; ++l)
                data[l + left * (i + pk * r)] = m(i, l + left * r);
    return x;
}

Tensor mode_product(const Tensor& x, const Matrix& a, std::size_t mode) {
    check_mode(x, mode);
    const auto& dims = x.dims();
    const std::size_t pk = dims[mode];
    if (static_cast<std::size_t>(a.cols()) != pk)
        throw std::invalid_argument("mode_product: matrix has " + std::to_string(a.cols()) +
                                    " columns, mode extent is " + std::to_string(pk));
    const auto [left, right] = blocks(dims, mode);
    const std::size_t d = static_cast<std::size_t>(a.rows());
    Dims out_dims = dims;
    out_dims[mode] = d;
    Tensor y(out_dims);
    using Block = Eigen::Map<const Matrix>;
    using OutBlock = Eigen::Map<Matrix>;
    // Each right-slice is a column-major left x pk block; fibers are its rows.
    for (std::size_t r = 0; r < right; ++r) {
        Block in(x.data().data() + r * left * pk, left, pk);
        OutBlock out(y.data().data() + r * left * d, left, d);
        out.noalias() = in * a.transpose();
    }
    return y;
}

Tensor multi_mode_product(const Tensor& x, std::span<const Matrix> mats) {
    if (mats.size() > x.order()) throw std::invalid_argument("more matrices than tensor modes");
    Tensor y = x;
    for (std::size_t k = 0; k < mats.size(); ++k)
        if (mats[k].size() != 0) y = mode_product(y, mats[k], k);
    return y;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix kron_reverse(std::span<const Matrix> mats) {
    if (mats.empty()) return Matrix::Identity(1, 1);
    Matrix out = mats[0];
    for (std::size_t k = 1; k < mats.size(); ++k) out = kron(mats[k], out);
    return out;
}

Tensor hadamard(const Tensor& x, const Tensor& y) {
    if (x.dims() != y.dims()) throw std::invalid_argument("hadamard: dims mismatch");
    Tensor z = x;
    auto zd = z.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < zd.size(); ++i) zd[i] *= yd[i];
    return z;
}

double squared_norm(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v * v;
    return s;
}

double frobenius_norm(const Tensor& x) { return std::sqrt(squared_norm(x)); }

namespace {

Matrix symmetrized(const Matrix& s) {
    if (s.rows() != s.cols() || s.rows() == 0) throw std::invalid_argument("matrix must be square");
    const double scale = s.cwiseAbs().maxCoeff();
    const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) throw std::invalid_argument("matrix is not symmetric");
    return 0.5 * (s + s.transpose());
}

}  // namespace

EigenPairs top_eigenvectors(const Matrix& s, std::size_t k) {
    const Matrix sym = symmetrized(s);
    const auto n = static_cast<std::size_t>(sym.rows());
    if (k < 1 || k > n)
        throw std::invalid_argument("requested " + std::to_string(k) + " eigenvectors of a " +
                                    std::to_string(n) + "x" + std::to_string(n) + " matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    EigenPairs out{Matrix(n, k), Vector(k)};
    for (std::size_t c = 0; c < k; ++c) {
        const auto src = static_cast<Eigen::Index>(n - 1 - c);
        Vector v = solver.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) > best) {
                best = std::abs(v(i));
                pivot = i;
            }
        }
        if (v(pivot) < 0) v = -v;
        out.vectors.col(static_cast<Eigen::Index>(c)) = v;
        out.values(static_cast<Eigen::Index>(c)) = solver.eigenvalues()(src);
    }
    return out;
}

Vector symmetric_eigenvalues(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(s), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
    return solver.eigenvalues().reverse();
}

double subspace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("subspace_distance: ambient dims differ");
    auto basis = [](const Matrix& m) -> Matrix {
        Eigen::HouseholderQR<Matrix> qr(m);
        return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    };
    const Matrix qa = basis(a);
    const Matrix qb = basis(b);
    // Symmetric in a, b when both have the same rank.
    const Matrix ra = qb - qa * (qa.transpose() * qb);
    const Matrix rb = qa - qb * (qb.transpose() * qa);
    Eigen::JacobiSVD<Matrix> sa(ra), sb(rb);
    return std::max(sa.singularValues()(0), sb.singularValues()(0));
}

}  // namespace stf
