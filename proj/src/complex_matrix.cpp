#include "mimofb/complex_matrix.hpp"

#include <cmath>

#include "mimofb/error.hpp"

namespace mimofb {

namespace {

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(ErrorCode::ShapeMismatch, std::string(op) + ": operand shapes differ");
}

} // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, cplx fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0)
{
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
        if (row.size() != cols_)
            fail(ErrorCode::ShapeMismatch, "ragged initializer list");
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n)
{
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        out(i, i) = 1.0;
    return out;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values)
{
    ComplexMatrix out(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out(i, i) = values[i];
    return out;
}

ComplexMatrix ComplexMatrix::column(std::span<const cplx> values)
{
    ComplexMatrix out(values.size(), 1);
    std::copy(values.begin(), values.end(), out.data_.begin());
    return out;
}

ComplexMatrix ComplexMatrix::adjoint() const
{
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            out(c, r) = std::conj((*this)(r, c));
    return out;
}

ComplexMatrix ComplexMatrix::transpose() const
{
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            out(c, r) = (*this)(r, c);
    return out;
}

ComplexMatrix ComplexMatrix::col(std::size_t c) const
{
    ComplexMatrix out(rows_, 1);
    for (std::size_t r = 0; r < rows_; ++r)
        out(r, 0) = (*this)(r, c);
    return out;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other)
{
    require_same_shape(*this, other, "operator+");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other)
{
    require_same_shape(*this, other, "operator-");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= other.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx scale) noexcept
{
    for (auto& v : data_)
        v *= scale;
    return *this;
}

bool ComplexMatrix::all_finite() const noexcept
{
    for (const auto& v : data_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            return false;
    return true;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, cplx scale) { return a *= scale; }
ComplexMatrix operator*(cplx scale, ComplexMatrix a) { return a *= scale; }
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) { return matmul(a, b); }

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b)
{
    if (a.cols() != b.rows())
        fail(ErrorCode::ShapeMismatch, "matmul: inner dimensions differ");
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

ComplexMatrix adjoint_times(const ComplexMatrix& a, const ComplexMatrix& b)
{
    if (a.rows() != b.rows())
        fail(ErrorCode::ShapeMismatch, "adjoint_times: row counts differ");
    ComplexMatrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k)
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const cplx aki = std::conj(a(k, i));
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aki * b(k, j);
        }
    return out;
}

double squared_norm(const ComplexMatrix& a) noexcept
{
    double acc = 0.0;
    for (const auto& v : a.data())
        acc += std::norm(v);
    return acc;
}

double frobenius_norm(const ComplexMatrix& a) noexcept { return std::sqrt(squared_norm(a)); }

std::vector<cplx> vectorize(const ComplexMatrix& a)
{
    std::vector<cplx> out;
    out.reserve(a.size());
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r)
            out.push_back(a(r, c));
    return out;
}

std::vector<double> split_real_imag(const ComplexMatrix& a)
{
    const std::size_t n = a.size();
    std::vector<double> out(2 * n);
    std::size_t i = 0;
    for (std::size_t c = 0; c < a.cols(); ++c)
        for (std::size_t r = 0; r < a.rows(); ++r, ++i) {
            out[i] = a(r, c).real();
            out[n + i] = a(r, c).imag();
        }
    return out;
}

std::vector<cplx> join_real_imag(std::span<const double> stacked)
{
    if (stacked.size() % 2 != 0)
        fail(ErrorCode::ShapeMismatch, "join_real_imag: odd length");
    const std::size_t n = stacked.size() / 2;
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = {stacked[i], stacked[n + i]};
    return out;
}

} // namespace mimofb
