#pragma once

#include <Eigen/Dense>

#include "mimofb/complex_matrix.hpp"
#include "mimofb/rng.hpp"

namespace testing_support {

using mimofb::ComplexMatrix;
using mimofb::cplx;

inline Eigen::MatrixXcd to_eigen(const ComplexMatrix& a)
{
    Eigen::MatrixXcd out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            out(r, c) = a(r, c);
    return out;
}

inline ComplexMatrix from_eigen(const Eigen::MatrixXcd& a)
{
    ComplexMatrix out(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            out(r, c) = a(r, c);
    return out;
}

inline ComplexMatrix random_matrix(mimofb::RngStream& rng, std::size_t rows, std::size_t cols)
{
    return mimofb::sample_standard_complex_gaussian(rng, rows, cols);
}

inline ComplexMatrix random_hermitian(mimofb::RngStream& rng, std::size_t n)
{
    const ComplexMatrix g = random_matrix(rng, n, n);
    ComplexMatrix h = g + g.adjoint();
    h *= 0.5;
    return h;
}

// G G^H plus a ridge; ridge 0 gives a PSD matrix of full rank almost surely.
inline ComplexMatrix random_psd(mimofb::RngStream& rng, std::size_t n, double ridge = 0.0)
{
    const ComplexMatrix g = random_matrix(rng, n, n);
    ComplexMatrix a = mimofb::matmul(g, g.adjoint());
    for (std::size_t i = 0; i < n; ++i)
        a(i, i) += ridge;
    return a;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

} // namespace testing_support
