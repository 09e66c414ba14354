#include "mimofb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mimofb/error.hpp"

namespace mimofb {

namespace {

constexpr int kMaxSweeps = 64;
constexpr double kOffDiagonalTarget = 1e-14;

void require_square(const ComplexMatrix& a, const char* op)
{
    if (a.rows() != a.cols() || a.rows() == 0)
        fail(ErrorCode::ShapeMismatch, std::string(op) + ": matrix must be square and non-empty");
}

double hermitian_defect(const ComplexMatrix& a)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            acc += std::norm(a(i, j) - std::conj(a(j, i)));
    return std::sqrt(acc);
}

double off_diagonal_norm(const ComplexMatrix& a)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j)
                acc += std::norm(a(i, j));
    return std::sqrt(acc);
}

// One complex Jacobi rotation annihilating a(p, q). The unitary is
// G = diag(1, e^{-i phi}) * [[c, s], [-s, c]] acting on coordinates (p, q).
void rotate(ComplexMatrix& a, ComplexMatrix& v, std::size_t p, std::size_t q)
{
    const cplx apq = a(p, q);
    const double mag = std::abs(apq);
    if (mag == 0.0)
        return;
    const cplx phase = std::conj(apq) / mag; // e^{-i phi}
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double theta = 0.5 * std::atan2(2.0 * mag, aqq - app);
    const double c = std::cos(theta);
    const double s = std::sin(theta);

    const cplx gpp = c, gpq = s, gqp = -s * phase, gqq = c * phase;
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k < n; ++k) {
        const cplx akp = a(k, p), akq = a(k, q);
        a(k, p) = akp * gpp + akq * gqp;
        a(k, q) = akp * gpq + akq * gqq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const cplx apk = a(p, k), aqk = a(q, k);
        a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
        a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = a(p, p).real();
    a(q, q) = a(q, q).real();
    for (std::size_t k = 0; k < n; ++k) {
        const cplx vkp = v(k, p), vkq = v(k, q);
        v(k, p) = vkp * gpp + vkq * gqp;
        v(k, q) = vkp * gpq + vkq * gqq;
    }
}

} // namespace

bool is_hermitian(const ComplexMatrix& a, double tol)
{
    if (a.rows() != a.cols())
        return false;
    return hermitian_defect(a) <= tol * frobenius_norm(a);
}

HermitianEigen hermitian_eigen(const ComplexMatrix& input, double tol)
{
    require_square(input, "hermitian_eigen");
    if (!input.all_finite())
        fail(ErrorCode::InvalidArgument, "hermitian_eigen: non-finite entries");
    if (!is_hermitian(input, tol))
        fail(ErrorCode::NotHermitian, "hermitian_eigen: ||A - A^H||_F exceeds tolerance");

    const std::size_t n = input.rows();
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            a(i, j) = 0.5 * (input(i, j) + std::conj(input(j, i)));
    ComplexMatrix v = ComplexMatrix::identity(n);

    const double scale = frobenius_norm(a);
    bool converged = scale == 0.0 || n == 1;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                rotate(a, v, p, q);
        converged = off_diagonal_norm(a) <= kOffDiagonalTarget * scale;
    }
    if (!converged)
        fail(ErrorCode::NoConvergence, "hermitian_eigen: Jacobi sweep budget exhausted");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

    HermitianEigen out;
    out.values.resize(n);
    out.vectors = ComplexMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]).real();
        for (std::size_t r = 0; r < n; ++r)
            out.vectors(r, k) = v(r, order[k]);
    }
    return out;
}

double largest_eigenvalue_hermitian(const ComplexMatrix& a, double tol)
{
    return hermitian_eigen(a, tol).values.back();
}

ComplexMatrix principal_eigenvector(const ComplexMatrix& a, double tol)
{
    const HermitianEigen eig = hermitian_eigen(a, tol);
    ComplexMatrix w = eig.vectors.col(eig.values.size() - 1);
    const double norm = frobenius_norm(w);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double mag = std::abs(w(i, 0));
        if (mag > 1e-12) {
            w *= std::conj(w(i, 0)) / (mag * norm);
            break;
        }
    }
    return w;
}

ComplexMatrix hermitian_sqrt(const ComplexMatrix& a, double tol)
{
    const HermitianEigen eig = hermitian_eigen(a, tol);
    if (eig.values.front() < -tol)
        fail(ErrorCode::Indefinite, "hermitian_sqrt: eigenvalue " + std::to_string(eig.values.front()) +
                                        " below -tol");
    const std::size_t n = a.rows();
    ComplexMatrix out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double root = std::sqrt(std::max(eig.values[k], 0.0));
        if (root == 0.0)
            continue;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx vik = root * eig.vectors(i, k);
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) += vik * std::conj(eig.vectors(j, k));
        }
    }
    return out;
}

ComplexMatrix solve_hpd(const ComplexMatrix& a, const ComplexMatrix& b)
{
    require_square(a, "solve_hpd");
    if (b.rows() != a.rows())
        fail(ErrorCode::ShapeMismatch, "solve_hpd: right-hand side row count differs");
    const std::size_t n = a.rows();

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_diag = std::max(max_diag, std::abs(a(i, i).real()));
    const double pivot_floor = 1e-15 * std::max(max_diag, 1e-300);

    // Lower-triangular Cholesky factor, L L^H = A.
    ComplexMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j).real();
        for (std::size_t k = 0; k < j; ++k)
            d -= std::norm(l(j, k));
        if (!(d > pivot_floor))
            fail(ErrorCode::NumericalSingularity, "solve_hpd: matrix not positive definite to working precision");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cplx s = a(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }

    ComplexMatrix x = b;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            cplx s = x(i, c);
            for (std::size_t k = 0; k < i; ++k)
                s -= l(i, k) * x(k, c);
            x(i, c) = s / l(i, i);
        }
        for (std::size_t i = n; i-- > 0;) {
            cplx s = x(i, c);
            for (std::size_t k = i + 1; k < n; ++k)
                s -= std::conj(l(k, i)) * x(k, c);
            x(i, c) = s / l(i, i);
        }
    }
    return x;
}

} // namespace mimofb
