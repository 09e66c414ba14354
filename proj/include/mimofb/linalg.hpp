#pragma once

#include <vector>

#include "mimofb/complex_matrix.hpp"

namespace mimofb {

inline constexpr double kDefaultTol = 1e-10;

struct HermitianEigen {
    std::vector<double> values; // ascending
    ComplexMatrix vectors;      // column k pairs with values[k]
};

// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
// Throws NotHermitian if ||A - A^H||_F > tol * ||A||_F, NoConvergence if the
// sweep budget runs out.
HermitianEigen hermitian_eigen(const ComplexMatrix& a, double tol = kDefaultTol);

double largest_eigenvalue_hermitian(const ComplexMatrix& a, double tol = kDefaultTol);

// Unit eigenvector of the largest eigenvalue, phase fixed so the first
// component with non-negligible magnitude is real and positive.
ComplexMatrix principal_eigenvector(const ComplexMatrix& a, double tol = kDefaultTol);

// PSD square root S = V diag(sqrt(max(lambda, 0))) V^H, so S * S^H = A.
// Eigenvalues in [-tol, 0) are clamped; anything below -tol is Indefinite.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& a, double tol = kDefaultTol);

// Solves A X = B for Hermitian positive-definite A by Cholesky.
// NumericalSingularity when a pivot is not safely positive.
ComplexMatrix solve_hpd(const ComplexMatrix& a, const ComplexMatrix& b);

bool is_hermitian(const ComplexMatrix& a, double tol = kDefaultTol);

} // namespace mimofb
