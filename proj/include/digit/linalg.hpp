#pragma once

#include "digit/matrix.hpp"

namespace digit {

struct EighResult {
    std::vector<double> eigenvalues;  // descending
    Matrix eigenvectors;              // columns, orthonormal, matching order
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Rejects inputs whose relative asymmetry exceeds 1e-9.
EighResult eigh_symmetric(const Matrix& a);

/// Moore-Penrose pseudoinverse via the eigendecomposition of MᵀM (or MMᵀ).
/// Singular values below 1e-10·σ_max are treated as zero.
Matrix pseudoinverse(const Matrix& m);

/// Canonical angles (radians, ascending) between the column spans of a and b.
/// Both bases must have full column rank and the same row dimension.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// Symmetric PSD square root. Eigenvalues below -1e-9 (relative) are rejected;
/// small negatives are clamped to zero.
Matrix matrix_sqrt_psd(const Matrix& a);

/// Lower-triangular Cholesky factor of a symmetric PSD matrix.
Matrix cholesky(const Matrix& a);

/// Orthonormal basis of the column span (modified Gram-Schmidt with
/// re-orthogonalization). Throws if the columns are rank deficient.
Matrix orthonormal_columns(const Matrix& a);

}  // namespace digit
