#include "digit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace digit {

namespace {

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

EighResult eigh_symmetric(const Matrix& a) {
    if (a.rows != a.cols) throw std::invalid_argument("eigh_symmetric: matrix must be square");
    const int n = a.rows;
    const double scale = std::max(1.0, max_abs(a));
    double asym = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(a.at(i, j) - a.at(j, i)));
    if (asym > 1e-9 * scale)
        throw std::invalid_argument("eigh_symmetric: input not symmetric, max |A-A^T| = " +
                                    std::to_string(asym));

    Matrix d = a;
    // symmetrize away roundoff so rotations stay exact
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double v = 0.5 * (d.at(i, j) + d.at(j, i));
            d.at(i, j) = v;
            d.at(j, i) = v;
        }
    Matrix vmat = Matrix::identity(n);

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += d.at(i, j) * d.at(i, j);
        if (std::sqrt(off) <= 1e-14 * std::max(1.0, max_abs(d))) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = d.at(p, q);
                if (apq == 0.0) continue;
                const double app = d.at(p, p);
                const double aqq = d.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int i = 0; i < n; ++i) {
                    const double dip = d.at(i, p);
                    const double diq = d.at(i, q);
                    d.at(i, p) = c * dip - s * diq;
                    d.at(i, q) = s * dip + c * diq;
                }
                for (int i = 0; i < n; ++i) {
                    const double dpi = d.at(p, i);
                    const double dqi = d.at(q, i);
                    d.at(p, i) = c * dpi - s * dqi;
                    d.at(q, i) = s * dpi + c * dqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = vmat.at(i, p);
                    const double viq = vmat.at(i, q);
                    vmat.at(i, p) = c * vip - s * viq;
                    vmat.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return d.at(i, i) > d.at(j, j); });

    EighResult r;
    r.eigenvalues.resize(n);
    r.eigenvectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        r.eigenvalues[j] = d.at(order[j], order[j]);
        for (int i = 0; i < n; ++i) r.eigenvectors.at(i, j) = vmat.at(i, order[j]);
    }
    return r;
}

Matrix pseudoinverse(const Matrix& m) {
    // Thin SVD from the smaller Gram matrix: M = U Σ Vᵀ, M⁺ = V Σ⁺ Uᵀ.
    const bool tall = m.rows >= m.cols;
    const Matrix mt = transpose(m);
    const Matrix gram = tall ? matmul(mt, m) : matmul(m, mt);
    EighResult eig = eigh_symmetric(gram);

    const int k = gram.rows;
    std::vector<double> sigma(k);
    double sigma_max = 0.0;
    for (int i = 0; i < k; ++i) {
        sigma[i] = std::sqrt(std::max(0.0, eig.eigenvalues[i]));
        sigma_max = std::max(sigma_max, sigma[i]);
    }
    const double cutoff = 1e-10 * sigma_max;

    Matrix pinv(m.cols, m.rows);
    for (int i = 0; i < k; ++i) {
        if (!(sigma[i] > cutoff) || sigma[i] == 0.0) continue;
        // tall: w_i = eigvec of MᵀM (right singular vec), u_i = M w_i / σ.
        // wide: w_i = eigvec of MMᵀ (left singular vec),  v_i = Mᵀ w_i / σ.
        std::vector<double> w(k);
        for (int r = 0; r < k; ++r) w[r] = eig.eigenvectors.at(r, i);
        if (tall) {
            std::vector<double> u(m.rows, 0.0);
            for (int r = 0; r < m.rows; ++r)
                for (int c = 0; c < m.cols; ++c) u[r] += m.at(r, c) * w[c];
            for (int r = 0; r < m.cols; ++r)
                for (int c = 0; c < m.rows; ++c)
                    pinv.at(r, c) += w[r] * u[c] / (sigma[i] * sigma[i]);
        } else {
            std::vector<double> v(m.cols, 0.0);
            for (int c = 0; c < m.cols; ++c)
                for (int r = 0; r < m.rows; ++r) v[c] += m.at(r, c) * w[r];
            for (int r = 0; r < m.cols; ++r)
                for (int c = 0; c < m.rows; ++c)
                    pinv.at(r, c) += v[r] * w[c] / (sigma[i] * sigma[i]);
        }
    }
    return pinv;
}

Matrix orthonormal_columns(const Matrix& a) {
    Matrix q = a;
    const int n = a.rows, k = a.cols;
    for (int j = 0; j < k; ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int p = 0; p < j; ++p) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += q.at(i, p) * q.at(i, j);
                for (int i = 0; i < n; ++i) q.at(i, j) -= d * q.at(i, p);
            }
        }
        double norm = 0.0;
        for (int i = 0; i < n; ++i) norm += q.at(i, j) * q.at(i, j);
        norm = std::sqrt(norm);
        double col_scale = 0.0;
        for (int i = 0; i < n; ++i) col_scale = std::max(col_scale, std::abs(a.at(i, j)));
        if (norm <= 1e-12 * std::max(1.0, col_scale))
            throw std::invalid_argument("orthonormal_columns: rank-deficient basis");
        for (int i = 0; i < n; ++i) q.at(i, j) /= norm;
    }
    return q;
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("principal_angles: bases have different row dimensions");
    const Matrix qa = orthonormal_columns(a);
    const Matrix qb = orthonormal_columns(b);
    const Matrix m = matmul(transpose(qa), qb);
    EighResult eig = eigh_symmetric(matmul(transpose(m), m));
    std::vector<double> angles;
    angles.reserve(eig.eigenvalues.size());
    for (double lam : eig.eigenvalues) {
        double c = std::sqrt(std::clamp(lam, 0.0, 1.0));
        angles.push_back(std::acos(std::min(1.0, c)));
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

Matrix matrix_sqrt_psd(const Matrix& a) {
    EighResult eig = eigh_symmetric(a);
    const int n = a.rows;
    double lam_max = 0.0;
    for (double l : eig.eigenvalues) lam_max = std::max(lam_max, std::abs(l));
    const double tol = 1e-9 * std::max(1.0, lam_max);
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) {
        double lam = eig.eigenvalues[i];
        if (lam < -tol)
            throw std::invalid_argument("matrix_sqrt_psd: eigenvalue " + std::to_string(lam) +
                                        " is negative beyond tolerance");
        double root = std::sqrt(std::max(0.0, lam));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                s.at(r, c) += root * eig.eigenvectors.at(r, i) * eig.eigenvectors.at(c, i);
    }
    return s;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix must be square");
    const int n = a.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s < -1e-12 * std::max(1.0, std::abs(a.at(i, i))))
                    throw std::invalid_argument("cholesky: matrix not positive semidefinite");
                l.at(i, j) = std::sqrt(std::max(0.0, s));
            } else {
                l.at(i, j) = (l.at(j, j) > 0.0) ? s / l.at(j, j) : 0.0;
            }
        }
    }
    return l;
}

}  // namespace digit
