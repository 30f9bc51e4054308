#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "digit/rng.hpp"

namespace digit {

/// Dense row-major matrix. Analysis code uses Matrix (= MatT<double>);
/// transformer/encoder training uses MatT<float> for speed.
template <typename T>
struct MatT {
    int rows = 0;
    int cols = 0;
    std::vector<T> v;

    MatT() = default;
    MatT(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, T(0)) {}
    MatT(int r, int c, std::vector<T> data) : rows(r), cols(c), v(std::move(data)) {
        assert(v.size() == static_cast<size_t>(r) * c);
    }

    T& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    T* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const T* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return v.size(); }
    bool same_shape(const MatT& o) const { return rows == o.rows && cols == o.cols; }

    static MatT zeros(int r, int c) { return MatT(r, c); }

    static MatT identity(int n) {
        MatT m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = T(1);
        return m;
    }

    static MatT gaussian(int r, int c, Rng& rng, T stddev = T(1)) {
        MatT m(r, c);
        for (auto& x : m.v) x = static_cast<T>(rng.normal()) * stddev;
        return m;
    }

    template <typename U>
    MatT<U> cast() const {
        MatT<U> out(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

using Matrix = MatT<double>;
using MatrixF = MatT<float>;

// ---------------------------------------------------------------------------
// gemm kernels (raw pointers, row-major). The nn variant streams over the
// output row so the inner loop vectorizes; nt/tn use unrolled accumulators.
// ---------------------------------------------------------------------------

// C(m×n) += A(m×k) · B(k×n); C must be zeroed by the caller unless accumulating.
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* a = A + static_cast<size_t>(i) * k;
        T* c = C + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const T av = a[kk];
            const T* b = B + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
inline T dot_unrolled(const T* a, const T* b, int n) {
    T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    T s = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

// C(m×n) += A(m×k) · B(n×k)ᵀ
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* a = A + static_cast<size_t>(i) * k;
        T* c = C + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) c[j] += dot_unrolled(a, B + static_cast<size_t>(j) * k, k);
    }
}

// C(m×n) += A(k×m)ᵀ · B(k×n)
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int m, int k, int n) {
    for (int kk = 0; kk < k; ++kk) {
        const T* a = A + static_cast<size_t>(kk) * m;
        const T* b = B + static_cast<size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            const T av = a[i];
            T* c = C + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

template <typename T>
MatT<T> matmul(const MatT<T>& a, const MatT<T>& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    MatT<T> c(a.rows, b.cols);
    gemm_nn(a.v.data(), b.v.data(), c.v.data(), a.rows, a.cols, b.cols);
    return c;
}

template <typename T>
MatT<T> transpose(const MatT<T>& a) {
    MatT<T> t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

template <typename T>
double frobenius_norm(const MatT<T>& a) {
    double s = 0.0;
    for (T x : a.v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

}  // namespace digit
