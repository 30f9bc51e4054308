#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "digit/linalg.hpp"
#include "digit/rng.hpp"

using namespace digit;

namespace {

Matrix random_symmetric(int n, Rng& rng) {
    Matrix a = Matrix::gaussian(n, n, rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) {
            double v = 0.5 * (a.at(i, j) + a.at(j, i));
            a.at(i, j) = v;
            a.at(j, i) = v;
        }
    return a;
}

Matrix random_psd(int n, Rng& rng) {
    Matrix b = Matrix::gaussian(n, n + 2, rng);
    return matmul(b, transpose(b));
}

double max_entry_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

}  // namespace

TEST_CASE("eigh identity and diagonal") {
    EighResult r = eigh_symmetric(Matrix::identity(3));
    for (double lam : r.eigenvalues) CHECK(lam == doctest::Approx(1.0));

    Matrix d(3, 3);
    d.at(0, 0) = 3.0;
    d.at(1, 1) = 1.0;
    d.at(2, 2) = 2.0;
    r = eigh_symmetric(d);
    CHECK(r.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(r.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(r.eigenvalues[2] == doctest::Approx(1.0));
    // axis eigenvectors up to sign
    CHECK(std::abs(r.eigenvectors.at(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(r.eigenvectors.at(2, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(r.eigenvectors.at(1, 2)) == doctest::Approx(1.0));
}

TEST_CASE("eigh reconstruction and orthonormality on random instances") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(6));
        Matrix a = random_symmetric(n, rng);
        EighResult r = eigh_symmetric(a);

        double norm_a = frobenius_norm(a);
        // A v_i = λ_i v_i
        for (int i = 0; i < n; ++i) {
            for (int row = 0; row < n; ++row) {
                double av = 0.0;
                for (int c = 0; c < n; ++c) av += a.at(row, c) * r.eigenvectors.at(c, i);
                CHECK(std::abs(av - r.eigenvalues[i] * r.eigenvectors.at(row, i)) <=
                      1e-7 * std::max(1.0, norm_a));
            }
        }
        // VᵀV = I
        Matrix vtv = matmul(transpose(r.eigenvectors), r.eigenvectors);
        CHECK(max_entry_diff(vtv, Matrix::identity(n)) < 1e-8);
        // descending order
        for (int i = 1; i < n; ++i) CHECK(r.eigenvalues[i - 1] >= r.eigenvalues[i] - 1e-12);
        // A = VΛVᵀ
        Matrix lam(n, n);
        for (int i = 0; i < n; ++i) lam.at(i, i) = r.eigenvalues[i];
        Matrix rec = matmul(r.eigenvectors, matmul(lam, transpose(r.eigenvectors)));
        CHECK(max_entry_diff(rec, a) < 1e-8 * std::max(1.0, norm_a));
    }
}

TEST_CASE("eigh rejects asymmetric input") {
    Matrix a(2, 2);
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 0.5;
    CHECK_THROWS_AS(eigh_symmetric(a), std::invalid_argument);
}

TEST_CASE("pseudoinverse full-rank and zero cases") {
    Matrix m(2, 2);
    m.at(0, 0) = 2.0;
    m.at(0, 1) = 1.0;
    m.at(1, 0) = 1.0;
    m.at(1, 1) = 1.0;  // det = 1
    Matrix p = pseudoinverse(m);
    Matrix prod = matmul(p, m);
    CHECK(max_entry_diff(prod, Matrix::identity(2)) < 1e-9);

    Matrix z(3, 2);
    Matrix pz = pseudoinverse(z);
    CHECK(frobenius_norm(pz) == 0.0);
    CHECK(pz.rows == 2);
    CHECK(pz.cols == 3);
}

TEST_CASE("pseudoinverse matches normal-equation oracle on tall matrices") {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = Matrix::gaussian(4, 2, rng);
        Matrix p = pseudoinverse(m);
        // oracle: (MᵀM)⁻¹Mᵀ via 2×2 closed-form inverse
        Matrix g = matmul(transpose(m), m);
        const double det = g.at(0, 0) * g.at(1, 1) - g.at(0, 1) * g.at(1, 0);
        Matrix gi(2, 2);
        gi.at(0, 0) = g.at(1, 1) / det;
        gi.at(1, 1) = g.at(0, 0) / det;
        gi.at(0, 1) = -g.at(0, 1) / det;
        gi.at(1, 0) = -g.at(1, 0) / det;
        Matrix oracle = matmul(gi, transpose(m));
        CHECK(max_entry_diff(p, oracle) < 1e-8);
    }
}

TEST_CASE("pseudoinverse satisfies the four Penrose conditions") {
    Rng rng(33);
    for (int trial = 0; trial < 100; ++trial) {
        const int r = 1 + static_cast<int>(rng.below(4));
        const int c = 1 + static_cast<int>(rng.below(4));
        Matrix m = Matrix::gaussian(r, c, rng);
        Matrix p = pseudoinverse(m);
        const double scale = std::max(1.0, frobenius_norm(m));
        Matrix mpm = matmul(m, matmul(p, m));
        Matrix pmp = matmul(p, matmul(m, p));
        Matrix mp = matmul(m, p);
        Matrix pm = matmul(p, m);
        CHECK(max_entry_diff(mpm, m) < 1e-7 * scale);
        CHECK(max_entry_diff(pmp, p) < 1e-7 * std::max(1.0, frobenius_norm(p)));
        CHECK(max_entry_diff(mp, transpose(mp)) < 1e-7 * scale);
        CHECK(max_entry_diff(pm, transpose(pm)) < 1e-7 * scale);
    }
}

TEST_CASE("principal angles on known subspaces") {
    Matrix e1(2, 1);
    e1.at(0, 0) = 1.0;
    Matrix e2(2, 1);
    e2.at(1, 0) = 1.0;

    auto zero = principal_angles(e1, e1);
    CHECK(zero[0] == doctest::Approx(0.0).epsilon(1e-9));

    auto ortho = principal_angles(e1, e2);
    CHECK(ortho[0] == doctest::Approx(M_PI / 2));

    Matrix diag(2, 1);
    diag.at(0, 0) = 1.0 / std::sqrt(2.0);
    diag.at(1, 0) = 1.0 / std::sqrt(2.0);
    auto mid = principal_angles(e1, diag);
    CHECK(mid[0] == doctest::Approx(M_PI / 4));
}

TEST_CASE("principal angles rejects rank-deficient basis") {
    Matrix a(3, 2);
    a.at(0, 0) = 1.0;
    a.at(0, 1) = 2.0;  // second column is a multiple of the first
    a.at(1, 0) = 1.0;
    a.at(1, 1) = 2.0;
    CHECK_THROWS_AS(principal_angles(a, Matrix::identity(3)), std::invalid_argument);
}

TEST_CASE("matrix sqrt of PSD matrices") {
    Matrix i3 = matrix_sqrt_psd(Matrix::identity(3));
    CHECK(max_entry_diff(i3, Matrix::identity(3)) < 1e-10);

    Matrix d(2, 2);
    d.at(0, 0) = 4.0;
    d.at(1, 1) = 9.0;
    Matrix s = matrix_sqrt_psd(d);
    CHECK(s.at(0, 0) == doctest::Approx(2.0));
    CHECK(s.at(1, 1) == doctest::Approx(3.0));

    Rng rng(44);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix a = random_psd(3, rng);
        Matrix r = matrix_sqrt_psd(a);
        Matrix sq = matmul(r, r);
        CHECK(max_entry_diff(sq, a) < 1e-7 * std::max(1.0, frobenius_norm(a)));
    }
}

TEST_CASE("matrix sqrt rejects indefinite input") {
    Matrix d(2, 2);
    d.at(0, 0) = 1.0;
    d.at(1, 1) = -0.5;
    CHECK_THROWS_AS(matrix_sqrt_psd(d), std::invalid_argument);
}

TEST_CASE("rng determinism and splitting") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.u64() == b.u64());

    Rng base(7);
    Rng c1 = base.split(1);
    Rng c2 = base.split(2);
    CHECK(c1.u64() != c2.u64());
    // splitting is independent of consumption
    Rng base2(7);
    base2.u64();
    base2.u64();
    Rng c1_again = base2.split(1);
    Rng c1_ref = Rng(7).split(1);
    CHECK(c1_again.u64() == c1_ref.u64());
}

TEST_CASE("rng normal moments") {
    Rng rng(5);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cholesky reproduces PSD input") {
    Rng rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix a = random_psd(4, rng);
        Matrix l = cholesky(a);
        Matrix rec = matmul(l, transpose(l));
        CHECK(max_entry_diff(rec, a) < 1e-8 * std::max(1.0, frobenius_norm(a)));
    }
}
