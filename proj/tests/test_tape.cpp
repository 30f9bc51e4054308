#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "digit/rng.hpp"
#include "digit/tape.hpp"

using namespace digit;

namespace {

using Build = std::function<int(TapeD&, const std::vector<int>&)>;

// Central finite differences against tape adjoints for every entry of every
// input. h = 1e-5 in 64-bit, relative error bound 1e-4.
void gradcheck(const Build& build, std::vector<Matrix> inputs, double h = 1e-5,
               double tol = 1e-4) {
    TapeD tape;
    std::vector<int> ids;
    for (auto& m : inputs) ids.push_back(tape.input(m));
    int loss = build(tape, ids);
    tape.backward(loss);

    std::vector<Matrix> analytic;
    for (int id : ids) analytic.push_back(tape.grad(id));

    auto eval = [&](const std::vector<Matrix>& ins) {
        TapeD t;
        std::vector<int> xs;
        for (const auto& m : ins) xs.push_back(t.input(m));
        return t.value(build(t, xs)).at(0, 0);
    };

    for (size_t i = 0; i < inputs.size(); ++i) {
        for (size_t k = 0; k < inputs[i].v.size(); ++k) {
            auto plus = inputs;
            auto minus = inputs;
            plus[i].v[k] += h;
            minus[i].v[k] -= h;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
            const double an = analytic[i].v[k];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            CHECK(std::abs(fd - an) / denom < tol);
        }
    }
}

Matrix randm(int r, int c, Rng& rng, double s = 1.0) { return Matrix::gaussian(r, c, rng, s); }

}  // namespace

TEST_CASE("adjoint of x^2 at x=3 is 6") {
    TapeD t;
    Matrix x(1, 1);
    x.at(0, 0) = 3.0;
    int xi = t.input(x);
    int loss = t.mse_sum(xi, Matrix(1, 1));
    CHECK(t.value(loss).at(0, 0) == doctest::Approx(9.0));
    t.backward(loss);
    CHECK(t.grad(xi).at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("softmax cross-entropy at uniform logits gives p - onehot") {
    TapeD t;
    const int v = 5;
    int logits = t.input(Matrix(1, v));  // all-zero logits -> uniform p
    int loss = t.cross_entropy_sum(logits, {2});
    CHECK(t.value(loss).at(0, 0) == doctest::Approx(std::log(5.0)));
    t.backward(loss);
    for (int c = 0; c < v; ++c) {
        double expect = 1.0 / v - (c == 2 ? 1.0 : 0.0);
        CHECK(t.grad(logits).at(0, c) == doctest::Approx(expect));
    }
}

TEST_CASE("disconnected input has exactly zero adjoint") {
    TapeD t;
    Matrix x(1, 1);
    x.at(0, 0) = 2.0;
    int used = t.input(x);
    int unused = t.input(Matrix(3, 3));
    int loss = t.mse_sum(used, Matrix(1, 1));
    t.backward(loss);
    for (double g : t.grad(unused).v) CHECK(g == 0.0);
}

TEST_CASE("gradcheck matmul chain") {
    Rng rng(1);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int c = t.matmul(in[0], in[1]);
            return t.weighted_sum(c, randm(3, 4, rng));
        },
        {randm(3, 2, rng), randm(2, 4, rng)});
}

TEST_CASE("gradcheck matmul_nt") {
    Rng rng(2);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int c = t.matmul_nt(in[0], in[1]);
            return t.weighted_sum(c, randm(3, 5, rng));
        },
        {randm(3, 2, rng), randm(5, 2, rng)});
}

TEST_CASE("gradcheck add, scale, bias broadcast, mask") {
    Rng rng(3);
    Matrix mask = randm(3, 4, rng);
    gradcheck(
        [&, mask](TapeD& t, const std::vector<int>& in) {
            int s = t.add(in[0], in[1]);
            s = t.scale(s, 0.7);
            s = t.add_row_broadcast(s, in[2]);
            s = t.mul_mask(s, mask);
            return t.weighted_sum(s, randm(3, 4, rng));
        },
        {randm(3, 4, rng), randm(3, 4, rng), randm(1, 4, rng)});
}

TEST_CASE("gradcheck col slice and concat") {
    Rng rng(4);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int a = t.col_slice(in[0], 0, 2);
            int b = t.col_slice(in[0], 2, 5);
            int c = t.col_concat({b, a});
            return t.weighted_sum(c, randm(3, 5, rng));
        },
        {randm(3, 5, rng)});
}

TEST_CASE("gradcheck row concat and mean_rows") {
    Rng rng(5);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int c = t.row_concat({in[0], in[1]});
            int m = t.mean_rows(c);
            return t.weighted_sum(m, randm(1, 3, rng));
        },
        {randm(2, 3, rng), randm(4, 3, rng)});
}

TEST_CASE("gradcheck embedding lookup") {
    Rng rng(6);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int e = t.embedding(in[0], {0, 3, 3, 1});
            return t.weighted_sum(e, randm(4, 3, rng));
        },
        {randm(5, 3, rng)});
}

TEST_CASE("gradcheck gelu") {
    Rng rng(7);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            return t.weighted_sum(t.gelu(in[0]), randm(3, 3, rng));
        },
        {randm(3, 3, rng, 2.0)});
}

TEST_CASE("gradcheck layer norm") {
    Rng rng(8);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int y = t.layer_norm(in[0], in[1], in[2]);
            return t.weighted_sum(y, randm(4, 6, rng));
        },
        {randm(4, 6, rng), randm(1, 6, rng, 0.5), randm(1, 6, rng, 0.5)});
}

TEST_CASE("gradcheck l2 row normalization") {
    Rng rng(9);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int y = t.l2_normalize_rows(in[0]);
            return t.weighted_sum(y, randm(4, 3, rng));
        },
        {randm(4, 3, rng)});
}

TEST_CASE("gradcheck causal softmax") {
    Rng rng(10);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            int p = t.softmax_causal(in[0]);
            return t.weighted_sum(p, randm(5, 5, rng));
        },
        {randm(5, 5, rng)});
}

TEST_CASE("gradcheck cross entropy with loss_from and banned diagonal") {
    Rng rng(11);
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            return t.cross_entropy_sum(in[0], {1, 2, 0, 3}, 1);
        },
        {randm(4, 4, rng)});
    gradcheck(
        [&](TapeD& t, const std::vector<int>& in) {
            return t.cross_entropy_sum(in[0], {1, 0, 3, 2}, 0, true);
        },
        {randm(4, 4, rng)});
}

TEST_CASE("gradcheck mse and scalar folding") {
    Rng rng(12);
    Matrix target = randm(3, 2, rng);
    gradcheck(
        [&, target](TapeD& t, const std::vector<int>& in) {
            int a = t.mse_sum(in[0], target);
            int b = t.mse_sum(in[1], Matrix(2, 2));
            return t.scale(t.add_scalars({a, b}), 0.25);
        },
        {randm(3, 2, rng), randm(2, 2, rng)});
}

TEST_CASE("causal softmax rows are zero beyond the diagonal") {
    Rng rng(13);
    TapeD t;
    int s = t.input(randm(4, 4, rng));
    const Matrix& p = t.value(t.softmax_causal(s));
    for (int r = 0; r < 4; ++r) {
        double row = 0.0;
        for (int c = 0; c < 4; ++c) {
            if (c > r) CHECK(p.at(r, c) == 0.0);
            row += p.at(r, c);
        }
        CHECK(row == doctest::Approx(1.0));
    }
}
