#include "doctest.h"

#include <algorithm>
#include <random>

#include "fastr/basis.hpp"
#include "fastr/errors.hpp"
#include "oracles.hpp"

using namespace fastr;

namespace {

std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    v.front() = lo;
    v.back() = hi;
    return v;
}

oracle::Mat penalty_mat(const PenaltyMatrix& p) {
    oracle::Mat m = oracle::zeros(p.matrix.rows(), p.matrix.cols());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) m[i][j] = p.matrix(i, j);
    return m;
}

double quad(const PenaltyMatrix& p, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < w.size(); ++j) s += w[i] * p.matrix(i, j) * w[j];
    return s;
}

} // namespace

TEST_CASE("degree zero basis is a set of interval indicators") {
    std::vector<double> v{0.0, 1.0};
    auto b = build_basis(v, 4, 0);
    REQUIRE(b.num_basis() == 4);
    for (double t : {0.1, 0.3, 0.6, 0.9}) {
        std::vector<double> row(4);
        b.evaluate_row(t, row);
        int ones = 0;
        for (double x : row) {
            CHECK((x == 0.0 || x == 1.0));
            ones += x == 1.0;
        }
        CHECK(ones == 1);
    }
}

TEST_CASE("partition of unity and local support") {
    std::mt19937_64 rng(1);
    for (int degree : {1, 2, 3, 4}) {
        for (std::size_t l : {std::size_t(degree + 1), std::size_t(8), std::size_t(15)}) {
            auto b = build_basis(uniform_values(rng, 30, -2.0, 3.0), l, degree);
            std::uniform_real_distribution<double> u(-2.0, 3.0);
            std::vector<double> row(l);
            for (int k = 0; k < 200; ++k) {
                const double t = k == 0 ? -2.0 : k == 1 ? 3.0 : u(rng);
                b.evaluate_row(t, row);
                double s = 0.0;
                std::size_t nz = 0, first = l, last = 0;
                for (std::size_t j = 0; j < l; ++j) {
                    s += row[j];
                    CHECK(row[j] >= 0.0);
                    if (row[j] != 0.0) {
                        ++nz;
                        first = std::min(first, j);
                        last = std::max(last, j);
                    }
                }
                CHECK(std::abs(s - 1.0) <= 1e-12);
                CHECK(nz <= static_cast<std::size_t>(degree + 1));
                CHECK(last - first + 1 <= static_cast<std::size_t>(degree + 1));
            }
        }
    }
}

TEST_CASE("cubic basis matches Cox-de Boor recursion") {
    std::mt19937_64 rng(2);
    auto b = build_basis(uniform_values(rng, 40, 0.0, 1.0), 10, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::vector<double> row(10);
    for (int k = 0; k < 100; ++k) {
        const double t = u(rng);
        b.evaluate_row(t, row);
        for (std::size_t j = 0; j < 10; ++j)
            worst = std::max(worst, std::abs(row[j] - oracle::cox_de_boor(b.knots(), j, 3, t)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("clamped endpoints interpolate") {
    std::vector<double> v{0.0, 0.5, 1.0};
    auto b = build_basis(v, 7, 3);
    std::vector<double> row(7);
    b.evaluate_row(0.0, row);
    CHECK(row[0] == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t j = 1; j < 7; ++j) CHECK(row[j] == 0.0);
    b.evaluate_row(1.0, row);
    CHECK(row[6] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("evaluation clamps outside the domain") {
    std::vector<double> v{0.0, 1.0};
    auto b = build_basis(v, 6, 3);
    std::vector<double> lo(6), below(6);
    b.evaluate_row(0.0, lo);
    b.evaluate_row(-5.0, below);
    CHECK(lo == below);
}

TEST_CASE("basis configuration errors") {
    std::vector<double> v{0.0, 1.0};
    CHECK_THROWS_AS(build_basis(v, 3, 3), ConfigError);
    std::vector<double> c{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(build_basis(c, 8, 3), DataError);
    CHECK_THROWS_AS(difference_penalty(2, 2), ConfigError);
}

TEST_CASE("difference penalty by hand and by composition") {
    auto p1 = difference_penalty(3, 1);
    const double expect[3][3] = {{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(p1.matrix(i, j) == expect[i][j]);

    auto p2 = difference_penalty(6, 2);
    auto d2 = oracle::multiply(oracle::first_difference(5), oracle::first_difference(6));
    auto ref = oracle::multiply(oracle::transpose(d2), d2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(p2.matrix(i, j) == ref[i][j]);
    CHECK(p2.nullspace_dim == 2);
}

TEST_CASE("penalty nullspace and positive semidefiniteness") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    for (std::size_t l : {5, 10, 20}) {
        auto p1 = difference_penalty(l, 1);
        auto p2 = difference_penalty(l, 2);
        std::vector<double> c(l, 3.7), affine(l);
        for (std::size_t j = 0; j < l; ++j) affine[j] = 1.5 - 0.25 * static_cast<double>(j);
        CHECK(std::abs(quad(p1, c)) <= 1e-12);
        CHECK(std::abs(quad(p2, c)) <= 1e-12);
        auto pa = oracle::mat_vec(penalty_mat(p2), affine);
        for (double x : pa) CHECK(std::abs(x) <= 1e-12);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> x(l);
            for (auto& v : x) v = nd(rng);
            CHECK(quad(p2, x) >= 0.0);
        }
    }
}

TEST_CASE("kronecker sum penalty") {
    auto a = difference_penalty(4, 2);
    auto b = difference_penalty(3, 1);
    auto k = kronecker_sum_penalty(a, b);
    REQUIRE(k.matrix.rows() == 12);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t kk = 0; kk < 3; ++kk)
            for (std::size_t j2 = 0; j2 < 4; ++j2)
                for (std::size_t k2 = 0; k2 < 3; ++k2) {
                    const double expect = a.matrix(j, j2) * (kk == k2) + (j == j2) * b.matrix(kk, k2);
                    CHECK(k.matrix(j * 3 + kk, j2 * 3 + k2) == expect);
                }
}

TEST_CASE("df to lambda against the direct trace formula") {
    std::mt19937_64 rng(7);
    auto b = build_basis(uniform_values(rng, 50, 0.0, 1.0), 8, 3);
    auto x = b.evaluate(uniform_values(rng, 50, 0.0, 1.0));
    auto p = difference_penalty(8, 2);
    auto sol = df_to_lambda(x, p, 5.0);
    CHECK_FALSE(sol.at_upper_bound);
    oracle::Mat xm = oracle::zeros(50, 8);
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t c = 0; c < 8; ++c) xm[r][c] = x(r, c);
    CHECK(std::abs(oracle::trace_df(xm, penalty_mat(p), sol.lambda, DemmlerReinsch::default_ridge) - 5.0) <= 1e-6);
}

TEST_CASE("df limits") {
    std::mt19937_64 rng(9);
    auto b = build_basis(uniform_values(rng, 200, 0.0, 1.0), 8, 3);
    auto x = b.evaluate(uniform_values(rng, 200, 0.0, 1.0));
    auto p = difference_penalty(8, 2);
    auto full = df_to_lambda(x, p, 8.0 - 1e-9);
    CHECK(full.lambda == 0.0);
    auto low = df_to_lambda(x, p, 2.0);
    CHECK(low.at_upper_bound);
    CHECK_THROWS_AS(df_to_lambda(x, p, 9.0), InfeasibleDfError);
    CHECK_THROWS_AS(df_to_lambda(x, p, 1.0), InfeasibleDfError);

    DemmlerReinsch dr(gram(x), p.matrix);
    CHECK(dr.df_max() == doctest::Approx(8.0).epsilon(1e-6));
    CHECK(dr.df_min() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("Demmler-Reinsch df equals the trace formula across lambda") {
    std::mt19937_64 rng(10);
    auto b = build_basis(uniform_values(rng, 60, 0.0, 1.0), 7, 3);
    auto x = b.evaluate(uniform_values(rng, 60, 0.0, 1.0));
    auto p = difference_penalty(7, 2);
    DemmlerReinsch dr(gram(x), p.matrix);
    oracle::Mat xm = oracle::zeros(60, 7);
    for (std::size_t r = 0; r < 60; ++r)
        for (std::size_t c = 0; c < 7; ++c) xm[r][c] = x(r, c);
    for (double lambda : {0.0, 1e-3, 0.1, 1.0, 10.0, 1e3}) {
        CHECK(dr.df(lambda) ==
              doctest::Approx(oracle::trace_df(xm, penalty_mat(p), lambda, DemmlerReinsch::default_ridge))
                  .epsilon(1e-8));
    }
}
