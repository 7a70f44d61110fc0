#include "fastr/basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fastr/errors.hpp"

namespace fastr {

SplineBasis::SplineBasis(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
    if (degree_ < 0) throw ConfigError("spline degree must be >= 0");
    if (knots_.size() < 2 * static_cast<std::size_t>(degree_) + 2) {
        throw ConfigError("knot vector too short for degree " + std::to_string(degree_));
    }
    if (!std::is_sorted(knots_.begin(), knots_.end())) {
        throw ConfigError("knot vector must be non-decreasing");
    }
    if (!(t_max() > t_min())) throw ConfigError("spline domain is degenerate");
}

std::size_t SplineBasis::find_span(double t) const {
    const std::size_t last = num_basis() - 1;
    if (t >= t_max()) return last;
    // largest k in [degree, last] with knots[k] <= t
    auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + last + 1, t);
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

std::size_t SplineBasis::first_active(double t) const {
    t = std::clamp(t, t_min(), t_max());
    return find_span(t) - degree_;
}

void SplineBasis::evaluate_row(double t, std::span<double> out) const {
    if (!std::isfinite(t)) throw DataError("spline evaluation at non-finite value");
    std::fill(out.begin(), out.end(), 0.0);
    t = std::clamp(t, t_min(), t_max());
    const std::size_t span = find_span(t);
    const int p = degree_;

    // de Boor triangular scheme for the p+1 nonzero functions at t
    double n[32];
    double left[32];
    double right[32];
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = t - knots_[span + 1 - j];
        right[j] = knots_[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom == 0.0 ? 0.0 : n[r] / denom;
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    for (int j = 0; j <= p; ++j) out[span - p + j] = n[j];
}

DenseMatrix SplineBasis::evaluate(std::span<const double> t, std::pmr::memory_resource* mr) const {
    DenseMatrix out(t.size(), num_basis(), mr);
    for (std::size_t i = 0; i < t.size(); ++i) evaluate_row(t[i], out.row(i));
    return out;
}

SplineBasis build_basis(std::span<const double> values, std::size_t num_basis, int degree) {
    if (degree < 0 || degree > 30) throw ConfigError("spline degree must be in [0, 30]");
    if (num_basis <= static_cast<std::size_t>(degree)) {
        throw ConfigError("number of basis functions (" + std::to_string(num_basis) +
                          ") must exceed the degree (" + std::to_string(degree) + ")");
    }
    if (values.empty()) throw DataError("cannot build a spline basis from an empty column");
    double lo = values[0];
    double hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("spline basis input contains a non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw DataError("spline basis input is constant; domain is degenerate");

    const std::size_t interior = num_basis - degree - 1;
    std::vector<double> knots;
    knots.reserve(num_basis + degree + 1);
    for (int j = 0; j <= degree; ++j) knots.push_back(lo);
    const double h = (hi - lo) / static_cast<double>(interior + 1);
    for (std::size_t j = 1; j <= interior; ++j) knots.push_back(lo + h * static_cast<double>(j));
    for (int j = 0; j <= degree; ++j) knots.push_back(hi);
    return SplineBasis(degree, std::move(knots));
}

PenaltyMatrix difference_penalty(std::size_t num_basis, int order) {
    if (order < 1) throw ConfigError("difference penalty order must be >= 1");
    if (num_basis <= static_cast<std::size_t>(order)) {
        throw ConfigError("difference penalty needs more basis functions (" +
                          std::to_string(num_basis) + ") than its order (" +
                          std::to_string(order) + ")");
    }
    // Rows of D_d are the binomial stencil with alternating signs.
    std::vector<double> stencil{1.0};
    for (int k = 0; k < order; ++k) {
        std::vector<double> next(stencil.size() + 1, 0.0);
        for (std::size_t j = 0; j < stencil.size(); ++j) {
            next[j] -= stencil[j];
            next[j + 1] += stencil[j];
        }
        stencil = std::move(next);
    }
    DenseMatrix d(num_basis - order, num_basis);
    for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t j = 0; j < stencil.size(); ++j) d(r, r + j) = stencil[j];
    return PenaltyMatrix{order, static_cast<std::size_t>(order), gram(d)};
}

PenaltyMatrix kronecker_sum_penalty(const PenaltyMatrix& a, const PenaltyMatrix& b) {
    const std::size_t la = a.matrix.rows();
    const std::size_t lb = b.matrix.rows();
    DenseMatrix m(la * lb, la * lb);
    for (std::size_t i = 0; i < la; ++i)
        for (std::size_t j = 0; j < la; ++j)
            for (std::size_t k = 0; k < lb; ++k) m(i * lb + k, j * lb + k) += a.matrix(i, j);
    for (std::size_t i = 0; i < la; ++i)
        for (std::size_t k = 0; k < lb; ++k)
            for (std::size_t l = 0; l < lb; ++l) m(i * lb + k, i * lb + l) += b.matrix(k, l);
    return PenaltyMatrix{std::max(a.order, b.order), a.nullspace_dim * b.nullspace_dim,
                         std::move(m)};
}

DemmlerReinsch::DemmlerReinsch(ConstMatrixView cross_product, ConstMatrixView penalty,
                               double ridge) {
    if (cross_product.rows != cross_product.cols || penalty.rows != penalty.cols ||
        cross_product.rows != penalty.rows) {
        throw DimensionError("Demmler-Reinsch: cross product and penalty must be square and equal size");
    }
    const std::size_t n = cross_product.rows;
    DenseMatrix g = DenseMatrix::from_view(cross_product);
    for (std::size_t i = 0; i < n; ++i) g(i, i) += ridge;
    const DenseMatrix r_inv = invert_upper(cholesky(g));
    // S = R^-T P R^-1
    DenseMatrix s = matmul(transpose(r_inv), matmul(penalty, r_inv));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i) = 0.5 * (s(i, j) + s(j, i));
    SymmetricEigen eig = sym_eigen(s);
    const double scale = std::max(eig.values.empty() ? 0.0 : eig.values.front(), 0.0);

    s_.resize(n);
    a_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sj = eig.values[j];
        if (sj <= 1e-10 * scale) sj = 0.0;
        s_[j] = sj;
        // |R^-1 u_j|^2
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0.0;
            for (std::size_t k = i; k < n; ++k) v += r_inv(i, k) * eig.vectors(k, j);
            norm2 += v * v;
        }
        a_[j] = 1.0 - ridge * norm2;
    }
}

double DemmlerReinsch::df(double lambda) const {
    double total = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) total += a_[j] / (1.0 + lambda * s_[j]);
    return total;
}

double DemmlerReinsch::df_min() const {
    double total = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j)
        if (s_[j] == 0.0) total += a_[j];
    return total;
}

double DemmlerReinsch::max_eigenvalue() const {
    return s_.empty() ? 0.0 : *std::max_element(s_.begin(), s_.end());
}

double DemmlerReinsch::min_positive_eigenvalue() const {
    double m = 0.0;
    for (double s : s_)
        if (s > 0.0 && (m == 0.0 || s < m)) m = s;
    return m;
}

LambdaSolution solve_mean_df(std::span<const DemmlerReinsch> curves, double df,
                             std::size_t nullspace_dim) {
    if (curves.empty()) throw ConfigError("df_to_lambda: no smoother curves supplied");
    auto mean_df = [&](double lambda) {
        double s = 0.0;
        for (const auto& c : curves) s += c.df(lambda);
        return s / static_cast<double>(curves.size());
    };
    double s_max = 0.0;
    double s_min = 0.0;
    for (const auto& c : curves) {
        s_max = std::max(s_max, c.max_eigenvalue());
        const double m = c.min_positive_eigenvalue();
        if (m > 0.0 && (s_min == 0.0 || m < s_min)) s_min = m;
    }

    const double upper = mean_df(0.0);
    if (!std::isfinite(df) || df > upper + 1e-6) {
        throw InfeasibleDfError("df " + std::to_string(df) + " exceeds the attainable maximum " +
                                std::to_string(upper));
    }
    if (df < static_cast<double>(nullspace_dim) - 1e-6 || s_max == 0.0) {
        throw InfeasibleDfError("df " + std::to_string(df) +
                                " is below the penalty nullspace dimension " +
                                std::to_string(nullspace_dim));
    }

    double limit = 0.0;
    for (const auto& c : curves) limit += c.df_min();
    limit /= static_cast<double>(curves.size());

    double log_lo = std::log(1e-16 / s_max);
    double log_hi = std::log(1e12 / s_min);
    if (df >= mean_df(std::exp(log_lo))) return {0.0, false};
    if (df <= limit + 1e-6 || df <= mean_df(std::exp(log_hi))) return {std::exp(log_hi), true};

    for (int it = 0; it < 300 && log_hi - log_lo > 1e-13; ++it) {
        const double mid = 0.5 * (log_lo + log_hi);
        if (mean_df(std::exp(mid)) > df) {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    return {std::exp(0.5 * (log_lo + log_hi)), false};
}

LambdaSolution df_to_lambda(ConstMatrixView design, const PenaltyMatrix& penalty, double df) {
    if (design.cols != penalty.matrix.rows()) {
        throw DimensionError("df_to_lambda: design has " + std::to_string(design.cols) +
                             " columns but penalty is " + std::to_string(penalty.matrix.rows()) +
                             " wide");
    }
    const DemmlerReinsch curve(gram(design), penalty.matrix);
    return solve_mean_df(std::span<const DemmlerReinsch>(&curve, 1), df, penalty.nullspace_dim);
}

} // namespace fastr
