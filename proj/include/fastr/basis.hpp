#pragma once

#include <cstddef>
#include <memory_resource>
#include <span>
#include <vector>

#include "fastr/tensorops.hpp"

namespace fastr {

/// Clamped B-spline basis of a given degree over [t_min, t_max] with
/// equidistant interior knots. Boundary knots are replicated degree+1 times.
class SplineBasis {
public:
    /// Build directly from a full knot vector (used when loading a model).
    SplineBasis(int degree, std::vector<double> knots);

    int degree() const noexcept { return degree_; }
    std::size_t num_basis() const noexcept { return knots_.size() - degree_ - 1; }
    std::size_t interior_knot_count() const noexcept { return num_basis() - degree_ - 1; }
    const std::vector<double>& knots() const noexcept { return knots_; }
    double t_min() const noexcept { return knots_[degree_]; }
    double t_max() const noexcept { return knots_[knots_.size() - degree_ - 1]; }

    /// One row per entry of t. Values outside the domain are clamped to it.
    DenseMatrix evaluate(std::span<const double> t,
                         std::pmr::memory_resource* mr = std::pmr::get_default_resource()) const;

    /// Write B_1(t)..B_L(t) into out (size L).
    void evaluate_row(double t, std::span<double> out) const;

    /// Index of the first of the degree+1 basis functions that may be nonzero at t.
    std::size_t first_active(double t) const;

private:
    std::size_t find_span(double t) const;

    int degree_;
    std::vector<double> knots_;
};

/// Basis with num_basis functions spanning [min(values), max(values)].
SplineBasis build_basis(std::span<const double> values, std::size_t num_basis, int degree = 3);

struct PenaltyMatrix {
    int order = 0;
    std::size_t nullspace_dim = 0;
    DenseMatrix matrix;
};

/// D_d^T D_d with D_d the (L-d) x L order-d difference operator.
PenaltyMatrix difference_penalty(std::size_t num_basis, int order);

/// Kronecker-sum penalty a (x) I + I (x) b for tensor-product smooths, with
/// coefficients ordered as w[j * Lb + k].
PenaltyMatrix kronecker_sum_penalty(const PenaltyMatrix& a, const PenaltyMatrix& b);

/// Effective degrees of freedom of a penalized smoother as a function of the
/// smoothing parameter, in Demmler-Reinsch form:
///   df(lambda) = sum_j a_j / (1 + lambda * s_j)
/// where s_j are eigenvalues of R^-T P R^-1 with R^T R = X^T X + ridge * I,
/// and a_j = 1 - ridge * |R^-1 u_j|^2 makes df equal the exact trace
/// tr(X (X^T X + ridge I + lambda P)^-1 X^T).
class DemmlerReinsch {
public:
    static constexpr double default_ridge = 1e-8;

    DemmlerReinsch(ConstMatrixView cross_product, ConstMatrixView penalty,
                   double ridge = default_ridge);

    double df(double lambda) const;
    /// df at lambda = 0.
    double df_max() const { return df(0.0); }
    /// Limit of df as lambda grows without bound.
    double df_min() const;

    const std::vector<double>& eigenvalues() const noexcept { return s_; }
    double max_eigenvalue() const;
    double min_positive_eigenvalue() const;

private:
    std::vector<double> s_;
    std::vector<double> a_;
};

struct LambdaSolution {
    double lambda = 0.0;
    bool at_upper_bound = false;
};

/// lambda such that mean_k curves[k].df(lambda) == df (monotone bisection on log lambda).
LambdaSolution solve_mean_df(std::span<const DemmlerReinsch> curves, double df,
                             std::size_t nullspace_dim);

/// lambda for a single design/penalty pair.
LambdaSolution df_to_lambda(ConstMatrixView design, const PenaltyMatrix& penalty, double df);

} // namespace fastr
