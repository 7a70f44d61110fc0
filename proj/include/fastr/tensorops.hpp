#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory_resource>
#include <span>
#include <vector>

namespace fastr {

using Vector = std::pmr::vector<double>;

/// Read-only row-major view of a matrix stored elsewhere.
struct ConstMatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

/// Dense row-major matrix of doubles. Storage comes from a pmr resource so
/// batch-scoped matrices can be accounted for by a MemoryTracker.
class DenseMatrix {
public:
    explicit DenseMatrix(std::pmr::memory_resource* mr = std::pmr::get_default_resource())
        : data_(mr) {}
    DenseMatrix(std::size_t rows, std::size_t cols,
                std::pmr::memory_resource* mr = std::pmr::get_default_resource())
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0, mr) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_view(ConstMatrixView v,
                                 std::pmr::memory_resource* mr = std::pmr::get_default_resource());

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    ConstMatrixView view() const noexcept { return {data_, rows_, cols_}; }
    operator ConstMatrixView() const noexcept { return view(); }

    std::pmr::memory_resource* resource() const noexcept { return data_.get_allocator().resource(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

/// Row-wise tensor product: row n of the result is kron(a[n,:], b[n,:]),
/// so result(n, j*q + k) = a(n,j) * b(n,k).
DenseMatrix rwtp(ConstMatrixView a, ConstMatrixView b,
                 std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// Row-wise Hadamard-sum product: result[n] = sum_j a(n,j) * b(n,j).
Vector row_dot(ConstMatrixView a, ConstMatrixView b,
               std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// Upper-triangular R with R^T R = s.
DenseMatrix cholesky(ConstMatrixView s);

struct SymmetricEigen {
    std::vector<double> values;  // descending
    DenseMatrix vectors;         // column j is the eigenvector of values[j]
};

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
SymmetricEigen sym_eigen(ConstMatrixView s);

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b,
                   std::pmr::memory_resource* mr = std::pmr::get_default_resource());
DenseMatrix transpose(ConstMatrixView a);
/// a^T a
DenseMatrix gram(ConstMatrixView a, std::pmr::memory_resource* mr = std::pmr::get_default_resource());
/// a * x for a vector x
std::vector<double> matvec(ConstMatrixView a, std::span<const double> x);

/// Inverse of an upper-triangular matrix.
DenseMatrix invert_upper(ConstMatrixView r);
/// Solve s x = rhs for symmetric positive definite s.
std::vector<double> solve_spd(ConstMatrixView s, std::span<const double> rhs);

double frobenius_norm(ConstMatrixView a);
double max_abs(ConstMatrixView a);

} // namespace fastr
