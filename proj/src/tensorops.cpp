#include "fastr/tensorops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fastr/errors.hpp"

namespace fastr {

namespace {

std::string shape(ConstMatrixView m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_square(ConstMatrixView s, const char* op) {
    if (s.rows != s.cols) {
        throw DimensionError(std::string(op) + ": expected a square matrix, got " + shape(s));
    }
}

} // namespace

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("from_rows: ragged initializer");
        std::copy(row.begin(), row.end(), m.row(i++).begin());
    }
    return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_view(ConstMatrixView v, std::pmr::memory_resource* mr) {
    DenseMatrix m(v.rows, v.cols, mr);
    std::copy(v.data.begin(), v.data.begin() + v.rows * v.cols, m.data().begin());
    return m;
}

DenseMatrix rwtp(ConstMatrixView a, ConstMatrixView b, std::pmr::memory_resource* mr) {
    if (a.rows != b.rows) {
        throw DimensionError("rwtp: row counts differ (" + shape(a) + " vs " + shape(b) + ")");
    }
    const std::size_t p = a.cols;
    const std::size_t q = b.cols;
    DenseMatrix out(a.rows, p * q, mr);
    for (std::size_t n = 0; n < a.rows; ++n) {
        auto ar = a.row(n);
        auto br = b.row(n);
        auto o = out.row(n);
        for (std::size_t j = 0; j < p; ++j) {
            const double aj = ar[j];
            for (std::size_t k = 0; k < q; ++k) o[j * q + k] = aj * br[k];
        }
    }
    return out;
}

Vector row_dot(ConstMatrixView a, ConstMatrixView b, std::pmr::memory_resource* mr) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw DimensionError("row_dot: shapes differ (" + shape(a) + " vs " + shape(b) + ")");
    }
    Vector out(a.rows, 0.0, mr);
    for (std::size_t n = 0; n < a.rows; ++n) {
        auto ar = a.row(n);
        auto br = b.row(n);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += ar[j] * br[j];
        out[n] = s;
    }
    return out;
}

DenseMatrix cholesky(ConstMatrixView s) {
    require_square(s, "cholesky");
    const std::size_t n = s.rows;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(s(i, i)));
    DenseMatrix r(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = s(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= r(k, j) * r(k, j);
        if (!(d > 1e-14 * scale) || !std::isfinite(d)) {
            throw NotPositiveDefiniteError("cholesky: non-positive pivot " + std::to_string(d) +
                                           " at index " + std::to_string(j));
        }
        const double rjj = std::sqrt(d);
        r(j, j) = rjj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = s(j, i);
            for (std::size_t k = 0; k < j; ++k) v -= r(k, j) * r(k, i);
            r(j, i) = v / rjj;
        }
    }
    return r;
}

SymmetricEigen sym_eigen(ConstMatrixView s) {
    require_square(s, "sym_eigen");
    const std::size_t n = s.rows;
    const double norm = frobenius_norm(s);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(s(i, j) - s(j, i)) > 1e-10 * std::max(norm, 1.0)) {
                throw ContractError("sym_eigen: input is not symmetric at (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
            }
        }
    }

    DenseMatrix a = DenseMatrix::from_view(s);
    DenseMatrix v = DenseMatrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (std::sqrt(off) <= 1e-15 * std::max(norm, 1e-300)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    SymmetricEigen out{std::vector<double>(n), DenseMatrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

DenseMatrix matmul(ConstMatrixView a, ConstMatrixView b, std::pmr::memory_resource* mr) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: inner dimensions differ (" + shape(a) + " * " + shape(b) + ")");
    }
    DenseMatrix out(a.rows, b.cols, mr);
    for (std::size_t i = 0; i < a.rows; ++i) {
        auto o = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto br = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) o[j] += aik * br[j];
        }
    }
    return out;
}

DenseMatrix transpose(ConstMatrixView a) {
    DenseMatrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

DenseMatrix gram(ConstMatrixView a, std::pmr::memory_resource* mr) {
    DenseMatrix out(a.cols, a.cols, mr);
    for (std::size_t n = 0; n < a.rows; ++n) {
        auto r = a.row(n);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double ri = r[i];
            if (ri == 0.0) continue;
            for (std::size_t j = i; j < a.cols; ++j) out(i, j) += ri * r[j];
        }
    }
    for (std::size_t i = 0; i < a.cols; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

std::vector<double> matvec(ConstMatrixView a, std::span<const double> x) {
    if (a.cols != x.size()) throw DimensionError("matvec: size mismatch");
    std::vector<double> out(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        auto r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += r[j] * x[j];
        out[i] = s;
    }
    return out;
}

DenseMatrix invert_upper(ConstMatrixView r) {
    require_square(r, "invert_upper");
    const std::size_t n = r.rows;
    DenseMatrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        inv(j, j) = 1.0 / r(j, j);
        for (std::size_t ii = j; ii-- > 0;) {
            double s = 0.0;
            for (std::size_t k = ii + 1; k <= j; ++k) s += r(ii, k) * inv(k, j);
            inv(ii, j) = -s / r(ii, ii);
        }
    }
    return inv;
}

std::vector<double> solve_spd(ConstMatrixView s, std::span<const double> rhs) {
    if (rhs.size() != s.rows) throw DimensionError("solve_spd: size mismatch");
    const DenseMatrix r = cholesky(s);
    const std::size_t n = s.rows;
    // R^T z = rhs
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) v -= r(k, i) * z[k];
        z[i] = v / r(i, i);
    }
    // R x = z
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double v = z[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= r(i, k) * x[k];
        x[i] = v / r(i, i);
    }
    return x;
}

double frobenius_norm(ConstMatrixView a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows * a.cols; ++i) s += a.data[i] * a.data[i];
    return std::sqrt(s);
}

double max_abs(ConstMatrixView a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows * a.cols; ++i) m = std::max(m, std::abs(a.data[i]));
    return m;
}

} // namespace fastr
