#pragma once
// Dense matrices and Gauss-Jordan elimination over exact or float fields.

#include "bishop/scalar.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace bishop {

template <class F> struct field_traits;
template <> struct field_traits<mpq_class> { static constexpr bool exact = true; };
template <> struct field_traits<Gq> { static constexpr bool exact = true; };
template <> struct field_traits<double> { static constexpr bool exact = false; };
template <> struct field_traits<cd> { static constexpr bool exact = false; };

template <class F>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<F> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(size_t(r) * c) {}
    F& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
    const F& operator()(int i, int j) const { return a[size_t(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = F(1);
        return m;
    }
    friend bool operator==(const Mat& x, const Mat& y) { return x.rows == y.rows && x.cols == y.cols && x.a == y.a; }
};

template <class F>
Mat<F> matmul(const Mat<F>& x, const Mat<F>& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul shape");
    Mat<F> r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const F& v = x(i, k);
            if (is_zero(v)) continue;
            for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

template <class F, class V>
std::vector<V> matvec(const Mat<F>& x, const std::vector<V>& v) {
    if (int(v.size()) != x.cols) throw std::invalid_argument("matvec shape");
    std::vector<V> r(x.rows);
    for (int i = 0; i < x.rows; ++i) {
        V s{};
        for (int j = 0; j < x.cols; ++j) {
            const F& c = x(i, j);
            if (is_zero(c) || is_zero(v[j])) continue;
            s += v[j] * c;
        }
        r[i] = s;
    }
    return r;
}

template <class F>
Mat<F> operator-(const Mat<F>& x, const Mat<F>& y) {
    Mat<F> r = x;
    for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
    return r;
}

// Reduced row echelon form with the accumulated left transform: E * A = R.
template <class F>
struct Elimination {
    Mat<F> E;
    Mat<F> R;
    std::vector<int> pivot_cols;  // pivot column of row i, i < rank
    int rank = 0;
    double tol = 0;
};

template <class F>
Elimination<F> eliminate(const Mat<F>& A, double tol = 1e-12, bool keep_transform = true) {
    Elimination<F> el;
    el.R = A;
    el.tol = tol;
    const int m = A.rows, n = A.cols;
    if (keep_transform) el.E = Mat<F>::identity(m);
    auto& R = el.R;
    double scale = 0;
    if constexpr (!field_traits<F>::exact)
        for (auto& v : A.a) scale = std::max(scale, magnitude(v));
    int row = 0;
    for (int col = 0; col < n && row < m; ++col) {
        int piv = -1;
        if constexpr (field_traits<F>::exact) {
            for (int i = row; i < m; ++i)
                if (!is_zero(R(i, col))) {
                    piv = i;
                    break;
                }
        } else {
            double best = tol * std::max(scale, 1.0);
            for (int i = row; i < m; ++i)
                if (magnitude(R(i, col)) > best) {
                    best = magnitude(R(i, col));
                    piv = i;
                }
        }
        if (piv < 0) continue;
        if (piv != row) {
            for (int j = 0; j < n; ++j) std::swap(R(piv, j), R(row, j));
            if (keep_transform)
                for (int j = 0; j < m; ++j) std::swap(el.E(piv, j), el.E(row, j));
        }
        F inv = F(1) / R(row, col);
        for (int j = col; j < n; ++j) R(row, j) *= inv;
        if (keep_transform)
            for (int j = 0; j < m; ++j) el.E(row, j) *= inv;
        for (int i = 0; i < m; ++i) {
            if (i == row || is_zero(R(i, col))) continue;
            F f = R(i, col);
            for (int j = col; j < n; ++j)
                if (!is_zero(R(row, j))) R(i, j) -= f * R(row, j);
            if (keep_transform)
                for (int j = 0; j < m; ++j)
                    if (!is_zero(el.E(row, j))) el.E(i, j) -= f * el.E(row, j);
            if constexpr (!field_traits<F>::exact) R(i, col) = F(0);
        }
        el.pivot_cols.push_back(col);
        ++row;
    }
    el.rank = row;
    return el;
}

// Solve A x = b using a stored elimination; free variables are set to zero.
// Returns nullopt when the system is inconsistent.
template <class F, class V>
std::optional<std::vector<V>> solve_with(const Elimination<F>& el, const std::vector<V>& b, double* residual = nullptr) {
    std::vector<V> y = matvec(el.E, b);
    double worst = 0;
    for (int i = el.rank; i < int(y.size()); ++i) worst = std::max(worst, magnitude(y[i]));
    if (residual) *residual = worst;
    if constexpr (field_traits<F>::exact) {
        if (worst != 0) return std::nullopt;
    } else {
        double bn = 0;
        for (auto& v : b) bn = std::max(bn, magnitude(v));
        if (worst > 1e-8 * std::max(1.0, bn)) return std::nullopt;
    }
    std::vector<V> x(el.R.cols);
    for (int i = 0; i < el.rank; ++i) x[el.pivot_cols[i]] = y[i];
    return x;
}

template <class F>
std::optional<Mat<F>> inverse(const Mat<F>& A) {
    if (A.rows != A.cols) throw std::invalid_argument("inverse of non-square matrix");
    auto el = eliminate(A);
    if (el.rank < A.rows) return std::nullopt;
    return el.E;
}

template <class F>
std::optional<std::vector<F>> solve(const Mat<F>& A, const std::vector<F>& b) {
    auto el = eliminate(A);
    if (el.rank < A.cols) return std::nullopt;
    return solve_with(el, b);
}

// basis of {x : A x = 0}
template <class F>
std::vector<std::vector<F>> nullspace(const Mat<F>& A, double tol = 1e-10) {
    auto el = eliminate(A, tol, false);
    std::vector<char> is_piv(A.cols, 0);
    for (int c : el.pivot_cols) is_piv[c] = 1;
    std::vector<std::vector<F>> out;
    for (int f = 0; f < A.cols; ++f) {
        if (is_piv[f]) continue;
        std::vector<F> x(A.cols);
        x[f] = F(1);
        for (int i = 0; i < el.rank; ++i) x[el.pivot_cols[i]] = -el.R(i, f);
        out.push_back(std::move(x));
    }
    return out;
}

template <class F>
int rank_of(const Mat<F>& A, double tol = 1e-10) {
    return eliminate(A, tol, false).rank;
}

}  // namespace bishop
