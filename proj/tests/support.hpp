#pragma once
// Shared test helpers: an independent dense rational solver and small
// builders for polynomials given as coefficient rows.

#include "bishop/random.hpp"

#include <optional>
#include <string>
#include <vector>

namespace testing_support {

using namespace bishop;

// Gauss-Jordan over Q with first-nonzero pivoting; no shared code with linalg.hpp
inline std::optional<std::vector<mpq_class>> dense_solve(std::vector<std::vector<mpq_class>> A, std::vector<mpq_class> b) {
    const size_t n = A.size();
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < n && A[piv][c] == 0) ++piv;
        if (piv == n) return std::nullopt;
        std::swap(A[piv], A[c]);
        std::swap(b[piv], b[c]);
        for (size_t r = 0; r < n; ++r) {
            if (r == c || A[r][c] == 0) continue;
            mpq_class f = A[r][c] / A[c][c];
            for (size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    for (size_t i = 0; i < n; ++i) b[i] /= A[i][i];
    return b;
}

struct Row {
    MultiIndex I, J;
    std::string re, im = "0";
};

inline Poly<Gq> from_rows(int N, int deg, const std::vector<Row>& rows) {
    Poly<Gq> p(N, Kind::conjugate, deg);
    for (auto& r : rows) p.add(make_key(r.I, r.J), Gq(q_from_string(r.re), q_from_string(r.im)));
    return p;
}

inline BishopData bishop_q(std::vector<std::string> lam) {
    std::vector<mpq_class> v;
    for (auto& s : lam) v.push_back(q_from_string(s));
    return BishopData(v);
}

inline std::vector<mpq_class> random_lambda(int N, Rng& g) {
    std::vector<mpq_class> v;
    for (int i = 0; i < N; ++i) v.push_back(rand_lambda(g));
    return v;
}

}  // namespace testing_support
