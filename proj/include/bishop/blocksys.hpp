#pragma once
// Block form of A ↦ tr(A·Q): unknowns grouped by z̄-degree, which makes the
// operator pentadiagonal in blocks. Solved by banded block elimination.

#include "bishop/fischer.hpp"
#include "bishop/linalg.hpp"
#include "bishop/poly.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bishop {

struct SingularBlock : std::runtime_error {
    int block;
    SingularBlock(int b, const std::string& what) : std::runtime_error(what), block(b) {}
};

inline mpz_class binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), unsigned(n), unsigned(k));
    return r;
}

// number of monomials of bidegree (a, c) in N + N variables
inline long bidegree_count(int a, int c, int N) {
    return binomial(a + N - 1, N - 1).get_si() * binomial(c + N - 1, N - 1).get_si();
}

template <class R>
struct BlockSystem {
    int p = 0;  // degree of the decomposed polynomial
    int q = 0;  // degree of the unknown A = p - 2
    Flavor flavor = Flavor::G;
    std::vector<std::vector<Key>> basis;  // basis[b]: keys of z̄-degree b, ascending
    std::vector<int> dims;
    std::map<std::pair<int, int>, Mat<R>> blocks;  // only |k-l| <= 2 stored
    std::vector<std::vector<R>> rhs;

    int nblocks() const { return int(basis.size()); }
    const Mat<R>* block(int k, int l) const {
        auto it = blocks.find({k, l});
        return it == blocks.end() ? nullptr : &it->second;
    }
    Mat<R> full() const {
        std::vector<int> off(nblocks() + 1, 0);
        for (int k = 0; k < nblocks(); ++k) off[k + 1] = off[k] + dims[k];
        Mat<R> M(off.back(), off.back());
        for (auto& [kl, B] : blocks)
            for (int i = 0; i < B.rows; ++i)
                for (int j = 0; j < B.cols; ++j) M(off[kl.first] + i, off[kl.second] + j) = B(i, j);
        return M;
    }
    std::vector<R> full_rhs() const {
        std::vector<R> v;
        for (auto& r : rhs) v.insert(v.end(), r.begin(), r.end());
        return v;
    }
};

// degree-q keys grouped by z̄-degree
inline std::vector<std::vector<Key>> bidegree_basis(int q, int N) {
    std::vector<std::vector<Key>> out(q + 1);
    for (Key k : monomials_of_degree(q, N)) out[key_bar_degree(k, N)].push_back(k);
    return out;
}

// blocks (row z̄-degree rb, column z̄-degree cb) restricted to the wanted pairs
template <class R>
std::map<std::pair<int, int>, Mat<R>> operator_blocks(int q, const BishopData& b, const std::vector<std::vector<Key>>& basis,
                                                       int max_col_block = -1) {
    std::map<std::pair<int, int>, Mat<R>> out;
    const int nb = int(basis.size());
    std::vector<std::map<Key, int>> pos(nb);
    for (int k = 0; k < nb; ++k)
        for (size_t i = 0; i < basis[k].size(); ++i) pos[k][basis[k][i]] = int(i);
    const int last = max_col_block < 0 ? nb - 1 : std::min(nb - 1, max_col_block);
    for (int l = 0; l <= last; ++l)
        for (size_t j = 0; j < basis[l].size(); ++j) {
            auto col = trace_times_q<Gq>(basis[l][j], b, Kind::conjugate, q);
            for (auto& [key, c] : col.t) {
                int k = key_bar_degree(key, b.N);
                if (k >= nb) continue;
                auto it = out.find({k, l});
                if (it == out.end()) it = out.emplace(std::make_pair(k, l), Mat<R>(int(basis[k].size()), int(basis[l].size()))).first;
                it->second(pos[k].at(key), int(j)) = real_from_q<R>(c.re);
            }
        }
    return out;
}

template <class R>
BlockSystem<R> build_for(const Poly<Gq>& P, const BishopData& b, Flavor fl) {
    if (P.deg < 2) throw std::invalid_argument("build: degree must be >= 2");
    for (auto& [k, c] : P.t)
        if (c.im != 0) throw std::invalid_argument("build: target must have real coefficients");
    BlockSystem<R> s;
    s.p = P.deg;
    s.q = P.deg - 2;
    s.flavor = fl;
    s.basis = bidegree_basis(s.q, b.N);
    for (int k = 0; k <= s.q; ++k) s.dims.push_back(int(s.basis[k].size()));
    s.blocks = operator_blocks<R>(s.q, b, s.basis);
    s.rhs.resize(s.q + 1);
    for (int k = 0; k <= s.q; ++k) s.rhs[k].assign(s.dims[k], R(0));
    auto t = trace(P, b);
    for (auto& [key, c] : t.t) {
        int k = key_bar_degree(key, b.N);
        auto& B = s.basis[k];
        int i = int(std::lower_bound(B.begin(), B.end(), key) - B.begin());
        s.rhs[k][i] = real_from_q<R>(c.re);
    }
    return s;
}

// target z^I (G) with |I| = p
template <class R>
BlockSystem<R> build(int p, const MultiIndex& I, const BishopData& b) {
    if (int(I.size()) != b.N || index_abs(I) != p) throw std::invalid_argument("build: inadmissible target multi-index");
    return build_for<R>(monomial<Gq>(b.N, Kind::conjugate, I, MultiIndex(b.N, 0)), b, Flavor::G);
}

// target (z̄_l + 2λ_l z_l) z^J (F) with |J| = p - 1
template <class R>
BlockSystem<R> build(int p, int l, const MultiIndex& J, const BishopData& b) {
    if (l < 0 || l >= b.N || int(J.size()) != b.N || index_abs(J) != p - 1)
        throw std::invalid_argument("build: inadmissible target (l, J)");
    return build_for<R>(f_source<Gq>(l, J, b, Kind::conjugate), b, Flavor::F);
}

// Forward elimination of the sub-diagonal blocks, then back substitution.
// Division X / M_kk is X·M_kk^{-1}.
template <class R>
std::vector<std::vector<R>> solve_elimination(const BlockSystem<R>& s) {
    const int K = s.nblocks();
    std::vector<std::vector<Mat<R>>> M(K, std::vector<Mat<R>>(K));
    std::vector<std::vector<char>> has(K, std::vector<char>(K, 0));
    for (auto& [kl, B] : s.blocks) {
        if (std::abs(kl.first - kl.second) > 2) throw std::logic_error("block outside band");
        M[kl.first][kl.second] = B;
        has[kl.first][kl.second] = 1;
    }
    auto V = s.rhs;
    std::vector<Mat<R>> Dinv(K);
    for (int l = 0; l < K; ++l) {
        if (!has[l][l]) throw SingularBlock(l, "missing diagonal block " + std::to_string(l));
        auto inv = inverse(M[l][l]);
        if (!inv) throw SingularBlock(l, "singular pivot block " + std::to_string(l));
        Dinv[l] = std::move(*inv);
        for (int m = l + 1; m <= std::min(K - 1, l + 2); ++m) {
            if (!has[m][l]) continue;
            Mat<R> S = matmul(M[m][l], Dinv[l]);  // M_ml M_ll^{-1}
            for (int j = l + 1; j <= std::min(K - 1, l + 2); ++j) {
                if (!has[l][j]) continue;
                Mat<R> upd = matmul(S, M[l][j]);
                if (!has[m][j]) {
                    M[m][j] = Mat<R>(M[m][l].rows, M[l][j].cols);
                    has[m][j] = 1;
                }
                M[m][j] = M[m][j] - upd;
            }
            auto dv = matvec(S, V[l]);
            for (size_t i = 0; i < dv.size(); ++i) V[m][i] -= dv[i];
            has[m][l] = 0;
        }
    }
    std::vector<std::vector<R>> Y(K);
    for (int l = K - 1; l >= 0; --l) {
        auto r = V[l];
        for (int j = l + 1; j <= std::min(K - 1, l + 2); ++j) {
            if (!has[l][j]) continue;
            auto t = matvec(M[l][j], Y[j]);
            for (size_t i = 0; i < r.size(); ++i) r[i] -= t[i];
        }
        Y[l] = matvec(Dinv[l], r);
    }
    return Y;
}

// unknowns back in polynomial form
template <class S, class R>
Poly<S> solution_poly(const BlockSystem<R>& s, const std::vector<std::vector<R>>& Y, int N) {
    Poly<S> A(N, Kind::conjugate, s.q);
    for (int k = 0; k < s.nblocks(); ++k)
        for (size_t i = 0; i < Y[k].size(); ++i) {
            if constexpr (std::is_same_v<R, mpq_class>)
                A.add(s.basis[k][i], from_q<S>(Y[k][i]));
            else
                A.add(s.basis[k][i], S(Y[k][i]));
        }
    return A;
}

}  // namespace bishop
