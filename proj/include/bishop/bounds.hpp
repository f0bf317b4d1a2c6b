#pragma once
// Float scans of the norm-bound families over a λ grid.

#include "bishop/blocksys.hpp"
#include "bishop/poly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace bishop {

struct BoundFamily {
    std::string name;
    double limit = 0;
    double max = 0;
    std::vector<double> worst_lambda;
    std::string worst_where;  // indices attaining the max
    bool pass() const { return max < limit; }
};

struct BoundReport {
    int N = 0;
    int pmax = 0;
    double step = 0;
    long grid_points = 0;
    std::vector<BoundFamily> families;
    // auxiliary: per-coordinate reading of the ratio products
    std::vector<BoundFamily> aux;
    bool all_pass() const {
        for (auto& f : families)
            if (!f.pass()) return false;
        return true;
    }
};

namespace detail {

inline double den_r(int i, int j, double l) { return (j + 1.0) * (i + 1) + ((j + 1.0) * (j + 2) + (i + 1.0) * (i + 2)) * l * l; }
inline double den_s(int i, int j, double l, int N, double S) {
    return double(j) * i + ((j - 1.0) * j + (i - 1.0) * i) * l * l + (i + j + 1.0) * (1 + 4 * l * l) + N + 4 * S;
}

enum class Ratio { U2, D2, U1, D1 };

// off-diagonal over diagonal entry ratios, both column families
inline double ratio_at(Ratio kind, int i, int j, double l, int N, double S) {
    double a = 0, b = 0;
    switch (kind) {
        case Ratio::U2: a = (j + 1.0) * (j + 2) * l * l; b = (j - 1.0) * j * l * l; break;
        case Ratio::D2: a = (i + 1.0) * (i + 2) * l * l; b = (i - 1.0) * i * l * l; break;
        case Ratio::U1: a = l * ((j + 1.0) * (j + 2) + (i + 1.0) * (j + 1)); b = l * (4.0 * j + (j - 1.0) * j + double(i) * j); break;
        case Ratio::D1: a = l * ((i + 1.0) * (i + 2) + (i + 1.0) * (j + 1)); b = l * (4.0 * i + (i - 1.0) * i + double(i) * j); break;
    }
    return std::max(a / den_r(i, j, l), b / den_s(i, j, l, N, S));
}

inline double ratio(Ratio kind, const MultiIndex& I, const MultiIndex& J, const std::vector<double>& lam, int coord) {
    const int N = int(I.size());
    double S = 0;
    for (double x : lam) S += x * x;
    double m = 0;
    for (int c = 0; c < N; ++c)
        if (coord < 0 || c == coord) m = std::max(m, ratio_at(kind, I[c], J[c], lam[c], N, S));
    return m;
}

inline std::vector<MultiIndex> shifted_down(const MultiIndex& V, int s) {
    std::vector<MultiIndex> out;
    for (auto& a : compositions(s, int(V.size()))) {
        MultiIndex r(V.size());
        bool ok = true;
        for (size_t i = 0; i < V.size(); ++i) {
            r[i] = V[i] - a[i];
            if (r[i] < 0) ok = false;
        }
        if (ok) out.push_back(r);
    }
    return out;
}
inline std::vector<MultiIndex> shifted_up(const MultiIndex& V, int s) {
    std::vector<MultiIndex> out;
    for (auto& a : compositions(s, int(V.size()))) {
        MultiIndex r(V.size());
        for (size_t i = 0; i < V.size(); ++i) r[i] = V[i] + a[i];
        out.push_back(r);
    }
    return out;
}

inline std::string ij_string(const MultiIndex& I, const MultiIndex& J) {
    std::string s = "I=(";
    for (size_t i = 0; i < I.size(); ++i) s += (i ? "," : "") + std::to_string(I[i]);
    s += ") J=(";
    for (size_t i = 0; i < J.size(); ++i) s += (i ? "," : "") + std::to_string(J[i]);
    return s + ")";
}

inline void bump(BoundFamily& f, double v, const std::vector<double>& lam, const std::string& where) {
    if (v > f.max) {
        f.max = v;
        f.worst_lambda = lam;
        f.worst_where = where;
    }
}

inline Eigen::MatrixXd to_eigen(const Mat<double>& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
    return e;
}

inline double norm2(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

}  // namespace detail

// ‖M22^{-1} M21 M11^{-1} M12‖ over the first two z̄-degree blocks of the degree-(p-2) operator
inline double bound_schur(int p, const BishopData& b) {
    const int q = p - 2;
    if (q < 1) return 0;
    auto basis = bidegree_basis(q, b.N);
    basis.resize(2);
    auto blk = operator_blocks<double>(q, b, basis, 1);
    auto get = [&](int k, int l) {
        auto it = blk.find({k, l});
        return it == blk.end() ? Eigen::MatrixXd::Zero(basis[k].size(), basis[l].size()).eval() : detail::to_eigen(it->second);
    };
    Eigen::MatrixXd M11 = get(0, 0), M12 = get(0, 1), M21 = get(1, 0), M22 = get(1, 1);
    Eigen::MatrixXd X = M22.partialPivLu().solve(M21) * M11.partialPivLu().solve(M12);
    return detail::norm2(X);
}

// max over ± of ‖(D^{-1}(G ± H))^{-1}‖ with G_IJ = <C_I, C_J>, H_IJ = <bar C_I, C_J>, D = diag G
inline double bound_gram(int p, const BishopData& b) {
    const int N = b.N, q = p - 2, nv = 2 * N;
    const MultiIndex zero(N, 0);
    auto Is = compositions(p, N);
    const int n = int(Is.size());
    std::vector<double> lam(N);
    for (int k = 0; k < N; ++k) lam[k] = b.lambda[k].get_d();
    // only the parity classes reached by tr z^I are factorized
    std::map<int, std::vector<Key>> cls;
    std::map<int, bool> need;
    for (auto& I : Is) need[parity_signature(make_key(I, zero), N)] = true;
    for (Key k : monomials_of_degree(q, N)) {
        int sig = parity_signature(k, N);
        if (need.count(sig)) cls[sig].push_back(k);
    }
    std::map<int, Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
    std::map<Key, std::pair<int, int>> where;
    for (auto& [sig, keys] : cls) {
        for (size_t i = 0; i < keys.size(); ++i) where[keys[i]] = {sig, int(i)};
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(keys.size(), keys.size());
        for (size_t j = 0; j < keys.size(); ++j) {
            auto col = trace_times_q<cd>(keys[j], b, Kind::conjugate, q);
            for (auto& [key, c] : col.t) M(where.at(key).second, j) = c.real();
        }
        lu.emplace(sig, M.partialPivLu());
    }
    // (A·Q) at z^J and z̄^J only sees the λ_k z_k², λ_k z̄_k² terms of Q
    Eigen::MatrixXd Ch = Eigen::MatrixXd::Identity(n, n), Ca = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Poly<cd> zi = monomial<cd>(N, Kind::conjugate, Is[i], zero);
        auto t = trace(zi, b);
        if (t.empty()) continue;
        const int sig = parity_signature(make_key(Is[i], zero), N);
        auto& keys = cls.at(sig);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(keys.size());
        for (auto& [key, c] : t.t) rhs(where.at(key).second) = c.real();
        Eigen::VectorXd a = lu.at(sig).solve(rhs);
        auto coef = [&](const MultiIndex& I, const MultiIndex& J) {
            auto it = where.find(make_key(I, J));
            return it == where.end() || it->second.first != sig ? 0.0 : a(it->second.second);
        };
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < N; ++k) {
                if (Is[j][k] < 2 || lam[k] == 0) continue;
                MultiIndex L = Is[j];
                L[k] -= 2;
                Ch(i, j) -= lam[k] * coef(L, zero);
                Ca(i, j) -= lam[k] * coef(zero, L);
            }
    }
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) w(j) = key_factorial(make_key(Is[j], zero), nv).get_d();
    // <C_I, C_J> = <C_I, z^J> and <bar C_I, C_J> = <bar C_I, z^J>
    Eigen::MatrixXd G = Ch * w.asDiagonal(), H = Ca * w.asDiagonal();
    Eigen::VectorXd dinv = G.diagonal().cwiseInverse();
    double worst = 0;
    for (int s : {1, -1}) {
        Eigen::MatrixXd X = dinv.asDiagonal() * (G + double(s) * H);
        worst = std::max(worst, detail::norm2(X.inverse()));
    }
    return worst;
}

// λ vectors on the grid k·step in [0, hi], sorted descending (permutation representatives)
inline std::vector<std::vector<double>> lambda_grid(int N, double step, double hi) {
    std::vector<double> vals;
    for (int k = 0; k * step <= hi + 1e-12; ++k) vals.push_back(k * step);
    std::vector<std::vector<double>> out;
    std::vector<int> idx(N, 0);
    std::function<void(int, int)> rec = [&](int pos, int maxi) {
        if (pos == N) {
            std::vector<double> l(N);
            for (int i = 0; i < N; ++i) l[i] = vals[idx[i]];
            out.push_back(l);
            return;
        }
        for (int i = maxi; i >= 0; --i) {
            idx[pos] = i;
            rec(pos + 1, i);
        }
    };
    rec(0, int(vals.size()) - 1);
    return out;
}

inline BishopData bishop_from_doubles(const std::vector<double>& lam) {
    std::vector<mpq_class> q;
    for (double x : lam) {
        // grid values are multiples of 1/1000 at most
        mpq_class v(long(std::lround(x * 1000)), 1000);
        v.canonicalize();
        q.push_back(v);
    }
    return BishopData(q);
}

namespace detail {

// ratio_at tabulated per coordinate for one λ: t[kind][c][i][j], i, j <= m
struct RatioTable {
    int N = 0, m = 0;
    std::vector<double> t;
    RatioTable(const std::vector<double>& lam, int m_) : N(int(lam.size())), m(m_), t(size_t(4) * N * (m + 1) * (m + 1)) {
        double S = 0;
        for (double x : lam) S += x * x;
        for (int k = 0; k < 4; ++k)
            for (int c = 0; c < N; ++c)
                for (int i = 0; i <= m; ++i)
                    for (int j = 0; j <= m; ++j) at(Ratio(k), c, i, j) = ratio_at(Ratio(k), i, j, lam[c], N, S);
    }
    double& at(Ratio k, int c, int i, int j) { return t[((size_t(k) * N + c) * (m + 1) + i) * (m + 1) + j]; }
    double get(Ratio k, const int* I, const int* J, int coord) const {
        double r = 0;
        for (int c = 0; c < N; ++c)
            if (coord < 0 || c == coord) r = std::max(r, t[((size_t(k) * N + c) * (m + 1) + I[c]) * (m + 1) + J[c]]);
        return r;
    }
};

}  // namespace detail

// Ratio families, Schur and Gram bounds over the grid; index sums |I|+|J| <= pmax.
inline BoundReport bound_report(int N, int pmax, double step, double hi = 0.45) {
    BoundReport rep;
    rep.N = N;
    rep.pmax = pmax;
    rep.step = step;
    BoundFamily v1{"step2", 1.0 / 7}, v2{"step1", 0.5}, v3{"mixed", 0.25}, fschur{"schur", 0.5}, fgram{"gram_inverse", 2.0};
    BoundFamily a1{"step2_coordwise", 1.0 / 7}, a2{"step1_coordwise", 0.5}, a3{"mixed_coordwise", 0.25};
    using detail::Ratio;
    auto grid = lambda_grid(N, step, hi);
    rep.grid_points = long(grid.size());
    const auto e1 = compositions(1, N), e2 = compositions(2, N);
    // (I, J) pairs with 2 <= |I|+|J| <= pmax
    std::vector<std::pair<MultiIndex, MultiIndex>> pairs;
    for (int p = 2; p <= pmax; ++p)
        for (int bdeg = 0; bdeg <= p; ++bdeg)
            for (auto& I : compositions(p - bdeg, N))
                for (auto& J : compositions(bdeg, N)) pairs.emplace_back(I, J);
    MultiIndex Is(N), Js(N);
    for (auto& lam : grid) {
        detail::RatioTable tab(lam, pmax + 2);
        for (auto& [I, J] : pairs)
            for (int c = -1; c < N; ++c) {
                if (c >= 0 && N == 1) break;
                BoundFamily& t1 = c < 0 ? v1 : a1;
                BoundFamily& t2 = c < 0 ? v2 : a2;
                BoundFamily& t3 = c < 0 ? v3 : a3;
                double m1 = 0, m2 = 0, m3 = 0;
                const double u2 = tab.get(Ratio::U2, I.data(), J.data(), c), u1 = tab.get(Ratio::U1, I.data(), J.data(), c);
                for (auto& a : e2) {
                    bool ok = true;
                    for (int k = 0; k < N; ++k) ok = ok && (Is[k] = I[k] - a[k]) >= 0;
                    if (!ok) continue;
                    for (auto& bb : e2) {
                        for (int k = 0; k < N; ++k) Js[k] = J[k] + bb[k];
                        m1 = std::max(m1, u2 * tab.get(Ratio::D2, Is.data(), Js.data(), c));
                    }
                }
                for (auto& a : e1) {
                    bool ok = true;
                    for (int k = 0; k < N; ++k) ok = ok && (Is[k] = I[k] - a[k]) >= 0;
                    if (!ok) continue;
                    for (auto& bb : e1) {
                        for (int k = 0; k < N; ++k) Js[k] = J[k] + bb[k];
                        m2 = std::max(m2, u1 * tab.get(Ratio::D1, Is.data(), Js.data(), c));
                        m3 = std::max(m3, tab.get(Ratio::U1, Is.data(), Js.data(), c) * u2);
                    }
                }
                m3 = std::max(m3, tab.get(Ratio::D2, I.data(), J.data(), c) * tab.get(Ratio::D1, I.data(), J.data(), c));
                if (m1 > t1.max) detail::bump(t1, m1, lam, detail::ij_string(I, J));
                if (m2 > t2.max) detail::bump(t2, m2, lam, detail::ij_string(I, J));
                if (m3 > t3.max) detail::bump(t3, m3, lam, detail::ij_string(I, J));
            }
        auto b = bishop_from_doubles(lam);
        for (int p = 3; p <= pmax; ++p) {
            detail::bump(fschur, bound_schur(p, b), lam, "p=" + std::to_string(p));
            detail::bump(fgram, bound_gram(p, b), lam, "p=" + std::to_string(p));
        }
    }
    rep.families = {v1, v2, v3, fschur, fgram};
    if (N > 1) rep.aux = {a1, a2, a3};
    return rep;
}

// entrywise ratio bound a_ij / b_ij < x against ‖A B^{-1}‖ on random positive pairs;
// returns the fraction of samples where the norm stays below x
inline double ratio_lemma_probe(int n, int samples, unsigned seed, double* worst = nullptr) {
    std::mt19937_64 rng(seed);
    auto U = [](std::mt19937_64& g) { return 0.05 + 0.95 * double(g() >> 11) * 0x1.0p-53; };
    int ok = 0;
    double w = 0;
    for (int s = 0; s < samples; ++s) {
        Eigen::MatrixXd A(n, n), B(n, n);
        double x = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                B(i, j) = U(rng);
                A(i, j) = U(rng) * B(i, j);
                x = std::max(x, A(i, j) / B(i, j));
            }
        x *= 1.0 + 1e-12;
        if (std::abs(B.determinant()) < 1e-9) continue;
        double r = detail::norm2(A * B.inverse()) / x;
        w = std::max(w, r);
        if (r < 1) ++ok;
    }
    if (worst) *worst = w;
    return double(ok) / samples;
}

}  // namespace bishop
