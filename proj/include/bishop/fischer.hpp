#pragma once
// Fischer decompositions P = A·Q + C (tr C = 0), iterated chains, the index
// sets S / T_k and the normalization generator families.

#include "bishop/linalg.hpp"
#include "bishop/poly.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace bishop {

template <class S>
struct DecompResult {
    Poly<S> A;
    Poly<S> C;
};

enum class Flavor { G, F };

template <class S>
struct FischerChain {
    std::vector<Poly<S>> P;  // P[0] = input, P[k+1] quotient of P[k]
    std::vector<Poly<S>> R;  // R[k] remainder of P[k], trace-free
    int depth = 0;
};

// Matrix of A ↦ tr(A·Q) on the degree-q coefficient space, split into the
// classes of the per-coordinate parity (i_k + j_k) mod 2 which it preserves.
template <class R>
struct TraceOperator {
    int q = 0;
    std::vector<Key> basis;                    // ascending keys of degree q
    std::map<Key, std::pair<int, int>> where;  // key -> (class, position)
    std::vector<std::vector<Key>> classes;
    std::vector<Mat<R>> inv;  // inverse per class
};

inline int parity_signature(Key k, int N) {
    int s = 0;
    for (int v = 0; v < N; ++v) s |= ((exp_of(k, v, 2 * N) + exp_of(k, N + v, 2 * N)) & 1) << v;
    return s;
}

// Column `key` of the operator: coefficients of tr(z^I y^J · Q).
template <class S>
Poly<S> trace_times_q(Key key, const BishopData& b, Kind kind, int q) {
    Poly<S> m(b.N, kind, q);
    m.add(key, S(1));
    return trace(mul(m, quadric<S>(b, kind)), b);
}

template <class S>
class FischerContext {
public:
    using R = real_t<S>;
    explicit FischerContext(BishopData b) : b_(std::move(b)) {}

    const BishopData& bishop() const { return b_; }
    int N() const { return b_.N; }

    const TraceOperator<R>& op(int q) const {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = ops_.find(q);
        if (it != ops_.end()) return *it->second;
        auto o = std::make_unique<TraceOperator<R>>(build_op(q));
        auto* ptr = o.get();
        ops_.emplace(q, std::move(o));
        return *ptr;
    }

    // solve tr(A·Q) = rhs for A of degree q
    Poly<S> solve_trace(const Poly<S>& rhs, int q, Kind kind) const {
        const auto& o = op(q);
        Poly<S> A(b_.N, kind, q);
        std::vector<std::vector<S>> v(o.classes.size());
        for (size_t c = 0; c < o.classes.size(); ++c) v[c].assign(o.classes[c].size(), S{});
        bool any = false;
        for (auto& [k, c] : rhs.t) {
            auto it = o.where.find(k);
            if (it == o.where.end()) throw std::logic_error("trace rhs outside degree");
            v[it->second.first][it->second.second] = c;
            any = true;
        }
        if (!any) return A;
        for (size_t c = 0; c < o.classes.size(); ++c) {
            bool nz = false;
            for (auto& x : v[c])
                if (!is_zero(x)) nz = true;
            if (!nz) continue;
            auto x = matvec(o.inv[c], v[c]);
            for (size_t i = 0; i < x.size(); ++i) A.add(o.classes[c][i], x[i]);
        }
        return A;
    }

    DecompResult<S> decompose(const Poly<S>& P) const {
        if (P.N != b_.N) throw std::invalid_argument("decompose: dimension mismatch");
        if (P.deg < 2) throw std::invalid_argument("decompose: degree must be >= 2");
        const int q = P.deg - 2;
        Poly<S> A = solve_trace(trace(P, b_), q, P.kind);
        Poly<S> C = P - mul(A, quadric<S>(b_, P.kind));
        C.deg = P.deg;
        A.deg = q;
        return {std::move(A), std::move(C)};
    }

    FischerChain<S> chain(const Poly<S>& P, Flavor fl) const {
        if (P.deg < 1) throw std::invalid_argument("chain: degree must be >= 1");
        FischerChain<S> ch;
        const int depth = fl == Flavor::G ? P.deg / 2 : (P.deg - 1) / 2;
        ch.P.push_back(P);
        for (int k = 0; k < depth; ++k) {
            auto d = decompose(ch.P.back());
            ch.R.push_back(std::move(d.C));
            ch.P.push_back(std::move(d.A));
        }
        ch.depth = depth;
        return ch;
    }

private:
    TraceOperator<R> build_op(int q) const {
        TraceOperator<R> o;
        o.q = q;
        o.basis = monomials_of_degree(q, b_.N);
        std::map<int, int> cls;
        for (Key k : o.basis) {
            int s = parity_signature(k, b_.N);
            auto it = cls.find(s);
            if (it == cls.end()) {
                it = cls.emplace(s, int(o.classes.size())).first;
                o.classes.emplace_back();
            }
            o.where[k] = {it->second, int(o.classes[it->second].size())};
            o.classes[it->second].push_back(k);
        }
        // operator entries are rational in λ; assemble exactly, then invert in R
        for (auto& keys : o.classes) {
            const int n = int(keys.size());
            Mat<mpq_class> M(n, n);
            for (int j = 0; j < n; ++j) {
                auto col = trace_times_q<Gq>(keys[j], b_, Kind::conjugate, q);
                for (auto& [k, c] : col.t) M(o.where.at(k).second, j) = c.re;
            }
            if constexpr (std::is_same_v<R, mpq_class>) {
                auto inv = inverse(M);
                if (!inv) throw std::runtime_error("trace operator singular");
                o.inv.push_back(std::move(*inv));
            } else {
                Mat<double> Md(n, n);
                for (size_t i = 0; i < M.a.size(); ++i) Md.a[i] = M.a[i].get_d();
                auto inv = inverse(Md);
                if (!inv) throw std::runtime_error("trace operator singular");
                o.inv.push_back(std::move(*inv));
            }
        }
        return o;
    }

    BishopData b_;
    mutable std::mutex mu_;
    mutable std::map<int, std::unique_ptr<TraceOperator<R>>> ops_;
};

template <class S>
DecompResult<S> decompose(const Poly<S>& P, const BishopData& b) {
    return FischerContext<S>(b).decompose(P);
}

template <class S>
FischerChain<S> chain(const Poly<S>& P, const BishopData& b, Flavor fl) {
    return FischerContext<S>(b).chain(P, fl);
}

inline bool in_S(const MultiIndex& I, const BishopData& b) {
    // tr(z^I) = Σ λ_k i_k(i_k-1) z^{I-2e_k}
    for (int k = 0; k < b.N; ++k)
        if (b.lambda[k] != 0 && I[k] >= 2) return false;
    return true;
}

inline bool in_T(const MultiIndex& J, int k, const BishopData& b) {
    if (J[k] != 0) return false;
    for (int l = 0; l < b.N; ++l)
        if (b.lambda[l] != 0 && J[l] > 1) return false;
    return true;
}

// (y_l + 2λ_l z_l) z^J
template <class S>
Poly<S> f_source(int l, const MultiIndex& J, const BishopData& b, Kind kind) {
    MultiIndex zero(b.N, 0), el(b.N, 0);
    el[l] = 1;
    MultiIndex Jl = J;
    Jl[l] += 1;
    Poly<S> g = monomial<S>(b.N, kind, J, el);
    if (b.lambda[l] != 0) g.add(make_key(Jl, zero), from_q<S>(2 * b.lambda[l]));
    return g;
}

template <class S>
struct NormBasis {
    int degree = 0;
    Flavor flavor = Flavor::G;
    std::vector<Poly<S>> generators;  // pairs (g, bar g), in order
    std::vector<std::string> labels;
    std::vector<Key> excluded;  // raw monomials used for S / T_k indices
    int gram_rank = -1;
};

template <class S>
NormBasis<S> norm_basis(int p, const BishopData& b, Flavor fl, const FischerContext<S>* ctx = nullptr) {
    std::unique_ptr<FischerContext<S>> own;
    if (!ctx) {
        own = std::make_unique<FischerContext<S>>(b);
        ctx = own.get();
    }
    NormBasis<S> nb;
    nb.degree = p;
    nb.flavor = fl;
    MultiIndex zero(b.N, 0);
    auto push = [&](Poly<S> g, const std::string& lab) {
        Poly<S> gb = conj_swap(g);
        nb.generators.push_back(std::move(g));
        nb.labels.push_back(lab);
        nb.generators.push_back(std::move(gb));
        nb.labels.push_back("bar " + lab);
    };
    auto idx = [](const MultiIndex& I) {
        std::ostringstream os;
        os << "(";
        for (size_t i = 0; i < I.size(); ++i) os << (i ? "," : "") << I[i];
        os << ")";
        return os.str();
    };
    if (fl == Flavor::G) {
        for (auto& I : compositions(p, b.N)) {
            Poly<S> m = monomial<S>(b.N, Kind::conjugate, I, zero);
            if (p >= 3 && in_S(I, b)) {
                nb.excluded.push_back(make_key(I, zero));
                push(m, "z^" + idx(I));
            } else if (p >= 2) {
                push(ctx->decompose(m).C, "C" + idx(I));
            } else {
                push(m, "z^" + idx(I));
            }
        }
    } else {
        if (p < 1) throw std::invalid_argument("norm_basis F: degree must be >= 1");
        for (int l = 0; l < b.N; ++l)
            for (auto& J : compositions(p - 1, b.N)) {
                std::string lab = std::to_string(l + 1) + "," + idx(J);
                if (p >= 3 && in_T(J, l, b)) {
                    MultiIndex el(b.N, 0);
                    el[l] = 1;
                    nb.excluded.push_back(make_key(J, el));
                    push(monomial<S>(b.N, Kind::conjugate, J, el), "zbar_" + lab);
                } else if (p >= 2) {
                    push(ctx->decompose(f_source<S>(l, J, b, Kind::conjugate)).C, "C" + lab);
                } else {
                    push(f_source<S>(l, J, b, Kind::conjugate), "g" + lab);
                }
            }
    }
    // Gram rank under the Fischer product
    const int n = int(nb.generators.size());
    Mat<S> G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = fischer_inner(nb.generators[i], nb.generators[j]);
    nb.gram_rank = rank_of(G);
    return nb;
}

struct Violation {
    int level = 0;  // chain level k (remainder degree p - 2k)
    std::string generator;
    double magnitude = 0;
};

struct NormalizedReport {
    bool ok = true;
    std::vector<Violation> violations;
    std::string note;
};

// remainder used for the condition at chain level k: R[k], or the final
// quotient when it has degree < 2
template <class S>
const Poly<S>& level_poly(const FischerChain<S>& ch, int k) {
    return k < int(ch.R.size()) ? ch.R[k] : ch.P[k];
}

template <class S>
NormalizedReport is_normalized(const Poly<S>& P, const BishopData& b, Flavor fl, const FischerContext<S>* ctx = nullptr) {
    NormalizedReport rep;
    if (!is_real_valued(P)) {
        rep.ok = false;
        rep.note = "input is not real-valued";
        return rep;
    }
    std::unique_ptr<FischerContext<S>> own;
    if (!ctx) {
        own = std::make_unique<FischerContext<S>>(b);
        ctx = own.get();
    }
    if (P.deg < 1) {
        if (fl == Flavor::G && !P.empty()) {
            rep.ok = false;
            rep.violations.push_back({0, "1", max_abs_coeff(P)});
        }
        return rep;
    }
    auto ch = ctx->chain(P, Flavor::G);
    const int levels = int(ch.P.size());
    for (int k = 0; k < levels; ++k) {
        const int e = P.deg - 2 * k;
        const Poly<S>& Rk = level_poly(ch, k);
        if (fl == Flavor::G) {
            if (e == 0) {
                if (!Rk.empty()) rep.violations.push_back({k, "1", max_abs_coeff(Rk)});
                continue;
            }
            auto nb = norm_basis<S>(e, b, Flavor::G, ctx);
            for (size_t g = 0; g < nb.generators.size(); ++g) {
                S v = fischer_inner(Rk, nb.generators[g]);
                if (!is_zero(v) && magnitude(v) > tolerance_for<S>()) rep.violations.push_back({k, nb.labels[g], magnitude(v)});
            }
        } else {
            if (e < 3) continue;  // low levels are the level2 / level1 conditions
            auto nb = norm_basis<S>(e, b, Flavor::F, ctx);
            for (size_t g = 0; g < nb.generators.size(); ++g) {
                S v = fischer_inner(Rk, nb.generators[g]);
                if (!is_zero(v) && magnitude(v) > tolerance_for<S>()) rep.violations.push_back({k, nb.labels[g], magnitude(v)});
            }
        }
    }
    rep.ok = rep.violations.empty();
    return rep;
}

}  // namespace bishop
