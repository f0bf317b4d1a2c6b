#pragma once
// Degree-by-degree partial normal form of w = Q + Σ φ_k, plus the formal
// substitution machinery shared with the Segre mode and model maps.

#include "bishop/fischer.hpp"
#include "bishop/linalg.hpp"
#include "bishop/poly.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace bishop {

template <class S>
struct ManifoldSeries {
    BishopData b;
    int max_degree = 3;
    std::map<int, Poly<S>> phi;  // degree k >= 3 -> φ_k

    Poly<S> total(int dmax) const {
        Poly<S> r(b.N, Kind::conjugate, -1);
        for (auto& [k, p] : phi)
            if (k <= dmax) r += p;
        return r;
    }
    bool is_real() const {
        for (auto& [k, p] : phi)
            if (!is_real_valued(p)) return false;
        return true;
    }
    static ManifoldSeries model(const BishopData& b, int dmax) {
        ManifoldSeries m;
        m.b = b;
        m.max_degree = dmax;
        return m;
    }
};

using GKey = std::pair<int, int>;           // (m, n)
using FKey = std::tuple<int, int, int>;     // (l, m, n)

// z' = F(z, w), w' = G(z, w); coefficients are polynomials in z only
template <class S>
struct FormalTransform {
    int N = 1;
    int Nt = 1;
    int weight = 1;
    std::map<GKey, Poly<S>> G;
    std::map<FKey, Poly<S>> F;

    static FormalTransform identity(int N, int Nt, int weight) {
        FormalTransform t;
        t.N = N;
        t.Nt = Nt;
        t.weight = weight;
        t.G[{0, 1}] = constant_poly<S>(N, Kind::conjugate, S(1));
        for (int l = 0; l < std::min(N, Nt); ++l) t.F[{l, 1, 0}] = var_poly<S>(N, Kind::conjugate, l);
        return t;
    }
    Poly<S> g(int m, int n) const {
        auto it = G.find({m, n});
        return it == G.end() ? Poly<S>(N, Kind::conjugate, m) : it->second;
    }
    Poly<S> f(int l, int m, int n) const {
        auto it = F.find({l, m, n});
        return it == F.end() ? Poly<S>(N, Kind::conjugate, m) : it->second;
    }
    void add_g(int m, int n, Key k, const S& c) {
        auto it = G.try_emplace({m, n}, Poly<S>(N, Kind::conjugate, m)).first;
        it->second.add(k, c);
        if (it->second.empty()) G.erase(it);
    }
    void add_f(int l, int m, int n, Key k, const S& c) {
        auto it = F.try_emplace({l, m, n}, Poly<S>(N, Kind::conjugate, m)).first;
        it->second.add(k, c);
        if (it->second.empty()) F.erase(it);
    }
    void prune() {
        for (auto it = G.begin(); it != G.end();) it = it->second.empty() ? G.erase(it) : std::next(it);
        for (auto it = F.begin(); it != F.end();) it = it->second.empty() ? F.erase(it) : std::next(it);
    }
    friend bool operator==(const FormalTransform& a, const FormalTransform& b) {
        FormalTransform x = a, y = b;
        x.prune();
        y.prune();
        return x.N == y.N && x.Nt == y.Nt && x.G == y.G && x.F == y.F;
    }
};

// ---------------------------------------------------------------- substitution

template <class S>
std::vector<Poly<S>> power_table(const Poly<S>& W, int nmax, int dmax) {
    std::vector<Poly<S>> P;
    Poly<S> one = constant_poly<S>(W.N, W.kind, S(1));
    one.deg = -1;
    P.push_back(one);
    for (int k = 1; k <= nmax; ++k) P.push_back(mul_trunc(P.back(), W, dmax));
    return P;
}

// Σ_{m,n} T_{m,n}(z) W^n, truncated at total degree dmax; z-coefficients are
// lifted into the kind of W
template <class S>
Poly<S> eval_series(const std::map<GKey, Poly<S>>& terms, const std::vector<Poly<S>>& Wp, int dmax) {
    Poly<S> r(Wp[0].N, Wp[0].kind, -1);
    for (auto& [mn, c] : terms) {
        if (mn.first > dmax) continue;
        if (mn.second >= int(Wp.size())) throw std::logic_error("power table too short");
        r += mul_trunc(with_kind(c, Wp[0].kind), Wp[mn.second], dmax);
    }
    return r;
}

template <class S>
std::map<GKey, Poly<S>> f_component(const FormalTransform<S>& T, int l) {
    std::map<GKey, Poly<S>> out;
    for (auto& [k, p] : T.F)
        if (std::get<0>(k) == l) out[{std::get<1>(k), std::get<2>(k)}] = p;
    return out;
}

// Substitute images for the 2·f.N variables of f; result truncated at dmax.
template <class S>
class Substituter {
public:
    Substituter(std::vector<Poly<S>> images, int dmax) : img_(std::move(images)), dmax_(dmax), pw_(img_.size()) {}

    const Poly<S>& power(int v, int e) {
        auto& t = pw_[v];
        if (t.empty()) {
            Poly<S> one = constant_poly<S>(img_[v].N, img_[v].kind, S(1));
            one.deg = -1;
            t.push_back(one);
        }
        while (int(t.size()) <= e) t.push_back(mul_trunc(t.back(), img_[v], dmax_));
        return t[e];
    }
    Poly<S> apply(const Poly<S>& f) {
        const int nv = 2 * f.N;
        if (int(img_.size()) != nv) throw std::invalid_argument("substitute: image count mismatch");
        if (lo_.empty())
            for (auto& im : img_) lo_.push_back(im.empty() ? dmax_ + 1 : lowest_degree(im));
        Poly<S> r(img_[0].N, img_[0].kind, -1);
        for (auto& [a, c] : f.t) {
            // factors still to come contribute at least `rest` to the degree
            int rest = 0;
            for (int v = 0; v < nv; ++v) rest += exp_of(a, v, nv) * lo_[v];
            if (rest > dmax_) continue;
            Poly<S> term = constant_poly<S>(img_[0].N, img_[0].kind, c);
            term.deg = -1;
            for (int v = 0; v < nv && !term.empty(); ++v) {
                int e = exp_of(a, v, nv);
                if (!e) continue;
                rest -= e * lo_[v];
                term = mul_trunc(term, power(v, e), dmax_ - rest);
            }
            r += term;
        }
        return r;
    }

private:
    std::vector<Poly<S>> img_;
    int dmax_;
    std::vector<std::vector<Poly<S>>> pw_;
    std::vector<int> lo_;
};

// E = G(z, Q+φ) - Q'(Z, Z̄) - Σ φ'_k(Z, Z̄) with Z = F(z, Q+φ), truncated at dmax.
// Target quadric and φ' live in T.Nt variables.
template <class S>
Poly<S> transform_residual(const Poly<S>& phi_src, const BishopData& bsrc, const FormalTransform<S>& T, const Poly<S>& phi_tgt,
                           const BishopData& btgt, int dmax) {
    const int N = bsrc.N;
    Poly<S> W = quadric<S>(bsrc, Kind::conjugate) + phi_src;
    W.deg = -1;
    int nmax = 0;
    for (auto& [k, p] : T.G) nmax = std::max(nmax, k.second);
    for (auto& [k, p] : T.F) nmax = std::max(nmax, std::get<2>(k));
    auto Wp = power_table(truncate(W, dmax), nmax, dmax);
    Poly<S> E = eval_series(T.G, Wp, dmax);
    std::vector<Poly<S>> img(2 * T.Nt);
    for (int l = 0; l < T.Nt; ++l) {
        img[l] = eval_series(f_component(T, l), Wp, dmax);
        img[l].N = N;
        img[T.Nt + l] = conj_swap(img[l]);
    }
    Substituter<S> sub(img, dmax);
    E -= sub.apply(quadric<S>(btgt, Kind::conjugate));
    if (!phi_tgt.empty()) E -= sub.apply(phi_tgt);
    return truncate(E, dmax);
}

// ---------------------------------------------------------------- conditions

template <class S>
Poly<S> f_generator(int l, const MultiIndex& J, const BishopData& b) {
    return f_source<S>(l, J, b, Kind::conjugate);
}

// Real linear functionals whose vanishing defines the normal form at degree r:
// the imaginary part is tested against the G family, the real part against
// the F family with the low levels (e = 2, e = 1) handled separately.
template <class S>
class ConditionSet {
public:
    using R = real_t<S>;
    ConditionSet(const FischerContext<S>& ctx, int r) : ctx_(ctx), r_(r) {
        const auto& b = ctx.bishop();
        for (int e = r; e >= 0; e -= 2) {
            if (e >= 3) {
                auto nb = norm_basis<S>(e, b, Flavor::F, &ctx);
                std::vector<Poly<S>> half;
                for (size_t i = 0; i < nb.generators.size(); i += 2) half.push_back(nb.generators[i]);
                fgen_[e] = std::move(half);
            }
        }
    }
    int degree() const { return r_; }

    std::vector<R> evaluate(const Poly<S>& phi, std::vector<std::string>* labels = nullptr) const {
        const auto& b = ctx_.bishop();
        const int N = b.N;
        std::vector<R> out;
        auto push = [&](const R& v, const std::string& lab) {
            out.push_back(v);
            if (labels) labels->push_back(lab);
        };
        Poly<S> re = real_part(phi), im = imag_part(phi);
        re.deg = im.deg = r_;
        auto chI = ctx_.chain(im, Flavor::G);
        auto chR = ctx_.chain(re, Flavor::G);
        const MultiIndex zero(N, 0);
        for (int k = 0; k < int(chI.P.size()); ++k) {
            const int e = r_ - 2 * k;
            const Poly<S>& L = level_poly(chI, k);
            if (e == 0) {
                push(re_part(L.coeff(0)), "G e=0");
                continue;
            }
            for (auto& I : compositions(e, N)) {
                S v = fischer_inner(L, monomial<S>(N, Kind::conjugate, I, zero));
                push(re_part(v), "G re e=" + std::to_string(e));
                push(im_part(v), "G im e=" + std::to_string(e));
            }
        }
        for (int k = 0; k < int(chR.P.size()); ++k) {
            const int e = r_ - 2 * k;
            const Poly<S>& L = level_poly(chR, k);
            if (e >= 3) {
                for (auto& g : fgen_.at(e)) {
                    S v = fischer_inner(L, g);
                    push(re_part(v), "F re e=" + std::to_string(e));
                    push(im_part(v), "F im e=" + std::to_string(e));
                }
            } else if (e == 2) {
                for (int l = 0; l < N; ++l)
                    for (int m = 0; m < N; ++m) {
                        if (l >= b.k0 && m >= b.k0 && l >= m) continue;
                        MultiIndex J(N, 0);
                        J[m] = 1;
                        S v = fischer_inner(L, f_generator<S>(l, J, b));
                        push(im_part(v), "level2 " + std::to_string(l + 1) + "," + std::to_string(m + 1));
                    }
            } else if (e == 1) {
                for (int l = 0; l < b.k0; ++l) {
                    S v = fischer_inner(L, f_generator<S>(l, zero, b));
                    push(re_part(v), "level1 re " + std::to_string(l + 1));
                    push(im_part(v), "level1 im " + std::to_string(l + 1));
                }
            }
        }
        return out;
    }

private:
    const FischerContext<S>& ctx_;
    int r_;
    std::map<int, std::vector<Poly<S>>> fgen_;
};

// ---------------------------------------------------------------- unknowns

struct Unknown {
    bool is_g = true;
    int l = 0, m = 0, n = 0;
    Key key = 0;  // z-monomial of degree m
    bool imag = false;
    std::string label() const {
        std::ostringstream os;
        os << (is_g ? "G" : "F") << "_" << m << "," << n;
        if (!is_g) os << "^(" << l + 1 << ")";
        os << "[" << key << "]" << (imag ? ".im" : ".re");
        return os.str();
    }
};

inline std::vector<Key> z_monomials(int m, int N) {
    std::vector<Key> out;
    for (auto& I : compositions(m, N)) out.push_back(make_key(I, MultiIndex(N, 0)));
    return out;
}

// Admissible weight-r unknowns: G_{m,n} (m+2n = r), F_{m,n} (m+2n = r-1)
// with Re g_{0,n} = 0, Re F_{1,n} = 0 and F^{(l)}_{0,n} = 0 for l >= k0.
inline std::vector<Unknown> weight_unknowns(int r, const BishopData& b) {
    std::vector<Unknown> u;
    const int N = b.N;
    for (int n = 0; 2 * n <= r; ++n) {
        const int m = r - 2 * n;
        for (Key k : z_monomials(m, N)) {
            if (m >= 1) u.push_back({true, 0, m, n, k, false});
            u.push_back({true, 0, m, n, k, true});
        }
    }
    for (int l = 0; l < N; ++l)
        for (int n = 0; 2 * n <= r - 1; ++n) {
            const int m = r - 1 - 2 * n;
            if (m == 0 && l >= b.k0) continue;
            for (Key k : z_monomials(m, N)) {
                if (m != 1) u.push_back({false, l, m, n, k, false});
                u.push_back({false, l, m, n, k, true});
            }
        }
    return u;
}

// contribution of a unit unknown to φ'_r
template <class S>
Poly<S> unknown_column(const Unknown& u, const BishopData& b, int r) {
    const int N = b.N;
    const S c = u.imag ? from_q<S>(0, 1) : S(1);
    Poly<S> Qn = constant_poly<S>(N, Kind::conjugate, S(1));
    Poly<S> Q = quadric<S>(b, Kind::conjugate);
    for (int i = 0; i < u.n; ++i) Qn = mul(Qn, Q);
    Poly<S> mono(N, Kind::conjugate, u.m);
    mono.add(u.key, c);
    Poly<S> col(N, Kind::conjugate, r);
    if (u.is_g) {
        col = mul(mono, Qn);
    } else {
        Poly<S> h = mul(mul(f_generator<S>(u.l, MultiIndex(N, 0), b), mono), Qn);
        col = -(h + conj_swap(h));
    }
    col.deg = r;
    return col;
}

template <class S>
struct WeightSystem {
    using R = real_t<S>;
    int r = 0;
    std::vector<Unknown> unknowns;
    std::vector<Poly<S>> columns;
    std::unique_ptr<ConditionSet<S>> conditions;
    Elimination<R> elim;
    int rows = 0;
};

struct NormalizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class S>
class Normalizer {
public:
    using R = real_t<S>;
    explicit Normalizer(const BishopData& b) : ctx_(b) {
        if (b.k0 == 0) throw std::invalid_argument("normalize: all Bishop invariants vanish");
        if (!b.nonzero_first()) throw std::invalid_argument("normalize: nonzero invariants must come first");
    }
    const FischerContext<S>& context() const { return ctx_; }

    const WeightSystem<S>& system(int r) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = sys_.find(r);
        if (it != sys_.end()) return *it->second;
        auto ws = std::make_unique<WeightSystem<S>>();
        const auto& b = ctx_.bishop();
        ws->r = r;
        ws->unknowns = weight_unknowns(r, b);
        ws->conditions = std::make_unique<ConditionSet<S>>(ctx_, r);
        std::vector<std::vector<R>> cols;
        for (auto& u : ws->unknowns) {
            ws->columns.push_back(unknown_column<S>(u, b, r));
            cols.push_back(ws->conditions->evaluate(ws->columns.back()));
        }
        const int m = int(cols.empty() ? ws->conditions->evaluate(Poly<S>(b.N, Kind::conjugate, r)).size() : cols[0].size());
        Mat<R> K(m, int(cols.size()));
        for (int j = 0; j < int(cols.size()); ++j)
            for (int i = 0; i < m; ++i) K(i, j) = cols[j][i];
        ws->rows = m;
        ws->elim = eliminate(K, 1e-11);
        auto* p = ws.get();
        sys_.emplace(r, std::move(ws));
        return *p;
    }

    // solve the weight-r step given the residual; returns (φ'_r, unknown values)
    std::pair<Poly<S>, std::vector<R>> step(int r, const Poly<S>& res) {
        const auto& ws = system(r);
        Poly<S> rr = res;
        rr.deg = r;
        auto c = ws.conditions->evaluate(rr);
        for (auto& v : c) v = -v;
        double worst = 0;
        auto x = solve_with(ws.elim, c, &worst);
        if (!x) throw NormalizeError("normal form system inconsistent at weight " + std::to_string(r));
        Poly<S> phi = rr;
        for (size_t j = 0; j < x->size(); ++j) {
            if (is_zero((*x)[j])) continue;
            Poly<S> col = ws.columns[j];
            if constexpr (std::is_same_v<S, Gq>)
                col *= Gq((*x)[j]);
            else
                col *= S((*x)[j]);
            phi += col;
        }
        phi.deg = r;
        return {phi, *x};
    }

private:
    FischerContext<S> ctx_;
    std::mutex mu_;
    std::map<int, std::unique_ptr<WeightSystem<S>>> sys_;
};

template <class S>
void apply_unknown(FormalTransform<S>& T, const Unknown& u, const real_t<S>& v) {
    if (is_zero(v)) return;
    S c;
    if constexpr (std::is_same_v<S, Gq>)
        c = u.imag ? Gq(0, v) : Gq(v);
    else
        c = u.imag ? S(0, v) : S(v);
    if (u.is_g)
        T.add_g(u.m, u.n, u.key, c);
    else
        T.add_f(u.l, u.m, u.n, u.key, c);
}

// ---------------------------------------------------------------- permutations

inline Key permute_key(Key k, const std::vector<int>& perm, int N) {
    // new variable i takes the exponent of old variable perm[i]
    MultiIndex I(N), J(N);
    for (int i = 0; i < N; ++i) {
        I[i] = exp_of(k, perm[i], 2 * N);
        J[i] = exp_of(k, N + perm[i], 2 * N);
    }
    return make_key(I, J);
}

template <class S>
Poly<S> permute_poly(const Poly<S>& f, const std::vector<int>& perm) {
    Poly<S> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t) r.t.emplace(permute_key(a, perm, f.N), c);
    return r;
}

inline std::vector<int> inverse_perm(const std::vector<int>& p) {
    std::vector<int> q(p.size());
    for (size_t i = 0; i < p.size(); ++i) q[p[i]] = int(i);
    return q;
}

// stable order with nonzero λ first
inline std::vector<int> canonical_perm(const BishopData& b) {
    std::vector<int> p;
    for (int i = 0; i < b.N; ++i)
        if (b.lambda[i] != 0) p.push_back(i);
    for (int i = 0; i < b.N; ++i)
        if (b.lambda[i] == 0) p.push_back(i);
    return p;
}

inline BishopData permute_bishop(const BishopData& b, const std::vector<int>& perm) {
    std::vector<mpq_class> l(b.N);
    for (int i = 0; i < b.N; ++i) l[i] = b.lambda[perm[i]];
    return BishopData(l);
}

template <class S>
FormalTransform<S> permute_transform(const FormalTransform<S>& T, const std::vector<int>& perm) {
    FormalTransform<S> r;
    r.N = T.N;
    r.Nt = T.Nt;
    r.weight = T.weight;
    auto inv = inverse_perm(perm);
    for (auto& [k, p] : T.G) r.G[k] = permute_poly(p, perm);
    for (auto& [k, p] : T.F) r.F[{inv[std::get<0>(k)], std::get<1>(k), std::get<2>(k)}] = permute_poly(p, perm);
    return r;
}

// ---------------------------------------------------------------- drivers

template <class S>
struct NormalizeResult {
    FormalTransform<S> T;
    ManifoldSeries<S> M;  // normal form
    std::map<int, double> residual;  // max |E_r| after each weight
};

template <class S>
NormalizeResult<S> normalize_canonical(const ManifoldSeries<S>& M, int dmax, Normalizer<S>& nz) {
    const auto& b = M.b;
    NormalizeResult<S> out;
    out.T = FormalTransform<S>::identity(b.N, b.N, dmax);
    out.M = ManifoldSeries<S>::model(b, dmax);
    Poly<S> phi = M.total(dmax);
    for (int r = 3; r <= dmax; ++r) {
        Poly<S> tgt(b.N, Kind::conjugate, -1);
        for (auto& [k, p] : out.M.phi) tgt += p;
        Poly<S> E = transform_residual(phi, b, out.T, tgt, b, r);
        auto [phir, x] = nz.step(r, part(E, r));
        const auto& ws = nz.system(r);
        for (size_t j = 0; j < x.size(); ++j) apply_unknown(out.T, ws.unknowns[j], x[j]);
        if (!phir.empty()) out.M.phi[r] = phir;
    }
    out.T.prune();
    Poly<S> E = transform_residual(phi, b, out.T, out.M.total(dmax), b, dmax);
    for (int r = 0; r <= dmax; ++r) out.residual[r] = max_abs_coeff(part(E, r));
    return out;
}

template <class S>
NormalizeResult<S> normalize(const ManifoldSeries<S>& M, int dmax, Normalizer<S>* nz = nullptr) {
    if (dmax < 3) throw std::invalid_argument("normalize: max degree must be >= 3");
    for (auto& [k, p] : M.phi)
        if (k < 3) throw std::invalid_argument("normalize: φ_k needs k >= 3");
    const auto perm = canonical_perm(M.b);
    bool ident = true;
    for (int i = 0; i < M.b.N; ++i) ident = ident && perm[i] == i;
    if (ident) {
        std::unique_ptr<Normalizer<S>> own;
        if (!nz) {
            own = std::make_unique<Normalizer<S>>(M.b);
            nz = own.get();
        }
        return normalize_canonical(M, dmax, *nz);
    }
    ManifoldSeries<S> Mp;
    Mp.b = permute_bishop(M.b, perm);
    Mp.max_degree = M.max_degree;
    for (auto& [k, p] : M.phi) Mp.phi[k] = permute_poly(p, perm);
    Normalizer<S> local(Mp.b);
    auto res = normalize_canonical(Mp, dmax, local);
    const auto inv = inverse_perm(perm);
    res.T = permute_transform(res.T, inv);
    ManifoldSeries<S> back;
    back.b = M.b;
    back.max_degree = dmax;
    for (auto& [k, p] : res.M.phi) back.phi[k] = permute_poly(p, inv);
    res.M = back;
    return res;
}

// linear part of F as an N×N matrix (rows: components)
template <class S>
Mat<S> linear_part(const FormalTransform<S>& T) {
    Mat<S> U(T.Nt, T.N);
    for (int l = 0; l < T.Nt; ++l) {
        auto p = T.f(l, 1, 0);
        for (int j = 0; j < T.N; ++j) U(l, j) = p.coeff(unit_key(j, 2 * T.N));
    }
    return U;
}

// z -> U z, z̄ -> Ū z̄ on a polynomial
template <class S>
Poly<S> linear_substitute(const Poly<S>& f, const Mat<S>& U, int dmax) {
    const int N = f.N;
    std::vector<Poly<S>> img(2 * N);
    for (int l = 0; l < N; ++l) {
        Poly<S> zl(N, Kind::conjugate, 1);
        for (int j = 0; j < N; ++j) zl.add(unit_key(j, 2 * N), U(l, j));
        img[l] = zl;
        img[N + l] = conj_swap(zl);
    }
    Substituter<S> sub(img, dmax);
    Poly<S> r = sub.apply(f);
    r.deg = f.deg;
    return r;
}

// Push M through T: returns M' with T(M) = M' up to degree d.
template <class S>
ManifoldSeries<S> transform(const ManifoldSeries<S>& M, const FormalTransform<S>& T, int d) {
    const auto& b = M.b;
    if (T.N != b.N || T.Nt != b.N) throw std::invalid_argument("transform: dimension mismatch");
    Mat<S> U = linear_part(T);
    auto Uinv = inverse(U);
    if (!Uinv) throw std::invalid_argument("transform: linear part is not invertible");
    const S g01 = T.g(0, 1).coeff(0);
    Poly<S> Q = quadric<S>(b, Kind::conjugate);
    Poly<S> QU = linear_substitute(Q, U, 2);
    Poly<S> gq = Q * g01;
    gq.deg = 2;
    if (!(QU == gq)) throw std::invalid_argument("transform: linear part does not preserve the model");
    for (auto& [k, p] : T.G)
        if (k.first + 2 * k.second <= 2 && k != GKey{0, 1} && !p.empty())
            throw std::invalid_argument("transform: G must start with G_{0,1} w");
    if (!T.f(0, 0, 0).empty()) throw std::invalid_argument("transform: F must vanish at 0");
    ManifoldSeries<S> out = ManifoldSeries<S>::model(b, d);
    Poly<S> phi = M.total(d);
    Poly<S> tgt(b.N, Kind::conjugate, -1);
    for (int r = 3; r <= d; ++r) {
        Poly<S> E = part(transform_residual(phi, b, T, tgt, b, r), r);
        // E_r = X(Uz, Ūz̄) with X = φ'_r
        Poly<S> X = linear_substitute(E, *Uinv, r);
        X.deg = r;
        if (!X.empty()) {
            out.phi[r] = X;
            tgt += X;
        }
    }
    return out;
}

// ---------------------------------------------------------------- weighted series

using WSeries = std::map<GKey, Poly<Gq>>;

template <class S>
std::map<GKey, Poly<S>> series_mul(const std::map<GKey, Poly<S>>& a, const std::map<GKey, Poly<S>>& b, int wmax) {
    std::map<GKey, Poly<S>> r;
    for (auto& [ka, pa] : a)
        for (auto& [kb, pb] : b) {
            GKey k{ka.first + kb.first, ka.second + kb.second};
            if (k.first + 2 * k.second > wmax) continue;
            auto prod = mul(pa, pb);
            auto it = r.find(k);
            if (it == r.end())
                r.emplace(k, prod);
            else
                it->second += prod;
        }
    for (auto it = r.begin(); it != r.end();) it = it->second.empty() ? r.erase(it) : std::next(it);
    return r;
}

// Compose T with (z', w') -> (a(w') U z', w'); a is given by its coefficients
// a_0 + a_1 w + ..., real.
template <class S>
FormalTransform<S> automorphism_apply(const FormalTransform<S>& T, const std::vector<S>& a, const Mat<S>& U, const BishopData& b) {
    const int N = T.N;
    if (U.rows != T.Nt || U.cols != T.Nt) throw std::invalid_argument("automorphism_apply: U shape");
    for (auto& c : a)
        if (!is_zero(im_part(c))) throw std::invalid_argument("automorphism_apply: a must be real");
    if (a.empty()) throw std::invalid_argument("automorphism_apply: empty a");
    BishopData bt = b;
    Poly<S> Q = quadric<S>(bt, Kind::conjugate);
    Poly<S> QU = linear_substitute(Q, U, 2);
    QU.deg = 2;
    if (!(QU == Q)) throw std::invalid_argument("automorphism_apply: U does not preserve the model");
    const int w = T.weight;
    std::map<GKey, Poly<S>> Gs = T.G;
    // a(G) = Σ a_k G^k
    std::map<GKey, Poly<S>> aG, Gk;
    Gk[{0, 0}] = constant_poly<S>(N, Kind::conjugate, S(1));
    for (size_t k = 0; k < a.size(); ++k) {
        if (k > 0) Gk = series_mul(Gk, Gs, w);
        if (is_zero(a[k])) continue;
        for (auto& [key, p] : Gk) {
            auto it = aG.try_emplace(key, Poly<S>(N, Kind::conjugate, key.first)).first;
            it->second += p * a[k];
        }
    }
    FormalTransform<S> r;
    r.N = N;
    r.Nt = T.Nt;
    r.weight = w;
    r.G = T.G;
    std::vector<std::map<GKey, Poly<S>>> comp(T.Nt);
    for (int l = 0; l < T.Nt; ++l) comp[l] = f_component(T, l);
    for (int l = 0; l < T.Nt; ++l) {
        std::map<GKey, Poly<S>> UF;
        for (int j = 0; j < T.Nt; ++j) {
            if (is_zero(U(l, j))) continue;
            for (auto& [key, p] : comp[j]) {
                auto it = UF.try_emplace(key, Poly<S>(N, Kind::conjugate, key.first)).first;
                it->second += p * U(l, j);
            }
        }
        for (auto& [key, p] : series_mul(aG, UF, w - 1))
            if (!p.empty()) r.F[{l, key.first, key.second}] = p;
    }
    r.prune();
    return r;
}

// ---------------------------------------------------------------- checks

// (o): Re F_{1,n} = 0 and F^{(l)}_{0,n} = 0 for l >= k0, n >= 1
template <class S>
bool satisfies_o(const FormalTransform<S>& T, const BishopData& b, std::string* why = nullptr) {
    for (auto& [k, p] : T.F) {
        auto [l, m, n] = k;
        if (m == 1 && n >= 1)
            for (auto& [key, c] : p.t)
                if (!is_zero(re_part(c))) {
                    if (why) *why = "Re F_{1," + std::to_string(n) + "} != 0";
                    return false;
                }
        if (m == 0 && n >= 1 && l >= b.k0 && !p.empty()) {
            if (why) *why = "F^(" + std::to_string(l + 1) + ")_{0," + std::to_string(n) + "} != 0";
            return false;
        }
    }
    for (auto& [k, p] : T.G)
        if (k.first == 0 && k.second >= 2)
            for (auto& [key, c] : p.t)
                if (!is_zero(re_part(c))) {
                    if (why) *why = "Re G_{0," + std::to_string(k.second) + "} != 0";
                    return false;
                }
    return true;
}

struct DegreeCheck {
    int degree = 0;
    bool g_ok = true, f_ok = true, level2_ok = true;
    double worst = 0;
    std::string first_violation;
};

// Full normal-form membership at degree r: G family on Im φ, F family on Re φ,
// the e = 2 and e = 1 levels of Re φ.
template <class S>
DegreeCheck check_normalized(const Poly<S>& phi, int r, const FischerContext<S>& ctx) {
    DegreeCheck dc;
    dc.degree = r;
    ConditionSet<S> cs(ctx, r);
    Poly<S> p = phi;
    p.deg = r;
    std::vector<std::string> labels;
    auto v = cs.evaluate(p, &labels);
    for (size_t i = 0; i < v.size(); ++i) {
        double mag = magnitude(v[i]);
        if (mag <= tolerance_for<S>() && (tolerance_for<S>() > 0 || is_zero(v[i]))) continue;
        dc.worst = std::max(dc.worst, mag);
        const auto& lab = labels[i];
        if (lab.rfind("G", 0) == 0)
            dc.g_ok = false;
        else if (lab.rfind("F", 0) == 0)
            dc.f_ok = false;
        else
            dc.level2_ok = false;
        if (dc.first_violation.empty()) dc.first_violation = lab;
    }
    return dc;
}

// Literal reading ∂z_i∂z̄_j + λ_i∂z_i∂z_j + λ_i∂z̄_i∂z̄_j on the degree-2 quotient
// of the F chain (diagnostic only).
template <class S>
double level2_literal(const Poly<S>& phi, int r, const FischerContext<S>& ctx) {
    if (r % 2 != 0 || r < 2) return 0;
    const auto& b = ctx.bishop();
    Poly<S> re = real_part(phi);
    re.deg = r;
    auto ch = ctx.chain(re, Flavor::F);
    const Poly<S>& P2 = ch.P.back();
    const int N = b.N;
    double worst = 0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            Poly<S> v = diff(diff(P2, i), N + j);
            Poly<S> t1 = diff(diff(P2, i), j);
            Poly<S> t2 = diff(diff(P2, N + i), N + j);
            v += (t1 + t2) * from_q<S>(b.lambda[i]);
            worst = std::max(worst, max_abs_coeff(v));
        }
    return worst;
}

// lowest k with φ_k != 0, or max_degree + 1
template <class S>
int error_order(const ManifoldSeries<S>& M) {
    for (auto& [k, p] : M.phi)
        if (!p.empty()) return k;
    return M.max_degree + 1;
}

struct DoublingProbe {
    int order_in = 0;
    int order_out = 0;
    int d = 0;
    bool ok() const { return order_out >= 2 * d - 2; }
};

// normalize through weight d, push M through the result and measure the new
// error order up to degree dmax
template <class S>
DoublingProbe degree_doubling(const ManifoldSeries<S>& M, int dmax) {
    DoublingProbe r;
    r.order_in = r.d = error_order(M);
    if (r.d > M.max_degree) throw std::invalid_argument("degree_doubling: input has no error");
    auto T = normalize(M, r.d).T;
    auto M2 = transform(M, T, dmax);
    r.order_out = error_order(M2);
    return r;
}

}  // namespace bishop
