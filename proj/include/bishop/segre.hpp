#pragma once
// Complexified (z, ξ) mode: decompositions with the independent-kind quadric,
// the paired normal form, model-map residuals and the rigidity probe.

#include "bishop/blocksys.hpp"
#include "bishop/normalform.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

namespace bishop {

// ν-equation term phiBar is stored in the same (z, ξ) variables as phi;
// for a complexified real manifold phiBar = conj_swap(phi).
template <class S>
struct SegreManifold {
    BishopData b;
    int max_degree = 3;
    std::map<int, Poly<S>> phi, phiBar;

    static SegreManifold complexify(const ManifoldSeries<S>& M) {
        SegreManifold s;
        s.b = M.b;
        s.max_degree = M.max_degree;
        for (auto& [k, p] : M.phi) {
            s.phi[k] = with_kind(p, Kind::independent);
            s.phiBar[k] = with_kind(conj_swap(p), Kind::independent);
        }
        return s;
    }
    Poly<S> total(const std::map<int, Poly<S>>& m, int dmax) const {
        Poly<S> r(b.N, Kind::independent, -1);
        for (auto& [k, p] : m)
            if (k <= dmax) r += p;
        return r;
    }
};

template <class S>
struct SegreTransform {
    int N = 1, Nt = 1, weight = 1;
    std::map<GKey, Poly<S>> G, Gt;  // coefficient polynomials in the first variable block
    std::map<FKey, Poly<S>> F, Ft;

    static SegreTransform identity(int N, int Nt, int weight) {
        SegreTransform t;
        t.N = N;
        t.Nt = Nt;
        t.weight = weight;
        t.G[{0, 1}] = constant_poly<S>(N, Kind::conjugate, S(1));
        t.Gt = t.G;
        for (int l = 0; l < std::min(N, Nt); ++l) t.F[{l, 1, 0}] = var_poly<S>(N, Kind::conjugate, l);
        t.Ft = t.F;
        return t;
    }
    static SegreTransform complexify(const FormalTransform<S>& T) {
        SegreTransform s;
        s.N = T.N;
        s.Nt = T.Nt;
        s.weight = T.weight;
        s.G = T.G;
        s.F = T.F;
        for (auto& [k, p] : T.G) s.Gt[k] = conj_coeffs(p);
        for (auto& [k, p] : T.F) s.Ft[k] = conj_coeffs(p);
        return s;
    }
    template <class M>
    static void add(M& m, const typename M::key_type& k, int deg, int N, Key key, const S& c) {
        auto it = m.try_emplace(k, Poly<S>(N, Kind::conjugate, deg)).first;
        it->second.add(key, c);
        if (it->second.empty()) m.erase(it);
    }
    void prune() {
        auto pr = [](auto& m) {
            for (auto it = m.begin(); it != m.end();) it = it->second.empty() ? m.erase(it) : std::next(it);
        };
        pr(G);
        pr(Gt);
        pr(F);
        pr(Ft);
    }
    friend bool operator==(const SegreTransform& a, const SegreTransform& b) {
        SegreTransform x = a, y = b;
        x.prune();
        y.prune();
        return x.N == y.N && x.Nt == y.Nt && x.G == y.G && x.Gt == y.Gt && x.F == y.F && x.Ft == y.Ft;
    }
};

// z-polynomial coefficients moved to the ξ block, independent kind
template <class S>
Poly<S> to_xi(const Poly<S>& p) {
    return with_kind(swap_vars(p), Kind::independent);
}

template <class S>
std::map<GKey, Poly<S>> lift_series(const std::map<GKey, Poly<S>>& m, bool xi) {
    std::map<GKey, Poly<S>> r;
    for (auto& [k, p] : m) r[k] = xi ? to_xi(p) : with_kind(p, Kind::independent);
    return r;
}

template <class S>
std::map<GKey, Poly<S>> component(const std::map<FKey, Poly<S>>& F, int l) {
    std::map<GKey, Poly<S>> out;
    for (auto& [k, p] : F)
        if (std::get<0>(k) == l) out[{std::get<1>(k), std::get<2>(k)}] = p;
    return out;
}

// (E1, E2) = (G(z,W) - Q'(Z,Ξ) - φ'(Z,Ξ), G̃(ξ,V) - Q'(Z,Ξ) - ψ'(Z,Ξ)),
// W = Q + φ, V = Q + ψ, Z = F(z,W), Ξ = F̃(ξ,V)
template <class S>
std::pair<Poly<S>, Poly<S>> segre_residual(const Poly<S>& phi, const Poly<S>& psi, const BishopData& bs, const SegreTransform<S>& T,
                                           const Poly<S>& phit, const Poly<S>& psit, const BishopData& bt, int dmax) {
    Poly<S> Q = quadric<S>(bs, Kind::independent);
    Poly<S> W = truncate(Q + phi, dmax), V = truncate(Q + psi, dmax);
    W.deg = V.deg = -1;
    int nmax = 0;
    for (auto* m : {&T.G, &T.Gt})
        for (auto& [k, p] : *m) nmax = std::max(nmax, k.second);
    for (auto* m : {&T.F, &T.Ft})
        for (auto& [k, p] : *m) nmax = std::max(nmax, std::get<2>(k));
    auto Wp = power_table(W, nmax, dmax), Vp = power_table(V, nmax, dmax);
    Poly<S> E1 = eval_series(lift_series(T.G, false), Wp, dmax);
    Poly<S> E2 = eval_series(lift_series(T.Gt, true), Vp, dmax);
    std::vector<Poly<S>> img(2 * T.Nt);
    for (int l = 0; l < T.Nt; ++l) {
        img[l] = eval_series(lift_series(component(T.F, l), false), Wp, dmax);
        img[T.Nt + l] = eval_series(lift_series(component(T.Ft, l), true), Vp, dmax);
    }
    Substituter<S> sub(img, dmax);
    Poly<S> q = sub.apply(quadric<S>(bt, Kind::independent));
    E1 -= q;
    E2 -= q;
    if (!phit.empty()) E1 -= sub.apply(phit);
    if (!psit.empty()) E2 -= sub.apply(psit);
    return {truncate(E1, dmax), truncate(E2, dmax)};
}

// ---------------------------------------------------------------- decompose_c

// P = A·Q + C for independent-kind P, solved through the block elimination
template <class S>
class SegreDecomposer {
public:
    using R = real_t<S>;
    explicit SegreDecomposer(BishopData b) : b_(std::move(b)) {}
    const BishopData& bishop() const { return b_; }

    DecompResult<S> decompose(const Poly<S>& P) {
        if (P.kind != Kind::independent) throw std::invalid_argument("decompose_c: independent kind expected");
        if (P.N != b_.N) throw std::invalid_argument("decompose_c: dimension mismatch");
        if (P.deg < 2) throw std::invalid_argument("decompose_c: degree must be >= 2");
        const int q = P.deg - 2;
        auto& sys = base(q);
        auto t = trace(P, b_);
        BlockSystem<R> re = sys, im = sys;
        for (auto& [key, c] : t.t) {
            int k = key_bar_degree(key, b_.N);
            auto& B = sys.basis[k];
            int i = int(std::lower_bound(B.begin(), B.end(), key) - B.begin());
            re.rhs[k][i] = re_part(c);
            im.rhs[k][i] = im_part(c);
        }
        auto Yr = solve_elimination(re), Yi = solve_elimination(im);
        Poly<S> A(b_.N, Kind::independent, q);
        for (int k = 0; k < sys.nblocks(); ++k)
            for (size_t i = 0; i < Yr[k].size(); ++i) A.add(sys.basis[k][i], make_complex(Yr[k][i], Yi[k][i]));
        Poly<S> C = P - mul(A, quadric<S>(b_, Kind::independent));
        C.deg = P.deg;
        return {A, C};
    }

private:
    BlockSystem<R>& base(int q) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = cache_.find(q);
        if (it != cache_.end()) return it->second;
        BlockSystem<R> s;
        s.p = q + 2;
        s.q = q;
        s.basis = bidegree_basis(q, b_.N);
        for (auto& B : s.basis) s.dims.push_back(int(B.size()));
        s.blocks = operator_blocks<R>(q, b_, s.basis);
        s.rhs.resize(q + 1);
        for (int k = 0; k <= q; ++k) s.rhs[k].assign(s.dims[k], R(0));
        return cache_.emplace(q, std::move(s)).first->second;
    }
    BishopData b_;
    std::mutex mu_;
    std::map<int, BlockSystem<R>> cache_;
};

template <class S>
DecompResult<S> decompose_c(const Poly<S>& P, const BishopData& b) {
    return SegreDecomposer<S>(b).decompose(P);
}

// ---------------------------------------------------------------- normal form

// Complex functionals on the pair (φ', ψ'): G family on D = (φ'-ψ')/2i,
// F family on S = (φ'+ψ')/2, both generator sets and their variable swaps.
template <class S>
class SegreConditionSet {
public:
    SegreConditionSet(const FischerContext<S>& ctx, int r) : ctx_(ctx), r_(r) {
        const auto& b = ctx.bishop();
        for (int e = r; e >= 3; e -= 2) {
            auto nb = norm_basis<S>(e, b, Flavor::F, &ctx);
            std::vector<Poly<S>> half;
            for (size_t i = 0; i < nb.generators.size(); i += 2) half.push_back(with_kind(nb.generators[i], Kind::independent));
            fgen_[e] = std::move(half);
        }
    }

    std::vector<S> evaluate(const Poly<S>& p1, const Poly<S>& p2, std::vector<std::string>* labels = nullptr) const {
        const auto& b = ctx_.bishop();
        const int N = b.N;
        std::vector<S> out;
        auto push = [&](const S& v, const std::string& lab) {
            out.push_back(v);
            if (labels) labels->push_back(lab);
        };
        Poly<S> Sp = (p1 + p2) * from_q<S>(mpq_class(1, 2));
        Poly<S> Dp = (p1 - p2) * from_q<S>(0, mpq_class(-1, 2));
        Sp.deg = Dp.deg = r_;
        Sp.kind = Dp.kind = Kind::independent;
        auto chD = ctx_.chain(Dp, Flavor::G);
        auto chS = ctx_.chain(Sp, Flavor::G);
        const MultiIndex zero(N, 0);
        for (int k = 0; k < int(chD.P.size()); ++k) {
            const int e = r_ - 2 * k;
            const Poly<S>& L = level_poly(chD, k);
            if (e == 0) {
                push(L.coeff(0), "G e=0");
                continue;
            }
            for (auto& I : compositions(e, N)) {
                push(fischer_bilinear(L, monomial<S>(N, Kind::independent, I, zero)), "G z e=" + std::to_string(e));
                push(fischer_bilinear(L, monomial<S>(N, Kind::independent, zero, I)), "G xi e=" + std::to_string(e));
            }
        }
        for (int k = 0; k < int(chS.P.size()); ++k) {
            const int e = r_ - 2 * k;
            const Poly<S>& L = level_poly(chS, k);
            auto gen = [&](int l, const MultiIndex& J) { return with_kind(f_generator<S>(l, J, b), Kind::independent); };
            if (e >= 3) {
                for (auto& g : fgen_.at(e)) {
                    push(fischer_bilinear(L, g), "F e=" + std::to_string(e));
                    push(fischer_bilinear(L, swap_vars(g)), "F swap e=" + std::to_string(e));
                }
            } else if (e == 2) {
                for (int l = 0; l < N; ++l)
                    for (int m = 0; m < N; ++m) {
                        if (l >= b.k0 && m >= b.k0 && l >= m) continue;
                        MultiIndex J(N, 0);
                        J[m] = 1;
                        auto g = gen(l, J);
                        push(fischer_bilinear(L, g) - fischer_bilinear(L, swap_vars(g)), "level2 " + std::to_string(l + 1) + "," + std::to_string(m + 1));
                    }
            } else if (e == 1) {
                for (int l = 0; l < b.k0; ++l) {
                    auto g = gen(l, zero);
                    push(fischer_bilinear(L, g), "level1 " + std::to_string(l + 1));
                    push(fischer_bilinear(L, swap_vars(g)), "level1 swap " + std::to_string(l + 1));
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

struct SegreUnknown {
    enum Type { G, Gt, G0, F, Ft, F1 } type = G;  // G0: g = -g̃, F1: F = -F̃
    int l = 0, m = 0, n = 0;
    Key key = 0;
};

inline std::vector<SegreUnknown> segre_unknowns(int r, const BishopData& b) {
    std::vector<SegreUnknown> u;
    const int N = b.N;
    for (int n = 0; 2 * n <= r; ++n) {
        const int m = r - 2 * n;
        for (Key k : z_monomials(m, N)) {
            if (m == 0) {
                u.push_back({SegreUnknown::G0, 0, m, n, k});
            } else {
                u.push_back({SegreUnknown::G, 0, m, n, k});
                u.push_back({SegreUnknown::Gt, 0, m, n, k});
            }
        }
    }
    for (int l = 0; l < N; ++l)
        for (int n = 0; 2 * n <= r - 1; ++n) {
            const int m = r - 1 - 2 * n;
            if (m == 0 && l >= b.k0) continue;
            for (Key k : z_monomials(m, N)) {
                if (m == 1) {
                    u.push_back({SegreUnknown::F1, l, m, n, k});
                } else {
                    u.push_back({SegreUnknown::F, l, m, n, k});
                    u.push_back({SegreUnknown::Ft, l, m, n, k});
                }
            }
        }
    return u;
}

template <class S>
std::pair<Poly<S>, Poly<S>> segre_column(const SegreUnknown& u, const BishopData& b, int r) {
    const int N = b.N;
    Poly<S> Qn = constant_poly<S>(N, Kind::independent, S(1));
    Poly<S> Q = quadric<S>(b, Kind::independent);
    for (int i = 0; i < u.n; ++i) Qn = mul(Qn, Q);
    Poly<S> zm(N, Kind::independent, u.m);
    zm.add(u.key, S(1));
    Poly<S> ym = swap_vars(zm);
    auto gz = [&](int l) { return with_kind(f_generator<S>(l, MultiIndex(N, 0), b), Kind::independent); };
    Poly<S> c1(N, Kind::independent, r), c2(N, Kind::independent, r);
    switch (u.type) {
        case SegreUnknown::G: c1 = mul(zm, Qn); break;
        case SegreUnknown::Gt: c2 = mul(ym, Qn); break;
        case SegreUnknown::G0:
            c1 = Qn;
            c2 = -Qn;
            break;
        case SegreUnknown::F: c1 = c2 = -mul(mul(gz(u.l), zm), Qn); break;
        case SegreUnknown::Ft: c1 = c2 = -mul(mul(swap_vars(gz(u.l)), ym), Qn); break;
        case SegreUnknown::F1: c1 = c2 = -(mul(mul(gz(u.l), zm), Qn) - mul(mul(swap_vars(gz(u.l)), ym), Qn)); break;
    }
    c1.deg = c2.deg = r;
    return {c1, c2};
}

template <class S>
void apply_segre_unknown(SegreTransform<S>& T, const SegreUnknown& u, const S& v) {
    if (is_zero(v)) return;
    using ST = SegreTransform<S>;
    const int N = T.N;
    switch (u.type) {
        case SegreUnknown::G: ST::add(T.G, GKey{u.m, u.n}, u.m, N, u.key, v); break;
        case SegreUnknown::Gt: ST::add(T.Gt, GKey{u.m, u.n}, u.m, N, u.key, v); break;
        case SegreUnknown::G0:
            ST::add(T.G, GKey{u.m, u.n}, u.m, N, u.key, v);
            ST::add(T.Gt, GKey{u.m, u.n}, u.m, N, u.key, -v);
            break;
        case SegreUnknown::F: ST::add(T.F, FKey{u.l, u.m, u.n}, u.m, N, u.key, v); break;
        case SegreUnknown::Ft: ST::add(T.Ft, FKey{u.l, u.m, u.n}, u.m, N, u.key, v); break;
        case SegreUnknown::F1:
            ST::add(T.F, FKey{u.l, u.m, u.n}, u.m, N, u.key, v);
            ST::add(T.Ft, FKey{u.l, u.m, u.n}, u.m, N, u.key, -v);
            break;
    }
}

template <class S>
struct SegreWeightSystem {
    std::vector<SegreUnknown> unknowns;
    std::vector<std::pair<Poly<S>, Poly<S>>> columns;
    std::unique_ptr<SegreConditionSet<S>> conditions;
    Elimination<S> elim;
    int rows = 0;
};

template <class S>
class SegreNormalizer {
public:
    explicit SegreNormalizer(const BishopData& b) : ctx_(b) {
        if (b.k0 == 0) throw std::invalid_argument("normalize_segre: all Bishop invariants vanish");
        if (!b.nonzero_first()) throw std::invalid_argument("normalize_segre: nonzero invariants must come first");
        for (auto& l : b.lambda)
            if (l < 0) throw std::invalid_argument("normalize_segre: negative invariant");
    }
    const FischerContext<S>& context() const { return ctx_; }

    const SegreWeightSystem<S>& system(int r) {
        std::lock_guard<std::mutex> lk(mu_);
        auto it = sys_.find(r);
        if (it != sys_.end()) return *it->second;
        auto ws = std::make_unique<SegreWeightSystem<S>>();
        const auto& b = ctx_.bishop();
        ws->unknowns = segre_unknowns(r, b);
        ws->conditions = std::make_unique<SegreConditionSet<S>>(ctx_, r);
        std::vector<std::vector<S>> cols;
        for (auto& u : ws->unknowns) {
            ws->columns.push_back(segre_column<S>(u, b, r));
            cols.push_back(ws->conditions->evaluate(ws->columns.back().first, ws->columns.back().second));
        }
        const int m = int(cols.at(0).size());
        Mat<S> K(m, int(cols.size()));
        for (int j = 0; j < int(cols.size()); ++j)
            for (int i = 0; i < m; ++i) K(i, j) = cols[j][i];
        ws->rows = m;
        ws->elim = eliminate(K, 1e-11);
        if (ws->elim.rank < int(cols.size()))
            throw NormalizeError("singular Segre normal form system at weight " + std::to_string(r) + " (rank " +
                                 std::to_string(ws->elim.rank) + " of " + std::to_string(cols.size()) + ")");
        auto* p = ws.get();
        sys_.emplace(r, std::move(ws));
        return *p;
    }

private:
    FischerContext<S> ctx_;
    std::mutex mu_;
    std::map<int, std::unique_ptr<SegreWeightSystem<S>>> sys_;
};

template <class S>
struct SegreResult {
    SegreTransform<S> T;
    SegreManifold<S> M;
    std::map<int, double> residual;
};

template <class S>
SegreResult<S> normalize_segre(const SegreManifold<S>& M, int dmax, SegreNormalizer<S>* nz = nullptr) {
    if (dmax < 3) throw std::invalid_argument("normalize_segre: max degree must be >= 3");
    std::unique_ptr<SegreNormalizer<S>> own;
    if (!nz) {
        own = std::make_unique<SegreNormalizer<S>>(M.b);
        nz = own.get();
    }
    const auto& b = M.b;
    SegreResult<S> out;
    out.T = SegreTransform<S>::identity(b.N, b.N, dmax);
    out.M.b = b;
    out.M.max_degree = dmax;
    Poly<S> phi = M.total(M.phi, dmax), psi = M.total(M.phiBar, dmax);
    for (int r = 3; r <= dmax; ++r) {
        auto [E1, E2] = segre_residual(phi, psi, b, out.T, out.M.total(out.M.phi, r), out.M.total(out.M.phiBar, r), b, r);
        Poly<S> r1 = part(E1, r), r2 = part(E2, r);
        const auto& ws = nz->system(r);
        auto c = ws.conditions->evaluate(r1, r2);
        for (auto& v : c) v = -v;
        auto x = solve_with(ws.elim, c);
        if (!x) throw NormalizeError("Segre normal form system inconsistent at weight " + std::to_string(r));
        for (size_t j = 0; j < x->size(); ++j) {
            if (is_zero((*x)[j])) continue;
            apply_segre_unknown(out.T, ws.unknowns[j], (*x)[j]);
            r1 += ws.columns[j].first * (*x)[j];
            r2 += ws.columns[j].second * (*x)[j];
        }
        r1.deg = r2.deg = r;
        if (!r1.empty()) out.M.phi[r] = r1;
        if (!r2.empty()) out.M.phiBar[r] = r2;
    }
    out.T.prune();
    auto [E1, E2] = segre_residual(phi, psi, b, out.T, out.M.total(out.M.phi, dmax), out.M.total(out.M.phiBar, dmax), b, dmax);
    for (int r = 0; r <= dmax; ++r) out.residual[r] = std::max(max_abs_coeff(part(E1, r)), max_abs_coeff(part(E2, r)));
    return out;
}

template <class S>
DegreeCheck check_normalized_segre(const Poly<S>& p1, const Poly<S>& p2, int r, const FischerContext<S>& ctx) {
    DegreeCheck dc;
    dc.degree = r;
    SegreConditionSet<S> cs(ctx, r);
    std::vector<std::string> labels;
    Poly<S> a = p1, c = p2;
    a.deg = c.deg = r;
    auto v = cs.evaluate(a, c, &labels);
    for (size_t i = 0; i < v.size(); ++i) {
        double mag = magnitude(v[i]);
        if (is_zero(v[i]) || mag <= tolerance_for<S>()) continue;
        dc.worst = std::max(dc.worst, mag);
        if (labels[i][0] == 'G')
            dc.g_ok = false;
        else if (labels[i][0] == 'F')
            dc.f_ok = false;
        else
            dc.level2_ok = false;
        if (dc.first_violation.empty()) dc.first_violation = labels[i];
    }
    return dc;
}

// ---------------------------------------------------------------- model maps

struct MapReport {
    std::map<int, double> residual;  // degree -> max |coefficient|
    bool zero() const {
        for (auto& [d, v] : residual)
            if (v != 0) return false;
        return true;
    }
};

inline void check_map_dims(int N, int Nt, const BishopData& b, const BishopData& bt) {
    if (N > Nt) throw std::invalid_argument("verify_model_map: N must not exceed N'");
    if (b.N != N || bt.N != Nt) throw std::invalid_argument("verify_model_map: dimension mismatch");
}

template <class S>
MapReport verify_model_map(const FormalTransform<S>& T, int N, int Nt, const BishopData& b, const BishopData& bt, int d) {
    check_map_dims(N, Nt, b, bt);
    if (T.N != N || T.Nt != Nt) throw std::invalid_argument("verify_model_map: transform dimensions");
    Poly<S> E = transform_residual(Poly<S>(N, Kind::conjugate, -1), b, T, Poly<S>(Nt, Kind::conjugate, -1), bt, d);
    MapReport rep;
    for (int k = 0; k <= d; ++k) rep.residual[k] = max_abs_coeff(part(E, k));
    return rep;
}

template <class S>
MapReport verify_model_map(const SegreTransform<S>& T, int N, int Nt, const BishopData& b, const BishopData& bt, int d) {
    check_map_dims(N, Nt, b, bt);
    if (T.N != N || T.Nt != Nt) throw std::invalid_argument("verify_model_map: transform dimensions");
    Poly<S> z(N, Kind::independent, -1), zt(Nt, Kind::independent, -1);
    auto [E1, E2] = segre_residual(z, z, b, T, zt, zt, bt, d);
    MapReport rep;
    for (int k = 0; k <= d; ++k) rep.residual[k] = std::max(max_abs_coeff(part(E1, k)), max_abs_coeff(part(E2, k)));
    return rep;
}

// ---------------------------------------------------------------- rigidity probe

struct RigidityReport {
    std::map<int, int> unknowns;  // degree -> normalized unknowns entering linearly
    std::map<int, int> kernel;    // degree -> kernel dimension of the linear part
    bool quadratic_certified = false;
    double certificate_margin = 0;  // min eigenvalue of the certifying form
    int quadratic_unknowns = 0;
    bool rigid() const {
        for (auto& [d, k] : kernel)
            if (k != 0) return false;
        return quadratic_certified;
    }
};

namespace detail {

// real coordinates (re, im of each coefficient) of a polynomial at degree r
template <class S>
std::vector<mpq_class> real_coords(const Poly<S>& p, const std::vector<Key>& basis) {
    std::vector<mpq_class> v;
    for (Key k : basis) {
        S c = p.coeff(k);
        if constexpr (std::is_same_v<S, Gq>) {
            v.push_back(c.re);
            v.push_back(c.im);
        } else {
            v.push_back(mpq_class(c.real()));
            v.push_back(mpq_class(c.imag()));
        }
    }
    return v;
}

// Sylvester's criterion on an exact symmetric matrix
inline bool positive_definite(const Mat<mpq_class>& H) {
    const int n = H.rows;
    for (int k = 1; k <= n; ++k) {
        Mat<mpq_class> M(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) M(i, j) = H(i, j);
        mpq_class det = 1;
        Mat<mpq_class> A = M;
        for (int c = 0; c < k; ++c) {
            int piv = -1;
            for (int r = c; r < k; ++r)
                if (A(r, c) != 0) {
                    piv = r;
                    break;
                }
            if (piv < 0) return false;
            if (piv != c) {
                for (int j = 0; j < k; ++j) std::swap(A(piv, j), A(c, j));
                det = -det;
            }
            det *= A(c, c);
            for (int r = c + 1; r < k; ++r) {
                mpq_class f = A(r, c) / A(c, c);
                for (int j = c; j < k; ++j) A(r, j) -= f * A(c, j);
            }
        }
        if (det <= 0) return false;
    }
    return true;
}

// find t with Σ t_i H_i positive definite (H_i symmetric); returns margin
inline std::optional<std::vector<mpq_class>> certify_positive(const std::vector<Mat<mpq_class>>& H, double* margin) {
    if (H.empty()) return std::nullopt;
    const int n = H[0].rows, m = int(H.size());
    std::vector<Eigen::MatrixXd> Hd;
    for (auto& h : H) {
        Eigen::MatrixXd e(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) e(i, j) = h(i, j).get_d();
        Hd.push_back(e);
    }
    auto lam_min = [&](const Eigen::VectorXd& t, Eigen::VectorXd* vec) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < m; ++i) M += t(i) * Hd[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        if (vec) *vec = es.eigenvectors().col(0);
        return es.eigenvalues()(0);
    };
    // projected supergradient ascent on the unit sphere, several deterministic starts
    Eigen::VectorXd best_t;
    double best = -1e300;
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    for (int start = 0; start < m + 20; ++start) {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(m);
        if (start < m)
            t(start) = 1;
        else
            for (int i = 0; i < m; ++i) t(i) = nd(rng);
        t.normalize();
        double step = 0.5;
        for (int it = 0; it < 400; ++it) {
            Eigen::VectorXd v;
            double val = lam_min(t, &v);
            if (val > best) {
                best = val;
                best_t = t;
            }
            Eigen::VectorXd g(m);
            for (int i = 0; i < m; ++i) g(i) = v.dot(Hd[i] * v);
            g -= g.dot(t) * t;
            if (g.norm() < 1e-14) break;
            t += step * g / g.norm();
            t.normalize();
            step *= 0.98;
        }
    }
    if (margin) *margin = best;
    if (best <= 0) return std::nullopt;
    std::vector<mpq_class> tq(m);
    for (int i = 0; i < m; ++i) {
        tq[i] = mpq_class(long(std::llround(best_t(i) * 1e9)), 1000000000L);
        tq[i].canonicalize();
    }
    Mat<mpq_class> M(n, n);
    for (int i = 0; i < m; ++i)
        for (size_t k = 0; k < M.a.size(); ++k) M.a[k] += tq[i] * H[i].a[k];
    if (!positive_definite(M)) return std::nullopt;
    return tq;
}

}  // namespace detail

// Maps from the N = 1 model to the N' = 2 model, linear part fixed to the
// standard embedding, normalization (o) on the first component. Degrees 3 and
// 5: kernel of the linear equations. Degree 4: the weight-2 pieces of the
// second component enter only through h(f) = |f|² + λ'_2(f² + f̄²); a
// functional vanishing on the linear image and positive on h forces f = 0.
inline RigidityReport rigidity_probe(const BishopData& b, const BishopData& bt, int dmax, bool segre) {
    if (b.N != 1 || bt.N != 2) throw std::invalid_argument("rigidity_probe: N = 1, N' = 2 expected");
    if (bt.lambda[0] != b.lambda[0]) throw std::invalid_argument("rigidity_probe: λ'_1 must equal λ_1");
    RigidityReport rep;
    const int N = 1;
    for (int r = 3; r <= dmax; ++r) {
        auto basis = monomials_of_degree(r, N);
        Mat<mpq_class> L;
        int nu = 0;
        if (!segre) {
            auto us = weight_unknowns(r, b);
            nu = int(us.size());
            L = Mat<mpq_class>(2 * int(basis.size()), nu);
            for (int j = 0; j < nu; ++j) {
                auto v = detail::real_coords(unknown_column<Gq>(us[j], b, r), basis);
                for (size_t i = 0; i < v.size(); ++i) L(int(i), j) = v[i];
            }
        } else {
            // complex unknowns as pairs of real parameters; equations on (E1, E2)
            auto us = segre_unknowns(r, b);
            nu = 2 * int(us.size());
            L = Mat<mpq_class>(4 * int(basis.size()), nu);
            for (int j = 0; j < int(us.size()); ++j)
                for (int part_im = 0; part_im < 2; ++part_im) {
                    auto [c1, c2] = segre_column<Gq>(us[j], b, r);
                    if (part_im) {
                        c1 *= Gq(0, 1);
                        c2 *= Gq(0, 1);
                    }
                    auto v1 = detail::real_coords(c1, basis), v2 = detail::real_coords(c2, basis);
                    for (size_t i = 0; i < v1.size(); ++i) {
                        L(int(i), 2 * j + part_im) = v1[i];
                        L(int(v1.size() + i), 2 * j + part_im) = v2[i];
                    }
                }
        }
        rep.unknowns[r] = nu;
        rep.kernel[r] = nu - rank_of(L);
        if (r != 4) continue;
        // left null space of L: functionals vanishing on the linear image
        Mat<mpq_class> LT(L.cols, L.rows);
        for (int i = 0; i < L.rows; ++i)
            for (int j = 0; j < L.cols; ++j) LT(j, i) = L(i, j);
        auto ells = nullspace(LT);
        // f = a z² + c Q with a, c complex: real parameters (Re a, Im a, Re c, Im c)
        const Poly<Gq> Q = quadric<Gq>(b, segre ? Kind::independent : Kind::conjugate);
        const Kind kind = segre ? Kind::independent : Kind::conjugate;
        std::vector<Poly<Gq>> dirs;
        dirs.push_back(monomial<Gq>(N, kind, {2}, {0}));
        dirs.push_back(monomial<Gq>(N, kind, {2}, {0}, Gq(0, 1)));
        dirs.push_back(Q);
        dirs.push_back(Q * Gq(0, 1));
        const int nd = int(dirs.size());
        rep.quadratic_unknowns = nd;
        const mpq_class l2 = bt.lambda[1];
        // h(f) = f f̃ + λ'_2 (f² + f̃²), f̃ = conj twin (reality restriction in the Segre mode)
        auto twin = [&](const Poly<Gq>& f) { return segre ? swap_vars(conj_coeffs(f)) : conj_swap(f); };
        auto hb = [&](const Poly<Gq>& f, const Poly<Gq>& g) {
            // symmetric bilinear form of h
            Poly<Gq> ft = twin(f), gt = twin(g);
            Poly<Gq> r = (mul(f, gt) + mul(g, ft)) * Gq(mpq_class(1, 2));
            r += (mul(f, g) + mul(ft, gt)) * Gq(l2);
            return r;
        };
        std::vector<Mat<mpq_class>> forms;
        for (auto& ell : ells) {
            Mat<mpq_class> H(nd, nd);
            for (int i = 0; i < nd; ++i)
                for (int j = 0; j < nd; ++j) {
                    Poly<Gq> h = hb(dirs[i], dirs[j]);
                    std::vector<mpq_class> v;
                    if (!segre) {
                        v = detail::real_coords(h, basis);
                    } else {
                        auto v1 = detail::real_coords(h, basis);
                        v = v1;
                        v.insert(v.end(), v1.begin(), v1.end());
                    }
                    mpq_class s = 0;
                    for (size_t k = 0; k < v.size(); ++k) s += ell[k] * v[k];
                    H(i, j) = s;
                }
            forms.push_back(H);
            Mat<mpq_class> Hn = H;
            for (auto& x : Hn.a) x = -x;
            forms.push_back(Hn);
        }
        double margin = 0;
        auto cert = detail::certify_positive(forms, &margin);
        rep.quadratic_certified = cert.has_value();
        rep.certificate_margin = margin;
    }
    if (dmax < 4) rep.quadratic_certified = true;
    return rep;
}

}  // namespace bishop
