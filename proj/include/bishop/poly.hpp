#pragma once
// Sparse polynomials in (z, z̄) or (z, ξ) with packed exponent keys.
// Key layout: 8 bits per variable, z_1 in the most significant used byte, so
// ascending key order is the lexicographic order on (z_1..z_N; y_1..y_N).

#include "bishop/scalar.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bishop {

enum class Kind { conjugate, independent };

inline const char* kind_name(Kind k) { return k == Kind::conjugate ? "conjugate" : "independent"; }

constexpr int kMaxVars = 8;
using Key = std::uint64_t;
using Exps = std::array<int, kMaxVars>;
using MultiIndex = std::vector<int>;

inline int shift_of(int v, int nv) { return 8 * (nv - 1 - v); }

inline Key make_key(const MultiIndex& I, const MultiIndex& J) {
    const int N = static_cast<int>(I.size());
    if (J.size() != I.size()) throw std::invalid_argument("multi-index length mismatch");
    if (2 * N > kMaxVars) throw std::invalid_argument("ambient dimension too large (N <= 4)");
    Key k = 0;
    for (int v = 0; v < N; ++v) {
        if (I[v] < 0 || J[v] < 0 || I[v] > 255 || J[v] > 255) throw std::invalid_argument("exponent out of range");
        k |= Key(I[v]) << shift_of(v, 2 * N);
        k |= Key(J[v]) << shift_of(N + v, 2 * N);
    }
    return k;
}

inline int exp_of(Key k, int v, int nv) { return int((k >> shift_of(v, nv)) & 0xff); }

inline Exps exps_of(Key k, int nv) {
    Exps e{};
    for (int v = 0; v < nv; ++v) e[v] = exp_of(k, v, nv);
    return e;
}

inline Key key_of(const Exps& e, int nv) {
    Key k = 0;
    for (int v = 0; v < nv; ++v) k |= Key(e[v]) << shift_of(v, nv);
    return k;
}

inline Key unit_key(int v, int nv) { return Key(1) << shift_of(v, nv); }

inline int key_degree(Key k, int nv) {
    int d = 0;
    for (int v = 0; v < nv; ++v) d += exp_of(k, v, nv);
    return d;
}

// degree in the second block (z̄ or ξ)
inline int key_bar_degree(Key k, int N) {
    int d = 0;
    for (int v = N; v < 2 * N; ++v) d += exp_of(k, v, 2 * N);
    return d;
}

inline Key swap_halves(Key k, int N) {
    Exps e = exps_of(k, 2 * N), s{};
    for (int v = 0; v < N; ++v) {
        s[v] = e[N + v];
        s[N + v] = e[v];
    }
    return key_of(s, 2 * N);
}

inline int index_abs(const MultiIndex& I) {
    int s = 0;
    for (int x : I) s += x;
    return s;
}

// all I in N^N with |I| = n, in descending lexicographic order
inline std::vector<MultiIndex> compositions(int n, int N) {
    std::vector<MultiIndex> out;
    MultiIndex cur(N, 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == N - 1) {
            cur[pos] = left;
            out.push_back(cur);
            return;
        }
        for (int a = left; a >= 0; --a) {
            cur[pos] = a;
            self(self, pos + 1, left - a);
        }
    };
    if (N <= 0) return out;
    rec(rec, 0, n);
    return out;
}

// all keys of total degree p in 2N variables, ascending
inline std::vector<Key> monomials_of_degree(int p, int N) {
    std::vector<Key> out;
    for (int b = 0; b <= p; ++b)
        for (auto& I : compositions(p - b, N))
            for (auto& J : compositions(b, N)) out.push_back(make_key(I, J));
    std::sort(out.begin(), out.end());
    return out;
}

inline const mpz_class& factorial(int n) {
    static std::vector<mpz_class> table = [] {
        std::vector<mpz_class> t(64);
        t[0] = 1;
        for (int i = 1; i < 64; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    if (n < 0 || n >= 64) throw std::out_of_range("factorial table");
    return table[n];
}

inline mpz_class key_factorial(Key k, int nv) {
    mpz_class f = 1;
    for (int v = 0; v < nv; ++v) f *= factorial(exp_of(k, v, nv));
    return f;
}

struct BishopData {
    int N = 0;
    std::vector<mpq_class> lambda;
    int k0 = 0;

    BishopData() = default;
    explicit BishopData(std::vector<mpq_class> lam) : N(int(lam.size())), lambda(std::move(lam)) {
        k0 = 0;
        for (auto& l : lambda)
            if (l != 0) ++k0;
    }
    // real-mode regime: each λ in [0, 1/2), not all zero, nonzero ones listed first
    void check_real_regime(bool require_nonzero = true) const {
        if (N < 1 || 2 * N > kMaxVars) throw std::invalid_argument("N must be in 1..4");
        for (auto& l : lambda)
            if (l < 0 || l >= mpq_class(1, 2)) throw std::invalid_argument("lambda outside [0,1/2)");
        if (require_nonzero && k0 == 0) throw std::invalid_argument("all Bishop invariants vanish");
        if (!nonzero_first()) throw std::invalid_argument("nonzero lambdas must come first");
    }
    bool nonzero_first() const {
        for (int i = 0; i < k0; ++i)
            if (lambda[i] == 0) return false;
        return true;
    }
};

template <class S>
struct Poly {
    int N = 1;
    Kind kind = Kind::conjugate;
    int deg = -1;  // declared homogeneous degree, -1 for a truncated series
    std::map<Key, S> t;

    Poly() = default;
    Poly(int n, Kind k, int d = -1) : N(n), kind(k), deg(d) {}

    int nv() const { return 2 * N; }
    bool empty() const { return t.empty(); }

    void add(Key k, const S& c) {
        if (is_zero(c)) return;
        auto it = t.find(k);
        if (it == t.end()) {
            t.emplace(k, c);
            return;
        }
        it->second += c;
        if (is_zero(it->second)) t.erase(it);
    }
    void sub(Key k, const S& c) {
        if (is_zero(c)) return;
        auto it = t.find(k);
        if (it == t.end()) {
            t.emplace(k, -c);
            return;
        }
        it->second -= c;
        if (is_zero(it->second)) t.erase(it);
    }
    S coeff(Key k) const {
        auto it = t.find(k);
        return it == t.end() ? S{} : it->second;
    }

    Poly& operator+=(const Poly& o) {
        for (auto& [k, c] : o.t) add(k, c);
        return *this;
    }
    Poly& operator-=(const Poly& o) {
        for (auto& [k, c] : o.t) sub(k, c);
        return *this;
    }
    Poly& operator*=(const S& s) {
        if (is_zero(s)) {
            t.clear();
            return *this;
        }
        for (auto& [k, c] : t) c *= s;
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(Poly a, const S& s) { return a *= s; }
    friend Poly operator-(Poly a) {
        for (auto& [k, c] : a.t) c = -c;
        return a;
    }
    // equality of term maps (zero-pruned)
    friend bool operator==(const Poly& a, const Poly& b) {
        return a.N == b.N && a.kind == b.kind && a.t == b.t;
    }
};

template <class S>
Poly<S> monomial(int N, Kind kind, const MultiIndex& I, const MultiIndex& J, const S& c = S(1)) {
    Poly<S> p(N, kind, index_abs(I) + index_abs(J));
    p.add(make_key(I, J), c);
    return p;
}

template <class S>
Poly<S> constant_poly(int N, Kind kind, const S& c) {
    Poly<S> p(N, kind, 0);
    p.add(0, c);
    return p;
}

template <class S>
Poly<S> var_poly(int N, Kind kind, int v) {
    Poly<S> p(N, kind, 1);
    p.add(unit_key(v, 2 * N), S(1));
    return p;
}

inline void require_compatible(int N1, Kind k1, int N2, Kind k2) {
    if (N1 != N2) throw std::invalid_argument("ambient dimension mismatch");
    if (k1 != k2) throw std::invalid_argument("variable kind mismatch");
}

template <class S>
Poly<S> mul(const Poly<S>& f, const Poly<S>& g) {
    require_compatible(f.N, f.kind, g.N, g.kind);
    Poly<S> r(f.N, f.kind, (f.deg >= 0 && g.deg >= 0) ? f.deg + g.deg : -1);
    for (auto& [a, ca] : f.t)
        for (auto& [b, cb] : g.t) r.add(a + b, ca * cb);
    return r;
}

// product keeping only terms of total degree <= dmax
template <class S>
Poly<S> mul_trunc(const Poly<S>& f, const Poly<S>& g, int dmax) {
    require_compatible(f.N, f.kind, g.N, g.kind);
    const int nv = f.nv();
    Poly<S> r(f.N, f.kind, -1);
    std::vector<std::pair<int, const std::pair<const Key, S>*>> gd;
    gd.reserve(g.t.size());
    for (auto& e : g.t) gd.push_back({key_degree(e.first, nv), &e});
    for (auto& [a, ca] : f.t) {
        int da = key_degree(a, nv);
        if (da > dmax) continue;
        for (auto& [db, e] : gd)
            if (da + db <= dmax) r.add(a + e->first, ca * e->second);
    }
    if (f.deg >= 0 && g.deg >= 0 && f.deg + g.deg <= dmax) r.deg = f.deg + g.deg;
    return r;
}

template <class S>
Poly<S> part(const Poly<S>& f, int k) {
    Poly<S> r(f.N, f.kind, k);
    for (auto& [a, c] : f.t)
        if (key_degree(a, f.nv()) == k) r.t.emplace(a, c);
    return r;
}

template <class S>
Poly<S> truncate(const Poly<S>& f, int dmax) {
    Poly<S> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t)
        if (key_degree(a, f.nv()) <= dmax) r.t.emplace(a, c);
    return r;
}

template <class S>
int lowest_degree(const Poly<S>& f) {
    int lo = -1;
    for (auto& [a, c] : f.t) {
        int d = key_degree(a, f.nv());
        if (lo < 0 || d < lo) lo = d;
    }
    return lo;
}

// bar-swap: exchange the z and z̄ blocks and conjugate coefficients
template <class S>
Poly<S> conj_swap(const Poly<S>& f) {
    Poly<S> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t) r.t.emplace(swap_halves(a, f.N), conj(c));
    return r;
}

// exchange the two variable blocks only
template <class S>
Poly<S> swap_vars(const Poly<S>& f) {
    Poly<S> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t) r.t.emplace(swap_halves(a, f.N), c);
    return r;
}

template <class S>
Poly<S> conj_coeffs(const Poly<S>& f) {
    Poly<S> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t) r.t.emplace(a, conj(c));
    return r;
}

template <class S>
Poly<S> with_kind(Poly<S> f, Kind k) {
    f.kind = k;
    return f;
}

template <class S>
bool is_real_valued(const Poly<S>& f) {
    return f.kind == Kind::conjugate && conj_swap(f) == f;
}

// (f + bar f)/2 and (f - bar f)/(2i)
template <class S>
Poly<S> real_part(const Poly<S>& f) {
    Poly<S> r = f + conj_swap(f);
    r *= S(real_t<S>(1) / real_t<S>(2));
    return r;
}
template <class S>
Poly<S> imag_part(const Poly<S>& f) {
    Poly<S> r = f - conj_swap(f);
    r *= from_q<S>(0, mpq_class(-1, 2));
    return r;
}

template <class S>
Poly<S> diff(const Poly<S>& f, int v) {
    Poly<S> r(f.N, f.kind, f.deg > 0 ? f.deg - 1 : (f.deg == 0 ? 0 : -1));
    const int nv = f.nv();
    for (auto& [a, c] : f.t) {
        int e = exp_of(a, v, nv);
        if (e == 0) continue;
        r.add(a - unit_key(v, nv), c * S(long(e)));
    }
    return r;
}

template <class S>
S lam_s(const BishopData& b, int k) {
    return from_q<S>(b.lambda[k]);
}

template <class S>
Poly<S> quadric(const BishopData& b, Kind kind) {
    Poly<S> q(b.N, kind, 2);
    const int nv = 2 * b.N;
    for (int k = 0; k < b.N; ++k) {
        q.add(unit_key(k, nv) + unit_key(b.N + k, nv), S(1));
        q.add(2 * unit_key(k, nv), lam_s<S>(b, k));
        q.add(2 * unit_key(b.N + k, nv), lam_s<S>(b, k));
    }
    return q;
}

// tr f = Σ ∂²f/∂z_k∂y_k + λ_k(∂²f/∂z_k² + ∂²f/∂y_k²)
template <class S>
Poly<S> trace(const Poly<S>& f, const BishopData& b) {
    if (f.N != b.N) throw std::invalid_argument("trace: dimension mismatch");
    const int N = f.N, nv = 2 * N;
    Poly<S> r(N, f.kind, f.deg >= 2 ? f.deg - 2 : (f.deg >= 0 ? 0 : -1));
    if (f.deg >= 0 && f.deg < 2) return r;
    for (auto& [a, c] : f.t) {
        for (int k = 0; k < N; ++k) {
            int i = exp_of(a, k, nv), j = exp_of(a, N + k, nv);
            if (i > 0 && j > 0) r.add(a - unit_key(k, nv) - unit_key(N + k, nv), c * S(long(i * j)));
            if (b.lambda[k] != 0) {
                if (i > 1) r.add(a - 2 * unit_key(k, nv), c * from_q<S>(b.lambda[k] * (i * (i - 1))));
                if (j > 1) r.add(a - 2 * unit_key(N + k, nv), c * from_q<S>(b.lambda[k] * (j * (j - 1))));
            }
        }
    }
    return r;
}

template <class S>
S key_weight(Key k, int nv) {
    return from_q<S>(mpq_class(key_factorial(k, nv)));
}

// ⟨f, g⟩ = Σ f_m conj(g_m) m!
template <class S>
S fischer_inner(const Poly<S>& f, const Poly<S>& g) {
    require_compatible(f.N, f.kind, g.N, g.kind);
    if (f.deg >= 0 && g.deg >= 0 && f.deg != g.deg) throw std::invalid_argument("fischer_inner: degree mismatch");
    S s{};
    const auto& small = f.t.size() <= g.t.size() ? f.t : g.t;
    const auto& big = f.t.size() <= g.t.size() ? g.t : f.t;
    for (auto& [a, c] : small) {
        auto it = big.find(a);
        if (it == big.end()) continue;
        const S& fc = (&small == &f.t) ? c : it->second;
        const S& gc = (&small == &f.t) ? it->second : c;
        s += fc * conj(gc) * key_weight<S>(a, f.nv());
    }
    return s;
}

// Σ f_m g_m m!, the complex-bilinear pairing used on independent variables
template <class S>
S fischer_bilinear(const Poly<S>& f, const Poly<S>& g) {
    require_compatible(f.N, f.kind, g.N, g.kind);
    S s{};
    for (auto& [a, c] : f.t) {
        auto it = g.t.find(a);
        if (it == g.t.end()) continue;
        s += c * it->second * key_weight<S>(a, f.nv());
    }
    return s;
}

// Σ m! |c_m|², no square root
template <class S>
real_t<S> fischer_energy(const Poly<S>& f) {
    real_t<S> s = 0;
    for (auto& [a, c] : f.t) {
        real_t<S> w = real_from_q<real_t<S>>(mpq_class(key_factorial(a, f.nv())));
        s += (re_part(c) * re_part(c) + im_part(c) * im_part(c)) * w;
    }
    return s;
}

template <class S>
double max_abs_coeff(const Poly<S>& f) {
    double m = 0;
    for (auto& [a, c] : f.t) m = std::max(m, magnitude(c));
    return m;
}

template <class S>
Poly<S> poly_pow_trunc(const Poly<S>& f, int e, int dmax, int N, Kind kind) {
    Poly<S> r = constant_poly<S>(N, kind, S(1));
    r.deg = -1;
    for (int i = 0; i < e; ++i) r = mul_trunc(r, f, dmax);
    return r;
}

// convert exact polynomial coefficients to float
inline Poly<cd> to_float(const Poly<Gq>& f) {
    Poly<cd> r(f.N, f.kind, f.deg);
    for (auto& [a, c] : f.t) r.t.emplace(a, to_cd(c));
    return r;
}

template <class S>
std::string monomial_string(Key k, int N) {
    std::string s;
    const int nv = 2 * N;
    for (int v = 0; v < nv; ++v) {
        int e = exp_of(k, v, nv);
        if (!e) continue;
        s += (v < N ? "z" : "y") + std::to_string(v < N ? v + 1 : v - N + 1);
        if (e > 1) s += "^" + std::to_string(e);
    }
    return s.empty() ? "1" : s;
}

}  // namespace bishop
