#pragma once
// Reproducible random instances. Raw engine output only, so streams match
// across standard libraries.

#include "bishop/normalform.hpp"

#include <random>

namespace bishop {

using Rng = std::mt19937_64;

inline long rand_int(Rng& g, long lo, long hi) { return lo + long(g() % std::uint64_t(hi - lo + 1)); }

// small rational with numerator in [-a, a], denominator in [1, d]
inline mpq_class rand_q(Rng& g, long a = 5, long d = 4) {
    mpq_class q(rand_int(g, -a, a), rand_int(g, 1, d));
    q.canonicalize();
    return q;
}

template <class S>
S rand_scalar(Rng& g) {
    return from_q<S>(rand_q(g), rand_q(g));
}

// real-valued φ_k: half the monomials filled, then symmetrized
template <class S>
Poly<S> random_real_phi(int N, int k, Rng& g) {
    for (;;) {
        Poly<S> p(N, Kind::conjugate, k);
        for (Key key : monomials_of_degree(k, N))
            if (g() % 2) p.add(key, rand_scalar<S>(g));
        p = p + conj_swap(p);
        p.deg = k;
        if (!p.empty()) return p;
    }
}

template <class S>
Poly<S> random_poly(int N, Kind kind, int k, Rng& g) {
    Poly<S> p(N, kind, k);
    for (Key key : monomials_of_degree(k, N))
        if (g() % 2) p.add(key, rand_scalar<S>(g));
    return p;
}

// λ ∈ [0, 0.45] with denominator 20
inline mpq_class rand_lambda(Rng& g) {
    mpq_class q(rand_int(g, 0, 9), 20);
    q.canonicalize();
    return q;
}

template <class S>
ManifoldSeries<S> random_manifold(const BishopData& b, int lo, int hi, int dmax, Rng& g) {
    auto M = ManifoldSeries<S>::model(b, dmax);
    for (int k = lo; k <= hi; ++k) M.phi[k] = random_real_phi<S>(b.N, k, g);
    return M;
}

// identity plus random weight d-1 terms in F and weight d terms in G, kept
// inside (o): Im only on F_{1,n} and G_{0,n}, no F^(l)_{0,n} for l >= k0
template <class S>
FormalTransform<S> random_o_transform(const BishopData& b, int d, int weight, Rng& g) {
    const int N = b.N;
    auto T = FormalTransform<S>::identity(N, N, weight);
    for (int l = 0; l < N; ++l)
        for (int n = 0; 2 * n <= d - 1; ++n) {
            const int m = d - 1 - 2 * n;
            if (m == 0 && l >= b.k0) continue;
            for (Key k : z_monomials(m, N)) {
                if (g() % 2) continue;
                S c = m == 1 ? from_q<S>(0, rand_q(g)) : rand_scalar<S>(g);
                T.add_f(l, m, n, k, c);
            }
        }
    for (int n = 0; 2 * n <= d; ++n) {
        const int m = d - 2 * n;
        for (Key k : z_monomials(m, N)) {
            if (g() % 2) continue;
            S c = m == 0 ? from_q<S>(0, rand_q(g)) : rand_scalar<S>(g);
            T.add_g(m, n, k, c);
        }
    }
    return T;
}

}  // namespace bishop
