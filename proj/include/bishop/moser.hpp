#pragma once
// Arithmetic skeleton of the rapid iteration: constants, radii, the ε bound
// recursion and the vanishing-sequence probe.

#include <gmpxx.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bishop {

struct MoserConstants {
    mpz_class A, B, D, E;
};

inline mpz_class ipow(const mpz_class& b, unsigned long e) {
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}

inline MoserConstants constants(int d, int N) {
    if (d < 3) throw std::invalid_argument("constants: d must be >= 3");
    if (N < 1) throw std::invalid_argument("constants: N must be >= 1");
    const mpz_class dd = d;
    const mpz_class base = 1 + dd * dd * ipow(2 * dd, 2 * N);
    return {324 * base, 18 * N * base, mpz_class(6 * N), 100 * dd * dd * ipow(2 * dd, 8 * N)};
}

struct MoserSchedule {
    std::vector<mpq_class> r, rho, sigma;
    std::vector<double> eps;
    std::vector<long long> d;
};

inline mpq_class radius(long n) { return mpq_class(1, 2) * (1 + mpq_class(1, n + 1)); }

// ρ_n = (2r_{n+1} + r_n)/3, σ_n = (2r_{n+1} + ρ_n)/3
inline MoserSchedule radius_schedule(long nmax) {
    if (nmax < 1) throw std::invalid_argument("radius_schedule: nmax must be >= 1");
    MoserSchedule s;
    for (long n = 0; n <= nmax; ++n) {
        mpq_class r = radius(n), rp = radius(n + 1);
        mpq_class rho = (2 * rp + r) / 3;
        mpq_class sigma = (2 * rp + rho) / 3;
        rho.canonicalize();
        sigma.canonicalize();
        s.r.push_back(r);
        s.rho.push_back(rho);
        s.sigma.push_back(sigma);
    }
    return s;
}

// ½ < r_{n+1} < σ_n < ρ_n < r_n ≤ 1
inline bool schedule_ordered(const MoserSchedule& s) {
    for (size_t n = 0; n + 1 < s.r.size(); ++n) {
        if (!(mpq_class(1, 2) < s.r[n + 1] && s.r[n + 1] < s.sigma[n] && s.sigma[n] < s.rho[n] && s.rho[n] < s.r[n] && s.r[n] <= 1))
            return false;
    }
    return true;
}

struct EpsResult {
    std::vector<long double> log10_eps;  // log10 of ε_n; -inf for zero
    bool converged = false;
    int steps_to_target = -1;
};

inline long double log_add(long double a, long double b) {
    if (a == -std::numeric_limits<long double>::infinity()) return b;
    if (b == -std::numeric_limits<long double>::infinity()) return a;
    long double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Right side of the ε recursion, iterated in the natural-log domain.
// dseq[n] is the error order at step n.
inline EpsResult eps_recursion(double eps0, int nmax, int N, const std::vector<long long>& dseq, double target = 1e-30) {
    if (eps0 < 0) throw std::invalid_argument("eps_recursion: eps0 must be >= 0");
    if (int(dseq.size()) < nmax) throw std::invalid_argument("eps_recursion: dseq too short");
    const long double NEG = -std::numeric_limits<long double>::infinity();
    EpsResult out;
    long double le = eps0 > 0 ? std::log((long double)eps0) : NEG;
    out.log10_eps.push_back(le / std::log(10.0L));
    bool mono = true;
    for (int n = 0; n < nmax; ++n) {
        const long double d = (long double)dseq[n];
        auto r = [](long m) { return (long double)(0.5L * (1.0L + 1.0L / (m + 1))); };
        const long double a = r(n) - r(n + 1), b = r(n + 1) - r(n + 2), lq = std::log(r(n + 1) / r(n));
        const long double l2d = std::log(2 * d);
        const long double base = std::log1p(d * d * std::exp(2 * N * l2d));  // log(1 + d²(2d)^{2N})
        const long double lA = std::log(324.0L) + base, lB = std::log(18.0L * N) + base, lD = std::log(6.0L * N);
        const long double lE = std::log(100.0L) + 2 * std::log(d) + 8 * N * l2d;
        const long double la = std::log(a), lb = std::log(b);
        const long double lin = 2 * la - 2 * lb + 2 * N * std::log(3.0L) + 4 * N * l2d - 2 * N * la + (d - 1) * lq;
        const long double pre = 4 * la - 2 * lb;
        const long double t1 = pre + lE + (2 * d - 3) * lq;
        const long double inner = log_add(log_add(lA - la, lB) + (d - 1) / 2 * lq, log_add(std::log(108.0L) - la, lD) + (2 * d - 3) / 4 * lq);
        const long double t2 = pre + 4 * N * l2d - std::log((long double)N) - la + inner;
        long double next = NEG;
        if (le != NEG) next = log_add(le + lin, 2 * le + log_add(t1, t2));
        if (next > le) mono = false;
        le = next;
        out.log10_eps.push_back(le / std::log(10.0L));
        if (out.steps_to_target < 0 && le != NEG && le / std::log(10.0L) < std::log10((long double)target)) out.steps_to_target = n + 1;
        if (le == NEG && out.steps_to_target < 0) out.steps_to_target = n + 1;
    }
    out.converged = (eps0 == 0) || (mono && out.steps_to_target >= 0);
    return out;
}

inline std::vector<long long> doubling_orders(int nmax) {
    std::vector<long long> d;
    for (int n = 0; n <= nmax; ++n) d.push_back((1LL << n) + 2);
    return d;
}

struct LemmaProbe {
    std::vector<long double> values;  // log10 of the sequence terms, n = 1..nmax
    bool vanishes = false;
};

// n^{m3} d_n^{m1} (1 - 1/n^{m2})^{d_n}, d_n = C a^n, evaluated in logs
inline LemmaProbe vanishing_lemma_probe(double C, double a, int m1, int m2, int m3, int nmax) {
    if (!(a > 1)) throw std::invalid_argument("vanishing_lemma_probe: a must be > 1");
    if (!(C > 0)) throw std::invalid_argument("vanishing_lemma_probe: C must be > 0");
    LemmaProbe out;
    const long double NEG = -std::numeric_limits<long double>::infinity();
    for (int n = 1; n <= nmax; ++n) {
        long double ld = std::log((long double)C) + n * std::log((long double)a);
        long double base = 1.0L - 1.0L / std::pow((long double)n, m2);
        long double v = base <= 0 ? NEG : m3 * std::log((long double)n) + m1 * ld + std::exp(ld) * std::log(base);
        out.values.push_back(v / std::log(10.0L));
    }
    // strictly decreasing over the second half and below 1e-12 at the end
    bool dec = true;
    for (int i = int(out.values.size()) / 2; i + 1 < int(out.values.size()); ++i)
        if (!(out.values[i + 1] < out.values[i] || out.values[i + 1] == NEG)) dec = false;
    out.vanishes = dec && !out.values.empty() && out.values.back() < -12;
    return out;
}

}  // namespace bishop
