#pragma once
// Scalars: exact Gaussian rationals (Gq) and binary-float complex (cd).

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace bishop {

using cd = std::complex<double>;

struct Gq {
    mpq_class re, im;

    Gq() : re(0), im(0) {}
    Gq(long v) : re(v), im(0) {}
    Gq(mpq_class r) : re(std::move(r)), im(0) {}
    Gq(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

    Gq& operator+=(const Gq& o) { re += o.re; im += o.im; return *this; }
    Gq& operator-=(const Gq& o) { re -= o.re; im -= o.im; return *this; }
    Gq& operator*=(const Gq& o) {
        if (o.im == 0) {
            re *= o.re;
            im *= o.re;
            return *this;
        }
        if (im == 0) {
            im = re * o.im;
            re *= o.re;
            return *this;
        }
        mpq_class r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = std::move(r);
        return *this;
    }
    Gq& operator*=(const mpq_class& s) { re *= s; im *= s; return *this; }
    Gq& operator/=(const Gq& o) {
        mpq_class d = o.re * o.re + o.im * o.im;
        if (d == 0) throw std::domain_error("Gq division by zero");
        mpq_class r = (re * o.re + im * o.im) / d;
        im = (im * o.re - re * o.im) / d;
        re = std::move(r);
        return *this;
    }
    friend Gq operator+(Gq a, const Gq& b) { return a += b; }
    friend Gq operator-(Gq a, const Gq& b) { return a -= b; }
    friend Gq operator*(Gq a, const Gq& b) { return a *= b; }
    friend Gq operator*(Gq a, const mpq_class& s) { return a *= s; }
    friend Gq operator/(Gq a, const Gq& b) { return a /= b; }
    friend Gq operator-(const Gq& a) { return Gq(-a.re, -a.im); }
    friend bool operator==(const Gq& a, const Gq& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const Gq& a, const Gq& b) { return !(a == b); }
};

inline Gq conj(const Gq& a) { return Gq(a.re, -a.im); }
inline cd conj(const cd& a) { return std::conj(a); }
inline mpq_class conj(const mpq_class& a) { return a; }
inline double conj(double a) { return a; }

inline bool is_zero(const Gq& a) { return sgn(a.re) == 0 && sgn(a.im) == 0; }
inline bool is_zero(const cd& a) { return a.real() == 0.0 && a.imag() == 0.0; }
inline bool is_zero(const mpq_class& a) { return sgn(a) == 0; }
inline bool is_zero(double a) { return a == 0.0; }

inline double magnitude(const Gq& a) { return std::hypot(a.re.get_d(), a.im.get_d()); }
inline double magnitude(const cd& a) { return std::abs(a); }
inline double magnitude(const mpq_class& a) { return std::fabs(a.get_d()); }
inline double magnitude(double a) { return std::fabs(a); }

// threshold below which a pairing counts as zero
template <class S> constexpr double tolerance_for() { return 0.0; }
template <> constexpr double tolerance_for<cd>() { return 1e-9; }
template <> constexpr double tolerance_for<double>() { return 1e-9; }

inline cd to_cd(const Gq& a) { return {a.re.get_d(), a.im.get_d()}; }
inline cd to_cd(const cd& a) { return a; }

// real field paired with each complex scalar (used for real-linear systems and real operators)
template <class S> struct real_of;
template <> struct real_of<Gq> { using type = mpq_class; };
template <> struct real_of<cd> { using type = double; };
template <class S> using real_t = typename real_of<S>::type;

template <class S> S from_q(const mpq_class& re, const mpq_class& im = 0);
template <> inline Gq from_q<Gq>(const mpq_class& re, const mpq_class& im) { return Gq(re, im); }
template <> inline cd from_q<cd>(const mpq_class& re, const mpq_class& im) { return {re.get_d(), im.get_d()}; }

template <class R> R real_from_q(const mpq_class& v);
template <> inline mpq_class real_from_q<mpq_class>(const mpq_class& v) { return v; }
template <> inline double real_from_q<double>(const mpq_class& v) { return v.get_d(); }

inline mpq_class re_part(const Gq& a) { return a.re; }
inline mpq_class im_part(const Gq& a) { return a.im; }
inline double re_part(const cd& a) { return a.real(); }
inline double im_part(const cd& a) { return a.imag(); }

inline Gq make_complex(const mpq_class& re, const mpq_class& im) { return Gq(re, im); }
inline cd make_complex(double re, double im) { return {re, im}; }

inline Gq times_i(const Gq& a) { return Gq(-a.im, a.re); }
inline cd times_i(const cd& a) { return {-a.imag(), a.real()}; }

inline Gq scale(const Gq& a, const mpq_class& s) { return Gq(a.re * s, a.im * s); }
inline cd scale(const cd& a, double s) { return a * s; }

// "num/den" strings; integers print without the slash
inline std::string q_to_string(const mpq_class& v) {
    mpq_class c(v);
    c.canonicalize();
    if (c.get_den() == 1) return c.get_num().get_str();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

inline mpq_class q_from_string(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational");
    auto slash = s.find('/');
    auto valid_int = [](const std::string& t) {
        if (t.empty()) return false;
        size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (i >= t.size()) return false;
        for (; i < t.size(); ++i)
            if (t[i] < '0' || t[i] > '9') return false;
        return true;
    };
    auto strip = [](std::string t) { return (!t.empty() && t[0] == '+') ? t.substr(1) : t; };
    if (slash == std::string::npos) {
        if (valid_int(s)) return mpq_class(mpz_class(strip(s), 10));
        // decimal literal such as 0.15 is read exactly
        auto dot = s.find('.');
        if (dot == std::string::npos) throw std::invalid_argument("bad rational: " + s);
        std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
        bool neg = !ip.empty() && ip[0] == '-';
        if (neg || (!ip.empty() && ip[0] == '+')) ip = ip.substr(1);
        if (ip.empty()) ip = "0";
        if (!valid_int(ip) || (!fp.empty() && !valid_int(fp)) || (!fp.empty() && fp[0] == '-'))
            throw std::invalid_argument("bad rational: " + s);
        mpz_class den = 1;
        for (size_t i = 0; i < fp.size(); ++i) den *= 10;
        mpq_class q(mpz_class(ip + fp, 10), den);
        q.canonicalize();
        return neg ? mpq_class(-q) : q;
    }
    std::string n = s.substr(0, slash), d = s.substr(slash + 1);
    if (!valid_int(n) || !valid_int(d)) throw std::invalid_argument("bad rational: " + s);
    mpz_class dz(strip(d), 10);
    if (dz == 0) throw std::invalid_argument("zero denominator: " + s);
    mpq_class q(mpz_class(strip(n), 10), dz);
    q.canonicalize();
    return q;
}

}  // namespace bishop
