#pragma once
// JSON (de)serialization of polynomials, series, transforms and reports.
// Exact scalars are "num/den" strings; float scalars are plain numbers.

#include "bishop/bounds.hpp"
#include "bishop/moser.hpp"
#include "bishop/normalform.hpp"
#include "bishop/segre.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace bishop::io {

using json = nlohmann::json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline mpq_class parse_q(const json& j) {
    try {
        if (j.is_string()) return q_from_string(j.get<std::string>());
        if (j.is_number_integer()) return mpq_class(mpz_class(j.dump(), 10));
        if (j.is_number()) return q_from_string(j.dump());  // shortest decimal form, read exactly
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    throw ParseError("expected a rational, got " + j.dump());
}

template <class S>
json scalar_json(const S& v, bool imag) {
    if constexpr (std::is_same_v<S, Gq>)
        return q_to_string(imag ? v.im : v.re);
    else
        return imag ? v.imag() : v.real();
}

template <class S>
S parse_scalar(const json& re, const json& im) {
    if constexpr (std::is_same_v<S, Gq>) {
        return Gq(parse_q(re), parse_q(im));
    } else {
        auto d = [](const json& x) -> double {
            if (x.is_number()) return x.get<double>();
            return parse_q(x).get_d();
        };
        return cd(d(re), d(im));
    }
}

template <class S>
json to_json(const Poly<S>& p) {
    json terms = json::array();
    const int nv = p.nv();
    for (auto& [k, c] : p.t) {
        json I = json::array(), J = json::array();
        for (int v = 0; v < p.N; ++v) {
            I.push_back(exp_of(k, v, nv));
            J.push_back(exp_of(k, p.N + v, nv));
        }
        terms.push_back({{"I", I}, {"J", J}, {"re", scalar_json(c, false)}, {"im", scalar_json(c, true)}});
    }
    return {{"N", p.N}, {"degree", p.deg}, {"kind", kind_name(p.kind)}, {"terms", terms}};
}

inline const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) throw ParseError(std::string("missing field \"") + name + "\"");
    return j.at(name);
}

inline int int_field(const json& j, const char* name) {
    const auto& v = field(j, name);
    if (!v.is_number_integer()) throw ParseError(std::string("field \"") + name + "\" must be an integer");
    return v.get<int>();
}

template <class S>
Poly<S> poly_from_json(const json& j) {
    const int N = int_field(j, "N");
    if (N < 1 || 2 * N > kMaxVars) throw ParseError("N must be in 1..4");
    const std::string kind = field(j, "kind").get<std::string>();
    Kind k;
    if (kind == "conjugate")
        k = Kind::conjugate;
    else if (kind == "independent")
        k = Kind::independent;
    else
        throw ParseError("unknown kind " + kind);
    const int deg = int_field(j, "degree");
    Poly<S> p(N, k, deg);
    for (auto& t : field(j, "terms")) {
        auto I = field(t, "I").get<MultiIndex>(), J = field(t, "J").get<MultiIndex>();
        if (int(I.size()) != N || int(J.size()) != N) throw ParseError("multi-index length differs from N");
        Key key;
        try {
            key = make_key(I, J);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        if (deg >= 0 && key_degree(key, 2 * N) != deg) throw ParseError("term degree differs from declared degree");
        if (p.t.count(key)) throw ParseError("duplicate term");
        p.add(key, parse_scalar<S>(t.contains("re") ? t["re"] : json("0"), t.contains("im") ? t["im"] : json("0")));
    }
    return p;
}

inline json lambda_json(const BishopData& b) {
    json l = json::array();
    for (auto& x : b.lambda) l.push_back(q_to_string(x));
    return l;
}

inline BishopData bishop_from_json(const json& j) {
    std::vector<mpq_class> lam;
    for (auto& x : field(j, "lambda")) lam.push_back(parse_q(x));
    if (lam.empty() || 2 * int(lam.size()) > kMaxVars) throw ParseError("lambda must have 1..4 entries");
    for (auto& l : lam)
        if (l < 0) throw ParseError("negative lambda");
    return BishopData(lam);
}

template <class S>
json poly_list(const std::map<int, Poly<S>>& m) {
    json a = json::array();
    for (auto& [k, p] : m) {
        Poly<S> q = p;
        q.deg = k;
        a.push_back(to_json(q));
    }
    return a;
}

template <class S>
std::map<int, Poly<S>> poly_list_from(const json& a, int N, Kind kind) {
    std::map<int, Poly<S>> m;
    for (auto& j : a) {
        auto p = poly_from_json<S>(j);
        if (p.N != N) throw ParseError("series term has wrong N");
        if (p.kind != kind) throw ParseError(std::string("series term must be of ") + kind_name(kind) + " kind");
        if (p.deg < 3) throw ParseError("series terms must have degree >= 3");
        if (m.count(p.deg)) throw ParseError("duplicate series degree");
        m[p.deg] = p;
    }
    return m;
}

template <class S>
json to_json(const ManifoldSeries<S>& M) {
    return {{"N", M.b.N}, {"lambda", lambda_json(M.b)}, {"max_degree", M.max_degree}, {"phi", poly_list(M.phi)}};
}

template <class S>
ManifoldSeries<S> manifold_from_json(const json& j) {
    ManifoldSeries<S> M;
    M.b = bishop_from_json(j);
    if (j.contains("N") && int_field(j, "N") != M.b.N) throw ParseError("N differs from lambda length");
    M.max_degree = int_field(j, "max_degree");
    M.phi = poly_list_from<S>(field(j, "phi"), M.b.N, Kind::conjugate);
    for (auto& [k, p] : M.phi)
        if (k > M.max_degree) throw ParseError("series term above max_degree");
    return M;
}

template <class S>
json to_json(const SegreManifold<S>& M) {
    return {{"N", M.b.N}, {"lambda", lambda_json(M.b)}, {"max_degree", M.max_degree}, {"phi", poly_list(M.phi)}, {"phiBar", poly_list(M.phiBar)}};
}

template <class S>
SegreManifold<S> segre_manifold_from_json(const json& j) {
    SegreManifold<S> M;
    M.b = bishop_from_json(j);
    if (j.contains("N") && int_field(j, "N") != M.b.N) throw ParseError("N differs from lambda length");
    M.max_degree = int_field(j, "max_degree");
    M.phi = poly_list_from<S>(field(j, "phi"), M.b.N, Kind::independent);
    M.phiBar = poly_list_from<S>(field(j, "phiBar"), M.b.N, Kind::independent);
    return M;
}

template <class S>
json g_terms(const std::map<GKey, Poly<S>>& G) {
    json a = json::array();
    for (auto& [k, p] : G) a.push_back({{"m", k.first}, {"n", k.second}, {"coeff", to_json(p)}});
    return a;
}

template <class S>
json f_terms(const std::map<FKey, Poly<S>>& F) {
    json a = json::array();
    for (auto& [k, p] : F)
        a.push_back({{"l", std::get<0>(k) + 1}, {"m", std::get<1>(k)}, {"n", std::get<2>(k)}, {"coeff", to_json(p)}});
    return a;
}

template <class S>
Poly<S> coeff_from(const json& t, int N, int m) {
    auto p = poly_from_json<S>(field(t, "coeff"));
    if (p.N != N || p.kind != Kind::conjugate) throw ParseError("transform coefficient must be a conjugate-kind polynomial in N variables");
    for (auto& [k, c] : p.t)
        if (key_bar_degree(k, N) != 0 || key_degree(k, 2 * N) != m) throw ParseError("transform coefficient must be homogeneous of degree m in z");
    return p;
}

template <class S>
std::map<GKey, Poly<S>> g_from(const json& a, int N) {
    std::map<GKey, Poly<S>> G;
    for (auto& t : a) {
        int m = int_field(t, "m"), n = int_field(t, "n");
        if (m < 0 || n < 0) throw ParseError("negative grading");
        G[{m, n}] = coeff_from<S>(t, N, m);
    }
    return G;
}

template <class S>
std::map<FKey, Poly<S>> f_from(const json& a, int N, int Nt) {
    std::map<FKey, Poly<S>> F;
    for (auto& t : a) {
        int l = int_field(t, "l") - 1, m = int_field(t, "m"), n = int_field(t, "n");
        if (l < 0 || l >= Nt || m < 0 || n < 0) throw ParseError("bad F index");
        F[{l, m, n}] = coeff_from<S>(t, N, m);
    }
    return F;
}

template <class S>
json to_json(const FormalTransform<S>& T) {
    return {{"N", T.N}, {"Nt", T.Nt}, {"weight", T.weight}, {"G", g_terms(T.G)}, {"F", f_terms(T.F)}};
}

template <class S>
FormalTransform<S> transform_from_json(const json& j) {
    FormalTransform<S> T;
    T.N = int_field(j, "N");
    T.Nt = j.contains("Nt") ? int_field(j, "Nt") : T.N;
    T.weight = int_field(j, "weight");
    if (T.N < 1 || 2 * T.Nt > kMaxVars || T.Nt < 1) throw ParseError("bad transform dimensions");
    T.G = g_from<S>(field(j, "G"), T.N);
    T.F = f_from<S>(field(j, "F"), T.N, T.Nt);
    return T;
}

template <class S>
json to_json(const SegreTransform<S>& T) {
    return {{"N", T.N}, {"Nt", T.Nt}, {"weight", T.weight}, {"G", g_terms(T.G)}, {"Gt", g_terms(T.Gt)}, {"F", f_terms(T.F)}, {"Ft", f_terms(T.Ft)}};
}

template <class S>
SegreTransform<S> segre_transform_from_json(const json& j) {
    SegreTransform<S> T;
    T.N = int_field(j, "N");
    T.Nt = j.contains("Nt") ? int_field(j, "Nt") : T.N;
    T.weight = int_field(j, "weight");
    if (T.N < 1 || 2 * T.Nt > kMaxVars || T.Nt < 1) throw ParseError("bad transform dimensions");
    T.G = g_from<S>(field(j, "G"), T.N);
    T.Gt = g_from<S>(field(j, "Gt"), T.N);
    T.F = f_from<S>(field(j, "F"), T.N, T.Nt);
    T.Ft = f_from<S>(field(j, "Ft"), T.N, T.Nt);
    return T;
}

inline json to_json(const BoundFamily& f) {
    return {{"name", f.name}, {"limit", f.limit}, {"max", f.max}, {"worst_lambda", f.worst_lambda}, {"worst_where", f.worst_where}, {"pass", f.pass()}};
}

inline json to_json(const BoundReport& r) {
    json fam = json::array(), aux = json::array();
    for (auto& f : r.families) fam.push_back(to_json(f));
    for (auto& f : r.aux) aux.push_back(to_json(f));
    return {{"N", r.N}, {"pmax", r.pmax}, {"step", r.step}, {"grid_points", r.grid_points}, {"families", fam}, {"aux", aux}, {"all_pass", r.all_pass()}};
}

inline json to_json(const MoserSchedule& s) {
    json r = json::array(), rho = json::array(), sig = json::array();
    for (size_t i = 0; i < s.r.size(); ++i) {
        r.push_back(q_to_string(s.r[i]));
        rho.push_back(q_to_string(s.rho[i]));
        sig.push_back(q_to_string(s.sigma[i]));
    }
    return {{"r", r}, {"rho", rho}, {"sigma", sig}, {"ordered", schedule_ordered(s)}};
}

inline json to_json(const EpsResult& e) {
    json l = json::array();
    for (auto v : e.log10_eps) l.push_back(std::isfinite(double(v)) ? json(double(v)) : json("-inf"));
    return {{"log10_eps", l}, {"converged", e.converged}, {"steps_to_target", e.steps_to_target}};
}

inline json to_json(const DegreeCheck& d) {
    return {{"degree", d.degree}, {"G", d.g_ok}, {"F", d.f_ok}, {"level2", d.level2_ok}, {"worst", d.worst}, {"first_violation", d.first_violation}};
}

inline json to_json(const MapReport& m) {
    json r = json::object();
    for (auto& [d, v] : m.residual) r[std::to_string(d)] = v;
    return {{"residual", r}, {"zero", m.zero()}};
}

}  // namespace bishop::io
