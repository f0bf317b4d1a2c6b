// bishop: batch front end. One subcommand per job, JSON in, JSON report out.
// Exit: 0 all checks pass, 1 invariant violation, 2 parse error, 3 singularity.

#include "bishop/blocksys.hpp"
#include "bishop/bounds.hpp"
#include "bishop/json_io.hpp"
#include "bishop/moser.hpp"
#include "bishop/normalform.hpp"
#include "bishop/random.hpp"
#include "bishop/segre.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace bishop;
using io::json;
using io::ParseError;

namespace {

struct Options {
    std::string command;
    std::string input;
    std::string mode = "exact";
    double tol = 1e-9;
    int max_degree = -1;
    double grid_step = 0.05;
    std::string out;
    std::uint64_t seed = 0;
};

struct Singular : std::runtime_error {
    std::string where;
    Singular(const std::string& w, const std::string& what) : std::runtime_error(what), where(w) {}
};

struct Report {
    json output = json::object();
    json checks = json::object();
    void check(const std::string& name, bool ok) { checks[name] = ok; }
    bool pass() const {
        for (auto& [k, v] : checks.items())
            if (!v.get<bool>()) return false;
        return true;
    }
};

json read_input(const std::string& path, bool optional) {
    if (path.empty()) {
        if (optional) return json::object();
        throw ParseError("input file required");
    }
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

template <class S>
bool small(double v, const Options& o) {
    return std::is_same_v<S, Gq> ? v == 0 : v <= o.tol;
}

json residual_json(const std::map<int, double>& r) {
    json j = json::object();
    for (auto& [d, v] : r) j[std::to_string(d)] = v;
    return j;
}

// ---------------------------------------------------------------- decompose

template <class S>
Report run_decompose(const json& in, const Options& o) {
    Report rep;
    auto b = io::bishop_from_json(in);
    std::vector<Poly<S>> polys;
    if (in.contains("poly")) polys.push_back(io::poly_from_json<S>(in["poly"]));
    if (in.contains("polys"))
        for (auto& p : in["polys"]) polys.push_back(io::poly_from_json<S>(p));
    if (polys.empty()) throw ParseError("no \"poly\" or \"polys\" given");
    FischerContext<S> ctx(b);
    SegreDecomposer<S> sctx(b);
    json items = json::array();
    bool ident = true, tracefree = true, orth = true;
    for (auto& P : polys) {
        if (P.N != b.N) throw ParseError("polynomial N differs from lambda length");
        if (P.deg < 2) throw ParseError("decompose needs degree >= 2");
        DecompResult<S> d;
        try {
            d = P.kind == Kind::conjugate ? ctx.decompose(P) : sctx.decompose(P);
        } catch (const SingularBlock& e) {
            throw Singular("block " + std::to_string(e.block), e.what());
        }
        Poly<S> AQ = mul(d.A, quadric<S>(b, P.kind));
        double r1 = max_abs_coeff(P - AQ - d.C);
        double r2 = max_abs_coeff(trace(d.C, b));
        double r3 = P.kind == Kind::conjugate ? magnitude(fischer_inner(AQ, d.C)) : magnitude(fischer_bilinear(AQ, conj_coeffs(d.C)));
        ident = ident && small<S>(r1, o);
        tracefree = tracefree && small<S>(r2, o);
        orth = orth && small<S>(r3, o);
        items.push_back({{"A", io::to_json(d.A)}, {"C", io::to_json(d.C)}, {"identity_residual", r1}, {"trace_C", r2}, {"inner_AQ_C", r3}});
    }
    rep.output["results"] = items;
    rep.check("P_equals_AQ_plus_C", ident);
    rep.check("trace_C_zero", tracefree);
    rep.check("AQ_orthogonal_C", orth);
    return rep;
}

// ---------------------------------------------------------------- normalize

template <class S>
ManifoldSeries<S> manifold_input(const json& in, const Options& o) {
    if (in.contains("random")) {
        const auto& r = in["random"];
        auto b = io::bishop_from_json(r);
        int lo = r.value("lo", 3), hi = r.value("hi", 5);
        if (lo < 3 || hi < lo) throw ParseError("random: need 3 <= lo <= hi");
        Rng g(o.seed);
        return random_manifold<S>(b, lo, hi, std::max(hi, o.max_degree), g);
    }
    return io::manifold_from_json<S>(in);
}

template <class S>
Report run_normalize(const json& in, const Options& o) {
    Report rep;
    auto M = manifold_input<S>(in, o);
    try {
        M.b.check_real_regime(false);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    if (M.b.k0 == 0) throw ParseError("all Bishop invariants vanish");
    if (!M.is_real()) throw ParseError("phi terms must be real-valued");
    const int dmax = o.max_degree > 0 ? o.max_degree : M.max_degree;
    if (dmax < 3) throw ParseError("max degree must be >= 3");
    NormalizeResult<S> res;
    try {
        res = normalize(M, dmax);
    } catch (const NormalizeError& e) {
        throw Singular("normal form system", e.what());
    }
    rep.output["input"] = io::to_json(M);
    rep.output["transform"] = io::to_json(res.T);
    rep.output["normal_form"] = io::to_json(res.M);
    rep.output["residual"] = residual_json(res.residual);
    rep.output["identity"] = res.T == FormalTransform<S>::identity(M.b.N, M.b.N, dmax);
    bool zero = true;
    for (auto& [d, v] : res.residual) zero = zero && small<S>(v, o);
    rep.check("residual_zero", zero);
    FischerContext<S> ctx(M.b);
    json per = json::array();
    bool normed = true;
    for (int r = 3; r <= dmax; ++r) {
        auto dc = check_normalized(res.M.phi.count(r) ? res.M.phi.at(r) : Poly<S>(M.b.N, Kind::conjugate, r), r, ctx);
        if constexpr (!std::is_same_v<S, Gq>) {
            if (dc.worst <= o.tol) dc.g_ok = dc.f_ok = dc.level2_ok = true;
        }
        normed = normed && dc.g_ok && dc.f_ok && dc.level2_ok;
        per.push_back(io::to_json(dc));
    }
    rep.output["normalized"] = per;
    rep.check("normalized", normed);
    std::string why;
    bool o_ok = satisfies_o(res.T, M.b, &why);
    if (!o_ok) rep.output["condition_o_violation"] = why;
    if constexpr (std::is_same_v<S, Gq>) {
        rep.check("condition_o", o_ok);
        rep.check("normal_form_real", res.M.is_real());
    }
    return rep;
}

// ---------------------------------------------------------------- segre-normalize

template <class S>
double twin_gap(const SegreTransform<S>& T) {
    double w = 0;
    auto cmp = [&](auto& a, auto& b) {
        for (auto& [k, p] : a) {
            auto it = b.find(k);
            Poly<S> q = it == b.end() ? Poly<S>(T.N, Kind::conjugate, -1) : it->second;
            w = std::max(w, max_abs_coeff(conj_coeffs(p) - q));
        }
        for (auto& [k, p] : b)
            if (!a.count(k)) w = std::max(w, max_abs_coeff(p));
    };
    cmp(T.G, T.Gt);
    cmp(T.F, T.Ft);
    return w;
}

template <class S>
Report run_segre(const json& in, const Options& o) {
    Report rep;
    SegreManifold<S> M;
    bool complexified = !in.contains("phiBar");
    if (complexified) {
        auto R = manifold_input<S>(in, o);
        if (!R.is_real()) throw ParseError("phi terms must be real-valued when phiBar is absent");
        M = SegreManifold<S>::complexify(R);
    } else {
        M = io::segre_manifold_from_json<S>(in);
    }
    if (M.b.k0 == 0) throw ParseError("all Bishop invariants vanish");
    if (!M.b.nonzero_first()) throw ParseError("nonzero lambdas must come first");
    const int dmax = o.max_degree > 0 ? o.max_degree : M.max_degree;
    if (dmax < 3) throw ParseError("max degree must be >= 3");
    SegreResult<S> res;
    try {
        res = normalize_segre(M, dmax);
    } catch (const NormalizeError& e) {
        throw Singular("Segre normal form system", e.what());
    }
    rep.output["input"] = io::to_json(M);
    rep.output["transform"] = io::to_json(res.T);
    rep.output["normal_form"] = io::to_json(res.M);
    rep.output["residual"] = residual_json(res.residual);
    bool zero = true;
    for (auto& [d, v] : res.residual) zero = zero && small<S>(v, o);
    rep.check("residual_zero", zero);
    FischerContext<S> ctx(M.b);
    json per = json::array();
    bool normed = true;
    for (int r = 3; r <= dmax; ++r) {
        auto get = [&](auto& m) { return m.count(r) ? m.at(r) : Poly<S>(M.b.N, Kind::independent, r); };
        auto dc = check_normalized_segre(get(res.M.phi), get(res.M.phiBar), r, ctx);
        if constexpr (!std::is_same_v<S, Gq>) {
            if (dc.worst <= o.tol) dc.g_ok = dc.f_ok = dc.level2_ok = true;
        }
        normed = normed && dc.g_ok && dc.f_ok && dc.level2_ok;
        per.push_back(io::to_json(dc));
    }
    rep.output["normalized"] = per;
    rep.check("normalized", normed);
    if (complexified) {
        double g = twin_gap(res.T);
        rep.output["twin_gap"] = g;
        rep.check("conjugate_twins", small<S>(g, o));
    }
    return rep;
}

// ---------------------------------------------------------------- bounds

Report run_bounds(const json& in, const Options& o) {
    Report rep;
    std::vector<int> Ns = in.contains("N") ? in["N"].get<std::vector<int>>() : std::vector<int>{1, 2, 3};
    int pmax = o.max_degree > 0 ? o.max_degree : in.value("pmax", 12);
    double step = in.value("step", o.grid_step);
    if (o.grid_step != 0.05) step = o.grid_step;
    if (!(step > 0 && step <= 0.45)) throw ParseError("grid step must be in (0, 0.45]");
    if (pmax < 2) throw ParseError("pmax must be >= 2");
    for (int N : Ns)
        if (N < 1 || N > 3) throw ParseError("N must be in 1..3");
    json reports = json::array();
    for (int N : Ns) {
        auto r = bound_report(N, pmax, step);
        reports.push_back(io::to_json(r));
        for (auto& f : r.families) rep.check(f.name + "_N" + std::to_string(N), f.pass());
    }
    rep.output["reports"] = reports;
    double worst = 0;
    int samples = in.value("lemma_samples", 200);
    double frac = ratio_lemma_probe(3, samples, unsigned(o.seed), &worst);
    rep.output["ratio_lemma_probe"] = {{"n", 3}, {"samples", samples}, {"fraction_below", frac}, {"worst_ratio", worst}};
    return rep;
}

// ---------------------------------------------------------------- moser

Report run_moser(const json& in, const Options&) {
    Report rep;
    double eps0 = in.value("eps0", 1e-6);
    int nmax = in.value("nmax", 12);
    int N = in.value("N", 1);
    long sched_n = in.value("schedule_n", 10000L);
    if (nmax < 1 || N < 1 || sched_n < 1) throw ParseError("nmax, N and schedule_n must be positive");
    std::vector<long long> d;
    if (in.contains("orders"))
        d = in["orders"].get<std::vector<long long>>();
    else
        d = doubling_orders(nmax);
    for (auto x : d)
        if (x < 3) throw ParseError("orders must be >= 3");
    json consts = json::array();
    for (auto& c : in.value("constants", json::array({{{"d", 3}, {"N", 1}}}))) {
        auto k = constants(c.at("d").get<int>(), c.at("N").get<int>());
        consts.push_back({{"d", c.at("d")}, {"N", c.at("N")}, {"A", k.A.get_str()}, {"B", k.B.get_str()}, {"D", k.D.get_str()}, {"E", k.E.get_str()}});
    }
    rep.output["constants"] = consts;
    auto s = radius_schedule(sched_n);
    bool ordered = schedule_ordered(s);
    MoserSchedule head;
    for (int i = 0; i <= std::min<long>(sched_n, 10); ++i) {
        head.r.push_back(s.r[i]);
        head.rho.push_back(s.rho[i]);
        head.sigma.push_back(s.sigma[i]);
    }
    rep.output["schedule_head"] = io::to_json(head);
    rep.check("schedule_ordered", ordered);
    auto e = eps_recursion(eps0, nmax, N, d);
    rep.output["eps"] = io::to_json(e);
    rep.check("eps_below_1e-30", e.steps_to_target >= 0);
    auto L = in.value("lemma", json{{"C", 1}, {"a", 2}, {"m1", 1}, {"m2", 1}, {"m3", 1}, {"nmax", 60}});
    auto lp = vanishing_lemma_probe(L.value("C", 1.0), L.value("a", 2.0), L.value("m1", 1), L.value("m2", 1), L.value("m3", 1), L.value("nmax", 60));
    json vals = json::array();
    for (auto v : lp.values) vals.push_back(std::isfinite(double(v)) ? json(double(v)) : json("-inf"));
    rep.output["lemma"] = {{"params", L}, {"log10_values", vals}, {"vanishes", lp.vanishes}};
    rep.check("lemma_vanishes", lp.vanishes);
    return rep;
}

// ---------------------------------------------------------------- verify-map

template <class S>
Report run_verify(const json& in, const Options& o) {
    Report rep;
    auto b = io::bishop_from_json(io::field(in, "source"));
    auto bt = io::bishop_from_json(io::field(in, "target"));
    int d = o.max_degree > 0 ? o.max_degree : in.value("degree", 5);
    if (d < 1) throw ParseError("degree must be >= 1");
    const auto& tj = io::field(in, "transform");
    MapReport mr;
    bool segre = tj.contains("Gt");
    try {
        if (segre)
            mr = verify_model_map(io::segre_transform_from_json<S>(tj), b.N, bt.N, b, bt, d);
        else
            mr = verify_model_map(io::transform_from_json<S>(tj), b.N, bt.N, b, bt, d);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    rep.output["segre"] = segre;
    rep.output["map"] = io::to_json(mr);
    bool zero = true;
    for (auto& [k, v] : mr.residual) zero = zero && small<S>(v, o);
    rep.check("residual_zero", zero);
    if (in.value("rigidity_probe", false)) {
        RigidityReport rr;
        try {
            rr = rigidity_probe(b, bt, std::min(d, 5), segre);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what());
        }
        json ker = json::object(), unk = json::object();
        for (auto& [k, v] : rr.kernel) ker[std::to_string(k)] = v;
        for (auto& [k, v] : rr.unknowns) unk[std::to_string(k)] = v;
        rep.output["rigidity"] = {{"unknowns", unk}, {"kernel", ker}, {"quadratic_certified", rr.quadratic_certified}};
        rep.check("rigidity", rr.rigid());
    }
    return rep;
}

template <class S>
Report dispatch(const json& in, const Options& o) {
    if (o.command == "decompose") return run_decompose<S>(in, o);
    if (o.command == "normalize") return run_normalize<S>(in, o);
    if (o.command == "segre-normalize") return run_segre<S>(in, o);
    if (o.command == "verify-map") return run_verify<S>(in, o);
    if (o.command == "bounds") return run_bounds(in, o);
    return run_moser(in, o);
}

void emit(const json& j, const Options& o) {
    std::string text = j.dump(1) + "\n";
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw std::runtime_error("cannot write " + o.out);
    f << text;
}

json envelope(const Options& o) {
    json j = {{"command", o.command}, {"mode", o.mode}, {"seed", o.seed}};
    if (o.mode == "float") j["tol"] = o.tol;
    if (o.max_degree > 0) j["max_degree"] = o.max_degree;
    if (o.command == "bounds") j["grid_step"] = o.grid_step;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fischer decompositions, normal forms and bound scans for quadric CR-singular models"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--mode", o.mode, "exact (rational) or float arithmetic")->check(CLI::IsMember({"exact", "float"}));
    app.add_option("--tol", o.tol, "tolerance for float-mode checks")->check(CLI::PositiveNumber);
    app.add_option("--max-degree", o.max_degree, "truncation degree (pmax for bounds)");
    app.add_option("--grid-step", o.grid_step, "lambda grid step for bounds");
    app.add_option("--out", o.out, "report path (default stdout)");
    app.add_option("--seed", o.seed, "seed for random instances");
    const char* cmds[][2] = {{"decompose", "Fischer decomposition P = A Q + C"},
                             {"normalize", "partial normal form of a real manifold series"},
                             {"segre-normalize", "normal form in the complexified (z, xi) setting"},
                             {"bounds", "norm-bound scan over a lambda grid"},
                             {"moser", "rapid-iteration arithmetic"},
                             {"verify-map", "residual of a map between models"}};
    for (auto& c : cmds) {
        auto* sc = app.add_subcommand(c[0], c[1]);
        sc->add_option("input", o.input, "input JSON file");
        sc->callback([&o, name = std::string(c[0])] { o.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    json report = envelope(o);
    try {
        bool optional = o.command == "bounds" || o.command == "moser";
        json in = read_input(o.input, optional);
        Report r = o.mode == "exact" ? dispatch<Gq>(in, o) : dispatch<cd>(in, o);
        report["output"] = r.output;
        report["checks"] = r.checks;
        report["pass"] = r.pass();
        emit(report, o);
        return r.pass() ? 0 : 1;
    } catch (const Singular& e) {
        report["error"] = {{"kind", "singular"}, {"where", e.where}, {"message", e.what()}};
        report["pass"] = false;
        emit(report, o);
        std::cerr << "singular: " << e.what() << "\n";
        return 3;
    } catch (const SingularBlock& e) {
        report["error"] = {{"kind", "singular"}, {"where", "block " + std::to_string(e.block)}, {"message", e.what()}};
        report["pass"] = false;
        emit(report, o);
        std::cerr << "singular: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    }
}
