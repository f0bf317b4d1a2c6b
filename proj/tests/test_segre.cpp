#include "support.hpp"

#include "bishop/segre.hpp"

#include <gtest/gtest.h>

using namespace bishop;
using namespace testing_support;

namespace {

template <class M>
Poly<Gq> at(const M& m, int k, int N, Kind kind) {
    auto it = m.find(k);
    Poly<Gq> p = it == m.end() ? Poly<Gq>(N, kind, k) : it->second;
    p.deg = k;
    return p;
}

}  // namespace

TEST(DecomposeC, RestrictsToRealDecomposition) {
    Rng g(51);
    for (int rep = 0; rep < 12; ++rep) {
        const int N = 1 + rep % 3, p = 3 + rep % 3;
        BishopData b(random_lambda(N, g));
        auto P = random_real_phi<Gq>(N, p, g);
        auto real = decompose(P, b);
        auto cx = decompose_c(with_kind(P, Kind::independent), b);
        EXPECT_EQ(with_kind(cx.A, Kind::conjugate), real.A);
        EXPECT_EQ(with_kind(cx.C, Kind::conjugate), real.C);
    }
}

TEST(DecomposeC, NonRealInput) {
    Rng g(52);
    auto b = bishop_q({"1/10", "3/10"});
    auto P = random_poly<Gq>(2, Kind::independent, 4, g);
    auto d = decompose_c(P, b);
    EXPECT_TRUE(trace(d.C, b).empty());
    EXPECT_EQ(d.C + mul(d.A, quadric<Gq>(b, Kind::independent)), P);
    // agrees with the dense route on the same coefficients
    auto dense = decompose(with_kind(P, Kind::conjugate), b);
    EXPECT_EQ(with_kind(d.A, Kind::conjugate), dense.A);
}

TEST(SegreNormalize, ComplexifiedRealAgrees) {
    Rng g(53);
    for (auto lam : std::vector<std::vector<std::string>>{{"3/10"}, {"1/10", "3/10"}}) {
        auto b = bishop_q(lam);
        auto M = random_manifold<Gq>(b, 3, 4, 5, g);
        auto real = normalize(M, 5);
        auto seg = normalize_segre(SegreManifold<Gq>::complexify(M), 5);
        for (auto& [r, v] : seg.residual) EXPECT_EQ(v, 0.0) << r;
        EXPECT_TRUE(seg.T == SegreTransform<Gq>::complexify(real.T));
        auto cx = SegreManifold<Gq>::complexify(real.M);
        for (int k = 3; k <= 5; ++k) {
            EXPECT_EQ(at(seg.M.phi, k, b.N, Kind::independent), at(cx.phi, k, b.N, Kind::independent)) << k;
            EXPECT_EQ(at(seg.M.phiBar, k, b.N, Kind::independent), at(cx.phiBar, k, b.N, Kind::independent)) << k;
        }
    }
}

TEST(SegreNormalize, IndependentPairIsNormalized) {
    Rng g(54);
    auto b = bishop_q({"1/4"});
    SegreManifold<Gq> M;
    M.b = b;
    M.max_degree = 5;
    M.phi[3] = random_poly<Gq>(1, Kind::independent, 3, g);
    M.phiBar[3] = random_poly<Gq>(1, Kind::independent, 3, g);
    M.phi[4] = random_poly<Gq>(1, Kind::independent, 4, g);
    auto res = normalize_segre(M, 5);
    for (auto& [r, v] : res.residual) EXPECT_EQ(v, 0.0) << r;
    FischerContext<Gq> ctx(b);
    for (int k = 3; k <= 5; ++k) {
        auto dc = check_normalized_segre(at(res.M.phi, k, 1, Kind::independent), at(res.M.phiBar, k, 1, Kind::independent), k, ctx);
        EXPECT_TRUE(dc.g_ok && dc.f_ok && dc.level2_ok) << k << " " << dc.first_violation;
    }
}

TEST(SegreNormalize, HalfIsSingular) {
    auto b = bishop_q({"1/2"});
    SegreManifold<Gq> M;
    M.b = b;
    M.max_degree = 4;
    M.phi[3] = monomial<Gq>(1, Kind::independent, {3}, {0});
    M.phiBar[3] = monomial<Gq>(1, Kind::independent, {0}, {3});
    EXPECT_THROW(normalize_segre(M, 4), NormalizeError);
}

TEST(ModelMap, IdentityAndPerturbation) {
    auto b = bishop_q({"1/5"});
    auto bt = bishop_q({"1/5", "3/10"});
    auto T = FormalTransform<Gq>::identity(1, 2, 5);
    EXPECT_TRUE(verify_model_map(T, 1, 2, b, bt, 5).zero());
    EXPECT_TRUE(verify_model_map(SegreTransform<Gq>::complexify(T), 1, 2, b, bt, 5).zero());
    T.add_f(1, 2, 0, make_key({2}, {0}), Gq(1));
    auto rep = verify_model_map(T, 1, 2, b, bt, 5);
    EXPECT_FALSE(rep.zero());
    EXPECT_EQ(rep.residual.at(4), 1.0);
    EXPECT_FALSE(verify_model_map(SegreTransform<Gq>::complexify(T), 1, 2, b, bt, 5).zero());
    EXPECT_THROW(verify_model_map(T, 2, 1, bt, b, 5), std::invalid_argument);
}

TEST(Rigidity, SmallEmbedding) {
    auto b = bishop_q({"1/5"});
    auto bt = bishop_q({"1/5", "3/10"});
    for (bool segre : {false, true}) {
        auto r = rigidity_probe(b, bt, 4, segre);
        for (auto& [d, k] : r.kernel) EXPECT_EQ(k, 0) << "degree " << d << " segre " << segre;
        EXPECT_TRUE(r.quadratic_certified);
        EXPECT_GT(r.certificate_margin, 0);
        EXPECT_TRUE(r.rigid());
    }
    EXPECT_THROW(rigidity_probe(bt, b, 4, false), std::invalid_argument);
}
