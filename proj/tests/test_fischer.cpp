#include "support.hpp"

#include <Eigen/Dense>

#include <gtest/gtest.h>

using namespace bishop;
using namespace testing_support;

namespace {

const Kind K = Kind::conjugate;

// A from an independent symbolic solve (tests/oracles/fischer_oracle.py)
struct OracleCase {
    const char* name;
    std::vector<std::string> lambda;
    std::vector<Row> P;
    int p;
    std::vector<Row> A;
};

std::vector<OracleCase> oracle_cases() {
    return {
        {"n1_z3", {"1/4"}, {{{3}, {0}, "1"}}, 3, {{{1}, {0}, "5/7", "0"}, {{0}, {1}, "-2/7", "0"}}},
        {"n1_z4", {"1/4"}, {{{4}, {0}, "1"}}, 4,
         {{{2}, {0}, "163/170", "0"}, {{1}, {1}, "-10/17", "0"}, {{0}, {2}, "27/170", "0"}}},
        {"n2_mixed", {"1/10", "3/10"}, {{{2, 0}, {0, 1}, "1"}, {{1, 1}, {1, 0}, "3"}, {{0, 0}, {3, 0}, "-2/3"}}, 3,
         {{{1, 0}, {0, 0}, "25/1824", "0"}, {{0, 1}, {0, 0}, "1725/1984", "0"}, {{0, 0}, {1, 0}, "-215/1824", "0"}, {{0, 0}, {0, 1}, "-445/1984", "0"}}},
        {"n3_complex", {"1/5", "9/20", "0"}, {{{1, 1, 0}, {1, 0, 1}, "1"}, {{0, 0, 4}, {0, 0, 0}, "0", "1"}}, 4,
         {{{0, 1, 0}, {0, 0, 1}, "5650/35607", "0"}, {{0, 0, 0}, {0, 1, 1}, "-500/11869", "0"}}},
    };
}

}  // namespace

TEST(Decompose, MatchesSymbolicOracle) {
    for (auto& c : oracle_cases()) {
        auto b = bishop_q(c.lambda);
        auto P = from_rows(b.N, c.p, c.P);
        auto d = decompose(P, b);
        EXPECT_EQ(d.A, from_rows(b.N, c.p - 2, c.A)) << c.name;
        EXPECT_TRUE(trace(d.C, b).empty()) << c.name;
        EXPECT_EQ(d.C + mul(d.A, quadric<Gq>(b, K)), P) << c.name;
    }
}

TEST(Decompose, FloatAgreesWithExact) {
    for (auto& c : oracle_cases()) {
        auto b = bishop_q(c.lambda);
        auto P = from_rows(b.N, c.p, c.P);
        auto ex = to_float(decompose(P, b).A);
        auto fl = decompose(to_float(P), b).A;
        for (auto& [k, v] : ex.t) EXPECT_NEAR(std::abs(fl.coeff(k) - v), 0.0, 1e-12) << c.name;
        for (auto& [k, v] : fl.t) EXPECT_NEAR(std::abs(ex.coeff(k) - v), 0.0, 1e-12) << c.name;
    }
}

TEST(Decompose, TraceFreeInputIsItsOwnRemainder) {
    auto b = bishop_q({"1/5", "1/5", "1/5"});
    auto P = monomial<Gq>(3, K, {1, 1, 1}, {0, 0, 0});
    auto d = decompose(P, b);
    EXPECT_TRUE(d.A.empty());
    EXPECT_EQ(d.C, P);
}

TEST(Decompose, RejectsLowDegree) {
    auto b = bishop_q({"1/4"});
    EXPECT_THROW(decompose(monomial<Gq>(1, K, {1}, {0}), b), std::invalid_argument);
}

TEST(Chain, ReassemblesInput) {
    Rng g(21);
    for (int rep = 0; rep < 6; ++rep) {
        const int N = 1 + rep % 2, p = 4 + rep % 3;
        BishopData b(random_lambda(N, g));
        auto P = random_poly<Gq>(N, K, p, g);
        for (auto fl : {Flavor::G, Flavor::F}) {
            auto ch = chain(P, b, fl);
            EXPECT_EQ(ch.depth, fl == Flavor::G ? p / 2 : (p - 1) / 2);
            auto Q = quadric<Gq>(b, K);
            Poly<Gq> sum = ch.P.back(), Qk = constant_poly<Gq>(N, K, Gq(1));
            for (int k = 0; k < ch.depth; ++k) Qk = mul(Qk, Q);
            sum = mul(sum, Qk);
            Qk = constant_poly<Gq>(N, K, Gq(1));
            for (int k = 0; k < ch.depth; ++k) {
                EXPECT_TRUE(trace(ch.R[k], b).empty());
                sum += mul(ch.R[k], Qk);
                Qk = mul(Qk, Q);
            }
            EXPECT_EQ(sum, P);
        }
    }
}

TEST(IndexSets, Membership) {
    auto b = bishop_q({"1/10", "0"});
    EXPECT_TRUE(in_S({1, 5}, b));
    EXPECT_FALSE(in_S({2, 0}, b));
    EXPECT_TRUE(in_T({0, 4}, 0, b));
    EXPECT_FALSE(in_T({1, 0}, 0, b));
    EXPECT_TRUE(in_T({1, 0}, 1, b));
    EXPECT_FALSE(in_T({2, 0}, 1, b));
}

TEST(IndexSets, AgreeWithTrace) {
    for (auto lam : std::vector<std::vector<std::string>>{{"1/4"}, {"1/10", "0"}, {"0", "0", "1/5"}}) {
        auto b = bishop_q(lam);
        MultiIndex zero(b.N, 0);
        for (int p = 3; p <= 5; ++p)
            for (auto& I : compositions(p, b.N))
                EXPECT_EQ(in_S(I, b), trace(monomial<Gq>(b.N, K, I, zero), b).empty());
    }
}

TEST(NormBasis, CountsAndRank) {
    auto b = bishop_q({"1/10", "3/10"});
    FischerContext<Gq> ctx(b);
    for (int p = 3; p <= 6; ++p) {
        auto g = norm_basis<Gq>(p, b, Flavor::G, &ctx);
        auto f = norm_basis<Gq>(p, b, Flavor::F, &ctx);
        EXPECT_EQ(g.generators.size(), 2 * compositions(p, 2).size());
        EXPECT_EQ(f.generators.size(), 2 * 2 * compositions(p - 1, 2).size());
        EXPECT_EQ(g.gram_rank, int(g.generators.size()));
        EXPECT_EQ(f.gram_rank, int(f.generators.size()));
        EXPECT_TRUE(g.excluded.empty());
    }
}

TEST(NormBasis, ZeroInvariantUsesRawMonomials) {
    auto b = bishop_q({"1/4", "0"});
    auto g = norm_basis<Gq>(3, b, Flavor::G);
    // z^I with i_1 <= 1: (1,2), (0,3)
    EXPECT_EQ(g.excluded.size(), 2u);
}

TEST(IsNormalized, Examples) {
    auto b = bishop_q({"1/4"});
    Poly<Gq> zero(1, K, 3);
    EXPECT_TRUE(is_normalized(zero, b, Flavor::G).ok);
    auto P = monomial<Gq>(1, K, {3}, {0}) + monomial<Gq>(1, K, {0}, {3});
    auto r = is_normalized(P, b, Flavor::G);
    EXPECT_FALSE(r.ok);
    ASSERT_FALSE(r.violations.empty());
    EXPECT_EQ(r.violations[0].level, 0);
    auto nr = is_normalized(monomial<Gq>(1, K, {3}, {0}), b, Flavor::G);
    EXPECT_FALSE(nr.ok);
    EXPECT_FALSE(nr.note.empty());
}

TEST(IsNormalized, ProjectionPasses) {
    // remove the G-generator components at every level of a real quartic
    auto b = bishop_q({"1/4"});
    FischerContext<Gq> ctx(b);
    Rng g(5);
    auto P = random_real_phi<Gq>(1, 4, g);
    Normalizer<Gq> nz(b);
    auto M = ManifoldSeries<Gq>::model(b, 4);
    M.phi[4] = P;
    auto res = normalize(M, 4, &nz);
    Poly<Gq> out = res.M.phi.count(4) ? res.M.phi.at(4) : Poly<Gq>(1, K, 4);
    out.deg = 4;
    // Im φ against the G family, Re φ against the F family
    Poly<Gq> im = imag_part(out), re = real_part(out);
    for (auto& [k, c] : im.t) c = times_i(c);
    im.deg = re.deg = 4;
    EXPECT_TRUE(is_normalized(im, b, Flavor::G, &ctx).ok);
    EXPECT_TRUE(is_normalized(re, b, Flavor::F, &ctx).ok);
    EXPECT_FALSE(is_normalized(real_part(P), b, Flavor::F, &ctx).ok && is_normalized(P, b, Flavor::G, &ctx).ok);
}

TEST(Energy, RemainderBelowInput) {
    Rng g(61);
    for (int rep = 0; rep < 30; ++rep) {
        const int N = 1 + rep % 3, p = 3 + rep % 4;
        BishopData b(random_lambda(N, g));
        auto P = random_real_phi<Gq>(N, p, g);
        auto d = decompose(P, b);
        EXPECT_LE(fischer_energy(d.C), fischer_energy(P));
    }
}

TEST(Energy, ProductInequalityOnRandomInputs) {
    Rng g(62);
    long worst_fail = 0;
    for (int N = 1; N <= 3; ++N)
        for (int p = 3; p <= 8; ++p) {
            for (int rep = 0; rep < 1000; ++rep) {
                BishopData b(random_lambda(N, g));
                auto Q = quadric<Gq>(b, K);
                auto P1 = random_poly<Gq>(N, K, p - 2, g);
                if (fischer_energy(P1) * fischer_energy(Q) > fischer_energy(mul(P1, Q))) ++worst_fail;
            }
        }
    EXPECT_EQ(worst_fail, 0);
}

TEST(Energy, WorstCaseRatioMatchesOracle) {
    // min over P1 of E(P1 Q) / (E(P1) E(Q)); tests/oracles/energy_oracle.py
    struct Case {
        std::vector<std::string> lam;
        int q;
        double want;
    };
    for (auto& c : std::vector<Case>{{{"9/20"}, 1, 1.00552486188}, {{"9/20"}, 3, 1.02319852409}, {{"9/20", "9/20"}, 2, 1.00552486188},
                                     {{"9/20", "0"}, 3, 1.01371221254}, {{"9/20", "3/10", "1/10"}, 2, 1.00527221387}}) {
        auto b = bishop_q(c.lam);
        auto Bq = monomials_of_degree(c.q, b.N), Bp = monomials_of_degree(c.q + 2, b.N);
        std::map<Key, int> pos;
        for (size_t i = 0; i < Bp.size(); ++i) pos[Bp[i]] = int(i);
        auto Q = quadric<Gq>(b, K);
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(Bp.size(), Bq.size());
        Eigen::VectorXd wq(Bq.size()), wp(Bp.size());
        for (size_t j = 0; j < Bq.size(); ++j) {
            Poly<Gq> m(b.N, K, c.q);
            m.add(Bq[j], Gq(1));
            for (auto& [k, v] : mul(m, Q).t) M(pos.at(k), j) = v.re.get_d();
            wq(j) = key_factorial(Bq[j], 2 * b.N).get_d();
        }
        for (size_t i = 0; i < Bp.size(); ++i) wp(i) = key_factorial(Bp[i], 2 * b.N).get_d();
        Eigen::MatrixXd A = M.transpose() * wp.asDiagonal() * M;
        Eigen::MatrixXd W = wq.asDiagonal();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, W);
        double ratio = es.eigenvalues().minCoeff() / fischer_energy(Q).get_d();
        EXPECT_NEAR(ratio, c.want, 1e-9);
        EXPECT_GT(ratio, 1.0);
    }
}

TEST(Remainder, ConjugatePairCoefficients) {
    // R1 = Σ a_I C_I + b_I bar C_I + R_{1,0} with a_I = conj b_I for real P
    Rng g(63);
    for (int rep = 0; rep < 8; ++rep) {
        const int N = 1 + rep % 2, p = 3 + rep % 3;
        std::vector<mpq_class> lam;
        for (int k = 0; k < N; ++k) lam.push_back(rand_lambda(g) + mpq_class(1, 20));
        BishopData b(lam);
        FischerContext<Gq> ctx(b);
        auto P = random_real_phi<Gq>(N, p, g);
        auto R1 = ctx.decompose(P).C;
        auto nb = norm_basis<Gq>(p, b, Flavor::G, &ctx);
        const int n = int(nb.generators.size());
        Mat<Gq> G(n, n);
        std::vector<Gq> rhs(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) G(i, j) = fischer_inner(nb.generators[j], nb.generators[i]);
            rhs[i] = fischer_inner(R1, nb.generators[i]);
        }
        auto x = solve(G, rhs);
        ASSERT_TRUE(x.has_value());
        for (int i = 0; i + 1 < n; i += 2) EXPECT_EQ((*x)[i], conj((*x)[i + 1])) << nb.labels[i];
    }
}
