#include <gtest/gtest.h>

#include <random>

#include "modc/psg.hpp"
#include "modc/stationarity.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace modc;
using namespace modc::testing;

namespace {

ProblemInstance single(FunctionSpec f, FunctionSpec h = FunctionSpec::zero(),
                       FeasibleSetSpec set = FeasibleSetSpec::whole_space()) {
    const Eigen::Index n = f.dimension().value_or(h.dimension().value_or(1));
    return ProblemInstance(n, {{std::move(f), FunctionSpec::zero(), std::move(h)}}, std::move(set), 0.0, 0.0);
}

/// |x - 1| in one dimension.
FunctionSpec abs_shift() { return FunctionSpec::max_affine(mat({{1}, {-1}}), vec({-1, 1})); }

}  // namespace

TEST(CheckStationary, Example1AtZero) {
    const auto p = example1();
    const auto v = check_stationary(p, vec({0}));
    ASSERT_TRUE(v.stationary);
    ASSERT_TRUE(v.multipliers.has_value());
    EXPECT_EQ(*v.multipliers, vec({1, 0}));
    EXPECT_LE(v.witness_distance, 1e-7);
    // C_1 = [-1, 1] - [0, 2] = [-3, 1] contains 0.
    EXPECT_LE(multiplier_distance(p, vec({0}), vec({1, 0})), 1e-12);
}

TEST(CheckStationary, AbsoluteValue) {
    const auto p = single(FunctionSpec::weighted_l1(vec({1})));
    const auto a = check_stationary(p, vec({0}));
    EXPECT_TRUE(a.stationary);
    EXPECT_EQ(*a.multipliers, vec({1}));
    const auto b = check_stationary(p, vec({0.5}));
    EXPECT_FALSE(b.stationary);
    EXPECT_FALSE(b.multipliers.has_value());
    EXPECT_NEAR(b.witness_distance, 1.0, 1e-12);
}

TEST(CheckStationary, Example1AwayFromZero) {
    // For x > 0: C_1 = {1 - 2} and C_2 = {2 - 1}, so 0 = (1/2)(-1) + (1/2)(1).
    const auto v = check_stationary(example1(), vec({0.5}));
    EXPECT_TRUE(v.stationary);
    EXPECT_NEAR((*v.multipliers)(0), 0.5, 1e-9);
    // For x < 0: C_1 = {-1 - 0}, C_2 = {2 + 1}; also stationary.
    EXPECT_TRUE(check_stationary(example1(), vec({-0.5})).stationary);
}

TEST(CheckStationary, NormalConeMatters) {
    // F = x on [-1, 1]: stationary only at the lower end.
    const auto p = single(FunctionSpec::affine(vec({1})), FunctionSpec::zero(), FeasibleSetSpec::box(vec({-1}), vec({1})));
    EXPECT_TRUE(check_stationary(p, vec({-1})).stationary);
    EXPECT_FALSE(check_stationary(p, vec({0})).stationary);
    EXPECT_FALSE(check_stationary(p, vec({1})).stationary);
}

TEST(CheckStationary, Errors) {
    UserFn f;
    f.dim = 1;
    f.value = [](const Vector& x) { return x(0); };
    f.subgradient = [](const Vector&) { return Vector(Vector::Ones(1)); };
    EXPECT_THROW(check_stationary(single(FunctionSpec::user(f)), vec({0})), ContractError);
    const auto boxed = example1_box();
    EXPECT_THROW(check_stationary(boxed, vec({2})), PreconditionError);
    EXPECT_THROW(check_stationary(boxed, vec({0, 0})), InputError);
}

TEST(CheckStationary, WitnessSelfVerifying) {
    std::mt19937_64 rng(67);
    for (const auto& c : run_suite()) {
        for (int t = 0; t < 10; ++t) {
            Vector x = random_feasible(c.problem.set(), c.problem.n(), rng, 1.0);
            if (t % 2 == 0) x = project(c.problem.set(), Vector::Zero(c.problem.n()));  // kinks of the l1 terms
            const auto v = check_stationary(c.problem, x);
            if (!v.stationary) continue;
            EXPECT_NEAR(witness_norm(v), v.witness_distance, 1e-9) << c.name;
            EXPECT_NEAR(v.multipliers->sum(), 1.0, 1e-12);
            EXPECT_GE(v.multipliers->minCoeff(), 0.0);
            EXPECT_LE(multiplier_distance(c.problem, x, *v.multipliers), 1e-7) << c.name;
        }
    }
}

TEST(CheckStationary, AgreesWithDenseLambdaGrid) {
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 30; ++t) {
        const Eigen::Index n = 1 + t % 2;
        const std::size_t m = 2 + (t / 2) % 2;
        std::vector<ObjectiveTriple> obj;
        for (std::size_t i = 0; i < m; ++i) {
            Matrix a(3, n);
            for (Eigen::Index r = 0; r < 3; ++r)
                for (Eigen::Index j = 0; j < n; ++j) a(r, j) = u(rng);
            Vector w(n), q(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                w(j) = 0.5 * (u(rng) + 1);
                q(j) = u(rng);
            }
            obj.push_back({FunctionSpec::max_affine(a, Vector::Zero(3)), FunctionSpec::affine(q, 0.0),
                           FunctionSpec::weighted_l1(w)});
        }
        const auto set = t % 3 == 0 ? FeasibleSetSpec::box(Vector::Zero(n), Vector::Ones(n)) : FeasibleSetSpec::whole_space();
        const ProblemInstance p(n, obj, set, 0.0, 0.0);
        const Vector x = Vector::Zero(n);
        const auto v = check_stationary(p, x);

        // Independent family: vertices f_v + q - h_v from the raw data.
        PolytopeFamily fam;
        fam.n = n;
        for (const auto& o : obj) {
            const auto fv = subdifferential_polytope(o.f, x).vertices();
            const auto hv = subdifferential_polytope(o.h, x).vertices();
            Matrix s(n, static_cast<Eigen::Index>(fv.size() * hv.size()));
            Eigen::Index c = 0;
            for (const auto& a : fv)
                for (const auto& b : hv) s.col(c++) = a + gradient(o.g, x) - b;
            fam.sets.push_back(s);
        }
        fam.rays = set.is<Box>() ? Matrix(-Matrix::Identity(n, n)) : Matrix(n, 0);
        const double ref = dense_lambda_distance(fam, 1000);
        EXPECT_NEAR(v.witness_distance, ref, 2e-3) << "instance " << t;
        if (ref > 2e-3) {
            EXPECT_FALSE(v.stationary);
        }
    }
}

TEST(CheckStrongStationary, Example1AtZero) {
    const auto v = check_strong_stationary(example1(), vec({0}));
    EXPECT_TRUE(v.stationary);
    EXPECT_EQ(v.strong, Strong::no);
    EXPECT_EQ(v.lambda_grid, 2001);
    ASSERT_TRUE(v.strong_counterexample.has_value());
    EXPECT_GT(v.strong_violation, v.tol);
    ASSERT_EQ(v.strong_system.size(), 2u);
    EXPECT_EQ(v.strong_system[0].text, "lambda_2 <= 0.25");
    EXPECT_EQ(v.strong_system[1].text, "lambda_2 >= 0.5");
    EXPECT_FALSE(v.strong_interval.has_value());
    const std::string text = verdict_text(v);
    EXPECT_NE(text.find("infeasible"), std::string::npos);
}

TEST(CheckStrongStationary, IdenticalSets) {
    const ProblemInstance p(2,
                            {{FunctionSpec::weighted_l1(vec({1, 1})), FunctionSpec::zero(), FunctionSpec::weighted_l1(vec({1, 1}))},
                             {FunctionSpec::max_affine(mat({{1, 0}, {-1, 0}}), vec({0, 0})), FunctionSpec::zero(),
                              FunctionSpec::max_affine(mat({{1, 0}, {-1, 0}}), vec({0, 0}))}},
                            FeasibleSetSpec::whole_space(), 0.0, 0.0);
    const auto v = check_strong_stationary(p, vec({0, 0}), kMembershipTol, 21);
    EXPECT_EQ(v.strong, Strong::yes);
    EXPECT_TRUE(v.stationary);
}

TEST(CheckStrongStationary, AffineHInsideInterval) {
    const auto p = single(FunctionSpec::weighted_l1(vec({1})), FunctionSpec::affine(vec({0.5})));
    const auto v = check_strong_stationary(p, vec({0}));
    EXPECT_EQ(v.strong, Strong::yes);
}

TEST(CheckStrongStationary, StrongImpliesStationary) {
    std::mt19937_64 rng(79);
    for (const auto& c : run_suite()) {
        if (c.problem.m() > 3) continue;
        for (int t = 0; t < 4; ++t) {
            const Vector x = t == 0 ? project(c.problem.set(), Vector::Zero(c.problem.n()))
                                    : random_feasible(c.problem.set(), c.problem.n(), rng, 1.0);
            const auto v = check_strong_stationary(c.problem, x, kMembershipTol, 41);
            if (v.strong == Strong::yes) {
                EXPECT_TRUE(v.stationary) << c.name;
                EXPECT_TRUE(check_stationary(c.problem, x).stationary) << c.name;
            } else {
                EXPECT_TRUE(v.strong_counterexample.has_value());
            }
        }
    }
}

TEST(CheckStrongStationary, CapacityGuard) {
    std::vector<ObjectiveTriple> obj(4, {FunctionSpec::weighted_l1(vec({1})), FunctionSpec::zero(), FunctionSpec::zero()});
    const ProblemInstance p(1, obj, FeasibleSetSpec::whole_space(), 0.0, 0.0);
    EXPECT_THROW(check_strong_stationary(p, vec({0})), CapacityError);
    EXPECT_TRUE(check_stationary(p, vec({0})).stationary);
}

TEST(CertifyType2, TwoAbsoluteValuesOnInterval) {
    const ProblemInstance p(1,
                            {{FunctionSpec::weighted_l1(vec({1})), FunctionSpec::zero(), FunctionSpec::zero()},
                             {abs_shift(), FunctionSpec::zero(), FunctionSpec::zero()}},
                            FeasibleSetSpec::box(vec({0}), vec({1})), 0.0, 0.0);
    const auto v = check_stationary(p, vec({0.5}));
    ASSERT_TRUE(v.stationary);
    EXPECT_NEAR((*v.multipliers)(0), 0.5, 1e-9);
    const auto c = certify_type2(p, vec({0.5}), v);
    EXPECT_TRUE(c.granted) << c.reason;
    EXPECT_EQ(c.radius, 0.5);
    EXPECT_TRUE(weak_pareto_bruteforce(p, vec({0.5}), c.radius, 1e-3));
}

TEST(CertifyType2, SmoothConvexGOnBox) {
    const ProblemInstance p(2,
                            {{FunctionSpec::zero(), sq_dist(vec({0, 0})), FunctionSpec::zero()},
                             {FunctionSpec::zero(), sq_dist(vec({1, 0})), FunctionSpec::zero()}},
                            FeasibleSetSpec::box(vec({-1, -1}), vec({2, 2})), 2.0, 0.0);
    const Vector x = vec({0.3, 0.0});
    const auto v = check_stationary(p, x);
    ASSERT_TRUE(v.stationary);
    const auto c = certify_type2(p, x, v);
    EXPECT_TRUE(c.granted) << c.reason;
    EXPECT_FALSE(c.premises.empty());
    EXPECT_TRUE(weak_pareto_bruteforce(p, x, c.radius, c.radius / 50));
}

TEST(CertifyType2, RefusesKinkedH) {
    const auto p = single(FunctionSpec::weighted_l1(vec({2})), FunctionSpec::weighted_l1(vec({1})));
    const auto v = check_stationary(p, vec({0}));
    ASSERT_TRUE(v.stationary);
    const auto c = certify_type2(p, vec({0}), v);
    EXPECT_FALSE(c.granted);
    EXPECT_NE(c.reason.find("not affine"), std::string::npos);
}

TEST(CertifyType2, RefusesNonStationary) {
    const auto p = single(FunctionSpec::weighted_l1(vec({1})));
    const auto v = check_stationary(p, vec({0.5}));
    EXPECT_FALSE(certify_type2(p, vec({0.5}), v).granted);
}

TEST(WeakParetoBruteforce, Examples) {
    EXPECT_TRUE(weak_pareto_bruteforce(example1(), vec({0}), 1.0, 1e-3));
    EXPECT_TRUE(weak_pareto_bruteforce(example1(), vec({1}), 1.0, 1e-3));
    const auto lin = single(FunctionSpec::affine(vec({1})), FunctionSpec::zero(), FeasibleSetSpec::box(vec({-1}), vec({1})));
    EXPECT_FALSE(weak_pareto_bruteforce(lin, vec({0}), 1.0, 1e-3));
    EXPECT_TRUE(weak_pareto_bruteforce(lin, vec({-1}), 1.0, 1e-3));
    EXPECT_THROW(weak_pareto_bruteforce(single(FunctionSpec::zero(), FunctionSpec::affine(vec({1, 1, 1}))), vec({0, 0, 0}), 1.0,
                                        0.1),
                 CapacityError);
}

// Weak Pareto on the grid implies stationary (necessary condition).
TEST(WeakParetoBruteforce, ImpliesStationary) {
    const std::vector<ProblemInstance> problems = {
        example1_box(),
        ProblemInstance(1,
                        {{FunctionSpec::weighted_l1(vec({1})), FunctionSpec::zero(), FunctionSpec::zero()},
                         {abs_shift(), FunctionSpec::zero(), FunctionSpec::zero()}},
                        FeasibleSetSpec::box(vec({-1}), vec({2})), 0.0, 0.0),
        ProblemInstance(2,
                        {{FunctionSpec::weighted_l1(vec({1, 1})), FunctionSpec::zero(), FunctionSpec::zero()},
                         {FunctionSpec::max_affine(mat({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), vec({-1, 1, 0, 0})),
                          FunctionSpec::zero(), FunctionSpec::weighted_l1(vec({0, 0.5}))}},
                        FeasibleSetSpec::box(vec({-1, -1}), vec({2, 1})), 0.0, 0.0),
    };
    int certified = 0;
    for (const auto& p : problems) {
        const int steps = p.n() == 1 ? 60 : 12;
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; b <= (p.n() == 2 ? steps : 0); ++b) {
                Vector x(p.n());
                const auto bb = *bounding_box(p.set(), p.n());
                x(0) = bb.first(0) + (bb.second(0) - bb.first(0)) * a / steps;
                if (p.n() == 2) x(1) = bb.first(1) + (bb.second(1) - bb.first(1)) * b / steps;
                if (!weak_pareto_bruteforce(p, x, 0.2, p.n() == 1 ? 1e-3 : 1e-2)) continue;
                ++certified;
                EXPECT_TRUE(check_stationary(p, x).stationary) << x.transpose();
            }
    }
    EXPECT_GT(certified, 10);
}
