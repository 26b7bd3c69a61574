// Exact optimal transport (squared Euclidean ground cost): agreement with a
// permutation brute force on uniform instances, metric axioms of the induced
// W2 distance, and plan feasibility.
#include <doctest.h>

#include <cmath>

#include "wasp/wasp.hpp"

using namespace wasp;

namespace {

Matrix random_atoms(SplitMix64& g, int s, int q, double scale = 3.0) {
    Matrix a(s, q);
    for (int i = 0; i < s; ++i)
        for (int c = 0; c < q; ++c) a(i, c) = scale * (2.0 * rng::uniform01(g) - 1.0);
    return a;
}

double w2_of(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return w2_exact(a, b).first;  // already the distance (square root of the optimal cost)
}

}  // namespace

TEST_CASE("exact transport matches permutation brute force on 200 uniform instances") {
    SplitMix64 g(314159);
    int checked = 0;
    for (int it = 0; it < 200; ++it) {
        int s = 2 + static_cast<int>(rng::uniform01(g) * 5.0);  // 2..6
        int q = 1 + static_cast<int>(rng::uniform01(g) * 3.0);  // 1..3
        EmpiricalMeasure mu = make_measure(random_atoms(g, s, q));
        EmpiricalMeasure nu = make_measure(random_atoms(g, s, q));
        double lp = w2_exact(mu, nu).first;
        double bf = w2_bruteforce_uniform(mu, nu);
        REQUIRE(std::abs(lp - bf) < 1e-9 * std::max(1.0, std::abs(bf)));
        ++checked;
    }
    CHECK(checked == 200);
}

TEST_CASE("transport plan satisfies both marginals") {
    SplitMix64 g(9001);
    for (int it = 0; it < 25; ++it) {
        int s = 3 + static_cast<int>(rng::uniform01(g) * 6.0);
        int t = 3 + static_cast<int>(rng::uniform01(g) * 6.0);
        Vector wa(s), wb(t);
        for (int i = 0; i < s; ++i) wa[i] = 0.1 + rng::uniform01(g);
        for (int i = 0; i < t; ++i) wb[i] = 0.1 + rng::uniform01(g);
        EmpiricalMeasure mu = make_measure(random_atoms(g, s, 2), wa);
        EmpiricalMeasure nu = make_measure(random_atoms(g, t, 2), wb);
        auto [cost, plan] = w2_exact(mu, nu);
        REQUIRE(cost >= -1e-12);
        detail::verify_plan_marginals(plan, mu.weights, nu.weights);  // throws on violation
        // Squared objective equals <coupling, cost matrix>, and the returned
        // distance is its square root.
        CostMatrix c = squared_cost(mu, nu);
        double inner = (plan.coupling.array() * c.entries.array()).sum();
        CHECK(std::abs(inner - plan.objective) < 1e-10 * std::max(1.0, plan.objective));
        CHECK(std::abs(cost * cost - plan.objective) < 1e-10 * std::max(1.0, plan.objective));
    }
}

TEST_CASE("w2 satisfies identity, symmetry, and the triangle inequality") {
    SplitMix64 g(271828);
    for (int it = 0; it < 100; ++it) {
        int q = 1 + static_cast<int>(rng::uniform01(g) * 2.0);
        int s = 2 + static_cast<int>(rng::uniform01(g) * 4.0);
        EmpiricalMeasure a = make_measure(random_atoms(g, s, q));
        EmpiricalMeasure b = make_measure(random_atoms(g, s + 1, q));
        EmpiricalMeasure c = make_measure(random_atoms(g, s + 2, q));
        double dab = w2_of(a, b), dba = w2_of(b, a);
        double dac = w2_of(a, c), dbc = w2_of(b, c);
        REQUIRE(std::abs(dab - dba) < 1e-9);
        REQUIRE(w2_of(a, a) < 1e-9);
        REQUIRE(dab <= dac + dbc + 1e-9);
    }
}

TEST_CASE("w2 is equivariant under translation and scales linearly") {
    SplitMix64 g(1618);
    for (int it = 0; it < 20; ++it) {
        EmpiricalMeasure a = make_measure(random_atoms(g, 5, 2));
        EmpiricalMeasure b = make_measure(random_atoms(g, 6, 2));
        double base = w2_of(a, b);

        Matrix sa = a.atoms, sb = b.atoms;
        sa.col(0).array() += 10.0;
        sa.col(1).array() -= 4.0;
        sb.col(0).array() += 10.0;
        sb.col(1).array() -= 4.0;
        double shifted = w2_of(make_measure(sa, a.weights), make_measure(sb, b.weights));
        CHECK(std::abs(shifted - base) < 1e-8);

        double scaled = w2_of(make_measure((2.5 * a.atoms).eval(), a.weights),
                              make_measure((2.5 * b.atoms).eval(), b.weights));
        CHECK(std::abs(scaled - 2.5 * base) < 1e-8);
    }
}

TEST_CASE("two-point measures solve in closed form") {
    // Uniform measures on {0, 1} and {a, b}: optimal coupling matches sorted
    // atoms in 1-D, so W2^2 = 0.5[(a-0)^2 + (b-1)^2] for a <= b.
    Matrix x(2, 1), y(2, 1);
    x << 0, 1;
    y << 0.25, 3.0;
    double w2 = w2_exact(make_measure(x), make_measure(y)).first;
    CHECK(w2 == doctest::Approx(std::sqrt(0.5 * (0.25 * 0.25 + 4.0))).epsilon(1e-12));
}

TEST_CASE("exact transport enforces the variable cap") {
    Matrix big = Matrix::Zero(600, 1);
    for (int i = 0; i < 600; ++i) big(i, 0) = i;
    EmpiricalMeasure m = make_measure(big);
    CHECK_THROWS_AS(w2_exact(m, m), numerical_error);  // 360,000 > 250,000
}

TEST_CASE("brute force rejects non-uniform or oversized inputs") {
    Matrix x(2, 1);
    x << 0, 1;
    Vector w(2);
    w << 0.3, 0.7;
    CHECK_THROWS_AS(w2_bruteforce_uniform(make_measure(x, w), make_measure(x)), validation_error);
    Matrix nine = Matrix::Zero(9, 1);
    for (int i = 0; i < 9; ++i) nine(i, 0) = i;
    CHECK_THROWS_AS(w2_bruteforce_uniform(make_measure(nine), make_measure(nine)), validation_error);
}
