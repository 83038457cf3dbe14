#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rwre/config.hpp"
#include "rwre/env.hpp"

using namespace rwre;

TEST_CASE("two-point constructor") {
    const EnvSpec spec = make_two_point_env(2, 3.0, 0.25, 0.5);
    CHECK(spec.b() == 2);
    CHECK(spec.atoms().size() == 4);
    CHECK(spec.a_min() == 0.25);
    CHECK(spec.a_max() == 3.0);
    CHECK_FALSE(spec.is_degenerate());

    CHECK_THROWS_AS(make_two_point_env(1, 2.0, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_two_point_env(2, 2.0, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_two_point_env(2, 2.0, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_two_point_env(2, 2.0, -0.5, 0.5), std::invalid_argument);
}

TEST_CASE("critical two-point solves the moment conditions") {
    for (int b = 2; b <= 8; ++b) {
        const EnvSpec spec = make_critical_two_point(b);
        double ea = 0.0, ealoga = 0.0;
        for (const auto& [a, p] : spec.marginal()) {
            ea += p * a;
            ealoga += p * a * std::log(a);
        }
        CHECK(std::fabs(ea - 1.0 / b) < 1e-12);
        CHECK(std::fabs(ealoga) < 1e-12);
    }
    const EnvSpec spec = make_critical_two_point(2);
    CHECK(spec.a_max() == doctest::Approx(3.7320508).epsilon(1e-6));
    CHECK(spec.a_min() == doctest::Approx(0.2679492).epsilon(1e-6));
    double q_hi = 0.0;
    for (const auto& [a, p] : spec.marginal())
        if (a > 1.0) q_hi = p;
    CHECK(q_hi == doctest::Approx(0.0669873).epsilon(1e-5));
}

TEST_CASE("psi values") {
    const EnvSpec spec = make_two_point_env(2, 2.0, 0.5, 0.5);
    CHECK(psi(spec, 1.0) == doctest::Approx(std::log(1.25)).epsilon(1e-12));
    CHECK(psi(spec, 0.0) == doctest::Approx(0.0));
    CHECK(psi(make_critical_two_point(2), 1.0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK_THROWS_AS(psi(spec, -0.5), std::invalid_argument);
}

TEST_CASE("psi is convex on a grid") {
    const EnvSpec spec = make_critical_two_point(3);
    for (double t1 = 0.0; t1 <= 2.0; t1 += 0.25) {
        for (double t2 = 0.0; t2 <= 2.0; t2 += 0.25) {
            for (double lam = 0.0; lam <= 1.0; lam += 0.2) {
                const double lhs = psi(spec, lam * t1 + (1 - lam) * t2);
                const double rhs = lam * psi(spec, t1) + (1 - lam) * psi(spec, t2);
                CHECK(lhs <= rhs + 1e-12);
            }
        }
    }
}

TEST_CASE("compute_p") {
    CHECK(compute_p(make_critical_two_point(2)) == doctest::Approx(0.5).epsilon(1e-9));
    // symmetric two-point: E A^t = cosh(t log a) >= 1 with the minimum at 0
    CHECK(compute_p(make_two_point_env(2, 4.0, 0.25, 0.5)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(compute_p(make_constant_env(2, 0.5)) == doctest::Approx(0.5).epsilon(1e-9));
    // p never exceeds the endpoint values
    const EnvSpec spec = make_two_point_env(2, 3.0, 0.2, 0.3);
    double ea = 0.0;
    for (const auto& [a, p] : spec.marginal()) ea += p * a;
    CHECK(compute_p(spec) <= 1.0 + 1e-12);
    CHECK(compute_p(spec) <= ea + 1e-12);
}

TEST_CASE("theta") {
    const double q = (2.0 - std::sqrt(3.0)) / 4.0;
    const auto th = theta(make_two_point_env(2, 8.0, 0.125, q));
    REQUIRE(th.has_value());
    CHECK(*th == doctest::Approx(std::log(2.0 + std::sqrt(3.0)) / (3.0 * std::log(2.0)))
                     .epsilon(1e-9));

    const auto critical = theta(make_critical_two_point(2));
    REQUIRE(critical.has_value());
    CHECK(*critical == 1.0);

    CHECK_FALSE(theta(make_two_point_env(2, 4.0, 0.25, 0.5)).has_value());  // p = 1
}

TEST_CASE("kappa") {
    const auto k = kappa(make_two_point_env(2, 4.0, 6.0 / 19.0, 0.05));
    REQUIRE(k.has_value());
    CHECK(*k > 1.15);
    CHECK(*k < 1.2);
    CHECK(*k == doctest::Approx(1.17).epsilon(0.01));

    // a_max < 1 with E(A) = 1/b: kappa is infinite
    const auto inf_k = kappa(make_two_point_env(2, 0.9, 0.1, 0.5));
    REQUIRE(inf_k.has_value());
    CHECK(std::isinf(*inf_k));

    CHECK_FALSE(kappa(make_critical_two_point(2)).has_value());
}

TEST_CASE("classify_regime") {
    const Regime slow = classify_regime(make_critical_two_point(2));
    CHECK(slow.tag == RegimeTag::NullRecurrentSlow);
    REQUIRE(slow.theta.has_value());
    CHECK(*slow.theta == 1.0);

    const Regime transient = classify_regime(make_constant_env(2, 1.0));
    CHECK(transient.tag == RegimeTag::Transient);
    CHECK(transient.p == doctest::Approx(1.0));

    const Regime sub = classify_regime(make_two_point_env(2, 4.0, 6.0 / 19.0, 0.05));
    CHECK(sub.tag == RegimeTag::NullRecurrentSubdiffusive);
    REQUIRE(sub.kappa.has_value());
    CHECK(*sub.kappa == doctest::Approx(1.17).epsilon(0.01));

    CHECK(classify_regime(make_constant_env(2, 0.1)).tag == RegimeTag::PositiveRecurrent);

    for (int b = 2; b <= 8; ++b)
        CHECK(classify_regime(make_critical_two_point(b)).tag == RegimeTag::NullRecurrentSlow);
}

TEST_CASE("omega_from_A") {
    const EnvSpec spec = make_constant_env(2, 0.5);
    const std::vector<double> a{0.5, 0.5};
    const auto w = omega_from_A(spec, a, false);
    CHECK(w.to_parent == doctest::Approx(0.5));
    CHECK(w.to_child[0] == doctest::Approx(0.25));
    CHECK(w.to_child[1] == doctest::Approx(0.25));

    const EnvSpec ones = make_constant_env(2, 1.0);
    const std::vector<double> av{1.0, 1.0};
    const auto wr = omega_from_A(ones, av, true);
    CHECK(wr.to_parent == 0.0);
    CHECK(wr.to_child[0] == doctest::Approx(0.5));
    CHECK(wr.to_child[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(omega_from_A(spec, std::vector<double>{0.5, 2.0}, false),
                    std::invalid_argument);
}

TEST_CASE("omega weights sum to 1, respect the ellipticity floor, invert to A") {
    const EnvSpec spec = make_critical_two_point(2);
    const double eps0 = epsilon0(spec);
    SplitMix64 rng(99);
    for (int i = 0; i < 200; ++i) {
        const auto a = realize_A(spec, 5, VertexAddress{{static_cast<std::uint8_t>(i % 2),
                                                         static_cast<std::uint8_t>((i / 2) % 2)}});
        const auto w = omega_from_A(spec, a, false);
        double sum = w.to_parent;
        for (double c : w.to_child) sum += c;
        CHECK(std::fabs(sum - 1.0) < 1e-12);
        CHECK(w.to_parent >= eps0);
        for (std::size_t j = 0; j < w.to_child.size(); ++j) {
            CHECK(w.to_child[j] >= eps0);
            CHECK(w.to_child[j] / w.to_parent == doctest::Approx(a[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("realize_A determinism and marginal frequencies") {
    const EnvSpec spec = make_critical_two_point(2);
    const VertexAddress addr{{1, 0, 1}};
    CHECK(realize_A(spec, 42, addr) == realize_A(spec, 42, addr));
    CHECK(realize_A(spec, 42, addr) != realize_A(spec, 43, addr));

    // Empirical atom frequencies over many addresses: within 4 sigma.
    std::map<std::size_t, std::uint64_t> counts;
    const std::size_t total = 1000000;
    for (std::size_t i = 0; i < total; ++i) {
        VertexAddress a;
        std::size_t v = i;
        for (int d = 0; d < 20; ++d) {
            a.digits.push_back(static_cast<std::uint8_t>(v & 1));
            v >>= 1;
        }
        std::uint64_t state = chain_root(7);
        for (auto dg : a.digits) state = chain_child(state, dg);
        counts[spec.pick_atom(state)]++;
    }
    for (std::size_t k = 0; k < spec.atoms().size(); ++k) {
        const double p = spec.atoms()[k].prob;
        const double expect = p * static_cast<double>(total);
        const double sigma = std::sqrt(static_cast<double>(total) * p * (1.0 - p));
        CHECK(std::fabs(static_cast<double>(counts[k]) - expect) < 4.0 * sigma);
    }

    const EnvSpec constant = make_constant_env(3, 0.7);
    const auto v = realize_A(constant, 1, VertexAddress{{2, 0}});
    CHECK(v == std::vector<double>{0.7, 0.7, 0.7});
}

TEST_CASE("env json round trip") {
    const EnvSpec spec = make_critical_two_point(2);
    const EnvSpec back = env_from_json(env_to_json(spec));
    CHECK(back.hash_hex() == spec.hash_hex());
    CHECK(back.b() == spec.b());
    REQUIRE(back.atoms().size() == spec.atoms().size());
    for (std::size_t i = 0; i < back.atoms().size(); ++i) {
        CHECK(back.atoms()[i].values == spec.atoms()[i].values);
        CHECK(back.atoms()[i].prob == spec.atoms()[i].prob);
    }

    const EnvSpec fam = env_from_json(R"({"family":"two_point","b":2,"a_hi":3.0,"a_lo":0.25,"q":0.5})");
    CHECK(fam.a_max() == 3.0);
    CHECK_THROWS(env_from_json(R"({"family":"unknown","b":2})"));
}

TEST_CASE("identically-distributed marginal check rejects lopsided laws") {
    std::vector<SiblingAtom> atoms;
    atoms.push_back({{2.0, 0.5}, 0.5});
    atoms.push_back({{0.5, 0.5}, 0.5});  // second coordinate is constant
    CHECK_THROWS_AS(EnvSpec(2, std::move(atoms)), std::invalid_argument);

    // correlated but exchangeable law is fine
    std::vector<SiblingAtom> ok;
    ok.push_back({{2.0, 0.5}, 0.5});
    ok.push_back({{0.5, 2.0}, 0.5});
    CHECK_NOTHROW(EnvSpec(2, std::move(ok)));
}
