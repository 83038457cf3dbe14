#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rwre/errors.hpp"
#include "rwre/oracle.hpp"
#include "rwre/quenched.hpp"

using namespace rwre;

namespace {

quenched::TruncatedEnv constant_env(int n) {
    return quenched::TruncatedEnv(make_constant_env(2, 0.5), 1, n);
}

}  // namespace

TEST_CASE("chain shape and row sums") {
    const auto env = constant_env(3);
    const auto chain = oracle::build(env, true, true);
    CHECK(chain.num_states == 15 + 1);  // tree vertices plus the root-return state
    for (std::size_t s = 0; s < chain.num_states; ++s) {
        double sum = 0.0;
        for (std::size_t t = 0; t < chain.num_states; ++t) sum += chain.p(s, t);
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("transitions at a non-root vertex match omega_from_A") {
    const EnvSpec spec = make_critical_two_point(2);
    quenched::TruncatedEnv env(spec, 3, 3);
    const auto chain = oracle::build(env, true, true);
    // depth-1 vertex 0: children values live at level 2, indices 0 and 1
    const auto w = omega_from_A(spec, std::vector<double>{env.A(2, 0), env.A(2, 1)}, false);
    const std::size_t from = chain.state_of(1, 0);
    CHECK(chain.p(from, *chain.root_return) == doctest::Approx(w.to_parent).epsilon(1e-12));
    CHECK(chain.p(from, chain.state_of(2, 0)) == doctest::Approx(w.to_child[0]).epsilon(1e-12));
    CHECK(chain.p(from, chain.state_of(2, 1)) == doctest::Approx(w.to_child[1]).epsilon(1e-12));
}

TEST_CASE("hit probabilities on the constant environment") {
    // rho_4 = 1/4 for A = 1/2, b = 2
    const auto env = constant_env(4);
    const auto chain = oracle::build(env, true, true);
    CHECK(oracle::hit_probability(chain, chain.root_start, oracle::Target::LevelN) ==
          doctest::Approx(0.25).epsilon(1e-12));

    // specific depth-2 leaf: 1/6
    const auto env2 = constant_env(2);
    VertexAddress leaf{{0, 0}};
    const auto chain_leaf = oracle::build(env2, false, true, leaf);
    CHECK(oracle::hit_probability(chain_leaf, chain_leaf.root_start, oracle::Target::Leaf) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-12));

    // n = 1: the first step always lands in generation 1
    const auto env1 = constant_env(1);
    const auto chain1 = oracle::build(env1, true, true);
    CHECK(oracle::hit_probability(chain1, chain1.root_start, oracle::Target::LevelN) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expected absorption times") {
    const auto env = constant_env(4);
    const auto chain = oracle::build(env, true, false);
    CHECK(oracle::expected_absorption_time(chain, chain.root_start) ==
          doctest::Approx(16.0).epsilon(1e-10));

    const auto env1 = constant_env(1);
    const auto chain1 = oracle::build(env1, true, false);
    CHECK(oracle::expected_absorption_time(chain1, chain1.root_start) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const auto with_root = oracle::build(env, true, true);
    CHECK_THROWS_AS(oracle::expected_absorption_time(with_root, with_root.root_start),
                    std::invalid_argument);
}

TEST_CASE("passage time distribution") {
    const auto env = constant_env(3);
    const auto chain = oracle::build(env, true, true);
    const auto cdf = oracle::passage_time_distribution(chain, chain.root_start,
                                                       oracle::Target::LevelN, 200);
    CHECK(cdf[0] == 0.0);
    CHECK(cdf[1] == 0.0);  // below the graph distance
    for (std::size_t m = 1; m < cdf.size(); ++m) CHECK(cdf[m] >= cdf[m - 1]);
    CHECK(cdf.back() <= 1.0);

    const double hit = oracle::hit_probability(chain, chain.root_start, oracle::Target::LevelN);
    CHECK(cdf.back() == doctest::Approx(hit).epsilon(1e-6));
}

TEST_CASE("results are invariant to state enumeration order") {
    const EnvSpec spec = make_critical_two_point(2);
    quenched::TruncatedEnv env(spec, 11, 5);
    const auto plain = oracle::build(env, true, true);
    const auto shuffled = oracle::build(env, true, true, std::nullopt, 12345);
    const double a = oracle::hit_probability(plain, plain.root_start, oracle::Target::LevelN);
    const double b = oracle::hit_probability(shuffled, shuffled.root_start, oracle::Target::LevelN);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));

    const auto plain_tau = oracle::build(env, true, false);
    const auto shuffled_tau = oracle::build(env, true, false, std::nullopt, 999);
    CHECK(oracle::expected_absorption_time(plain_tau, plain_tau.root_start) ==
          doctest::Approx(oracle::expected_absorption_time(shuffled_tau, shuffled_tau.root_start))
              .epsilon(1e-10));
}

TEST_CASE("state cap is enforced") {
    const EnvSpec spec = make_critical_two_point(2);
    CHECK_THROWS_AS(
        [&] {
            quenched::TruncatedEnv env(spec, 1, 17, std::uint64_t{1} << 21);
            oracle::build(env, true, true);
        }(),
        BudgetExceeded);
}
