#include "doctest.h"

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "phishrl/env.hpp"
#include "phishrl/errors.hpp"

using namespace phishrl;

namespace {

PhishEnv make_env(std::size_t n, std::uint64_t seed) {
    auto data = fixtures::separable_states(n, 21, 4);
    return PhishEnv(std::move(data.states), std::move(data.labels), seed);
}

}  // namespace

TEST_CASE("reward cases") {
    CHECK(reward_for(1, 1) == 1.0);
    CHECK(reward_for(0, 0) == 1.0);
    CHECK(reward_for(0, 1) == -2.0);
    CHECK(reward_for(1, 0) == -0.5);
    CHECK_THROWS_AS(reward_for(2, 0), InvalidAction);
}

TEST_CASE("episodes last one step and rewards come from the fixed set") {
    auto env = make_env(50, 1);
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        env.reset();
        const int action = static_cast<int>(rng.uniform_index(2));
        const auto r = env.step(action);
        CHECK(r.done);
        CHECK((r.reward == 1.0 || r.reward == -0.5 || r.reward == -2.0));
        CHECK(r.reward == reward_for(action, r.label));
    }
}

TEST_CASE("step requires a reset") {
    auto env = make_env(10, 1);
    CHECK_THROWS_AS(env.step(0), StepBeforeReset);
    env.reset();
    env.step(0);
    CHECK_THROWS_AS(env.step(0), StepBeforeReset);
    env.reset();
    CHECK_THROWS_AS(env.step(5), InvalidAction);
}

TEST_CASE("class balance over 10000 resets") {
    // Unbalanced pool: 90 legitimate, 10 phishing.
    std::vector<StateVector> states;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
        states.push_back(StateVector{static_cast<double>(i)});
        labels.push_back(i < 90 ? 0 : 1);
    }
    PhishEnv env(states, labels, 17);
    int phishing = 0;
    for (int i = 0; i < 10000; ++i) {
        env.reset();
        phishing += env.label(*env.current());
    }
    CHECK(std::abs(phishing / 10000.0 - 0.5) <= 0.015);
}

TEST_CASE("one sample per class shows both within 20 resets") {
    PhishEnv env(std::vector<StateVector>{{0.0}, {1.0}}, {0, 1}, 5);
    for (int window = 0; window < 50; ++window) {
        std::set<int> seen;
        for (int i = 0; i < 20; ++i) {
            env.reset();
            seen.insert(env.label(*env.current()));
        }
        CHECK(seen.size() == 2);
    }
}

TEST_CASE("same seed gives the same reset sequence") {
    auto a = make_env(40, 9);
    auto b = make_env(40, 9);
    for (int i = 0; i < 200; ++i) {
        a.reset();
        b.reset();
        CHECK(*a.current() == *b.current());
    }
}

TEST_CASE("construction checks") {
    CHECK_THROWS(PhishEnv(std::vector<StateVector>{{0.0}}, {0, 1}, 1));
    CHECK_THROWS(PhishEnv(std::vector<StateVector>{{0.0}, {1.0}}, {0, 0}, 1));
}
