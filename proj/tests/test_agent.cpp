#include "doctest.h"

#include <cmath>
#include <memory>
#include <sstream>

#include "fixtures.hpp"
#include "phishrl/agent.hpp"
#include "phishrl/errors.hpp"

using namespace phishrl;

namespace {

TrainConfig tiny_config(AgentMode mode = AgentMode::qr_dqn, std::size_t n = 5) {
    TrainConfig cfg;
    cfg.mode = mode;
    cfg.num_quantiles = n;
    cfg.input_dim = 4;
    cfg.hidden_layers = {3, 3};
    return cfg;
}

// Network whose output is its last-layer bias: every weight is zero.
NetworkParams constant_output(const std::vector<double>& values, std::size_t n) {
    NetworkParams p;
    p.mode = n == 1 ? AgentMode::dqn : AgentMode::qr_dqn;
    p.num_quantiles = n;
    p.net = Mlp<double>({4, 3, values.size()});
    for (std::size_t i = 0; i < values.size(); ++i) p.net.layers().back().bias(static_cast<Eigen::Index>(i)) = values[i];
    return p;
}

StatePtr make_state(std::vector<double> v) { return std::make_shared<const StateVector>(std::move(v)); }

double max_abs_param(const NetworkParams& p) {
    double m = 0.0;
    for (const auto& l : p.net.layers()) m = std::max({m, l.weight.cwiseAbs().maxCoeff(), l.bias.cwiseAbs().maxCoeff()});
    return m;
}

}  // namespace

TEST_CASE("zero network outputs zero quantiles of shape 2 x N") {
    auto cfg = tiny_config();
    NetworkParams p{cfg.mode, 5, Mlp<double>(cfg.layer_sizes())};
    const auto out = forward(p, StateVector{0.3, -1.0, 2.0, 0.5});
    CHECK(out.num_actions == 2);
    CHECK(out.num_quantiles == 5);
    CHECK(out.values.size() == 10);
    for (const double v : out.values) CHECK(v == 0.0);
    CHECK_THROWS_AS(forward(p, StateVector{1.0}), ShapeMismatch);
}

TEST_CASE("forward is pure") {
    auto cfg = tiny_config();
    Rng rng(1);
    const auto p = init_params(cfg, rng);
    const StateVector s{0.1, 0.2, 0.3, 0.4};
    CHECK(forward(p, s).values == forward(p, s).values);
}

TEST_CASE("expected_q and greedy tie-break") {
    QuantileOutput out{2, 3, {0.1, 0.2, 0.3, 0.0, 0.2, 0.4}};
    const auto q = expected_q(out);
    CHECK(q[0] == doctest::Approx(0.2));
    CHECK(q[1] == doctest::Approx(0.2));
    CHECK(greedy(out) == 0);

    QuantileOutput higher{2, 1, {0.2, 0.3}};
    CHECK(greedy(higher) == 1);
    for (double& v : higher.values) v += 17.25;
    CHECK(greedy(higher) == 1);
}

TEST_CASE("epsilon schedule") {
    const TrainConfig cfg;
    CHECK(epsilon_at(0, cfg) == 1.0);
    CHECK(epsilon_at(75000, cfg) == 0.02);
    CHECK(epsilon_at(200000, cfg) == 0.02);
    CHECK(epsilon_at(37500, cfg) == doctest::Approx(0.51).epsilon(1e-12));
    CHECK(epsilon_at(1000, cfg) > epsilon_at(1001, cfg));
}

TEST_CASE("select_action") {
    auto cfg = tiny_config();
    Rng init(4);
    const auto p = init_params(cfg, init);
    const StateVector s{1.0, 0.0, -1.0, 0.5};
    Rng rng(5);
    for (int i = 0; i < 100; ++i) CHECK(select_action(p, s, 0.0, rng) == predict(p, s));

    int ones = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ones += select_action(p, s, 1.0, rng);
    CHECK(std::abs(ones / static_cast<double>(draws) - 0.5) <= 3.0 * std::sqrt(0.25 / draws));

    Rng a(8), b(8);
    for (int i = 0; i < 50; ++i) CHECK(select_action(p, s, 0.5, a) == select_action(p, s, 0.5, b));
}

TEST_CASE("predict is invariant to positive scaling of the output layer") {
    auto cfg = tiny_config();
    Rng rng(6);
    auto p = init_params(cfg, rng);
    const auto data = fixtures::separable_states(50, 3, 4);
    const auto before = predict_batch(p, data.states);
    p.net.layers().back().weight *= 3.5;
    p.net.layers().back().bias *= 3.5;
    CHECK(predict_batch(p, data.states) == before);
    for (std::size_t i = 0; i < data.states.size(); ++i) CHECK(predict(p, data.states[i]) == before[i]);
}

TEST_CASE("quantile fractions") {
    CHECK(quantile_fractions(1) == std::vector<double>{0.5});
    CHECK(quantile_fractions(2) == std::vector<double>{0.25, 0.75});
    const auto t = quantile_fractions(51);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) CHECK(t[i] > t[i - 1]);
        CHECK(t[i] + t[t.size() - 1 - i] == doctest::Approx(1.0));
    }
    CHECK_THROWS(quantile_fractions(0));
}

TEST_CASE("bellman targets") {
    TrainConfig cfg = tiny_config(AgentMode::qr_dqn, 2);
    // Action 1 has the larger mean, so a* = 1 with quantiles [1, 2].
    const auto target = constant_output({0.0, 0.5, 1.0, 2.0}, 2);
    const auto s = make_state({0, 0, 0, 0});
    const std::vector<Transition> batch{{s, 1, 1.0, s, true}, {s, 0, -2.0, s, true}, {s, 0, 0.0, s, false}};
    const auto z = bellman_targets(batch, target, cfg);
    CHECK(z[0] == std::vector<double>{1.0, 1.0});
    CHECK(z[1] == std::vector<double>{-2.0, -2.0});
    CHECK(z[2][0] == doctest::Approx(0.995).epsilon(1e-15));
    CHECK(z[2][1] == doctest::Approx(1.99).epsilon(1e-15));
}

TEST_CASE("quantile huber loss examples") {
    CHECK(quantile_huber_loss({0.0}, {1.0}, {0.5}, 1.0) == doctest::Approx(0.25));
    CHECK(quantile_huber_loss({1.0}, {0.0}, {0.5}, 1.0) == doctest::Approx(0.25));
    CHECK(quantile_huber_loss({0.1, 0.7}, {0.1, 0.7}, {0.25, 0.75}, 1.0) > 0.0);  // cross pairs still count
    CHECK(quantile_huber_loss({0.3, 0.3}, {0.3, 0.3}, {0.25, 0.75}, 1.0) == 0.0);
    CHECK_THROWS_AS(quantile_huber_loss({0.0}, {0.0, 1.0}, {0.5}, 1.0), LengthMismatch);
}

TEST_CASE("quantile huber loss is non-negative and continuous") {
    Rng rng(10);
    const auto taus = quantile_fractions(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pred(5), targ(5);
        for (auto& v : pred) v = rng.uniform(-3, 3);
        for (auto& v : targ) v = rng.uniform(-3, 3);
        const double base = quantile_huber_loss(pred, targ, taus, 1.0);
        CHECK(base >= 0.0);
        auto nudged = pred;
        nudged[trial % 5] += 1e-9;
        CHECK(std::abs(quantile_huber_loss(nudged, targ, taus, 1.0) - base) < 1e-8);
    }
}

TEST_CASE("huber") {
    CHECK(huber(0.5, 1.0) == 0.125);
    CHECK(huber(-3.0, 1.0) == 2.5);
}

TEST_CASE("gradient clipping rescales to the limit") {
    Mlp<double> net({2, 2});
    auto g = net.zero_gradients();
    g[0].weight << 12.0, 0.0, 0.0, 16.0;  // norm 20
    const double raw = clip_gradients<double>(g, 10.0);
    CHECK(raw == doctest::Approx(20.0));
    CHECK(gradient_norm<double>(g) == doctest::Approx(10.0).epsilon(1e-15));
    auto small = net.zero_gradients();
    small[0].bias << 3.0, 4.0;
    clip_gradients<double>(small, 10.0);
    CHECK(gradient_norm<double>(small) == 5.0);
}

TEST_CASE("zero loss leaves parameters unchanged") {
    auto cfg = tiny_config(AgentMode::qr_dqn, 2);
    auto online = constant_output({0.3, 0.3, 0.0, 0.0}, 2);
    const auto s = make_state({0.5, 0.1, 0.2, 0.3});
    const std::vector<Transition> batch(4, Transition{s, 0, 0.3, s, true});
    Adam<double> adam(online.net, cfg.learning_rate);
    const auto before = online;
    const auto stats = gradient_step(online, adam, batch, online, cfg);
    CHECK(stats.loss == 0.0);
    CHECK(online == before);
}

TEST_CASE("one dqn step moves Q(s,a) toward the TD target") {
    auto cfg = tiny_config(AgentMode::dqn, 1);
    cfg.learning_rate = 1e-2;
    Rng rng(12);
    auto online = init_params(cfg, rng);
    const auto target = online;
    const auto s = make_state({0.4, -0.2, 0.9, 0.1});
    const auto s2 = make_state({0.1, 0.1, 0.1, 0.1});
    const std::vector<Transition> batch(8, Transition{s, 1, 1.0, s2, false});
    const double y = bellman_targets(batch, target, cfg)[0][0];
    const double q0 = forward(online, *s).at(1, 0);
    Adam<double> adam(online.net, cfg.learning_rate);
    gradient_step(online, adam, batch, target, cfg);
    const double q1 = forward(online, *s).at(1, 0);
    CHECK((q1 - q0) * (y - q0) > 0.0);
    CHECK(std::abs(y - q1) < std::abs(y - q0));
}

TEST_CASE("non-finite targets raise NonFiniteLoss with the step") {
    auto cfg = tiny_config();
    Rng rng(2);
    const auto p = init_params(cfg, rng);
    const auto s = make_state({0, 0, 0, 0});
    const std::vector<Transition> batch{{s, 0, 0.0, s, true}};
    const std::vector<std::vector<double>> targets{std::vector<double>(5, std::nan(""))};
    try {
        loss_and_gradients(p, batch, targets, cfg, nullptr, 42);
        FAIL("expected NonFiniteLoss");
    } catch (const NonFiniteLoss& e) {
        CHECK(e.step() == 42);
        CHECK(e.batch_index() == 0);
    }
}

TEST_CASE("polyak update") {
    auto t = constant_output({0.0, 0.0}, 1);
    const auto o = constant_output({1.0, 1.0}, 1);
    polyak_update(t, o, 0.005);
    CHECK(t.net.layers().back().bias(0) == doctest::Approx(0.005).epsilon(1e-15));

    auto same = o;
    polyak_update(same, o, 0.005);
    CHECK(same.net.layers().back().bias(0) == 1.0);

    auto g = constant_output({0.0, 4.0}, 1);
    for (int k = 0; k < 100; ++k) polyak_update(g, o, 0.005);
    const double decay = std::pow(1.0 - 0.005, 100);
    CHECK(1.0 - g.net.layers().back().bias(0) == doctest::Approx(decay).epsilon(1e-12));
    CHECK(g.net.layers().back().bias(1) - 1.0 == doctest::Approx(3.0 * decay).epsilon(1e-12));

    CHECK_THROWS_AS(polyak_update(g, constant_output({1.0, 1.0, 1.0, 1.0}, 2), 0.005), ShapeMismatch);
}

TEST_CASE("replay buffer evicts the oldest entry") {
    ReplayBuffer buf(3);
    const auto s = make_state({0});
    for (int i = 0; i < 5; ++i) buf.push({s, 0, static_cast<double>(i), s, true});
    CHECK(buf.size() == 3);
    CHECK(buf.at(0).reward == 2.0);
    CHECK(buf.at(2).reward == 4.0);
    Rng rng(1);
    const auto sample = buf.sample(100, rng);
    CHECK(sample.size() == 100);
    for (const auto& t : sample) CHECK(t.reward >= 2.0);
    CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("training schedule and determinism") {
    auto data = fixtures::separable_states(100, 4, 4);
    TrainConfig cfg = tiny_config(AgentMode::qr_dqn, 5);
    cfg.total_steps = 600;
    cfg.warmup_steps = 200;
    cfg.batch_size = 16;
    cfg.log_interval = 100;
    cfg.eval_samples = 0;

    auto run = [&] {
        PhishEnv env(data.states, data.labels, 3);
        Rng rng(4);
        return train(env, cfg, rng);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.params == b.params);
    CHECK(a.updates == 8 * ((600 - 200) / 4));
    REQUIRE(a.log.size() == 6);
    CHECK(a.log[0].updates == 0);
    CHECK(a.log[1].updates == 0);
    for (const auto& e : a.log) {
        if (e.step > cfg.warmup_steps) CHECK(e.updates == 8 * ((e.step - cfg.warmup_steps) / 4));
    }

    std::ostringstream log;
    write_train_log(log, a.log);
    CHECK(log.str().rfind("step,", 0) == 0);
}

TEST_CASE("checkpoint round-trip and corruption") {
    auto cfg = tiny_config();
    Rng rng(3);
    const Checkpoint ckpt{init_params(cfg, rng), R"({"seed":1})"};
    std::ostringstream out;
    write_checkpoint(out, ckpt);
    const std::string bytes = out.str();
    CHECK(bytes.substr(0, 4) == "PHCK");
    std::istringstream in(bytes);
    CHECK(read_checkpoint(in) == ckpt);

    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::istringstream bad(wrong);
    CHECK_THROWS_AS(read_checkpoint(bad), FormatError);
}

TEST_CASE("config validation and names") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK(parse_agent_mode("dqn") == AgentMode::dqn);
    CHECK(parse_precision(to_string(Precision::f32)) == Precision::f32);
    CHECK_THROWS_AS(parse_agent_mode("sarsa"), std::invalid_argument);
    CHECK(TrainConfig{}.layer_sizes() == std::vector<std::size_t>{818, 512, 512, 256, 128, 102});
}
