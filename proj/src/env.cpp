#include "phishrl/env.hpp"

#include <stdexcept>

#include "phishrl/errors.hpp"

namespace phishrl {

namespace {

std::vector<StatePtr> share(std::vector<StateVector> states) {
    std::vector<StatePtr> out;
    out.reserve(states.size());
    for (auto& s : states) out.push_back(std::make_shared<const StateVector>(std::move(s)));
    return out;
}

}  // namespace

double reward_for(int action, int label) {
    if (action != 0 && action != 1) throw InvalidAction("action must be 0 or 1, got " + std::to_string(action));
    if (action == label) return kRewardCorrect;
    return action == 0 ? kRewardFalseNegative : kRewardFalsePositive;
}

PhishEnv::PhishEnv(std::vector<StateVector> states, std::vector<int> labels, std::uint64_t seed)
    : PhishEnv(share(std::move(states)), std::move(labels), seed) {}

PhishEnv::PhishEnv(std::vector<StatePtr> states, std::vector<int> labels, std::uint64_t seed)
    : states_(std::move(states)), labels_(std::move(labels)), rng_(seed) {
    if (states_.size() != labels_.size()) throw LengthMismatch("states and labels differ in length");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != 0 && labels_[i] != 1) throw std::invalid_argument("labels must be 0 or 1");
        by_class_[static_cast<std::size_t>(labels_[i])].push_back(i);
    }
    if (by_class_[0].empty() || by_class_[1].empty()) {
        throw std::invalid_argument("environment needs samples of both classes");
    }
}

const StatePtr& PhishEnv::reset() {
    const auto& pool = by_class_[rng_.uniform_index(2)];
    current_ = pool[rng_.uniform_index(pool.size())];
    return states_[*current_];
}

StepResult PhishEnv::step(int action) {
    if (action != 0 && action != 1) throw InvalidAction("action must be 0 or 1, got " + std::to_string(action));
    if (!current_) throw StepBeforeReset("step called without a preceding reset");
    const int label = labels_[*current_];
    current_.reset();
    return {reward_for(action, label), true, label};
}

}  // namespace phishrl
