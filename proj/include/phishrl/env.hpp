#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "phishrl/corpus.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

using StatePtr = std::shared_ptr<const StateVector>;

struct StepResult {
    double reward = 0.0;
    bool done = true;
    int label = 0;  // true label of the sample that was classified
};

inline constexpr double kRewardCorrect = 1.0;
inline constexpr double kRewardFalseNegative = -2.0;
inline constexpr double kRewardFalsePositive = -0.5;

// Asymmetric reward for predicting `action` on a sample labeled `label`.
double reward_for(int action, int label);

// Single-step episodes: reset draws a class with probability 1/2, then a
// uniform sample within that class.
class PhishEnv {
public:
    PhishEnv(std::vector<StateVector> states, std::vector<int> labels, std::uint64_t seed);
    PhishEnv(std::vector<StatePtr> states, std::vector<int> labels, std::uint64_t seed);

    const StatePtr& reset();
    StepResult step(int action);

    std::size_t size() const { return states_.size(); }
    const StatePtr& state(std::size_t i) const { return states_[i]; }
    int label(std::size_t i) const { return labels_[i]; }
    std::optional<std::size_t> current() const { return current_; }

private:
    std::vector<StatePtr> states_;
    std::vector<int> labels_;
    std::array<std::vector<std::size_t>, 2> by_class_;
    Rng rng_;
    std::optional<std::size_t> current_;
};

}  // namespace phishrl
