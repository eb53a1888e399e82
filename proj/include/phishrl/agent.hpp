#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "phishrl/corpus.hpp"
#include "phishrl/env.hpp"
#include "phishrl/mlp.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

inline constexpr std::size_t kNumActions = 2;

enum class AgentMode { qr_dqn, dqn };
// Arithmetic used by the training loop. Parameters are always stored as f64.
enum class Precision { f64, f32 };

const char* to_string(AgentMode mode);
const char* to_string(Precision precision);
// Both throw std::invalid_argument on unknown names.
AgentMode parse_agent_mode(std::string_view name);
Precision parse_precision(std::string_view name);

struct TrainConfig {
    std::size_t total_steps = 300000;
    std::size_t warmup_steps = 5000;
    std::size_t batch_size = 512;
    std::size_t updates_per_cycle = 8;
    std::size_t env_steps_per_cycle = 4;
    double gamma = 0.995;
    double polyak_tau = 0.005;
    std::size_t target_interval = 1000;
    double grad_clip_norm = 10.0;
    double epsilon_start = 1.0;
    double epsilon_end = 0.02;
    double epsilon_decay_fraction = 0.25;
    std::size_t num_quantiles = 51;
    double huber_kappa = 1.0;
    double learning_rate = 1e-4;
    AgentMode mode = AgentMode::qr_dqn;

    std::size_t input_dim = kStateDim;
    std::vector<std::size_t> hidden_layers{512, 512, 256, 128};
    std::size_t replay_capacity = 150000;
    std::size_t log_interval = 1000;
    std::size_t eval_samples = 1000;  // 0 evaluates on every sample
    Precision precision = Precision::f64;

    // Throws std::invalid_argument naming the first bad field.
    void validate() const;
    // N in qr_dqn mode, 1 in dqn mode.
    std::size_t quantiles_per_action() const { return mode == AgentMode::qr_dqn ? num_quantiles : 1; }
    std::vector<std::size_t> layer_sizes() const;
};

struct NetworkParams {
    AgentMode mode = AgentMode::qr_dqn;
    std::size_t num_quantiles = 1;  // per action; 1 in dqn mode
    Mlp<double> net;

    bool operator==(const NetworkParams& other) const {
        return mode == other.mode && num_quantiles == other.num_quantiles && net == other.net;
    }
};

NetworkParams init_params(const TrainConfig& cfg, Rng& rng);

// Row a*N + k of the network output holds z_k(s, a).
struct QuantileOutput {
    std::size_t num_actions = kNumActions;
    std::size_t num_quantiles = 1;
    std::vector<double> values;

    double at(std::size_t action, std::size_t k) const { return values[action * num_quantiles + k]; }
    std::vector<double> action(std::size_t a) const;
};

QuantileOutput forward(const NetworkParams& params, const StateVector& state);
std::vector<double> expected_q(const QuantileOutput& out);
// Ties go to action 0.
int greedy(const QuantileOutput& out);
double epsilon_at(std::size_t step, const TrainConfig& cfg);
int select_action(const NetworkParams& params, const StateVector& state, double epsilon, Rng& rng);
int predict(const NetworkParams& params, const StateVector& state);
// Batched greedy evaluation.
std::vector<int> predict_batch(const NetworkParams& params, const std::vector<StateVector>& states);

std::vector<double> quantile_fractions(std::size_t n);

struct Transition {
    StatePtr state;
    int action = 0;
    double reward = 0.0;
    StatePtr next_state;
    bool done = true;
};

// Per sample, quantiles_per_action() target values.
std::vector<std::vector<double>> bellman_targets(const std::vector<Transition>& batch, const NetworkParams& target,
                                                 const TrainConfig& cfg);

double huber(double u, double kappa);
double quantile_huber_loss(const std::vector<double>& pred, const std::vector<double>& targets,
                           const std::vector<double>& fractions, double kappa);

// Batch-mean loss and, when grads is non-null, its gradient (overwritten).
// `step` is only used to label NonFiniteLoss.
double loss_and_gradients(const NetworkParams& params, const std::vector<Transition>& batch,
                          const std::vector<std::vector<double>>& targets, const TrainConfig& cfg,
                          Mlp<double>::Gradients* grads, std::size_t step = 0);

struct StepStats {
    double loss = 0.0;
    double grad_norm = 0.0;  // before clipping
};

StepStats gradient_step(NetworkParams& params, Adam<double>& optimizer, const std::vector<Transition>& batch,
                        const NetworkParams& target, const TrainConfig& cfg, std::size_t step = 0);

void polyak_update(NetworkParams& target, const NetworkParams& online, double tau);

// Fixed-capacity ring buffer with oldest-first eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    // i-th oldest stored transition.
    const Transition& at(std::size_t i) const;
    // Uniform with replacement.
    std::vector<Transition> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::vector<Transition> items_;
};

struct TrainLogEntry {
    std::size_t step = 0;
    double epsilon = 0.0;
    std::size_t updates = 0;        // cumulative
    std::size_t interval_updates = 0;
    double mean_loss = 0.0;         // over this interval's updates
    double eval_accuracy = 0.0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<TrainLogEntry> log;
    std::size_t updates = 0;
};

using TrainProgress = std::function<void(const TrainLogEntry&)>;

TrainResult train(PhishEnv& env, const TrainConfig& cfg, Rng& rng, const TrainProgress& progress = {});

void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log);

// "PHCK", u32 version, u32-prefixed config JSON, then mode, quantiles, layer
// shapes and f64 little-endian parameters.
struct Checkpoint {
    NetworkParams params;
    std::string config_json;

    bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace phishrl
