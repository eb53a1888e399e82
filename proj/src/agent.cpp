#include "phishrl/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "phishrl/errors.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace phishrl {

namespace {

// Flush-to-zero and denormals-are-zero for the duration of a training run.
// Tiny Adam moments otherwise fall into the subnormal range and every
// arithmetic op on them takes a slow microcode path.
class FlushDenormals {
public:
#if defined(__SSE__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

template <typename S>
using MatrixT = typename Mlp<S>::Matrix;

template <typename S>
MatrixT<S> state_matrix(const std::vector<const StateVector*>& states, std::size_t dim) {
    MatrixT<S> x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(states.size()));
    for (std::size_t c = 0; c < states.size(); ++c) {
        const StateVector& s = *states[c];
        if (s.size() != dim) {
            throw ShapeMismatch("state has length " + std::to_string(s.size()) + ", expected " + std::to_string(dim));
        }
        for (std::size_t r = 0; r < dim; ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<S>(s[r]);
    }
    return x;
}

template <typename S>
MatrixT<S> state_matrix(const StateVector& s, std::size_t dim) {
    return state_matrix<S>(std::vector<const StateVector*>{&s}, dim);
}

std::size_t expected_outputs(AgentMode mode, std::size_t num_quantiles) {
    return kNumActions * (mode == AgentMode::qr_dqn ? num_quantiles : 1);
}

// Greedy action from column c of a raw network output.
template <typename S>
int greedy_column(const MatrixT<S>& out, Eigen::Index c, std::size_t n) {
    double best = 0.0;
    int best_action = 0;
    for (std::size_t a = 0; a < kNumActions; ++a) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += static_cast<double>(out(static_cast<Eigen::Index>(a * n + k), c));
        const double mean = sum / static_cast<double>(n);
        if (a == 0 || mean > best) {
            best = mean;
            best_action = static_cast<int>(a);
        }
    }
    return best_action;
}

template <typename S>
std::vector<std::vector<double>> targets_impl(const Mlp<S>& target, const std::vector<Transition>& batch,
                                              std::size_t n, double gamma) {
    std::vector<std::vector<double>> out(batch.size());
    std::vector<const StateVector*> live;
    std::vector<std::size_t> live_index;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].done) {
            out[b].assign(n, batch[b].reward);
        } else {
            live.push_back(batch[b].next_state.get());
            live_index.push_back(b);
        }
    }
    if (live.empty()) return out;
    const MatrixT<S> z = target.forward(state_matrix<S>(live, target.input_dim()));
    for (std::size_t c = 0; c < live.size(); ++c) {
        const auto col = static_cast<Eigen::Index>(c);
        const auto a_star = static_cast<std::size_t>(greedy_column<S>(z, col, n));
        const Transition& t = batch[live_index[c]];
        auto& row = out[live_index[c]];
        row.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = t.reward + gamma * static_cast<double>(z(static_cast<Eigen::Index>(a_star * n + j), col));
        }
    }
    return out;
}

// Reused buffers for one network's loss and gradient evaluations.
template <typename S>
struct Workspace {
    typename Mlp<S>::Cache cache;
    typename Mlp<S>::Gradients grads;
    MatrixT<S> grad_out;
};

// Sum over j of rho(z_j - theta) and of its derivative with respect to theta.
struct PairSums {
    double loss = 0.0;
    double d_theta = 0.0;
};

PairSums quantile_pair_sums(const std::vector<double>& z, double theta, double tau, double kappa) {
    // Independent lane accumulators let the compiler vectorize the reduction.
    constexpr std::size_t kLanes = 8;
    double loss[kLanes] = {};
    double slope[kLanes] = {};
    const auto pair = [&](double zj, double& l, double& g) {
        const double u = zj - theta;
        const double c = std::clamp(u, -kappa, kappa);
        const double ac = std::abs(c);
        const double w = u < 0.0 ? 1.0 - tau : tau;
        l += w * ac * (std::abs(u) - 0.5 * ac);
        g += w * c;
    };
    const std::size_t full = z.size() - z.size() % kLanes;
    for (std::size_t j = 0; j < full; j += kLanes) {
        for (std::size_t k = 0; k < kLanes; ++k) pair(z[j + k], loss[k], slope[k]);
    }
    for (std::size_t j = full; j < z.size(); ++j) pair(z[j], loss[0], slope[0]);
    PairSums s;
    for (std::size_t k = 0; k < kLanes; ++k) {
        s.loss += loss[k];
        s.d_theta += slope[k];
    }
    s.loss /= kappa;
    s.d_theta = -s.d_theta / kappa;
    return s;
}

double huber_slope(double u, double kappa) {
    if (std::abs(u) <= kappa) return u;
    return u > 0 ? kappa : -kappa;
}

template <typename S>
double loss_impl(const Mlp<S>& net, AgentMode mode, std::size_t n, const std::vector<double>& taus, double kappa,
                 const std::vector<Transition>& batch, const std::vector<std::vector<double>>& targets,
                 Workspace<S>& ws, bool want_grads, std::size_t step) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    if (targets.size() != batch.size()) throw LengthMismatch("targets and batch differ in length");
    std::vector<const StateVector*> states;
    states.reserve(batch.size());
    for (const auto& t : batch) states.push_back(t.state.get());

    const MatrixT<S> out = net.forward(state_matrix<S>(states, net.input_dim()), ws.cache);
    auto& grad_out = ws.grad_out;
    if (want_grads) grad_out.setZero(out.rows(), out.cols());

    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        const int action = batch[b].action;
        if (action != 0 && action != 1) throw InvalidAction("transition with action " + std::to_string(action));
        const auto& z = targets[b];
        if (z.size() != n) throw LengthMismatch("target row has wrong length");
        const std::size_t base = static_cast<std::size_t>(action) * n;
        double sample_loss = 0.0;
        if (mode == AgentMode::dqn) {
            const double u = z[0] - static_cast<double>(out(static_cast<Eigen::Index>(base), col));
            sample_loss = huber(u, 1.0);
            if (want_grads) {
                grad_out(static_cast<Eigen::Index>(base), col) = static_cast<S>(-huber_slope(u, 1.0) * inv_batch);
            }
        } else {
            const double pair_weight = 1.0 / static_cast<double>(n * n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = static_cast<Eigen::Index>(base + i);
                const auto sums = quantile_pair_sums(z, static_cast<double>(out(row, col)), taus[i], kappa);
                sample_loss += sums.loss;
                if (want_grads) grad_out(row, col) = static_cast<S>(sums.d_theta * pair_weight * inv_batch);
            }
            sample_loss *= pair_weight;
        }
        if (!std::isfinite(sample_loss)) throw NonFiniteLoss(b, step);
        total += sample_loss;
    }
    if (want_grads) net.backward(ws.cache, grad_out, ws.grads);
    return total * inv_batch;
}

template <typename S>
void polyak_impl(Mlp<S>& target, const Mlp<S>& online, double tau) {
    auto& t = target.layers();
    const auto& o = online.layers();
    if (t.size() != o.size()) throw ShapeMismatch("target and online networks differ in depth");
    for (std::size_t l = 0; l < t.size(); ++l) {
        if (t[l].weight.rows() != o[l].weight.rows() || t[l].weight.cols() != o[l].weight.cols()) {
            throw ShapeMismatch("target and online layer " + std::to_string(l) + " differ in shape");
        }
    }
    const auto keep = static_cast<S>(1.0 - tau);
    const auto take = static_cast<S>(tau);
    for (std::size_t l = 0; l < t.size(); ++l) {
        t[l].weight = keep * t[l].weight + take * o[l].weight;
        t[l].bias = keep * t[l].bias + take * o[l].bias;
    }
}

// Greedy accuracy of `net` on a fixed subset of the environment's samples.
template <typename S>
double evaluate_impl(const Mlp<S>& net, const PhishEnv& env, std::size_t n, const std::vector<std::size_t>& subset) {
    constexpr std::size_t kChunk = 512;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < subset.size(); start += kChunk) {
        const std::size_t stop = std::min(subset.size(), start + kChunk);
        std::vector<const StateVector*> states;
        for (std::size_t i = start; i < stop; ++i) states.push_back(env.state(subset[i]).get());
        const MatrixT<S> out = net.forward(state_matrix<S>(states, net.input_dim()));
        for (std::size_t i = start; i < stop; ++i) {
            if (greedy_column<S>(out, static_cast<Eigen::Index>(i - start), n) == env.label(subset[i])) ++correct;
        }
    }
    return subset.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(subset.size());
}

std::vector<std::size_t> eval_subset(const PhishEnv& env, std::size_t wanted) {
    std::vector<std::size_t> out;
    const std::size_t n = env.size();
    if (wanted == 0 || wanted >= n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    for (std::size_t i = 0; i < wanted; ++i) out.push_back(i * n / wanted);
    return out;
}

template <typename S>
TrainResult train_impl(PhishEnv& env, const TrainConfig& cfg, Rng& rng, const TrainProgress& progress) {
    const FlushDenormals ftz;
    Rng init_rng(rng.next());
    Rng act_rng(rng.next());
    Rng sample_rng(rng.next());

    const NetworkParams initial = init_params(cfg, init_rng);
    Mlp<S> online = initial.net.cast<S>();
    Mlp<S> target = online;
    Adam<S> adam(online, cfg.learning_rate);
    Workspace<S> ws;
    const std::size_t n = cfg.quantiles_per_action();
    const auto taus = quantile_fractions(n);
    ReplayBuffer replay(cfg.replay_capacity);
    const auto subset = eval_subset(env, cfg.eval_samples);

    TrainResult result;
    std::size_t interval_updates = 0;
    double interval_loss = 0.0;
    double epsilon = cfg.epsilon_start;

    StatePtr current = env.reset();
    for (std::size_t steps_done = 1; steps_done <= cfg.total_steps; ++steps_done) {
        epsilon = epsilon_at(steps_done - 1, cfg);
        int action = 0;
        if (act_rng.uniform01() < epsilon) {
            action = static_cast<int>(act_rng.uniform_index(kNumActions));
        } else {
            action = greedy_column<S>(online.forward(state_matrix<S>(*current, online.input_dim())), 0, n);
        }
        const StepResult r = env.step(action);
        StatePtr next = env.reset();
        replay.push({current, action, r.reward, next, r.done});
        current = std::move(next);

        if (steps_done > cfg.warmup_steps && (steps_done - cfg.warmup_steps) % cfg.env_steps_per_cycle == 0 &&
            replay.size() >= cfg.batch_size) {
            for (std::size_t u = 0; u < cfg.updates_per_cycle; ++u) {
                const auto batch = replay.sample(cfg.batch_size, sample_rng);
                const auto targets = targets_impl<S>(target, batch, n, cfg.gamma);
                const double loss = loss_impl<S>(online, cfg.mode, n, taus, cfg.huber_kappa, batch, targets, ws,
                                                 true, steps_done);
                clip_gradients<S>(ws.grads, cfg.grad_clip_norm);
                adam.apply(online, ws.grads);
                interval_loss += loss;
                ++interval_updates;
                ++result.updates;
            }
        }
        if (steps_done % cfg.target_interval == 0) polyak_impl<S>(target, online, cfg.polyak_tau);

        if (steps_done % cfg.log_interval == 0 || steps_done == cfg.total_steps) {
            TrainLogEntry entry;
            entry.step = steps_done;
            entry.epsilon = epsilon;
            entry.updates = result.updates;
            entry.interval_updates = interval_updates;
            entry.mean_loss = interval_updates ? interval_loss / static_cast<double>(interval_updates) : 0.0;
            entry.eval_accuracy = evaluate_impl<S>(online, env, n, subset);
            result.log.push_back(entry);
            if (progress) progress(entry);
            interval_updates = 0;
            interval_loss = 0.0;
        }
    }
    result.params = NetworkParams{cfg.mode, n, online.template cast<double>()};
    return result;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated checkpoint");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kMaxLayerWidth = 1u << 20;

}  // namespace

const char* to_string(AgentMode mode) { return mode == AgentMode::qr_dqn ? "qr_dqn" : "dqn"; }
const char* to_string(Precision precision) { return precision == Precision::f64 ? "f64" : "f32"; }

AgentMode parse_agent_mode(std::string_view name) {
    if (name == "qr_dqn") return AgentMode::qr_dqn;
    if (name == "dqn") return AgentMode::dqn;
    throw std::invalid_argument("unknown agent mode '" + std::string(name) + "'");
}

Precision parse_precision(std::string_view name) {
    if (name == "f64") return Precision::f64;
    if (name == "f32") return Precision::f32;
    throw std::invalid_argument("unknown precision '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* field) {
        if (!ok) throw std::invalid_argument(std::string("invalid training config: ") + field);
    };
    require(total_steps > 0, "total_steps");
    require(batch_size > 0, "batch_size");
    require(updates_per_cycle > 0, "updates_per_cycle");
    require(env_steps_per_cycle > 0, "env_steps_per_cycle");
    require(gamma > 0.0 && gamma <= 1.0, "gamma");
    require(polyak_tau > 0.0 && polyak_tau <= 1.0, "polyak_tau");
    require(target_interval > 0, "target_interval");
    require(grad_clip_norm > 0.0, "grad_clip_norm");
    require(epsilon_start > 0.0 && epsilon_start <= 1.0, "epsilon_start");
    require(epsilon_end > 0.0 && epsilon_end < epsilon_start, "epsilon_end");
    require(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0, "epsilon_decay_fraction");
    require(num_quantiles > 0, "num_quantiles");
    require(huber_kappa > 0.0, "huber_kappa");
    require(learning_rate > 0.0, "learning_rate");
    require(input_dim > 0, "input_dim");
    require(std::all_of(hidden_layers.begin(), hidden_layers.end(), [](std::size_t w) { return w > 0; }),
            "hidden_layers");
    require(replay_capacity > 0, "replay_capacity");
    require(log_interval > 0, "log_interval");
}

std::vector<std::size_t> TrainConfig::layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(kNumActions * quantiles_per_action());
    return sizes;
}

NetworkParams init_params(const TrainConfig& cfg, Rng& rng) {
    return NetworkParams{cfg.mode, cfg.quantiles_per_action(), Mlp<double>::initialized(cfg.layer_sizes(), rng)};
}

std::vector<double> QuantileOutput::action(std::size_t a) const {
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(a * num_quantiles);
    return {first, first + static_cast<std::ptrdiff_t>(num_quantiles)};
}

QuantileOutput forward(const NetworkParams& params, const StateVector& state) {
    if (params.net.output_dim() != expected_outputs(params.mode, params.num_quantiles)) {
        throw ShapeMismatch("network output does not match num_actions x num_quantiles");
    }
    const auto out = params.net.forward(state_matrix<double>(state, params.net.input_dim()));
    QuantileOutput q;
    q.num_quantiles = params.num_quantiles;
    q.values.assign(out.data(), out.data() + out.size());
    return q;
}

std::vector<double> expected_q(const QuantileOutput& out) {
    std::vector<double> q(out.num_actions, 0.0);
    for (std::size_t a = 0; a < out.num_actions; ++a) {
        double sum = 0.0;
        for (std::size_t k = 0; k < out.num_quantiles; ++k) sum += out.at(a, k);
        q[a] = sum / static_cast<double>(out.num_quantiles);
    }
    return q;
}

int greedy(const QuantileOutput& out) {
    const auto q = expected_q(out);
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a) {
        if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    }
    return best;
}

double epsilon_at(std::size_t step, const TrainConfig& cfg) {
    const double horizon = cfg.epsilon_decay_fraction * static_cast<double>(cfg.total_steps);
    const double frac = static_cast<double>(step) / horizon;
    if (frac >= 1.0) return cfg.epsilon_end;
    return cfg.epsilon_start * (1.0 - frac) + cfg.epsilon_end * frac;
}

int select_action(const NetworkParams& params, const StateVector& state, double epsilon, Rng& rng) {
    if (rng.uniform01() < epsilon) return static_cast<int>(rng.uniform_index(kNumActions));
    return greedy(forward(params, state));
}

int predict(const NetworkParams& params, const StateVector& state) { return greedy(forward(params, state)); }

std::vector<int> predict_batch(const NetworkParams& params, const std::vector<StateVector>& states) {
    constexpr std::size_t kChunk = 512;
    std::vector<int> out;
    out.reserve(states.size());
    for (std::size_t start = 0; start < states.size(); start += kChunk) {
        const std::size_t stop = std::min(states.size(), start + kChunk);
        std::vector<const StateVector*> chunk;
        for (std::size_t i = start; i < stop; ++i) chunk.push_back(&states[i]);
        const auto z = params.net.forward(state_matrix<double>(chunk, params.net.input_dim()));
        for (std::size_t i = start; i < stop; ++i) {
            out.push_back(greedy_column<double>(z, static_cast<Eigen::Index>(i - start), params.num_quantiles));
        }
    }
    return out;
}

std::vector<double> quantile_fractions(std::size_t n) {
    if (n == 0) throw std::invalid_argument("quantile count must be positive");
    std::vector<double> taus(n);
    for (std::size_t i = 1; i <= n; ++i) taus[i - 1] = static_cast<double>(2 * i - 1) / static_cast<double>(2 * n);
    return taus;
}

std::vector<std::vector<double>> bellman_targets(const std::vector<Transition>& batch, const NetworkParams& target,
                                                 const TrainConfig& cfg) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    return targets_impl<double>(target.net, batch, target.num_quantiles, cfg.gamma);
}

double huber(double u, double kappa) {
    const double a = std::abs(u);
    return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}

double quantile_huber_loss(const std::vector<double>& pred, const std::vector<double>& targets,
                           const std::vector<double>& fractions, double kappa) {
    if (pred.size() != targets.size() || pred.size() != fractions.size()) {
        throw LengthMismatch("predictions, targets and fractions must have equal length");
    }
    if (pred.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (const double z : targets) {
            const double u = z - pred[i];
            sum += std::abs(fractions[i] - (u < 0.0 ? 1.0 : 0.0)) * huber(u, kappa) / kappa;
        }
    }
    return sum / static_cast<double>(pred.size() * targets.size());
}

double loss_and_gradients(const NetworkParams& params, const std::vector<Transition>& batch,
                          const std::vector<std::vector<double>>& targets, const TrainConfig& cfg,
                          Mlp<double>::Gradients* grads, std::size_t step) {
    const auto taus = quantile_fractions(params.num_quantiles);
    Workspace<double> ws;
    const double loss = loss_impl<double>(params.net, params.mode, params.num_quantiles, taus, cfg.huber_kappa, batch,
                                          targets, ws, grads != nullptr, step);
    if (grads) *grads = std::move(ws.grads);
    return loss;
}

StepStats gradient_step(NetworkParams& params, Adam<double>& optimizer, const std::vector<Transition>& batch,
                        const NetworkParams& target, const TrainConfig& cfg, std::size_t step) {
    const auto targets = bellman_targets(batch, target, cfg);
    Mlp<double>::Gradients grads;
    StepStats stats;
    stats.loss = loss_and_gradients(params, batch, targets, cfg, &grads, step);
    stats.grad_norm = clip_gradients<double>(grads, cfg.grad_clip_norm);
    optimizer.apply(params.net, grads);
    return stats;
}

void polyak_update(NetworkParams& target, const NetworkParams& online, double tau) {
    polyak_impl<double>(target.net, online.net, tau);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
        ++size_;
        return;
    }
    items_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("replay index out of range");
    return items_[(head_ + i) % items_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items_[rng.uniform_index(size_)]);
    return out;
}

TrainResult train(PhishEnv& env, const TrainConfig& cfg, Rng& rng, const TrainProgress& progress) {
    cfg.validate();
    if (cfg.precision == Precision::f32) return train_impl<float>(env, cfg, rng, progress);
    return train_impl<double>(env, cfg, rng, progress);
}

void write_train_log(std::ostream& out, const std::vector<TrainLogEntry>& log) {
    out << "step,epsilon,updates,interval_updates,mean_loss,eval_accuracy\n";
    for (const auto& e : log) {
        out << e.step << ',' << format_double(e.epsilon) << ',' << e.updates << ',' << e.interval_updates << ','
            << format_double(e.mean_loss) << ',' << format_double(e.eval_accuracy) << '\n';
    }
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    out.write("PHCK", 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(ckpt.config_json.size()));
    out.write(ckpt.config_json.data(), static_cast<std::streamsize>(ckpt.config_json.size()));
    write_u32(out, p.mode == AgentMode::qr_dqn ? 0u : 1u);
    write_u32(out, static_cast<std::uint32_t>(p.num_quantiles));
    const auto& layers = p.net.layers();
    write_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        write_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
        write_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    }
    for (const auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) write_f64(out, l.weight.data()[i]);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) write_f64(out, l.bias(i));
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "PHCK") throw FormatError("not a checkpoint file");
    const std::uint32_t version = read_u32(in);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    const std::uint32_t json_len = read_u32(in);
    if (json_len > (1u << 24)) throw FormatError("checkpoint config block too large");
    ckpt.config_json.resize(json_len);
    if (json_len && !in.read(ckpt.config_json.data(), json_len)) throw FormatError("truncated checkpoint");

    const std::uint32_t mode = read_u32(in);
    if (mode > 1) throw FormatError("unknown agent mode in checkpoint");
    auto& p = ckpt.params;
    p.mode = mode == 0 ? AgentMode::qr_dqn : AgentMode::dqn;
    p.num_quantiles = read_u32(in);
    const std::uint32_t depth = read_u32(in);
    if (depth == 0 || depth > 64) throw FormatError("implausible layer count in checkpoint");

    std::vector<std::size_t> sizes;
    for (std::uint32_t l = 0; l < depth; ++l) {
        const std::uint32_t rows = read_u32(in);
        const std::uint32_t cols = read_u32(in);
        if (rows == 0 || cols == 0 || rows > kMaxLayerWidth || cols > kMaxLayerWidth) {
            throw FormatError("implausible layer shape in checkpoint");
        }
        if (l == 0) {
            sizes.push_back(cols);
        } else if (cols != sizes.back()) {
            throw FormatError("inconsistent layer shapes in checkpoint");
        }
        sizes.push_back(rows);
    }
    if (p.num_quantiles == 0 || sizes.back() != expected_outputs(p.mode, p.num_quantiles)) {
        throw FormatError("checkpoint output layer does not match its quantile count");
    }
    p.net = Mlp<double>(sizes);
    for (auto& l : p.net.layers()) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = read_f64(in);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = read_f64(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint parameters");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    write_checkpoint(out, ckpt);
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace phishrl
