#include "phishrl/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "phishrl/errors.hpp"

namespace phishrl {

namespace {

using nlohmann::json;

struct Field {
    std::function<void(RunConfig&, const json&)> set;
    std::function<json(const RunConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& expected) {
    throw ConfigError("config key '" + key + "' expects " + expected);
}

std::size_t as_count(const std::string& key, const json& v) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad_value(key, "a non-negative integer");
    return v.get<std::size_t>();
}

double as_real(const std::string& key, const json& v) {
    if (!v.is_number()) bad_value(key, "a number");
    return v.get<double>();
}

std::string as_text(const std::string& key, const json& v) {
    if (!v.is_string()) bad_value(key, "a string");
    return v.get<std::string>();
}

template <typename T>
Field count_field(T RunConfig::*group, std::size_t T::*member, const char* key) {
    return {[=](RunConfig& c, const json& v) { (c.*group).*member = as_count(key, v); },
            [=](const RunConfig& c) { return json((c.*group).*member); }};
}

template <typename T>
Field int_field(T RunConfig::*group, int T::*member, const char* key) {
    return {[=](RunConfig& c, const json& v) { (c.*group).*member = static_cast<int>(as_count(key, v)); },
            [=](const RunConfig& c) { return json((c.*group).*member); }};
}

Field real_field(double TrainConfig::*member, const char* key) {
    return {[=](RunConfig& c, const json& v) { c.train.*member = as_real(key, v); },
            [=](const RunConfig& c) { return json(c.train.*member); }};
}

Field path_field(std::string RunConfig::*member, const char* key) {
    return {[=](RunConfig& c, const json& v) { c.*member = as_text(key, v); },
            [=](const RunConfig& c) { return json(c.*member); }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["total_steps"] = count_field(&RunConfig::train, &TrainConfig::total_steps, "total_steps");
        t["warmup_steps"] = count_field(&RunConfig::train, &TrainConfig::warmup_steps, "warmup_steps");
        t["batch_size"] = count_field(&RunConfig::train, &TrainConfig::batch_size, "batch_size");
        t["updates_per_cycle"] = count_field(&RunConfig::train, &TrainConfig::updates_per_cycle, "updates_per_cycle");
        t["env_steps_per_cycle"] =
            count_field(&RunConfig::train, &TrainConfig::env_steps_per_cycle, "env_steps_per_cycle");
        t["target_interval"] = count_field(&RunConfig::train, &TrainConfig::target_interval, "target_interval");
        t["num_quantiles"] = count_field(&RunConfig::train, &TrainConfig::num_quantiles, "num_quantiles");
        t["replay_capacity"] = count_field(&RunConfig::train, &TrainConfig::replay_capacity, "replay_capacity");
        t["log_interval"] = count_field(&RunConfig::train, &TrainConfig::log_interval, "log_interval");
        t["eval_samples"] = count_field(&RunConfig::train, &TrainConfig::eval_samples, "eval_samples");
        t["gamma"] = real_field(&TrainConfig::gamma, "gamma");
        t["polyak_tau"] = real_field(&TrainConfig::polyak_tau, "polyak_tau");
        t["grad_clip_norm"] = real_field(&TrainConfig::grad_clip_norm, "grad_clip_norm");
        t["epsilon_start"] = real_field(&TrainConfig::epsilon_start, "epsilon_start");
        t["epsilon_end"] = real_field(&TrainConfig::epsilon_end, "epsilon_end");
        t["epsilon_decay_fraction"] = real_field(&TrainConfig::epsilon_decay_fraction, "epsilon_decay_fraction");
        t["huber_kappa"] = real_field(&TrainConfig::huber_kappa, "huber_kappa");
        t["learning_rate"] = real_field(&TrainConfig::learning_rate, "learning_rate");
        t["mode"] = {[](RunConfig& c, const json& v) {
                         try {
                             c.train.mode = parse_agent_mode(as_text("mode", v));
                         } catch (const std::invalid_argument&) {
                             bad_value("mode", "\"qr_dqn\" or \"dqn\"");
                         }
                     },
                     [](const RunConfig& c) { return json(to_string(c.train.mode)); }};
        t["precision"] = {[](RunConfig& c, const json& v) {
                              try {
                                  c.train.precision = parse_precision(as_text("precision", v));
                              } catch (const std::invalid_argument&) {
                                  bad_value("precision", "\"f64\" or \"f32\"");
                              }
                          },
                          [](const RunConfig& c) { return json(to_string(c.train.precision)); }};
        t["hidden_layers"] = {[](RunConfig& c, const json& v) {
                                  if (!v.is_array()) bad_value("hidden_layers", "an array of positive integers");
                                  std::vector<std::size_t> widths;
                                  for (const auto& w : v) widths.push_back(as_count("hidden_layers", w));
                                  c.train.hidden_layers = std::move(widths);
                              },
                              [](const RunConfig& c) { return json(c.train.hidden_layers); }};
        t["fetch_delay_ms"] = int_field(&RunConfig::fetch, &FetchConfig::delay_ms, "fetch_delay_ms");
        t["fetch_timeout_ms"] = int_field(&RunConfig::fetch, &FetchConfig::timeout_ms, "fetch_timeout_ms");
        t["fetch_max_redirects"] = count_field(&RunConfig::fetch, &FetchConfig::max_redirects, "fetch_max_redirects");
        t["fetch_max_concurrency"] =
            count_field(&RunConfig::fetch, &FetchConfig::max_concurrency, "fetch_max_concurrency");
        t["fetch_user_agent"] = {[](RunConfig& c, const json& v) { c.fetch.user_agent = as_text("fetch_user_agent", v); },
                                 [](const RunConfig& c) { return json(c.fetch.user_agent); }};
        t["dataset"] = path_field(&RunConfig::dataset, "dataset");
        t["embeddings"] = path_field(&RunConfig::embeddings, "embeddings");
        t["checkpoint"] = path_field(&RunConfig::checkpoint, "checkpoint");
        t["report_dir"] = path_field(&RunConfig::report_dir, "report_dir");
        t["train_log"] = path_field(&RunConfig::train_log, "train_log");
        t["seed"] = {[](RunConfig& c, const json& v) {
                         if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
                             bad_value("seed", "a non-negative integer");
                         }
                         c.seed = v.get<std::uint64_t>();
                     },
                     [](const RunConfig& c) { return json(c.seed); }};
        t["test_fraction"] = {[](RunConfig& c, const json& v) {
                                  const double f = as_real("test_fraction", v);
                                  if (!(f > 0.0 && f < 1.0)) bad_value("test_fraction", "a number in (0, 1)");
                                  c.test_fraction = f;
                              },
                              [](const RunConfig& c) { return json(c.test_fraction); }};
        return t;
    }();
    return table;
}

void apply_entry(RunConfig& cfg, const std::string& key, const json& value) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(cfg, value);
}

}  // namespace

std::uint64_t default_seed() {
    const char* env = std::getenv("PHISHRL_SEED");
    if (!env || !*env) return 0;
    std::uint64_t seed = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("PHISHRL_SEED is not a non-negative integer: '" + std::string(text) + "'");
    }
    return seed;
}

RunConfig parse_run_config(std::string_view json_text, RunConfig base) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) apply_entry(base, key, value);
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), std::move(base));
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    apply_entry(cfg, key, value);
}

std::string to_json_string(const RunConfig& cfg) {
    json doc = json::object();
    for (const auto& [key, field] : fields()) doc[key] = field.get(cfg);
    return doc.dump();
}

std::vector<std::string> run_config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, field] : fields()) keys.push_back(key);
    return keys;
}

}  // namespace phishrl
