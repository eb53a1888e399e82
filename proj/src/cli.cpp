#include "phishrl/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "phishrl/adversary.hpp"
#include "phishrl/agent.hpp"
#include "phishrl/corpus.hpp"
#include "phishrl/csv.hpp"
#include "phishrl/errors.hpp"
#include "phishrl/fetcher.hpp"
#include "phishrl/metrics.hpp"
#include "phishrl/run_config.hpp"

namespace phishrl::cli {

namespace fs = std::filesystem;

namespace {

// Carries an exit code out of a command.
struct Exit {
    int code;
    std::string message;
};

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

struct InputUrl {
    std::string url;
    int label = 0;
    std::size_t row = 0;
};

int parse_label_cell(const std::string& raw, std::size_t row) {
    const std::string cell = lower(std::string(trim(raw)));
    if (cell == "1" || cell == "phishing") return 1;
    if (cell == "0" || cell == "legitimate" || cell.empty()) return 0;
    throw Exit{kExitInput, "row " + std::to_string(row) + ": label must be 0 or 1, got '" + raw + "'"};
}

// A CSV with a url column (and optionally label), or one URL per line.
std::vector<InputUrl> read_url_input(const fs::path& path, int default_label) {
    std::ifstream in(path);
    if (!in) throw Exit{kExitInput, "cannot read input " + path.string()};
    std::vector<InputUrl> out;
    if (lower(path.extension().string()) == ".csv") {
        csv::Reader reader(in);
        const auto header = reader.next();
        if (!header) return out;
        std::optional<std::size_t> url_col, label_col;
        for (std::size_t i = 0; i < header->size(); ++i) {
            const auto name = lower(std::string(trim((*header)[i])));
            if (name == "url") url_col = i;
            if (name == "label") label_col = i;
        }
        if (!url_col) throw Exit{kExitInput, "row 1: input CSV has no 'url' column"};
        while (auto row = reader.next()) {
            const std::size_t line = reader.line();
            if (row->size() != header->size()) {
                throw Exit{kExitInput, "row " + std::to_string(line) + ": expected " + std::to_string(header->size()) +
                                           " fields, found " + std::to_string(row->size())};
            }
            InputUrl u{(*row)[*url_col], default_label, line};
            if (label_col) u.label = parse_label_cell((*row)[*label_col], line);
            out.push_back(std::move(u));
        }
        return out;
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.push_back({std::string(t), default_label, n});
    }
    return out;
}

std::vector<SampleRecord> load_records(const std::string& path) {
    if (path.empty()) throw Exit{kExitInput, "no dataset given"};
    if (!fs::exists(path)) throw Exit{kExitInput, "dataset not found: " + path};
    return load_dataset(path);
}

EmbeddingStore load_embeddings(const std::string& path, std::ostream& err) {
    if (path.empty()) {
        err << "warning: no embedding file configured; semantic segment zeroed\n";
        return EmbeddingStore{};
    }
    if (!fs::exists(path)) {
        err << "warning: embedding file " << path << " not found; semantic segment zeroed\n";
        return EmbeddingStore{};
    }
    auto store = EmbeddingStore::load(path);
    if (store.dim() != kEmbeddingDim) {
        throw Exit{kExitInput, "embedding file has dimension " + std::to_string(store.dim()) + ", expected " +
                                   std::to_string(kEmbeddingDim)};
    }
    return store;
}

std::vector<StateVector> build_states(const std::vector<SampleRecord>& records, const Normalizer& norm,
                                      const EmbeddingStore& store) {
    std::vector<StateVector> states;
    states.reserve(records.size());
    for (const auto& r : records) states.push_back(build_state(r, norm, store));
    return states;
}

std::vector<int> labels_of(const std::vector<SampleRecord>& records) {
    std::vector<int> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(r.label);
    return labels;
}

void check_output_path(const std::string& path, const char* what) {
    if (path.empty()) throw Exit{kExitInput, std::string("no ") + what + " path given"};
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
        throw Exit{kExitInput, std::string(what) + " directory does not exist: " + parent.string()};
    }
}

bool same_file(const std::string& a, const std::string& b) {
    std::error_code ec;
    return fs::exists(b) && fs::equivalent(a, b, ec);
}

TrainResult train_agent(const PreparedData& data, const EmbeddingStore& store, const RunConfig& cfg,
                        std::ostream* progress_out) {
    PhishEnv env(build_states(data.train, data.normalizer, store), labels_of(data.train), mix_seed(cfg.seed, 1));
    Rng rng(mix_seed(cfg.seed, 2));
    TrainProgress progress;
    if (progress_out) {
        progress = [progress_out](const TrainLogEntry& e) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "step %zu  epsilon %.4f  updates %zu  loss %.6f  accuracy %.4f", e.step,
                          e.epsilon, e.updates, e.mean_loss, e.eval_accuracy);
            *progress_out << buf << '\n';
        };
    }
    return train(env, cfg.train, rng, progress);
}

std::string default_model_name(AgentMode mode, bool semantic) {
    std::string name = mode == AgentMode::qr_dqn ? "QR-DQN" : "DQN";
    return name + (semantic ? " (Semantic + Lexical Features)" : " (Lexical Features)");
}

// ---------------------------------------------------------------- extract

struct ExtractOptions {
    std::string input;
    std::string output;
    std::string config;
    bool fetch = false;
    int label = 0;
    std::optional<int> delay_ms, timeout_ms;
    std::optional<std::size_t> max_redirects, concurrency;
};

int run_extract(const ExtractOptions& opt, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    if (!opt.config.empty()) cfg = load_run_config(opt.config);
    if (opt.delay_ms) cfg.fetch.delay_ms = *opt.delay_ms;
    if (opt.timeout_ms) cfg.fetch.timeout_ms = *opt.timeout_ms;
    if (opt.max_redirects) cfg.fetch.max_redirects = *opt.max_redirects;
    if (opt.concurrency) cfg.fetch.max_concurrency = *opt.concurrency;
    check_output_path(opt.output, "output");
    if (same_file(opt.input, opt.output)) throw Exit{kExitInput, "output would overwrite the input file"};

    const auto inputs = read_url_input(opt.input, opt.label);
    std::vector<InputUrl> valid;
    for (const auto& u : inputs) {
        try {
            parse_url(trim(u.url));
            valid.push_back(u);
        } catch (const MalformedUrl& e) {
            err << "warning: row " << u.row << ": skipping malformed URL '" << u.url << "': " << e.what() << '\n';
        }
    }

    std::vector<std::string> benign;
    for (const auto& u : valid) {
        if (u.label == 0) benign.push_back(std::string(trim(u.url)));
    }
    const auto stats = fit_url_statistics(benign);

    std::vector<std::string> urls;
    for (const auto& u : valid) urls.push_back(std::string(trim(u.url)));
    std::vector<FetchResult> pages;
    if (opt.fetch) {
        pages = fetch_batch(urls, cfg.fetch, [&err](std::size_t i, std::size_t total, const FetchResult& r) {
            err << '[' << (i + 1) << '/' << total << "] " << r.document.url << " -> " << to_string(r.outcome)
                << " (" << r.document.redirect_chain.size() << " hops recorded)\n";
        });
    }

    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        if (!opt.fetch) err << '[' << (i + 1) << '/' << valid.size() << "] " << urls[i] << '\n';
        UrlFeatureVector uf;
        try {
            uf = extract_url_features(urls[i], stats.char_model, stats.tld_table);
        } catch (const MalformedUrl& e) {
            err << "warning: row " << valid[i].row << ": skipping malformed URL '" << urls[i] << "': " << e.what()
                << '\n';
            continue;
        }
        ContentFeatureVector cf;
        if (opt.fetch && pages[i].outcome == FetchOutcome::ok) cf = extract_content_features(pages[i].document);
        records.push_back(make_record(urls[i], valid[i].label, uf, cf));
    }
    save_dataset(opt.output, records);
    out << "wrote " << records.size() << " rows to " << opt.output << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::string> dataset, embeddings, checkpoint, log, mode, precision;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> total_steps, warmup_steps, batch_size, num_quantiles;
    std::optional<double> test_fraction;
    bool quiet = false;
};

RunConfig resolve_train_config(const TrainOptions& opt) {
    RunConfig cfg;
    cfg.seed = default_seed();
    if (!opt.config.empty()) cfg = load_run_config(opt.config, cfg);
    for (const auto& o : opt.overrides) apply_override(cfg, o);
    if (opt.dataset) cfg.dataset = *opt.dataset;
    if (opt.embeddings) cfg.embeddings = *opt.embeddings;
    if (opt.checkpoint) cfg.checkpoint = *opt.checkpoint;
    if (opt.log) cfg.train_log = *opt.log;
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.total_steps) cfg.train.total_steps = *opt.total_steps;
    if (opt.warmup_steps) cfg.train.warmup_steps = *opt.warmup_steps;
    if (opt.batch_size) cfg.train.batch_size = *opt.batch_size;
    if (opt.num_quantiles) cfg.train.num_quantiles = *opt.num_quantiles;
    if (opt.test_fraction) cfg.test_fraction = *opt.test_fraction;
    try {
        if (opt.mode) cfg.train.mode = parse_agent_mode(*opt.mode);
        if (opt.precision) cfg.train.precision = parse_precision(*opt.precision);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

// The config stored in a checkpoint leaves out output locations so that
// identical runs written to different places produce identical files.
std::string snapshot_config(RunConfig cfg) {
    cfg.checkpoint.clear();
    cfg.train_log.clear();
    cfg.report_dir.clear();
    return to_json_string(cfg);
}

int run_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = resolve_train_config(opt);
    try {
        cfg.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.dataset.empty()) throw Exit{kExitInput, "no dataset given (--dataset or config key 'dataset')"};
    if (!fs::exists(cfg.dataset)) throw Exit{kExitInput, "dataset not found: " + cfg.dataset};
    check_output_path(cfg.checkpoint, "checkpoint");
    const std::string log_path = cfg.train_log.empty() ? cfg.checkpoint + ".log.csv" : cfg.train_log;
    check_output_path(log_path, "training log");

    const auto store = load_embeddings(cfg.embeddings, err);
    const auto records = load_records(cfg.dataset);
    const auto data = prepare_experiment(records, cfg.test_fraction, cfg.seed);

    TrainResult result;
    try {
        result = train_agent(data, store, cfg, opt.quiet ? nullptr : &err);
    } catch (const NonFiniteLoss& e) {
        throw Exit{kExitTraining, std::string(e.what())};
    }

    save_checkpoint(cfg.checkpoint, Checkpoint{result.params, snapshot_config(cfg)});
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw Exit{kExitInput, "cannot write training log " + log_path};
    write_train_log(log, result.log);

    out << "trained " << cfg.train.total_steps << " steps with " << result.updates << " updates";
    if (!result.log.empty()) out << ", final accuracy " << format_percent(result.log.back().eval_accuracy) << '%';
    out << "\ncheckpoint: " << cfg.checkpoint << "\nlog: " << log_path << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
    std::string checkpoint;
    std::optional<std::string> dataset, embeddings;
    std::string split = "test";
    bool train_and_test = false;
    std::size_t crossval = 0;
    std::string report;
    std::string model_name;
};

void write_report(const std::string& path, const std::vector<ReportRow>& rows, std::ostream& out) {
    if (path.empty()) return;
    check_output_path(path, "report");
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Exit{kExitInput, "cannot write report " + path};
    write_report_csv(f, rows);
    out << "report: " << path << '\n';
}

int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
    Checkpoint ckpt;
    RunConfig cfg;
    try {
        ckpt = load_checkpoint(opt.checkpoint);
        cfg = parse_run_config(ckpt.config_json);
    } catch (const Error& e) {
        throw Exit{kExitCheckpoint, "cannot use checkpoint " + opt.checkpoint + ": " + e.what()};
    }
    if (ckpt.params.net.input_dim() != kStateDim) {
        throw Exit{kExitCheckpoint, "checkpoint expects input dimension " +
                                        std::to_string(ckpt.params.net.input_dim()) + ", states have " +
                                        std::to_string(kStateDim)};
    }
    if (opt.dataset) cfg.dataset = *opt.dataset;
    if (opt.embeddings) cfg.embeddings = *opt.embeddings;

    std::vector<SampleRecord> records;
    try {
        records = load_records(cfg.dataset);
    } catch (const SchemaMismatch& e) {
        throw Exit{kExitCheckpoint, std::string("dataset does not match the checkpoint schema: ") + e.what()};
    }
    const auto store = load_embeddings(cfg.embeddings, err);
    const std::string name =
        opt.model_name.empty() ? default_model_name(ckpt.params.mode, store.size() > 0) : opt.model_name;
    std::vector<ReportRow> rows;

    if (opt.crossval > 0) {
        RunConfig fold_cfg = cfg;
        const auto result = cross_validate(
            records, opt.crossval,
            [&](const std::vector<SampleRecord>& train_part, const std::vector<SampleRecord>& test_part) {
                const auto data = prepare_partition(train_part, test_part);
                const auto trained = train_agent(data, store, fold_cfg, nullptr);
                return predict_batch(trained.params, build_states(data.test, data.normalizer, store));
            },
            cfg.seed);
        out << format_table_header() << '\n';
        for (std::size_t f = 0; f < result.folds.size(); ++f) {
            rows.push_back({name + " fold " + std::to_string(f + 1), result.folds[f]});
            out << format_table_row(rows.back()) << '\n';
        }
        out << "mean accuracy " << format_percent(result.mean_accuracy) << "%, std "
            << format_percent(result.std_accuracy) << "% over " << result.folds.size() << " folds\n";
        write_report(opt.report, rows, out);
        return kExitOk;
    }

    const auto data = prepare_experiment(records, cfg.test_fraction, cfg.seed);
    auto evaluate = [&](const std::vector<SampleRecord>& part) {
        const auto preds = predict_batch(ckpt.params, build_states(part, data.normalizer, store));
        return compute_metrics(confusion(preds, labels_of(part)));
    };

    out << format_table_header() << '\n';
    if (opt.train_and_test) {
        const auto train_m = evaluate(data.train);
        const auto test_m = evaluate(data.test);
        rows.push_back({name + " [train]", train_m});
        rows.push_back({name + " [test]", test_m});
        for (const auto& r : rows) out << format_table_row(r) << '\n';
        const auto gaps = generalization_gaps(train_m, test_m);
        out << "accuracy gap " << format_percent(gaps.accuracy_gap, 3) << "%, F1 gap "
            << format_percent(gaps.f1_gap, 3) << "%\n";
    } else {
        std::vector<SampleRecord> part;
        if (opt.split == "test") {
            part = data.test;
        } else if (opt.split == "train") {
            part = data.train;
        } else {
            part = data.train;
            part.insert(part.end(), data.test.begin(), data.test.end());
        }
        rows.push_back({name, evaluate(part)});
        out << format_table_row(rows.back()) << '\n';
    }
    write_report(opt.report, rows, out);
    return kExitOk;
}

// ---------------------------------------------------------------- adversary

struct AdversaryOptions {
    std::string input;
    std::string output;
    std::string kinds;
    std::size_t per_record = 1;
    std::optional<std::uint64_t> seed;
};

int run_adversary(const AdversaryOptions& opt, std::ostream& out, std::ostream&) {
    std::vector<ObfuscationKind> kinds;
    if (opt.kinds.empty() || opt.kinds == "all") {
        kinds = all_obfuscation_kinds();
    } else {
        std::stringstream ss(opt.kinds);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto name = std::string(trim(item));
            if (name.empty()) continue;
            try {
                kinds.push_back(parse_obfuscation_kind(name));
            } catch (const std::invalid_argument&) {
                throw Exit{kExitInput, "unknown obfuscation kind '" + name + "'"};
            }
        }
        if (kinds.empty()) throw Exit{kExitInput, "no obfuscation kinds given"};
    }
    if (opt.per_record == 0) throw Exit{kExitInput, "--per-record must be at least 1"};
    check_output_path(opt.output, "output");
    if (same_file(opt.input, opt.output)) throw Exit{kExitInput, "output would overwrite the input file"};

    const auto records = load_records(opt.input);
    const std::uint64_t seed = opt.seed ? *opt.seed : default_seed();
    const auto augmented = augment_dataset(records, kinds, opt.per_record, seed, fit_url_statistics(records));
    save_dataset(opt.output, augmented);
    out << "appended " << (augmented.size() - records.size()) << " variants; wrote " << augmented.size()
        << " rows to " << opt.output << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Phishing URL detection with distributional reinforcement learning", "phishrl"};
    app.require_subcommand(1);

    ExtractOptions ex;
    auto* extract = app.add_subcommand("extract", "Extract the 50 features for a list of URLs");
    extract->add_option("-i,--input", ex.input, "URL list (one per line) or CSV with a url column")->required();
    extract->add_option("-o,--output", ex.output, "Feature CSV to write")->required();
    extract->add_flag("--fetch", ex.fetch, "Retrieve pages and extract content features");
    extract->add_option("--config", ex.config, "Run config (JSON) for fetcher settings");
    extract->add_option("--label", ex.label, "Label for inputs without a label column")->check(CLI::Range(0, 1));
    extract->add_option("--delay-ms", ex.delay_ms, "Politeness delay between requests");
    extract->add_option("--timeout-ms", ex.timeout_ms, "Per-request timeout");
    extract->add_option("--max-redirects", ex.max_redirects, "Redirect hops to follow");
    extract->add_option("--concurrency", ex.concurrency, "Parallel fetch workers");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train an agent and write a checkpoint");
    train_cmd->add_option("-c,--config", tr.config, "Run config (flat JSON)");
    train_cmd->add_option("--set", tr.overrides, "Config override key=value (repeatable)");
    train_cmd->add_option("--dataset", tr.dataset, "Feature CSV");
    train_cmd->add_option("--embeddings", tr.embeddings, "PHEM embedding file");
    train_cmd->add_option("--checkpoint", tr.checkpoint, "Checkpoint to write");
    train_cmd->add_option("--log", tr.log, "Training log CSV (default: <checkpoint>.log.csv)");
    train_cmd->add_option("--seed", tr.seed, "Seed (default: PHISHRL_SEED or 0)");
    train_cmd->add_option("--mode", tr.mode, "qr_dqn or dqn");
    train_cmd->add_option("--precision", tr.precision, "f64 or f32 training arithmetic");
    train_cmd->add_option("--total-steps", tr.total_steps);
    train_cmd->add_option("--warmup-steps", tr.warmup_steps);
    train_cmd->add_option("--batch-size", tr.batch_size);
    train_cmd->add_option("--num-quantiles", tr.num_quantiles);
    train_cmd->add_option("--test-fraction", tr.test_fraction);
    train_cmd->add_flag("-q,--quiet", tr.quiet, "No per-interval progress");

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint to evaluate")->required();
    eval_cmd->add_option("--dataset", ev.dataset, "Feature CSV (default: the one used for training)");
    eval_cmd->add_option("--embeddings", ev.embeddings, "PHEM embedding file");
    eval_cmd->add_option("--split", ev.split, "Partition to evaluate")->check(CLI::IsMember({"test", "train", "all"}));
    eval_cmd->add_flag("--train-and-test", ev.train_and_test, "Evaluate both partitions and print the gaps");
    eval_cmd->add_option("--crossval", ev.crossval, "Stratified k-fold cross-validation with the checkpoint's config");
    eval_cmd->add_option("--report", ev.report, "CSV report to write");
    eval_cmd->add_option("--model-name", ev.model_name, "Row label in the report");

    AdversaryOptions ad;
    auto* adv = app.add_subcommand("adversary", "Append obfuscated variants of phishing rows");
    adv->add_option("-i,--input", ad.input, "Labeled feature CSV")->required();
    adv->add_option("-o,--output", ad.output, "Augmented CSV to write")->required();
    adv->add_option("--kinds", ad.kinds, "Comma-separated kinds or 'all'");
    adv->add_option("--per-record", ad.per_record, "Variants per phishing row");
    adv->add_option("--seed", ad.seed, "Seed (default: PHISHRL_SEED or 0)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (extract->parsed()) return run_extract(ex, out, err);
        if (train_cmd->parsed()) return run_train(tr, out, err);
        if (eval_cmd->parsed()) {
            if (ev.crossval == 1) throw Exit{kExitInput, "--crossval needs k >= 2"};
            return run_eval(ev, out, err);
        }
        if (adv->parsed()) return run_adversary(ad, out, err);
    } catch (const Exit& e) {
        err << "error: " << e.message << '\n';
        return e.code;
    } catch (const MalformedRow& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace phishrl::cli
