#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "phishrl/agent.hpp"
#include "phishrl/cli.hpp"
#include "phishrl/corpus.hpp"
#include "phishrl/run_config.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a macro that clashes
// with an Eigen parameter name.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

using namespace phishrl;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "phishrl");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("phishrl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Small network so the integration runs stay quick.
std::string small_config(const fs::path& dataset, std::size_t total_steps) {
    return R"({"dataset": ")" + dataset.string() + R"(", "total_steps": )" + std::to_string(total_steps) +
           R"(, "warmup_steps": 100, "batch_size": 32, "hidden_layers": [16, 16], "num_quantiles": 11,)"
           R"( "log_interval": 100, "eval_samples": 0, "seed": 42})";
}

// dqn network on the first two features: Q(1) = relu(x0 - x1), Q(0) = relu(x1 - x0).
void write_perfect_checkpoint(const fs::path& path, const fs::path& dataset) {
    RunConfig cfg;
    cfg.dataset = dataset.string();
    cfg.train.mode = AgentMode::dqn;
    cfg.train.hidden_layers = {2};
    cfg.seed = 1;
    NetworkParams p;
    p.mode = AgentMode::dqn;
    p.num_quantiles = 1;
    p.net = Mlp<double>(cfg.train.layer_sizes());
    auto& hidden = p.net.layers()[0].weight;
    hidden(0, 0) = 1.0;
    hidden(0, 1) = -1.0;
    hidden(1, 0) = -1.0;
    hidden(1, 1) = 1.0;
    auto& out = p.net.layers()[1].weight;
    out(0, 1) = 1.0;
    out(1, 0) = 1.0;
    save_checkpoint(path, Checkpoint{p, to_json_string(cfg)});
}

}  // namespace

TEST_CASE("extract: offline URLs, malformed rows skipped") {
    const auto dir = scratch("extract");
    write_text(dir / "urls.txt", "https://example.com/login\nhttp://\nhttp://paypa1.com/verify?id=3\nexample.org\n");
    const auto r = run_cli({"extract", "-i", (dir / "urls.txt").string(), "-o", (dir / "out.csv").string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("skipping malformed URL") != std::string::npos);
    const auto records = load_dataset(dir / "out.csv");
    REQUIRE(records.size() == 3);
    for (const auto& rec : records) {
        for (std::size_t i = kUrlFeatureCount; i < kFeatureCount; ++i) CHECK(rec.features[i] == 0.0);
    }
    CHECK(records[0].features[feature_index("URLLength")] == 25);
}

TEST_CASE("extract: fetch against a local redirect loop") {
    httplib::Server server;
    server.Get(R"(/hop/(\d+))", [](const httplib::Request& req, httplib::Response& res) {
        const int left = std::stoi(req.matches[1]);
        res.status = 302;
        res.set_header("Location", left > 1 ? "/hop/" + std::to_string(left - 1) : "/done");
    });
    server.Get("/done", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<title>done</title>", "text/html");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto dir = scratch("extract_fetch");
    const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/hop/6";
    write_text(dir / "urls.txt", url + "\n");
    const auto r = run_cli({"extract", "-i", (dir / "urls.txt").string(), "-o", (dir / "out.csv").string(),
                            "--fetch", "--delay-ms", "0", "--timeout-ms", "2000"});
    server.stop();
    thread.join();

    CHECK(r.code == 0);
    CHECK(r.err.find("too_many_redirects") != std::string::npos);
    const auto records = load_dataset(dir / "out.csv");
    REQUIRE(records.size() == 1);
    CHECK(records[0].url == url);
    CHECK(records[0].features[feature_index("HasTitle")] == 0.0);
}

TEST_CASE("train: scaled run, log, determinism and missing embeddings") {
    const auto dir = scratch("train");
    save_dataset(dir / "data.csv", fixtures::separable_records(200, 13));
    write_text(dir / "cfg.json", small_config(dir / "data.csv", 2000));

    const auto a = run_cli({"train", "-c", (dir / "cfg.json").string(), "--checkpoint", (dir / "a.ckpt").string()});
    REQUIRE(a.code == 0);
    CHECK(a.err.find("semantic segment zeroed") != std::string::npos);

    std::istringstream log(slurp(dir / "a.ckpt.log.csv"));
    std::string line;
    std::getline(log, line);
    CHECK(line == "step,epsilon,updates,interval_updates,mean_loss,eval_accuracy");
    std::size_t rows = 0;
    while (std::getline(log, line)) {
        ++rows;
        const auto step = std::stoul(line.substr(0, line.find(',')));
        const auto rest = line.substr(line.find(',') + 1);
        const auto updates = std::stoul(rest.substr(rest.find(',') + 1));
        if (step <= 100) CHECK(updates == 0);
        else CHECK(updates == 8 * ((step - 100) / 4));
    }
    CHECK(rows == 20);

    const auto b = run_cli({"train", "-c", (dir / "cfg.json").string(), "--checkpoint", (dir / "b.ckpt").string(),
                            "-q"});
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));

    const auto c = run_cli({"train", "-c", (dir / "cfg.json").string(), "--checkpoint", (dir / "c.ckpt").string(),
                            "--seed", "43", "-q"});
    REQUIRE(c.code == 0);
    CHECK(slurp(dir / "a.ckpt") != slurp(dir / "c.ckpt"));
}

TEST_CASE("train: error exits") {
    const auto dir = scratch("train_errors");
    save_dataset(dir / "data.csv", fixtures::separable_records(60, 2));
    write_text(dir / "cfg.json", small_config(dir / "data.csv", 400));
    const auto cfg = (dir / "cfg.json").string();

    const auto blowup = run_cli({"train", "-c", cfg, "--checkpoint", (dir / "x.ckpt").string(), "-q", "--set",
                                 "learning_rate=1e300"});
    CHECK(blowup.code == cli::kExitTraining);
    CHECK(blowup.err.find("non-finite loss at step") != std::string::npos);

    CHECK(run_cli({"train", "-c", cfg, "--checkpoint", (dir / "y.ckpt").string(), "--set", "bogus=1"}).code ==
          cli::kExitInput);
    CHECK(run_cli({"train", "-c", cfg, "--checkpoint", (dir / "z.ckpt").string(), "--dataset",
                   (dir / "missing.csv").string()})
              .code == cli::kExitInput);
}

TEST_CASE("eval: perfect classifier, report layout, gaps") {
    const auto dir = scratch("eval");
    save_dataset(dir / "data.csv", fixtures::separable_records(200, 17));
    write_perfect_checkpoint(dir / "perfect.ckpt", dir / "data.csv");

    const auto r = run_cli({"eval", "--checkpoint", (dir / "perfect.ckpt").string(), "--train-and-test", "--report",
                            (dir / "report.csv").string(), "--model-name", "oracle"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("accuracy gap 0.000%, F1 gap 0.000%") != std::string::npos);

    std::istringstream report(slurp(dir / "report.csv"));
    std::string header, train_row, test_row;
    std::getline(report, header);
    std::getline(report, train_row);
    std::getline(report, test_row);
    CHECK(header == "Model Name,Accuracy,Precision,Recall,F1 Score,FP,FN");
    CHECK(train_row == "oracle [train],100.00,100.00,100.00,100.00,0,0");
    CHECK(test_row == "oracle [test],100.00,100.00,100.00,100.00,0,0");

    const auto all = run_cli({"eval", "--checkpoint", (dir / "perfect.ckpt").string(), "--split", "all"});
    CHECK(all.code == 0);
    CHECK(all.out.find("100.00") != std::string::npos);
}

TEST_CASE("eval: checkpoint and schema problems exit 4") {
    const auto dir = scratch("eval_errors");
    save_dataset(dir / "data.csv", fixtures::separable_records(40, 3));
    write_text(dir / "junk.ckpt", "not a checkpoint");
    CHECK(run_cli({"eval", "--checkpoint", (dir / "junk.ckpt").string()}).code == cli::kExitCheckpoint);

    write_perfect_checkpoint(dir / "ok.ckpt", dir / "data.csv");
    write_text(dir / "bad.csv", "url,label,URLLength\nhttp://a.com/,0,1\n");
    CHECK(run_cli({"eval", "--checkpoint", (dir / "ok.ckpt").string(), "--dataset", (dir / "bad.csv").string()})
              .code == cli::kExitCheckpoint);
}

TEST_CASE("eval: five-fold cross-validation") {
    const auto dir = scratch("crossval");
    save_dataset(dir / "data.csv", fixtures::separable_records(100, 23));
    write_text(dir / "cfg.json", small_config(dir / "data.csv", 300));
    REQUIRE(run_cli({"train", "-c", (dir / "cfg.json").string(), "--checkpoint", (dir / "m.ckpt").string(), "-q"})
                .code == 0);
    const auto r = run_cli({"eval", "--checkpoint", (dir / "m.ckpt").string(), "--crossval", "5", "--report",
                            (dir / "cv.csv").string()});
    REQUIRE(r.code == 0);
    for (int f = 1; f <= 5; ++f) CHECK(r.out.find("fold " + std::to_string(f)) != std::string::npos);
    CHECK(r.out.find("mean accuracy") != std::string::npos);
    CHECK(r.out.find("over 5 folds") != std::string::npos);
    CHECK(count_lines(slurp(dir / "cv.csv")) == 6);
}

TEST_CASE("adversary: variants, unknown kind, reproducibility") {
    const auto dir = scratch("adversary");
    const auto input = dir / "in.csv";
    save_dataset(input, fixtures::separable_records(20, 31));  // 10 phishing rows
    const std::string before = slurp(input);

    const auto r = run_cli({"adversary", "-i", input.string(), "-o", (dir / "a.csv").string(), "--kinds",
                            "homoglyph", "--per-record", "1", "--seed", "5"});
    REQUIRE(r.code == 0);
    CHECK(load_dataset(dir / "a.csv").size() == 30);
    CHECK(slurp(input) == before);

    CHECK(run_cli({"adversary", "-i", input.string(), "-o", (dir / "z.csv").string(), "--kinds", "zalgo"}).code ==
          cli::kExitInput);
    CHECK_FALSE(fs::exists(dir / "z.csv"));
    CHECK(run_cli({"adversary", "-i", input.string(), "-o", input.string()}).code == cli::kExitInput);

    REQUIRE(run_cli({"adversary", "-i", input.string(), "-o", (dir / "b.csv").string(), "--kinds", "homoglyph",
                     "--per-record", "1", "--seed", "5"})
                .code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

    REQUIRE(run_cli({"adversary", "-i", input.string(), "-o", (dir / "all.csv").string(), "--kinds", "all",
                     "--per-record", "2", "--seed", "5"})
                .code == 0);
    CHECK(load_dataset(dir / "all.csv").size() == 40);
}

TEST_CASE("installed binary reports usage errors with exit 2") {
    const char* bin = std::getenv("PHISHRL_BIN");
    if (bin == nullptr) return;
    const std::string quiet = " >/dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " --help" + quiet).c_str())) == 0);
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " frobnicate" + quiet).c_str())) == 2);
    CHECK(WEXITSTATUS(std::system((std::string(bin) + " adversary -i x -o y --kinds zalgo" + quiet).c_str())) == 2);
}
