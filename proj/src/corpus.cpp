#include "phishrl/corpus.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "phishrl/csv.hpp"
#include "phishrl/errors.hpp"
#include "phishrl/rng.hpp"

namespace phishrl {

namespace {

constexpr std::array<const char*, 17> kBooleanColumns = {
    "IsDomainIP",       "HasObfuscation",  "IsHTTPS",         "HasTitle",
    "HasFavicon",       "Robots",          "IsResponsive",    "HasDescription",
    "HasExternalFormSubmit", "HasSocialNet", "HasSubmitButton", "HasHiddenFields",
    "HasPasswordField", "Bank",            "Pay",             "Crypto",
    "HasCopyrightInfo",
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_null_token(const std::string& lowered) {
    return lowered.empty() || lowered == "null" || lowered == "nan" || lowered == "none" || lowered == "na" ||
           lowered == "n/a";
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (!s.empty() && s.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
}

// Null-filling, type-safe conversion of one cell.
double convert_cell(std::string_view raw, bool boolean, std::size_t row, const std::string& column) {
    const std::string cell = lower(trim(raw));
    if (is_null_token(cell)) return 0.0;
    if (cell == "true" || cell == "yes") return 1.0;
    if (cell == "false" || cell == "no") return 0.0;
    const auto v = parse_number(cell);
    if (!v) throw MalformedRow(row, "cannot convert '" + std::string(raw) + "' in column " + column);
    if (std::isnan(*v)) return 0.0;
    if (boolean) return *v != 0.0 ? 1.0 : 0.0;
    return *v;
}

int convert_label(std::string_view raw, std::size_t row) {
    const std::string cell = lower(trim(raw));
    if (cell == "1" || cell == "true" || cell == "phishing") return 1;
    if (cell == "0" || cell == "false" || cell == "legitimate") return 0;
    const auto v = parse_number(cell);
    if (v && (*v == 0.0 || *v == 1.0)) return static_cast<int>(*v);
    throw MalformedRow(row, "label must be 0 or 1, got '" + std::string(raw) + "'");
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("truncated embedding file");
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_column_names() {
    static const auto names = [] {
        std::array<std::string, kFeatureCount> out;
        for (std::size_t i = 0; i < kUrlFeatureCount; ++i) out[i] = kUrlFeatureNames[i];
        for (std::size_t i = 0; i < kContentFeatureCount; ++i) out[kUrlFeatureCount + i] = kContentFeatureNames[i];
        return out;
    }();
    return names;
}

std::vector<std::string> dataset_columns() {
    std::vector<std::string> cols = {"url", "label"};
    for (const auto& n : feature_column_names()) cols.push_back(n);
    return cols;
}

bool is_boolean_feature(std::size_t index) {
    const auto& name = feature_column_names().at(index);
    return std::any_of(kBooleanColumns.begin(), kBooleanColumns.end(), [&](const char* b) { return name == b; });
}

std::size_t feature_index(const std::string& name) {
    const auto& names = feature_column_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaMismatch("unknown feature column " + name);
    return static_cast<std::size_t>(it - names.begin());
}

Digest sha256_digest(std::string_view data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw Error("SHA-256 computation failed");
    }
    return out;
}

std::string digest_to_hex(const Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (const auto b : digest) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xf]);
    }
    return out;
}

Digest digest_from_hex(std::string_view hex) {
    if (hex.size() != 64) throw FormatError("embedding key must be 64 hex characters");
    Digest out{};
    for (std::size_t i = 0; i < 32; ++i) {
        unsigned value = 0;
        const auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, value, 16);
        if (ec != std::errc{} || ptr != hex.data() + 2 * i + 2) throw FormatError("invalid hex in embedding key");
        out[i] = static_cast<std::uint8_t>(value);
    }
    return out;
}

std::string sha256_hex(std::string_view data) { return digest_to_hex(sha256_digest(data)); }

std::string embedding_key(std::string_view url) { return sha256_hex(url); }

SampleRecord make_record(std::string url, int label, const UrlFeatureVector& url_features,
                         const ContentFeatureVector& content_features) {
    SampleRecord r;
    r.embedding_key = embedding_key(url);
    r.url = std::move(url);
    r.label = label;
    const auto u = url_features.to_array();
    const auto c = content_features.to_array();
    std::copy(u.begin(), u.end(), r.features.begin());
    std::copy(c.begin(), c.end(), r.features.begin() + kUrlFeatureCount);
    return r;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::vector<SampleRecord> read_dataset(std::istream& in) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw SchemaMismatch("dataset is empty (no header row)");

    const auto expected = dataset_columns();
    std::map<std::string, std::size_t> position;
    std::vector<std::string> extra;
    for (std::size_t i = 0; i < header->size(); ++i) {
        const std::string name(trim((*header)[i]));
        if (std::find(expected.begin(), expected.end(), name) == expected.end() || position.count(name)) {
            extra.push_back(name);
        } else {
            position[name] = i;
        }
    }
    std::vector<std::string> missing;
    for (const auto& name : expected) {
        if (!position.count(name)) missing.push_back(name);
    }
    if (!missing.empty() || !extra.empty()) {
        std::string msg = "dataset schema mismatch;";
        if (!missing.empty()) {
            msg += " missing columns:";
            for (const auto& m : missing) msg += " " + m;
            msg += ";";
        }
        if (!extra.empty()) {
            msg += " extra columns:";
            for (const auto& e : extra) msg += " " + e;
            msg += ";";
        }
        throw SchemaMismatch(msg);
    }

    const auto& names = feature_column_names();
    std::vector<std::size_t> feature_pos(kFeatureCount);
    std::vector<bool> boolean(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        feature_pos[i] = position.at(names[i]);
        boolean[i] = is_boolean_feature(i);
    }
    const std::size_t url_pos = position.at("url");
    const std::size_t label_pos = position.at("label");

    std::vector<SampleRecord> records;
    while (auto row = reader.next()) {
        const std::size_t line = reader.line();
        if (row->size() != header->size()) {
            throw MalformedRow(line, "expected " + std::to_string(header->size()) + " cells, got " +
                                         std::to_string(row->size()));
        }
        SampleRecord r;
        r.url = (*row)[url_pos];
        r.label = convert_label((*row)[label_pos], line);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            r.features[i] = convert_cell((*row)[feature_pos[i]], boolean[i], line, names[i]);
        }
        r.embedding_key = embedding_key(r.url);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<SampleRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset " + path.string());
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records) {
    csv::write_row(out, dataset_columns());
    std::vector<std::string> fields;
    for (const auto& r : records) {
        fields.clear();
        fields.push_back(r.url);
        fields.push_back(std::to_string(r.label));
        for (const double v : r.features) fields.push_back(format_double(v));
        csv::write_row(out, fields);
    }
}

void save_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset " + path.string());
    write_dataset(out, records);
    if (!out) throw Error("failed writing dataset " + path.string());
}

Split stratified_split(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must lie strictly between 0 and 1");
    }
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int label = records[i].label;
        if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) throw DegenerateSplit("both classes must be present");

    const std::uint64_t n = records.size();
    const auto total_test = static_cast<std::uint64_t>(std::llround(static_cast<double>(n) * test_fraction));

    // Largest-remainder apportionment of total_test across the classes.
    std::array<std::uint64_t, 2> quota{}, remainder{};
    std::uint64_t assigned = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        const std::uint64_t nc = by_class[c].size();
        quota[c] = total_test * nc / n;
        remainder[c] = total_test * nc % n;
        assigned += quota[c];
    }
    for (std::uint64_t left = total_test - assigned; left > 0; --left) {
        const std::size_t c = remainder[1] > remainder[0] ? 1 : 0;
        ++quota[c];
        remainder[c] = 0;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        if (quota[c] == 0) throw DegenerateSplit("class " + std::to_string(c) + " would receive no test samples");
        if (quota[c] >= by_class[c].size()) {
            throw DegenerateSplit("class " + std::to_string(c) + " would receive no training samples");
        }
    }

    Rng rng(seed);
    std::vector<bool> in_test(records.size(), false);
    for (std::size_t c = 0; c < 2; ++c) {
        auto idx = by_class[c];
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        }
        for (std::size_t k = 0; k < quota[c]; ++k) in_test[idx[k]] = true;
    }

    Split split;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (in_test[i] ? split.test : split.train).push_back(records[i]);
    }
    return split;
}

Normalizer Normalizer::fit(const std::vector<SampleRecord>& train) {
    if (train.empty()) throw EmptyCorpus("cannot fit a normalizer on an empty training set");
    Normalizer n;
    n.min_ = train.front().features;
    n.max_ = train.front().features;
    for (const auto& r : train) {
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            n.min_[i] = std::min(n.min_[i], r.features[i]);
            n.max_[i] = std::max(n.max_[i], r.features[i]);
        }
    }
    return n;
}

Normalizer Normalizer::from_bounds(const FeatureArray& min, const FeatureArray& max) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!(min[i] <= max[i])) throw std::invalid_argument("normalizer bounds require min <= max");
    }
    Normalizer n;
    n.min_ = min;
    n.max_ = max;
    return n;
}

FeatureArray Normalizer::apply(const FeatureArray& features) const {
    FeatureArray out{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const double range = max_[i] - min_[i];
        if (!(range > 0.0) || std::isnan(features[i])) {
            out[i] = 0.0;
            continue;
        }
        out[i] = std::clamp((features[i] - min_[i]) / range, 0.0, 1.0);
    }
    return out;
}

void EmbeddingStore::insert(const Digest& key, std::vector<float> vector) {
    if (vector.size() != dim_) {
        throw ShapeMismatch("embedding has " + std::to_string(vector.size()) + " components, store dim is " +
                            std::to_string(dim_));
    }
    entries_[key] = std::move(vector);
}

void EmbeddingStore::insert(std::string_view hex_key, std::vector<float> vector) {
    insert(digest_from_hex(hex_key), std::move(vector));
}

bool EmbeddingStore::contains(std::string_view hex_key) const {
    return hex_key.size() == 64 && entries_.count(digest_from_hex(hex_key)) > 0;
}

std::vector<float> EmbeddingStore::lookup(std::string_view hex_key) const {
    if (hex_key.size() == 64) {
        if (const auto it = entries_.find(digest_from_hex(hex_key)); it != entries_.end()) return it->second;
    }
    return std::vector<float>(dim_, 0.0f);
}

std::string EmbeddingStore::dataset_hash() const {
    std::string keys;
    keys.reserve(entries_.size() * 64);
    for (const auto& [key, vec] : entries_) keys += digest_to_hex(key);
    return sha256_hex(keys);
}

void EmbeddingStore::write(std::ostream& out) const {
    out.write("PHEM", 4);
    write_u32(out, static_cast<std::uint32_t>(entries_.size()));
    write_u32(out, dim_);
    for (const auto& [key, vec] : entries_) {
        out.write(reinterpret_cast<const char*>(key.data()), static_cast<std::streamsize>(key.size()));
        for (const float f : vec) write_u32(out, std::bit_cast<std::uint32_t>(f));
    }
}

EmbeddingStore EmbeddingStore::read(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "PHEM") throw FormatError("not a PHEM embedding file");
    const std::uint32_t count = read_u32(in);
    const std::uint32_t dim = read_u32(in);
    EmbeddingStore store(dim);
    for (std::uint32_t e = 0; e < count; ++e) {
        Digest key{};
        if (!in.read(reinterpret_cast<char*>(key.data()), static_cast<std::streamsize>(key.size()))) {
            throw FormatError("truncated embedding file");
        }
        std::vector<float> vec(dim);
        for (auto& f : vec) f = std::bit_cast<float>(read_u32(in));
        if (store.entries_.count(key)) throw FormatError("duplicate key in embedding file");
        store.entries_.emplace(key, std::move(vec));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after embedding entries");
    return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write embedding file " + path.string());
    write(out);
    if (!out) throw Error("failed writing embedding file " + path.string());
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open embedding file " + path.string());
    return read(in);
}

StateVector build_state(const SampleRecord& record, const Normalizer& norm, const EmbeddingStore& store) {
    if (store.dim() != kEmbeddingDim) {
        throw ShapeMismatch("embedding store dim " + std::to_string(store.dim()) + " != " +
                            std::to_string(kEmbeddingDim));
    }
    StateVector state;
    state.reserve(kStateDim);
    const auto normalized = norm.apply(record.features);
    state.insert(state.end(), normalized.begin(), normalized.end());
    const auto embedding = store.lookup(record.embedding_key);
    for (const float f : embedding) state.push_back(static_cast<double>(f));
    return state;
}

const std::vector<std::string>& default_benign_urls() {
    static const std::vector<std::string> urls = {
        "https://www.google.com/",        "https://www.youtube.com/",       "https://www.facebook.com/",
        "https://www.wikipedia.org/",     "https://www.amazon.com/",        "https://www.apple.com/",
        "https://www.microsoft.com/en-us", "https://www.linkedin.com/",     "https://www.netflix.com/browse",
        "https://github.com/",            "https://www.reddit.com/",        "https://www.paypal.com/us/home",
        "https://www.bbc.co.uk/news",     "https://www.nytimes.com/",       "https://stackoverflow.com/questions",
        "https://www.cloudflare.com/",    "https://www.mozilla.org/en-US/", "https://www.python.org/downloads/",
        "https://www.gov.uk/",            "https://www.instagram.com/",     "https://docs.python.org/3/",
        "https://www.adobe.com/",         "https://www.dropbox.com/login",  "https://www.ebay.com/",
        "https://news.ycombinator.com/",  "https://www.spotify.com/us/",    "https://www.twitch.tv/",
        "https://www.yahoo.com/",         "https://www.office.com/",        "https://www.bing.com/search?q=weather",
    };
    return urls;
}

UrlStatistics fit_url_statistics(const std::vector<std::string>& benign_urls) {
    const auto& source = benign_urls.empty() ? default_benign_urls() : benign_urls;
    return {fit_char_model(source), fit_tld_table(source)};
}

UrlStatistics fit_url_statistics(const std::vector<SampleRecord>& records) {
    std::vector<std::string> benign;
    for (const auto& r : records) {
        if (r.label == 0) benign.push_back(r.url);
    }
    return fit_url_statistics(benign);
}

void apply_url_statistics(std::vector<SampleRecord>& records, const UrlStatistics& stats) {
    static const std::size_t char_prob = feature_index("URLCharProb");
    static const std::size_t tld_prob = feature_index("TLDLegitimateProb");
    for (auto& r : records) {
        const auto t = trim(r.url);
        r.features[char_prob] = char_log_prob(t, stats.char_model);
        double tld_value = 0.0;
        try {
            const auto parts = parse_url(t);
            if (const auto it = stats.tld_table.find(parts.tld); !parts.tld.empty() && it != stats.tld_table.end()) {
                tld_value = it->second;
            }
        } catch (const MalformedUrl&) {
        }
        r.features[tld_prob] = tld_value;
    }
}

PreparedData prepare_partition(std::vector<SampleRecord> train, std::vector<SampleRecord> test) {
    const auto stats = fit_url_statistics(train);
    apply_url_statistics(train, stats);
    apply_url_statistics(test, stats);
    PreparedData out{std::move(train), std::move(test), Normalizer{}};
    out.normalizer = Normalizer::fit(out.train);
    return out;
}

PreparedData prepare_experiment(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed) {
    auto split = stratified_split(records, test_fraction, seed);
    return prepare_partition(std::move(split.train), std::move(split.test));
}

}  // namespace phishrl
