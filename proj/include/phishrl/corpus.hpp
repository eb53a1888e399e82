#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "phishrl/content_features.hpp"
#include "phishrl/url_features.hpp"

namespace phishrl {

inline constexpr std::size_t kFeatureCount = kUrlFeatureCount + kContentFeatureCount;  // 50
inline constexpr std::size_t kEmbeddingDim = 768;
inline constexpr std::size_t kStateDim = kFeatureCount + kEmbeddingDim;  // 818

using FeatureArray = std::array<double, kFeatureCount>;
using StateVector = std::vector<double>;

// Column order of the 50 features: URL block then content block.
const std::array<std::string, kFeatureCount>& feature_column_names();
// url, label, then the 50 feature columns.
std::vector<std::string> dataset_columns();
bool is_boolean_feature(std::size_t index);
std::size_t feature_index(const std::string& name);

struct SampleRecord {
    std::string url;
    int label = 0;  // 0 legitimate, 1 phishing
    FeatureArray features{};
    std::string embedding_key;

    bool operator==(const SampleRecord&) const = default;
};

std::string sha256_hex(std::string_view data);
std::array<std::uint8_t, 32> sha256_digest(std::string_view data);
// Lowercase hex SHA-256 of the exact URL string.
std::string embedding_key(std::string_view url);

SampleRecord make_record(std::string url, int label, const UrlFeatureVector& url_features,
                         const ContentFeatureVector& content_features);

// Missing/null cells become 0; boolean columns are coerced to {0,1}.
std::vector<SampleRecord> read_dataset(std::istream& in);
std::vector<SampleRecord> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records);
void save_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

// Shortest text form that parses back to the same double.
std::string format_double(double v);

struct Split {
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> test;
};

// Per-class test counts are apportioned from round(n * test_fraction) by
// largest remainder. Both partitions keep the input order.
Split stratified_split(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed);

class Normalizer {
public:
    static Normalizer fit(const std::vector<SampleRecord>& train);
    static Normalizer from_bounds(const FeatureArray& min, const FeatureArray& max);

    // Min-max scaling clamped to [0,1]; constant features map to 0.
    FeatureArray apply(const FeatureArray& features) const;

    const FeatureArray& min() const { return min_; }
    const FeatureArray& max() const { return max_; }

private:
    FeatureArray min_{};
    FeatureArray max_{};
};

using Digest = std::array<std::uint8_t, 32>;

Digest digest_from_hex(std::string_view hex);
std::string digest_to_hex(const Digest& digest);

// URL-keyed semantic vectors. Serialized as "PHEM", u32 count, u32 dim, then
// per entry a 32-byte key and dim little-endian float32 values, keys ascending.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::uint32_t dim = kEmbeddingDim) : dim_(dim) {}

    std::uint32_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }

    void insert(const Digest& key, std::vector<float> vector);
    void insert(std::string_view hex_key, std::vector<float> vector);
    bool contains(std::string_view hex_key) const;
    // All-zero vector for absent keys.
    std::vector<float> lookup(std::string_view hex_key) const;
    const std::map<Digest, std::vector<float>>& entries() const { return entries_; }

    // SHA-256 over the concatenated sorted keys.
    std::string dataset_hash() const;

    void write(std::ostream& out) const;
    static EmbeddingStore read(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static EmbeddingStore load(const std::filesystem::path& path);

private:
    std::uint32_t dim_;
    std::map<Digest, std::vector<float>> entries_;
};

StateVector build_state(const SampleRecord& record, const Normalizer& norm, const EmbeddingStore& store);

// Statistics fitted on benign URLs that feed URLCharProb and TLDLegitimateProb.
struct UrlStatistics {
    CharDistribution char_model;
    TldTable tld_table;
};

const std::vector<std::string>& default_benign_urls();

// Fits on the given benign URLs; falls back to the bundled list when empty.
UrlStatistics fit_url_statistics(const std::vector<std::string>& benign_urls);
UrlStatistics fit_url_statistics(const std::vector<SampleRecord>& records);
// Rewrites the URLCharProb and TLDLegitimateProb columns.
void apply_url_statistics(std::vector<SampleRecord>& records, const UrlStatistics& stats);

// Split, refit URL statistics on the benign training part, fit the normalizer.
struct PreparedData {
    std::vector<SampleRecord> train;
    std::vector<SampleRecord> test;
    Normalizer normalizer;
};

// Refit URL statistics on the benign part of train and the normalizer on train.
PreparedData prepare_partition(std::vector<SampleRecord> train, std::vector<SampleRecord> test);
PreparedData prepare_experiment(const std::vector<SampleRecord>& records, double test_fraction, std::uint64_t seed);

}  // namespace phishrl
