#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "phishrl/content_features.hpp"

namespace phishrl {

struct FetchConfig {
    int delay_ms = 500;
    int timeout_ms = 10000;
    std::size_t max_redirects = 5;
    std::size_t max_concurrency = 4;
    std::string user_agent = "phishrl-fetcher/1.0";
};

enum class FetchOutcome { ok, network_error, timeout, too_many_redirects };

const char* to_string(FetchOutcome outcome);

struct FetchResult {
    HtmlDocument document;
    FetchOutcome outcome = FetchOutcome::network_error;
};

// Resolves a Location header value against the URL it was served from.
std::string resolve_location(const std::string& base, const std::string& location);

// GET with manual redirect following. Never throws for network failures:
// those come back as an outcome with an empty body.
FetchResult fetch(const std::string& url, const FetchConfig& config);

using FetchProgress = std::function<void(std::size_t index, std::size_t total, const FetchResult&)>;

// Fetches every URL with up to max_concurrency workers. Each worker waits
// delay_ms between the starts of its own requests. Results keep input order.
std::vector<FetchResult> fetch_batch(const std::vector<std::string>& urls, const FetchConfig& config,
                                     const FetchProgress& progress = {});

}  // namespace phishrl
