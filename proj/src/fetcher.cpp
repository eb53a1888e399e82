#include "phishrl/fetcher.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "phishrl/errors.hpp"
#include "phishrl/url_features.hpp"

namespace phishrl {

namespace {

using Clock = std::chrono::steady_clock;

std::string origin_of(const UrlParts& parts) {
    std::string out = parts.scheme + "://" + parts.host;
    if (parts.port && !parts.port->empty()) out += ":" + *parts.port;
    return out;
}

std::string request_target(const UrlParts& parts) {
    std::string target = parts.path.empty() ? "/" : parts.path;
    if (!parts.query.empty()) target += "?" + parts.query;
    return target;
}

bool is_redirect(int status) {
    return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

FetchResult failure(HtmlDocument doc, FetchOutcome outcome) {
    doc.body.clear();
    doc.headers.clear();
    return {std::move(doc), outcome};
}

}  // namespace

const char* to_string(FetchOutcome outcome) {
    switch (outcome) {
        case FetchOutcome::ok: return "ok";
        case FetchOutcome::network_error: return "network_error";
        case FetchOutcome::timeout: return "timeout";
        case FetchOutcome::too_many_redirects: return "too_many_redirects";
    }
    return "unknown";
}

std::string resolve_location(const std::string& base, const std::string& location) {
    if (location.find("://") != std::string::npos) return location;
    const UrlParts parts = parse_url(base);
    if (location.rfind("//", 0) == 0) return parts.scheme + ":" + location;
    if (!location.empty() && location.front() == '/') return origin_of(parts) + location;
    if (!location.empty() && location.front() == '?') return origin_of(parts) + (parts.path.empty() ? "/" : parts.path) + location;
    std::string dir = parts.path.empty() ? "/" : parts.path;
    dir.erase(dir.rfind('/') + 1);
    return origin_of(parts) + dir + location;
}

FetchResult fetch(const std::string& url, const FetchConfig& config) {
    HtmlDocument doc;
    doc.url = url;
    std::string current = url;
    doc.redirect_chain.push_back(current);

    while (true) {
        UrlParts parts;
        try {
            parts = parse_url(current);
        } catch (const MalformedUrl&) {
            return failure(std::move(doc), FetchOutcome::network_error);
        }
        if (parts.scheme != "http" && parts.scheme != "https") {
            return failure(std::move(doc), FetchOutcome::network_error);
        }

        const auto started = Clock::now();
        httplib::Client client(origin_of(parts));
        const auto timeout = std::chrono::milliseconds(config.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        client.set_follow_location(false);
        client.enable_server_certificate_verification(true);
        const httplib::Headers headers = {{"User-Agent", config.user_agent}};

        auto res = client.Get(request_target(parts), headers);
        if (!res) {
            const auto elapsed = Clock::now() - started;
            const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout;
            return failure(std::move(doc), timed_out ? FetchOutcome::timeout : FetchOutcome::network_error);
        }

        if (is_redirect(res->status) && res->has_header("Location")) {
            if (doc.redirect_chain.size() > config.max_redirects) {
                return failure(std::move(doc), FetchOutcome::too_many_redirects);
            }
            try {
                current = resolve_location(current, res->get_header_value("Location"));
            } catch (const MalformedUrl&) {
                return failure(std::move(doc), FetchOutcome::network_error);
            }
            doc.redirect_chain.push_back(current);
            continue;
        }

        for (const auto& [name, value] : res->headers) {
            auto [it, inserted] = doc.headers.emplace(name, value);
            if (!inserted) it->second += ", " + value;
        }
        doc.body = std::move(res->body);
        return {std::move(doc), FetchOutcome::ok};
    }
}

std::vector<FetchResult> fetch_batch(const std::vector<std::string>& urls, const FetchConfig& config,
                                     const FetchProgress& progress) {
    std::vector<FetchResult> results(urls.size());
    if (urls.empty()) return results;

    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    const auto delay = std::chrono::milliseconds(std::max(0, config.delay_ms));

    const auto worker = [&] {
        std::optional<Clock::time_point> last_start;
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= urls.size()) return;
            if (last_start) std::this_thread::sleep_until(*last_start + delay);
            last_start = Clock::now();
            results[i] = fetch(urls[i], config);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(i, urls.size(), results[i]);
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(config.max_concurrency, 1, urls.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace phishrl
