#pragma once

#include "civicrank/date.hpp"

#include <nlohmann/json_fwd.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace civicrank {

struct WikiEntity {
    std::string surface;
    std::string title;
    bool resolved = false;

    bool operator==(const WikiEntity&) const = default;
};

struct PageviewSeries {
    std::string title;
    Date start;
    Date end;
    std::vector<std::int64_t> daily_views;  // one per day, inclusive

    std::int64_t total() const;
    // Sum over [from, to] clipped to the series range.
    std::int64_t total_between(Date from, Date to) const;
};

class EntityResolver {
public:
    virtual ~EntityResolver() = default;
    virtual WikiEntity resolve_entity(std::string_view surface) = 0;
};

class PageviewSource {
public:
    virtual ~PageviewSource() = default;
    virtual PageviewSeries fetch_daily_pageviews(std::string_view title, Date start, Date end) = 0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Minimal GET transport; throws on connection-level failure.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
};

std::unique_ptr<HttpTransport> make_https_transport(std::string user_agent,
                                                    std::chrono::seconds timeout = std::chrono::seconds{20});

// Serializes request admission so that at most `per_second` requests start
// in any one-second span.
class RateLimiter {
public:
    explicit RateLimiter(double per_second);
    void acquire();

private:
    std::mutex mu_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_slot_;
};

enum class WikiMode { live, offline };

struct WikiClientOptions {
    WikiMode mode = WikiMode::live;
    std::filesystem::path fixtures_dir;  // required in offline mode
    std::filesystem::path cache_dir;     // empty disables the disk cache
    double requests_per_second = 10.0;
    int max_attempts = 3;
    std::chrono::milliseconds retry_backoff{500};
    std::string user_agent = "civicrank/0.1 (news value enrichment)";
    std::string search_endpoint = "https://en.wikipedia.org/w/api.php";
    std::string pageviews_endpoint = "https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article";
    std::string project = "en.wikipedia";
    std::string access = "all-access";
    std::string agent = "user";

    // CIVICRANK_OFFLINE=1 forces fixture mode.
    void apply_environment();
};

// Picks a title from a MediaWiki list=search response: the first hit whose
// title equals the surface (case-insensitive), else the first hit whose title
// contains it, else the top hit; unresolved when the result list is empty.
WikiEntity pick_search_result(std::string_view surface, const nlohmann::json& response);

// Daily pageviews from a REST per-article response; days absent from the
// response are 0 and items outside [start, end] are ignored.
PageviewSeries parse_pageviews(std::string_view title, Date start, Date end, const nlohmann::json& response);

class WikiClient final : public EntityResolver, public PageviewSource {
public:
    explicit WikiClient(WikiClientOptions options, std::unique_ptr<HttpTransport> transport = nullptr);
    ~WikiClient() override;

    WikiEntity resolve_entity(std::string_view surface) override;
    PageviewSeries fetch_daily_pageviews(std::string_view title, Date start, Date end) override;

    std::string search_url(std::string_view surface) const;
    std::string pageviews_url(std::string_view title, Date start, Date end) const;

    // Requests that reached the transport (cache hits and fixtures excluded).
    std::size_t requests_issued() const;

    const WikiClientOptions& options() const { return options_; }

private:
    enum class Kind { search, pageviews };
    std::string fetch_body(Kind kind, std::string_view key, const std::string& url);
    std::string fetch_live(Kind kind, const std::string& url);

    WikiClientOptions options_;
    std::unique_ptr<HttpTransport> transport_;
    RateLimiter limiter_;

    mutable std::mutex memo_mu_;
    std::map<std::string, WikiEntity, std::less<>> resolved_;
    std::map<std::tuple<std::string, Date, Date>, PageviewSeries> series_;
    std::size_t requests_issued_ = 0;
};

}  // namespace civicrank
