#include "civicrank/wikiclient.hpp"

#include "civicrank/error.hpp"
#include "civicrank/text.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace civicrank {

namespace fs = std::filesystem;

std::int64_t PageviewSeries::total() const {
    std::int64_t t = 0;
    for (auto v : daily_views) t += v;
    return t;
}

std::int64_t PageviewSeries::total_between(Date from, Date to) const {
    if (from < start) from = start;
    if (to > end) to = end;
    std::int64_t t = 0;
    for (int i = start.days_until(from); i <= start.days_until(to); ++i) {
        t += daily_views[static_cast<std::size_t>(i)];
    }
    return t;
}

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(per_second > 0 ? 1.0 / per_second : 0.0))),
      next_slot_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

void WikiClientOptions::apply_environment() {
    if (const char* v = std::getenv("CIVICRANK_OFFLINE"); v != nullptr && std::string_view(v) == "1") {
        mode = WikiMode::offline;
    }
}

WikiEntity pick_search_result(std::string_view surface, const nlohmann::json& response) {
    WikiEntity e{std::string(surface), {}, false};
    const auto query = response.find("query");
    if (query == response.end() || !query->contains("search")) return e;
    const auto& hits = (*query)["search"];
    if (!hits.is_array() || hits.empty()) return e;

    const std::string needle = to_lower_ascii(surface);
    std::string contains_match;
    for (const auto& hit : hits) {
        const std::string title = hit.value("title", "");
        if (title.empty()) continue;
        const std::string lower = to_lower_ascii(title);
        if (lower == needle) {
            e.title = title;
            e.resolved = true;
            return e;
        }
        if (contains_match.empty() && lower.find(needle) != std::string::npos) contains_match = title;
    }
    e.title = contains_match.empty() ? hits.front().value("title", "") : contains_match;
    e.resolved = !e.title.empty();
    return e;
}

PageviewSeries parse_pageviews(std::string_view title, Date start, Date end, const nlohmann::json& response) {
    PageviewSeries s{std::string(title), start, end, {}};
    s.daily_views.assign(static_cast<std::size_t>(start.days_until(end) + 1), 0);
    const auto items = response.find("items");
    if (items == response.end() || !items->is_array()) return s;
    for (const auto& item : *items) {
        const std::string ts = item.value("timestamp", "");
        if (ts.size() < 8) continue;
        const auto day = parse_date(ts.substr(0, 4) + "-" + ts.substr(4, 2) + "-" + ts.substr(6, 2));
        if (!day || *day < start || *day > end) continue;
        const std::int64_t views = item.value("views", std::int64_t{0});
        s.daily_views[static_cast<std::size_t>(start.days_until(*day))] += views < 0 ? 0 : views;
    }
    return s;
}

WikiClient::WikiClient(WikiClientOptions options, std::unique_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(std::move(transport)), limiter_(options_.requests_per_second) {
    if (!transport_ && options_.mode == WikiMode::live) transport_ = make_https_transport(options_.user_agent);
}

WikiClient::~WikiClient() = default;

std::string WikiClient::search_url(std::string_view surface) const {
    return options_.search_endpoint + "?action=query&list=search&srsearch=" + percent_encode(surface) +
           "&format=json";
}

std::string WikiClient::pageviews_url(std::string_view title, Date start, Date end) const {
    std::string t(title);
    for (char& c : t) {
        if (c == ' ') c = '_';
    }
    return options_.pageviews_endpoint + "/" + options_.project + "/" + options_.access + "/" + options_.agent + "/" +
           percent_encode(t) + "/daily/" + start.compact() + "/" + end.compact();
}

std::size_t WikiClient::requests_issued() const {
    std::lock_guard lock(memo_mu_);
    return requests_issued_;
}

std::string WikiClient::fetch_body(Kind kind, std::string_view key, const std::string& url) {
    if (options_.mode == WikiMode::offline) {
        const fs::path path =
            options_.fixtures_dir / (kind == Kind::search ? "search" : "pageviews") / (fixture_key(key) + ".json");
        if (options_.fixtures_dir.empty() || !fs::exists(path)) {
            throw Error(ErrorKind::offline, "fixture_missing", path.string());
        }
        return read_file(path);
    }

    fs::path cache_path;
    if (!options_.cache_dir.empty()) {
        cache_path = options_.cache_dir / (hex64(stable_hash64(url)) + ".json");
        if (fs::exists(cache_path)) return read_file(cache_path);
    }
    std::string body = fetch_live(kind, url);
    if (!cache_path.empty()) write_file_atomic(cache_path, body);
    return body;
}

std::string WikiClient::fetch_live(Kind kind, const std::string& url) {
    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, options_.max_attempts); ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(options_.retry_backoff * (1 << (attempt - 1)));
        limiter_.acquire();
        {
            std::lock_guard lock(memo_mu_);
            ++requests_issued_;
        }
        try {
            HttpResponse r = transport_->get(url);
            if (r.status == 200) return std::move(r.body);
            // The pageview API answers 404 for titles with no recorded traffic.
            if (r.status == 404 && kind == Kind::pageviews) return R"({"items":[]})";
            last_error = "HTTP " + std::to_string(r.status);
        } catch (const std::exception& ex) {
            last_error = ex.what();
        }
    }
    throw Error(ErrorKind::retriable, "http_error", url + ": " + last_error);
}

WikiEntity WikiClient::resolve_entity(std::string_view surface) {
    if (trim(surface).empty()) throw validation_error("empty_surface");
    {
        std::lock_guard lock(memo_mu_);
        if (auto it = resolved_.find(surface); it != resolved_.end()) return it->second;
    }
    const std::string body = fetch_body(Kind::search, surface, search_url(surface));
    const auto json = nlohmann::json::parse(body, nullptr, false);
    if (json.is_discarded()) throw Error(ErrorKind::retriable, "bad_response", "unparseable search response");
    WikiEntity e = pick_search_result(surface, json);
    std::lock_guard lock(memo_mu_);
    resolved_.emplace(std::string(surface), e);
    return e;
}

PageviewSeries WikiClient::fetch_daily_pageviews(std::string_view title, Date start, Date end) {
    if (title.empty()) throw validation_error("unresolved_title");
    if (end < start) throw validation_error("bad_range", start.iso() + " > " + end.iso());
    const auto key = std::make_tuple(std::string(title), start, end);
    {
        std::lock_guard lock(memo_mu_);
        if (auto it = series_.find(key); it != series_.end()) return it->second;
    }
    const std::string body = fetch_body(Kind::pageviews, title, pageviews_url(title, start, end));
    const auto json = nlohmann::json::parse(body, nullptr, false);
    if (json.is_discarded()) throw Error(ErrorKind::retriable, "bad_response", "unparseable pageview response");
    PageviewSeries s = parse_pageviews(title, start, end, json);
    std::lock_guard lock(memo_mu_);
    series_.emplace(key, s);
    return s;
}

}  // namespace civicrank
