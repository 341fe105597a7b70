#include "civicrank/error.hpp"
#include "civicrank/text.hpp"
#include "civicrank/wikiclient.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <map>

using namespace civicrank;
using namespace civicrank::testing;
using nlohmann::json;

namespace {

json search_json(std::vector<std::string> titles) {
    json hits = json::array();
    for (const auto& t : titles) hits.push_back({{"title", t}});
    return {{"query", {{"search", hits}}}};
}

json views_json(const std::map<std::string, int>& days) {
    json items = json::array();
    for (const auto& [ts, v] : days) items.push_back({{"timestamp", ts + "00"}, {"views", v}});
    return {{"items", items}};
}

class ScriptedTransport : public HttpTransport {
public:
    std::map<std::string, std::vector<HttpResponse>> scripts;  // url substring -> responses in order
    std::atomic<int> calls{0};
    std::vector<std::chrono::steady_clock::time_point> times;

    HttpResponse get(const std::string& url) override {
        ++calls;
        times.push_back(std::chrono::steady_clock::now());
        for (auto& [key, queue] : scripts) {
            if (url.find(key) != std::string::npos && !queue.empty()) {
                auto r = queue.front();
                if (queue.size() > 1) queue.erase(queue.begin());
                return r;
            }
        }
        return {500, "no script"};
    }
};

WikiClientOptions offline_opts(const std::filesystem::path& dir) {
    WikiClientOptions o;
    o.mode = WikiMode::offline;
    o.fixtures_dir = dir;
    return o;
}

}  // namespace

TEST_SUITE("wikiclient") {
    TEST_CASE("search result picking") {
        CHECK(pick_search_result("Barack Obama", search_json({"Barack Obama", "Obama family"})).title == "Barack Obama");
        CHECK(pick_search_result("perth", search_json({"City of Perth", "Perth"})).title == "Perth");
        CHECK(pick_search_result("Perth", search_json({"Western Australia", "Perth Mint"})).title == "Perth Mint");
        CHECK(pick_search_result("Xyz", search_json({"Top hit"})).title == "Top hit");
        CHECK_FALSE(pick_search_result("zzzqqqxx", search_json({})).resolved);
    }

    TEST_CASE("offline resolution from fixtures") {
        TempDir dir("wiki");
        write_text(dir / "search/Barack_Obama.json", search_json({"Barack Obama"}).dump());
        write_text(dir / "search/zzzqqqxx.json", search_json({}).dump());
        WikiClient wiki(offline_opts(dir.path()));
        const auto e = wiki.resolve_entity("Barack Obama");
        CHECK(e.resolved);
        CHECK(e.title == "Barack Obama");
        CHECK_FALSE(wiki.resolve_entity("zzzqqqxx").resolved);
        CHECK_THROWS_WITH_AS(wiki.resolve_entity(""), "empty_surface", Error);
        try {
            wiki.resolve_entity("Unrecorded");
            FAIL("expected fixture_missing");
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::offline);
            CHECK(err.code() == "fixture_missing");
        }
        CHECK(wiki.requests_issued() == 0);
    }

    TEST_CASE("pageview series from fixtures") {
        TempDir dir("pv");
        write_text(dir / "pageviews/Perth.json", views_json({{"20250701", 10}, {"20250703", 5}}).dump());
        write_text(dir / "pageviews/Solo.json", views_json({{"20250701", 7}}).dump());
        WikiClient wiki(offline_opts(dir.path()));
        const Date d1(2025, 7, 1);
        CHECK(wiki.fetch_daily_pageviews("Perth", d1, d1.plus_days(2)).daily_views == std::vector<std::int64_t>{10, 0, 5});
        CHECK(wiki.fetch_daily_pageviews("Solo", d1, d1).daily_views == std::vector<std::int64_t>{7});
        CHECK_THROWS_WITH_AS(wiki.fetch_daily_pageviews("Perth", d1, d1.plus_days(-1)), "bad_range: 2025-07-01 > 2025-06-30", Error);
    }

    TEST_CASE("series totals clip to range") {
        PageviewSeries s{"t", Date(2025, 1, 1), Date(2025, 1, 3), {1, 2, 3}};
        CHECK(s.total() == 6);
        CHECK(s.total_between(Date(2024, 12, 1), Date(2025, 1, 2)) == 3);
        CHECK(s.total_between(Date(2025, 1, 3), Date(2025, 2, 1)) == 3);
    }

    TEST_CASE("live mode: retries, 404 as empty, cache transparency") {
        TempDir cache("cache");
        auto transport = std::make_unique<ScriptedTransport>();
        auto* t = transport.get();
        t->scripts["srsearch=Perth"] = {{503, ""}, {200, search_json({"Perth"}).dump()}};
        t->scripts["/Nobody/"] = {{404, "{}"}};
        t->scripts["/Perth/"] = {{200, views_json({{"20250701", 4}}).dump()}};

        WikiClientOptions o;
        o.cache_dir = cache.path();
        o.retry_backoff = std::chrono::milliseconds(1);
        o.requests_per_second = 1000;
        WikiClient cold(o, std::move(transport));
        const auto e = cold.resolve_entity("Perth");
        CHECK(e.title == "Perth");
        CHECK(cold.requests_issued() == 2);
        const Date d(2025, 7, 1);
        const auto none = cold.fetch_daily_pageviews("Nobody", d, d);
        CHECK(none.daily_views == std::vector<std::int64_t>{0});
        const auto cold_series = cold.fetch_daily_pageviews("Perth", d, d.plus_days(1));

        // Warm cache: a transport that always fails proves nothing is fetched.
        auto failing = std::make_unique<ScriptedTransport>();
        auto* f = failing.get();
        WikiClient warm(o, std::move(failing));
        CHECK(warm.resolve_entity("Perth") == e);
        CHECK(warm.fetch_daily_pageviews("Perth", d, d.plus_days(1)).daily_views == cold_series.daily_views);
        CHECK(f->calls == 0);
    }

    TEST_CASE("live mode: persistent failure is retriable error") {
        auto transport = std::make_unique<ScriptedTransport>();
        WikiClientOptions o;
        o.max_attempts = 3;
        o.retry_backoff = std::chrono::milliseconds(1);
        o.requests_per_second = 1000;
        WikiClient wiki(o, std::move(transport));
        try {
            wiki.resolve_entity("Anything");
            FAIL("expected http_error");
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::retriable);
            CHECK(err.code() == "http_error");
        }
        CHECK(wiki.requests_issued() == 3);
    }

    TEST_CASE("rate limiter spaces requests") {
        RateLimiter limiter(50.0);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < 11; ++i) limiter.acquire();
        const auto elapsed = std::chrono::steady_clock::now() - start;
        // 11 admissions at 50/s need at least 10 intervals of 20 ms.
        CHECK(elapsed >= std::chrono::milliseconds(199));
    }

    TEST_CASE("request urls") {
        WikiClientOptions o;
        o.mode = WikiMode::offline;
        WikiClient wiki(o);
        CHECK(wiki.search_url("Barack Obama") ==
              "https://en.wikipedia.org/w/api.php?action=query&list=search&srsearch=Barack%20Obama&format=json");
        CHECK(wiki.pageviews_url("Barack Obama", Date(2025, 1, 1), Date(2025, 1, 31)) ==
              "https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article/en.wikipedia/all-access/user/"
              "Barack_Obama/daily/20250101/20250131");
    }
}
