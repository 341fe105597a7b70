#include "civicrank/error.hpp"
#include "civicrank/rating_server.hpp"
#include "civicrank/rating_store.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

using namespace civicrank;
using namespace civicrank::testing;

namespace {

AssignmentPlan small_plan() {
    AssignmentPlan p;
    p.m = 2;
    p.respondent_ids = {"R0001", "R0002"};
    p.lists = {{"R0001", {"a", "b"}}, {"R0002", {"b", "c"}}};
    return p;
}

InstrumentSpec core_spec() {
    auto s = InstrumentSpec::defaults();
    s.sub_dimensions.clear();
    return s;
}

RatingResponse rating(const std::string& r, const std::string& a, int pi, int pub) {
    return {r, a, {{kPersonalInterest, pi}, {kPublicImportance, pub}}, "2025-03-01T12:00:00Z"};
}

Corpus small_corpus() {
    Corpus c;
    for (const char* id : {"a", "b", "c"}) {
        Article a;
        a.id = id;
        a.headline = std::string("Story ") + id;
        a.byline = {"Reporter"};
        a.published_date = Date(2025, 2, 1);
        a.url = std::string("https://news.example/") + id;
        c.articles.push_back(a);
    }
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("service") {
    TEST_CASE("assignment order and progress") {
        TempDir dir("store");
        RatingStore store(small_plan(), core_spec(), dir / "ratings.jsonl");
        CHECK(store.next_assignment("R0001") == "a");
        CHECK(store.submit(rating("R0001", "a", 3, 4)).status == SubmitOutcome::Status::accepted);
        CHECK(store.next_assignment("R0001") == "b");
        const auto p = store.progress("R0001");
        CHECK(p.rated == 1);
        CHECK(p.total == 2);
        CHECK(store.submit(rating("R0001", "b", 3, 4)).status == SubmitOutcome::Status::accepted);
        CHECK_FALSE(store.next_assignment("R0001"));
        CHECK(store.progress("R0001").fraction() == 1.0);
        CHECK_THROWS_AS(store.next_assignment("R0404"), Error);
    }

    TEST_CASE("progress two of four") {
        AssignmentPlan plan;
        plan.m = 4;
        plan.respondent_ids = {"R0001"};
        plan.lists = {{"R0001", {"a", "b", "c", "d"}}};
        TempDir dir("store4");
        RatingStore store(plan, core_spec(), dir / "ratings.jsonl");
        store.submit(rating("R0001", "a", 1, 1));
        store.submit(rating("R0001", "c", 1, 1));
        CHECK(store.progress("R0001").fraction() == 0.5);
        CHECK(store.next_assignment("R0001") == "b");
    }

    TEST_CASE("first write wins and rejections persist nothing") {
        TempDir dir("dup");
        RatingStore store(small_plan(), core_spec(), dir / "ratings.jsonl");
        CHECK(store.submit(rating("R0001", "a", 2, 5)).status == SubmitOutcome::Status::accepted);
        const auto d = store.submit(rating("R0001", "a", 4, 1));
        CHECK(d.status == SubmitOutcome::Status::duplicate);
        CHECK(d.stored.scores.at(kPublicImportance) == 5);
        CHECK(store.find("R0001", "a")->scores.at(kPublicImportance) == 5);

        const auto zero = store.submit(rating("R0002", "b", 0, 3));
        CHECK(zero.status == SubmitOutcome::Status::rejected);
        REQUIRE(zero.fields.size() == 1);
        CHECK(zero.fields[0] == std::make_pair(std::string(kPersonalInterest), std::string("out_of_range")));
        CHECK(store.submit(rating("R0001", "c", 3, 3)).error == "not_in_plan");
        auto bad_time = rating("R0002", "b", 3, 3);
        bad_time.submitted_at = "yesterday";
        CHECK(store.submit(bad_time).status == SubmitOutcome::Status::rejected);
        auto no_time = rating("R0002", "c", 3, 3);
        no_time.submitted_at.clear();
        CHECK_FALSE(store.submit(no_time).stored.submitted_at.empty());
        CHECK(store.size() == 2);
        CHECK(read_rating_log(dir / "ratings.jsonl").ratings.size() == 2);
    }

    TEST_CASE("replay restores state and cuts a torn tail") {
        TempDir dir("replay");
        const auto log = dir / "ratings.jsonl";
        {
            RatingStore store(small_plan(), core_spec(), log);
            store.submit(rating("R0001", "a", 2, 2));
            store.submit(rating("R0002", "b", 3, 3));
            BatteryResponse b{"R0001", {}, ""};
            for (const auto& i : store.instrument().battery) b.scores[i.key] = 4;
            CHECK(store.submit_battery(b).status == SubmitOutcome::Status::accepted);
        }
        const auto intact = slurp(log);
        {
            std::ofstream out(log, std::ios::app | std::ios::binary);
            out << R"({"respondent_id":"R0002","article_id":"c","sco)";
        }
        {
            RatingStore store(small_plan(), core_spec(), log);
            CHECK(store.size() == 2);
            CHECK(store.has_battery("R0001"));
            CHECK(slurp(log) == intact);
            CHECK(store.submit(rating("R0002", "c", 1, 1)).status == SubmitOutcome::Status::accepted);
            CHECK(store.submit(rating("R0001", "a", 5, 5)).status == SubmitOutcome::Status::duplicate);
        }
        RatingStore again(small_plan(), core_spec(), log);
        CHECK(again.size() == 3);
        CHECK(again.find("R0001", "a")->scores.at(kPublicImportance) == 2);
    }

    TEST_CASE("corruption before the tail is an error") {
        TempDir dir("corrupt");
        const auto log = dir / "ratings.jsonl";
        write_text(log, "not json\n{\"respondent_id\":\"R0001\"}\n");
        CHECK_THROWS_WITH_AS(RatingStore(small_plan(), core_spec(), log), doctest::Contains("corrupt_log"), Error);
    }

    TEST_CASE("concurrent submissions") {
        AssignmentPlan plan;
        plan.m = 1;
        std::vector<std::string> articles;
        for (int i = 0; i < 32; ++i) {
            const auto rid = respondent_id(i);
            plan.respondent_ids.push_back(rid);
            plan.lists[rid] = {"art" + std::to_string(i)};
        }
        TempDir dir("concurrent");
        RatingStore store(plan, core_spec(), dir / "ratings.jsonl");
        std::vector<std::thread> threads;
        std::atomic<int> accepted{0};
        for (int i = 0; i < 32; ++i) {
            threads.emplace_back([&, i] {
                if (store.submit(rating(respondent_id(i), "art" + std::to_string(i), 3, 3)).status ==
                    SubmitOutcome::Status::accepted) {
                    ++accepted;
                }
                if (store.submit(rating(respondent_id(0), "art0", 1 + i % 5, 2)).status ==
                    SubmitOutcome::Status::accepted) {
                    ++accepted;
                }
            });
        }
        for (auto& t : threads) t.join();
        CHECK(accepted == 32);
        CHECK(store.size() == 32);
        CHECK(read_rating_log(dir / "ratings.jsonl").ratings.size() == 32);
    }

    TEST_CASE("http api") {
        TempDir dir("http");
        RatingStore store(small_plan(), core_spec(), dir / "ratings.jsonl");
        const auto corpus = small_corpus();
        ServiceOptions opt;
        opt.port = 0;
        opt.threads = 4;
        RatingServer server(store, corpus, opt);
        const int port = server.bind();
        std::thread runner([&] { server.run(); });

        httplib::Client cli("127.0.0.1", port);
        cli.set_connection_timeout(5);
        auto get = [&](const std::string& path) {
            auto res = cli.Get(path);
            REQUIRE(res);
            return std::make_pair(res->status, nlohmann::json::parse(res->body));
        };
        auto post = [&](const std::string& path, const nlohmann::json& body) {
            auto res = cli.Post(path, body.dump(), "application/json");
            REQUIRE(res);
            return std::make_pair(res->status, nlohmann::json::parse(res->body));
        };

        CHECK(get("/healthz").first == 200);
        CHECK(get("/api/instrument").second.at("rating_items").size() == 2);

        auto [st, j] = get("/api/assignment?respondent_id=R0001");
        CHECK(st == 200);
        CHECK(j.at("status") == "assignment");
        CHECK(j.at("card").at("article_id") == "a");
        CHECK(j.at("card").at("headline") == "Story a");

        const nlohmann::json body{{"respondent_id", "R0001"},
                                  {"article_id", "a"},
                                  {"scores", {{kPersonalInterest, 4}, {kPublicImportance, 5}}}};
        auto first = post("/api/ratings", body);
        CHECK(first.first == 201);
        CHECK(first.second.at("progress").at("rated") == 1);
        auto again = post("/api/ratings", body);
        CHECK(again.first == 200);
        CHECK(again.second.at("status") == "duplicate");

        auto bad = body;
        bad["article_id"] = "b";
        bad["scores"][kPublicImportance] = 9;
        auto rej = post("/api/ratings", bad);
        CHECK(rej.first == 400);
        CHECK(rej.second.at("fields")[0].at("reason") == "out_of_range");

        auto garbled = cli.Post("/api/ratings", "{nope", "application/json");
        REQUIRE(garbled);
        CHECK(garbled->status == 400);
        CHECK(nlohmann::json::parse(garbled->body).at("error") == "bad_json");

        CHECK(get("/api/assignment?respondent_id=R0404").first == 404);
        CHECK(get("/api/assignment").first == 400);
        CHECK(get("/api/articles/zzz").first == 404);
        CHECK(get("/api/articles/c").second.at("headline") == "Story c");

        bad["scores"][kPublicImportance] = 2;
        CHECK(post("/api/ratings", bad).first == 201);
        auto done = get("/api/assignment?respondent_id=R0001");
        CHECK(done.second.at("status") == "done");
        CHECK(done.second.at("battery_pending") == true);
        nlohmann::json battery{{"respondent_id", "R0001"}, {"scores", nlohmann::json::object()}};
        for (const auto& i : store.instrument().battery) battery["scores"][i.key] = 3;
        CHECK(post("/api/battery", battery).first == 201);
        CHECK(get("/api/assignment?respondent_id=R0001").second.at("battery_pending") == false);
        CHECK(get("/api/progress?respondent_id=R0001").second.at("fraction") == 1.0);

        server.stop();
        runner.join();
        CHECK(store.size() == 2);
    }
}
