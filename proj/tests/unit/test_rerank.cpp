#include "civicrank/error.hpp"
#include "civicrank/rerank.hpp"
#include "civicrank/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace civicrank;

namespace {

ProfileWeights lam(double l) { return {"p", l, {}}; }

std::vector<Candidate> random_candidates(Rng& rng, std::size_t n, bool coarse) {
    std::vector<Candidate> cs;
    for (std::size_t i = 0; i < n; ++i) {
        Candidate c;
        c.article_id = "c" + std::to_string(100 + rng.below(900)) + "_" + std::to_string(i);
        // Coarse values exercise the tie rule.
        c.relevance = coarse ? static_cast<double>(rng.below(4)) : rng.normal() * 30.0;
        c.civic = coarse ? static_cast<double>(rng.below(3)) / 2.0 : rng.uniform();
        cs.push_back(c);
    }
    return cs;
}

std::vector<std::string> ids_of(const std::vector<Candidate>& cs) {
    std::vector<std::string> ids;
    for (const auto& c : cs) ids.push_back(c.article_id);
    return ids;
}

}  // namespace

TEST_SUITE("rerank") {
    TEST_CASE("civic score examples") {
        Candidate c{"a", 1.0, 0.37, {{"x", 0.8}, {"y", 0.2}, {"z", 0.4}}};
        CHECK(civic_score(c, {"p", 0.5, {{"x", 1.0}}}) == 0.8);
        Candidate e{"b", 1.0, 0.0, {{"x", 0.2}, {"y", 0.4}, {"z", 0.6}}};
        CHECK(civic_score(e, {"p", 0.5, {{"x", 1.0 / 3}, {"y", 1.0 / 3}, {"z", 1.0 / 3}}}) == doctest::Approx(0.4));
        CHECK(civic_score(c, lam(0.5)) == 0.37);
        CHECK_THROWS_WITH_AS(civic_score(c, {"p", 0.5, {{"w", 1.0}}}), doctest::Contains("missing_sub_dimension"), Error);
    }

    TEST_CASE("weights validation") {
        CHECK_NOTHROW(lam(0.0).validate());
        CHECK_NOTHROW(lam(1.0).validate());
        CHECK_THROWS_AS(lam(1.5).validate(), Error);
        CHECK_THROWS_AS(lam(-0.1).validate(), Error);
        CHECK_THROWS_AS((ProfileWeights{"p", 0.5, {{"x", 0.5}, {"y", 0.4}}}.validate()), Error);
        CHECK_THROWS_AS((ProfileWeights{"p", 0.5, {{"x", 1.5}, {"y", -0.5}}}.validate()), Error);
    }

    TEST_CASE("blend hand example") {
        const auto r = rerank({{"b", 0.0, 0.9, {}}, {"a", 10.0, 0.0, {}}}, lam(0.5));
        REQUIRE(r.items.size() == 2);
        CHECK(r.items[0].article_id == "a");
        CHECK(r.items[0].score == 0.5);
        CHECK(r.items[1].score == doctest::Approx(0.45));
        CHECK(r.items[0].relevance_norm == 1.0);
    }

    TEST_CASE("constant relevance normalizes to one half") {
        const auto r = rerank({{"b", 3.0, 0.1, {}}, {"a", 3.0, 0.1, {}}}, lam(0.0));
        CHECK(r.items[0].relevance_norm == 0.5);
        CHECK(r.ids() == std::vector<std::string>{"a", "b"});
        CHECK_THROWS_AS(rerank({}, lam(0.5)), Error);
    }

    TEST_CASE("property: endpoints reproduce the argsorts") {
        Rng rng(201);
        for (int trial = 0; trial < 200; ++trial) {
            const auto cs = random_candidates(rng, 1 + rng.below(40), trial % 2 == 0);
            std::vector<double> rel, civ;
            for (const auto& c : cs) {
                rel.push_back(c.relevance);
                civ.push_back(c.civic);
            }
            CHECK(rerank(cs, lam(0.0)).ids() == argsort_desc(ids_of(cs), rel));
            CHECK(rerank(cs, lam(1.0)).ids() == argsort_desc(ids_of(cs), civ));
        }
    }

    TEST_CASE("property: scale invariance and determinism") {
        Rng rng(202);
        for (int trial = 0; trial < 100; ++trial) {
            auto cs = random_candidates(rng, 2 + rng.below(30), trial % 3 == 0);
            const auto base = rerank(cs, lam(0.0)).ids();
            auto scaled = cs;
            const double a = 0.01 + rng.uniform() * 100.0, b = rng.normal() * 1e3;
            for (auto& c : scaled) c.relevance = a * c.relevance + b;
            CHECK(rerank(scaled, lam(0.0)).ids() == base);

            const double l = rng.uniform();
            const auto r1 = rerank(cs, lam(l));
            rng.shuffle(cs);
            const auto r2 = rerank(cs, lam(l));
            CHECK(r1.ids() == r2.ids());
            for (std::size_t i = 1; i < r1.items.size(); ++i) {
                CHECK(r1.items[i - 1].score >= r1.items[i].score);
                if (r1.items[i - 1].score == r1.items[i].score) CHECK(r1.items[i - 1].article_id < r1.items[i].article_id);
            }
        }
    }

    TEST_CASE("kendall tau hand cases") {
        const std::vector<std::string> x{"a", "b", "c", "d"};
        CHECK(kendall_tau(x, x) == 1.0);
        CHECK(kendall_tau(x, {"d", "c", "b", "a"}) == -1.0);
        CHECK(kendall_tau({"a", "b", "c"}, {"b", "a", "c"}) == 1.0 / 3.0);
        CHECK_THROWS_AS(kendall_tau(x, {"a", "b", "c", "e"}), Error);
        CHECK_THROWS_AS(kendall_tau({"a", "a"}, {"a", "a"}), Error);
    }

    TEST_CASE("compare rankings") {
        const std::vector<std::string> base{"a", "b", "c", "d"};
        const std::map<std::string, double> civic{{"a", 0.0}, {"b", 0.2}, {"c", 0.6}, {"d", 1.0}};
        auto s = compare_rankings(base, base, civic, 2);
        CHECK(s.kendall_tau == 1.0);
        CHECK(s.civic_uplift == 0.0);
        s = compare_rankings(base, {"d", "c", "b", "a"}, civic, 2);
        CHECK(s.kendall_tau == -1.0);
        CHECK(s.civic_uplift == doctest::Approx(0.7));
        CHECK(compare_rankings(base, base, civic, 10).k == 4);
        CHECK_THROWS_AS(compare_rankings(base, {"a", "b"}, civic, 2), Error);
        CHECK_THROWS_AS(compare_rankings(base, base, {{"a", 0.1}}, 2), Error);
    }

    TEST_CASE("property: self comparison gives tau one") {
        Rng rng(203);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<std::string> ids;
            const auto n = 1 + rng.below(30);
            for (std::uint64_t i = 0; i < n; ++i) ids.push_back("x" + std::to_string(i));
            rng.shuffle(ids);
            CHECK(kendall_tau(ids, ids) == 1.0);
            auto other = ids;
            if (n >= 2) {
                std::swap(other[0], other[1]);
                CHECK(kendall_tau(ids, other) < 1.0);
            }
        }
    }

    TEST_CASE("json and profiles") {
        const auto j = nlohmann::json::parse(R"({"_comment": "placeholders",
            "profiles": {"_note": 1, "engaged": {"lambda": 0.6, "sub_weights": {}},
                         "custom": {"lambda": 0.3, "sub_weights": {"x": 0.25, "y": 0.75}}}})");
        const auto ps = load_profiles(j);
        CHECK(ps.size() == 2);
        CHECK(ps.at("engaged").lambda == 0.6);
        CHECK(ps.at("custom").sub_weights.at("y") == 0.75);

        const Candidate c = nlohmann::json::parse(R"({"article_id": "a", "relevance": 2.5, "civic": 0.4})");
        CHECK(c.civic == 0.4);
        CHECK_THROWS(nlohmann::json::parse(R"({"article_id": "a", "relevance": 2.5, "civic": 1.4})").get<Candidate>());
        const nlohmann::json out = rerank({c}, lam(0.5));
        CHECK(out.at("items").size() == 1);
    }
}
