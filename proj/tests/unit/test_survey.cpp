#include "civicrank/error.hpp"
#include "civicrank/survey.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace civicrank;
using namespace civicrank::testing;

namespace {

InstrumentSpec core_only() {
    auto s = InstrumentSpec::defaults();
    s.sub_dimensions.clear();
    return s;
}

AssignmentPlan tiny_plan() {
    AssignmentPlan p;
    p.m = 2;
    p.respondent_ids = {"R0001", "R0002"};
    p.lists = {{"R0001", {"a1", "a2"}}, {"R0002", {"a2", "a3"}}};
    return p;
}

std::vector<ResponseRow> rows_for(const std::string& r, const std::string& a, int pi, int pub, const std::string& at,
                                  std::size_t line = 1) {
    return {{line, r, a, kPersonalInterest, std::to_string(pi), at},
            {line + 1, r, a, kPublicImportance, std::to_string(pub), at}};
}

RatingResponse resp(const std::string& a, int pub, const std::string& r = "R0001") {
    return {r, a, {{kPersonalInterest, 3}, {kPublicImportance, pub}}, "2025-01-01T00:00:00Z"};
}

Corpus corpus_of(const std::vector<std::string>& ids) {
    Corpus c;
    for (const auto& id : ids) {
        Article a;
        a.id = id;
        a.headline = "Headline " + id;
        a.byline = {"A Writer"};
        a.published_date = Date(2025, 1, 2);
        a.url = "https://x.au/" + id;
        c.articles.push_back(a);
    }
    return c;
}

}  // namespace

TEST_SUITE("survey") {
    TEST_CASE("instrument definition") {
        const auto s = InstrumentSpec::defaults();
        CHECK_NOTHROW(s.validate());
        const auto keys = s.rating_keys();
        REQUIRE(keys.size() == 5);
        CHECK(keys[0] == kPersonalInterest);
        CHECK(keys[1] == kPublicImportance);
        CHECK(core_only().rating_keys().size() == 2);
        auto bad = s;
        bad.battery.clear();
        CHECK_THROWS_AS(bad.validate(), Error);
        const nlohmann::json j = s;
        const auto back = j.get<InstrumentSpec>();
        CHECK(back.rating_keys() == keys);
        CHECK(back.battery.size() == s.battery.size());
    }

    TEST_CASE("rescale is an exact bijection onto quarter steps") {
        const auto s = InstrumentSpec::defaults();
        const double expect[] = {0.0, 0.25, 0.5, 0.75, 1.0};
        for (int x = 1; x <= 5; ++x) CHECK(rescale(x, s) == expect[x - 1]);
    }

    TEST_CASE("check_scores field reasons") {
        const auto s = core_only();
        CHECK(check_scores({{kPersonalInterest, 3}, {kPublicImportance, 4}}, s.rating_keys(), s).empty());
        const auto p = check_scores({{kPersonalInterest, 0}, {"extra", 2}}, s.rating_keys(), s);
        CHECK(std::count(p.begin(), p.end(), std::make_pair(std::string("personal_interest"), std::string("out_of_range"))) == 1);
        CHECK(std::count(p.begin(), p.end(), std::make_pair(std::string("extra"), std::string("unknown_item"))) == 1);
        CHECK(std::count(p.begin(), p.end(), std::make_pair(std::string("public_importance"), std::string("missing_item"))) == 1);
    }

    TEST_CASE("export shape") {
        AssignmentPlan plan;
        plan.m = 3;
        plan.respondent_ids = {"R0001", "R0002"};
        plan.lists = {{"R0001", {"a", "b", "c"}}, {"R0002", {"d", "e", "f"}}};
        SampleSet sample;
        sample.per_cluster = {{"a", "b", "c", "d", "e", "f"}};
        sample.n = 6;
        const auto doc = export_instrument(sample, plan, core_only(), corpus_of({"a", "b", "c", "d", "e", "f"}));
        REQUIRE(doc.at("respondents").size() == 2);
        for (const auto& block : doc.at("respondents")) CHECK(block.at("articles").size() == 3);
        CHECK(doc.at("items").size() == 2);
        CHECK(doc.at("respondents")[0].at("articles")[0].at("headline") == "Headline a");

        sample.per_cluster = {{"a", "b"}};
        CHECK_THROWS_WITH_AS(export_instrument(sample, plan, core_only(), corpus_of({"a"})),
                             doctest::Contains("plan_sample_mismatch"), Error);
    }

    TEST_CASE("export then fully filled ingest yields every response") {
        AssignmentPlan plan;
        plan.m = 2;
        plan.respondent_ids = {"R0001", "R0002", "R0003"};
        plan.lists = {{"R0001", {"a", "b"}}, {"R0002", {"c", "a"}}, {"R0003", {"b", "c"}}};
        SampleSet sample;
        sample.per_cluster = {{"a", "b", "c"}};
        const auto spec = InstrumentSpec::defaults();
        const auto doc = export_instrument(sample, plan, spec, corpus_of({"a", "b", "c"}));
        std::vector<RatingResponse> filled;
        for (const auto& block : doc.at("respondents")) {
            for (const auto& card : block.at("articles")) {
                RatingResponse r{block.at("respondent_id"), card.at("article_id"), {}, "2025-02-01T10:00:00Z"};
                for (const auto& item : doc.at("items")) r.scores[item.at("key")] = 4;
                filled.push_back(r);
            }
        }
        std::ostringstream out;
        write_responses_csv(out, filled, spec.rating_keys());
        std::istringstream in(out.str());
        const auto ing = ingest_responses(read_response_rows(in), plan, spec);
        CHECK(ing.accepted.size() == 6);
        CHECK(ing.rejects.empty());
    }

    TEST_CASE("ingest rejects and duplicates") {
        const auto plan = tiny_plan();
        const auto spec = core_only();
        auto check_reason = [&](std::vector<ResponseRow> rows, const std::string& reason) {
            const auto r = ingest_responses(rows, plan, spec);
            REQUIRE(r.rejects.size() == 1);
            CHECK(r.rejects[0].reason == reason);
            CHECK(r.accepted.empty());
        };
        check_reason(rows_for("R0001", "a1", 3, 6, "2025-01-01T00:00:00Z"), "out_of_range");
        check_reason(rows_for("R9999", "a1", 3, 3, "2025-01-01T00:00:00Z"), "unknown_respondent");
        check_reason(rows_for("R0001", "zz", 3, 3, "2025-01-01T00:00:00Z"), "unknown_article");
        check_reason(rows_for("R0001", "a3", 3, 3, "2025-01-01T00:00:00Z"), "not_in_plan");
        check_reason(rows_for("R0001", "a1", 3, 3, "whenever"), "bad_timestamp");
        auto partial = rows_for("R0001", "a1", 3, 3, "2025-01-01T00:00:00Z");
        partial.pop_back();
        check_reason(partial, "incomplete");
        auto bad_score = rows_for("R0001", "a1", 3, 3, "2025-01-01T00:00:00Z");
        bad_score[0].score = "three";
        check_reason(bad_score, "bad_score");

        auto rows = rows_for("R0001", "a1", 2, 5, "2025-01-02T00:00:00Z", 1);
        const auto early = rows_for("R0001", "a1", 4, 1, "2025-01-01T00:00:00Z", 3);
        rows.insert(rows.end(), early.begin(), early.end());
        const auto r = ingest_responses(rows, plan, spec);
        REQUIRE(r.accepted.size() == 1);
        CHECK(r.n_duplicates == 1);
        CHECK(r.accepted[0].scores.at(kPublicImportance) == 1);
        CHECK(r.accepted[0].submitted_at == "2025-01-01T00:00:00Z");

        const auto ok = ingest_responses(rows_for("R0002", "a3", 2, 4, "2025-01-01T00:00:00Z"), plan, spec);
        REQUIRE(ok.accepted.size() == 1);
        CHECK(ok.accepted[0] == RatingResponse{"R0002", "a3", {{kPersonalInterest, 2}, {kPublicImportance, 4}},
                                               "2025-01-01T00:00:00Z"});
    }

    TEST_CASE("aggregate examples") {
        const auto spec = core_only();
        const auto agg = aggregate_labels({resp("a", 4, "R1"), resp("a", 5, "R2"), resp("a", 3, "R3")}, 3, spec);
        REQUIRE(agg.labels.size() == 1);
        CHECK(agg.labels[0].public_value == 0.75);
        CHECK(agg.labels[0].n_ratings == 3);
        const auto few = aggregate_labels({resp("a", 4, "R1"), resp("a", 5, "R2")}, 3, spec);
        CHECK(few.labels.empty());
        CHECK(few.n_omitted == 1);
        const auto ones = aggregate_labels({resp("a", 1, "R1"), resp("a", 1, "R2"), resp("a", 1, "R3")}, 3, spec);
        CHECK(ones.labels[0].public_value == 0.0);
        CHECK(ones.labels[0].rating_variance == 0.0);
        CHECK_THROWS_AS(aggregate_labels({}, 0, spec), Error);
    }

    TEST_CASE("property: aggregation permutation invariant and r_min respected") {
        const auto spec = InstrumentSpec::defaults();
        Rng rng(31);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<RatingResponse> rs;
            const auto n = 5 + rng.below(60);
            for (std::uint64_t i = 0; i < n; ++i) {
                RatingResponse r{"R" + std::to_string(i), "a" + std::to_string(rng.below(8)), {}, "2025-01-01T00:00:00Z"};
                for (const auto& k : spec.rating_keys()) r.scores[k] = 1 + static_cast<int>(rng.below(5));
                rs.push_back(r);
            }
            const std::size_t r_min = 1 + rng.below(5);
            const auto a = aggregate_labels(rs, r_min, spec);
            rng.shuffle(rs);
            const auto b = aggregate_labels(rs, r_min, spec);
            std::ostringstream sa, sb;
            write_labels_csv(sa, a.labels, spec);
            write_labels_csv(sb, b.labels, spec);
            CHECK(sa.str() == sb.str());
            for (const auto& l : a.labels) {
                CHECK(l.n_ratings >= r_min);
                CHECK(l.public_value >= 0.0);
                CHECK(l.public_value <= 1.0);
            }
        }
    }

    TEST_CASE("labels csv round-trip") {
        const auto spec = InstrumentSpec::defaults();
        std::vector<RatingResponse> rs;
        for (int i = 0; i < 3; ++i) {
            RatingResponse r{"R" + std::to_string(i), "a", {}, "2025-01-01T00:00:00Z"};
            for (const auto& k : spec.rating_keys()) r.scores[k] = 2 + i;
            rs.push_back(r);
        }
        const auto labels = aggregate_labels(rs, 1, spec).labels;
        std::ostringstream out;
        write_labels_csv(out, labels, spec);
        std::istringstream in(out.str());
        const auto back = read_labels_csv(in);
        REQUIRE(back.size() == 1);
        CHECK(back[0].public_value == labels[0].public_value);
        CHECK(back[0].sub_dimensions == labels[0].sub_dimensions);
        CHECK(back[0].rating_variance == labels[0].rating_variance);
    }

    TEST_CASE("civic profiles") {
        auto plain = InstrumentSpec::defaults();
        for (auto& i : plain.battery) i.reverse_coded = false;
        auto reversed = plain;
        for (auto& i : reversed.battery) i.reverse_coded = true;
        BatteryResponse fives{"R1", {}, ""};
        for (const auto& i : plain.battery) fives.scores[i.key] = 5;
        CHECK(score_civic_profile(fives, plain).civic_score == 5.0);
        CHECK(score_civic_profile(fives, plain).profile == Profile::engaged);
        CHECK(score_civic_profile(fives, reversed).civic_score == 1.0);
        CHECK(score_civic_profile(fives, reversed).profile == Profile::disengaged);

        BatteryResponse mixed{"R2", {}, ""};
        const int vals[] = {4, 4, 3, 3, 2, 5};
        for (std::size_t i = 0; i < plain.battery.size(); ++i) mixed.scores[plain.battery[i].key] = vals[i];
        const auto p = score_civic_profile(mixed, plain);
        CHECK(p.civic_score == 3.5);
        CHECK(p.profile == Profile::issue_specific);

        mixed.scores.erase(plain.battery[0].key);
        CHECK_THROWS_WITH_AS(score_civic_profile(mixed, plain), doctest::Contains("incomplete_battery"), Error);
    }

    TEST_CASE("profile is a monotone step function") {
        CHECK(profile_for_score(2.33) == Profile::disengaged);
        CHECK(profile_for_score(2.3300001) == Profile::issue_specific);
        CHECK(profile_for_score(3.67) == Profile::issue_specific);
        CHECK(profile_for_score(3.6700001) == Profile::engaged);
        Profile prev = profile_for_score(1.0);
        for (double x = 1.0; x <= 5.0; x += 0.01) {
            const Profile p = profile_for_score(x);
            CHECK(static_cast<int>(p) >= static_cast<int>(prev));
            prev = p;
        }
        CHECK(profile_from_name("engaged") == Profile::engaged);
        CHECK_FALSE(profile_from_name("bored"));
    }

    TEST_CASE("battery and profile csv round-trip") {
        std::vector<BatteryResponse> bs{{"R1", {{"x", 3}, {"y", 4}}, "2025-01-01T00:00:00Z"}};
        std::ostringstream out;
        write_battery_csv(out, bs);
        std::istringstream in(out.str());
        const auto back = read_battery_csv(in);
        REQUIRE(back.size() == 1);
        CHECK(back[0].scores == bs[0].scores);

        std::vector<CivicProfile> ps{{"R1", 3.5, Profile::issue_specific}};
        std::ostringstream pout;
        write_profiles_csv(pout, ps);
        std::istringstream pin(pout.str());
        const auto pb = read_profiles_csv(pin);
        REQUIRE(pb.size() == 1);
        CHECK(pb[0].profile == Profile::issue_specific);
        CHECK(pb[0].civic_score == 3.5);
    }
}
