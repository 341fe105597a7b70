#include "civicrank/survey.hpp"

#include "civicrank/date.hpp"
#include "civicrank/error.hpp"
#include "civicrank/tables.hpp"
#include "civicrank/text.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace civicrank {

namespace {

std::optional<int> parse_int(std::string_view s) {
    const std::string t = trim(s);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Instrument

std::vector<InstrumentItem> InstrumentSpec::rating_items() const {
    std::vector<InstrumentItem> items{
        {kPersonalInterest, "How interesting is this story to you personally?", false},
        {kPublicImportance, "How important is it that the public knows about this story?", false},
    };
    items.insert(items.end(), sub_dimensions.begin(), sub_dimensions.end());
    return items;
}

std::vector<std::string> InstrumentSpec::rating_keys() const {
    std::vector<std::string> keys;
    for (const auto& item : rating_items()) keys.push_back(item.key);
    return keys;
}

std::vector<std::string> InstrumentSpec::sub_dimension_keys() const {
    std::vector<std::string> keys;
    for (const auto& item : sub_dimensions) keys.push_back(item.key);
    return keys;
}

void InstrumentSpec::validate() const {
    if (scale_min >= scale_max) throw validation_error("bad_scale");
    if (battery.empty()) throw validation_error("empty_battery", "the civic battery needs at least one item");
    std::set<std::string> keys;
    for (const auto& item : rating_items()) {
        if (item.key.empty() || !keys.insert(item.key).second) throw validation_error("duplicate_item_key", item.key);
    }
    for (const auto& item : battery) {
        if (item.key.empty() || !keys.insert(item.key).second) throw validation_error("duplicate_item_key", item.key);
    }
}

InstrumentSpec InstrumentSpec::defaults() {
    InstrumentSpec s;
    s.preamble =
        "You will see a series of recent news headlines. For each one, tell us how interesting it is to you "
        "personally, and separately how important it is for the public to know about, whatever your own "
        "interest. Public interest news helps people take part in civic life: it informs the decisions people "
        "make as citizens, it holds people and institutions with power to account, and it matters to the "
        "communities people live in. There are no right or wrong answers.";
    s.sub_dimensions = {
        {"informs_civic_decisions", "This story helps people make decisions as citizens", false},
        {"holds_power_to_account", "This story holds people or institutions with power to account", false},
        {"community_relevance", "This story matters to communities in Australia", false},
    };
    s.battery = {
        {"follows_politics", "I follow news about politics and government closely", false},
        {"informed_voter", "I make an effort to be informed before I vote", false},
        {"discusses_issues", "I often discuss current affairs with family or friends", false},
        {"civic_action", "In the past year I have contacted a representative, signed a petition or volunteered",
         false},
        {"news_irrelevant", "Most news has little to do with my life", true},
        {"avoids_news", "I often avoid the news", true},
    };
    s.demographics = {
        {"age_band", {"18-24", "25-34", "35-44", "45-54", "55-64", "65+"}},
        {"gender", {"woman", "man", "non-binary", "prefer not to say"}},
        {"region", {"NSW", "VIC", "QLD", "WA", "SA", "TAS", "ACT", "NT"}},
        {"education", {"secondary", "vocational", "bachelor", "postgraduate"}},
    };
    return s;
}

void to_json(nlohmann::json& j, const InstrumentSpec& s) {
    auto items = [](const std::vector<InstrumentItem>& v, bool with_reverse) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& i : v) {
            nlohmann::json o = {{"key", i.key}, {"label", i.label}};
            if (with_reverse) o["reverse_coded"] = i.reverse_coded;
            arr.push_back(o);
        }
        return arr;
    };
    nlohmann::json demo = nlohmann::json::array();
    for (const auto& d : s.demographics) demo.push_back({{"key", d.key}, {"options", d.options}});
    j = {{"preamble", s.preamble},
         {"scale", {{"min", s.scale_min}, {"max", s.scale_max}}},
         {"sub_dimensions", items(s.sub_dimensions, false)},
         {"battery", items(s.battery, true)},
         {"demographics", demo}};
}

void from_json(const nlohmann::json& j, InstrumentSpec& s) {
    s = InstrumentSpec::defaults();
    if (j.contains("preamble")) s.preamble = j.at("preamble").get<std::string>();
    if (j.contains("scale")) {
        s.scale_min = j.at("scale").value("min", 1);
        s.scale_max = j.at("scale").value("max", 5);
    }
    auto items = [](const nlohmann::json& arr) {
        std::vector<InstrumentItem> out;
        for (const auto& o : arr) {
            out.push_back({o.at("key").get<std::string>(), o.value("label", ""), o.value("reverse_coded", false)});
        }
        return out;
    };
    if (j.contains("sub_dimensions")) s.sub_dimensions = items(j.at("sub_dimensions"));
    if (j.contains("battery")) s.battery = items(j.at("battery"));
    if (j.contains("demographics")) {
        s.demographics.clear();
        for (const auto& d : j.at("demographics")) {
            s.demographics.push_back({d.at("key").get<std::string>(), d.value("options", std::vector<std::string>{})});
        }
    }
    s.validate();
}

void to_json(nlohmann::json& j, const RatingResponse& r) {
    j = {{"respondent_id", r.respondent_id},
         {"article_id", r.article_id},
         {"scores", r.scores},
         {"submitted_at", r.submitted_at}};
}

void from_json(const nlohmann::json& j, RatingResponse& r) {
    r.respondent_id = j.at("respondent_id").get<std::string>();
    r.article_id = j.at("article_id").get<std::string>();
    r.scores = j.at("scores").get<std::map<std::string, int>>();
    r.submitted_at = j.value("submitted_at", "");
}

std::vector<std::pair<std::string, std::string>> check_scores(const std::map<std::string, int>& scores,
                                                              const std::vector<std::string>& keys,
                                                              const InstrumentSpec& spec) {
    std::vector<std::pair<std::string, std::string>> problems;
    const std::unordered_set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : scores) {
        if (known.count(key) == 0) {
            problems.emplace_back(key, "unknown_item");
        } else if (value < spec.scale_min || value > spec.scale_max) {
            problems.emplace_back(key, "out_of_range");
        }
    }
    for (const auto& key : keys) {
        if (scores.count(key) == 0) problems.emplace_back(key, "missing_item");
    }
    return problems;
}

nlohmann::json article_card(const Article& a) {
    return {{"article_id", a.id},
            {"headline", a.headline},
            {"byline", a.byline},
            {"published_date", a.published_date.iso()},
            {"image_url", a.image_url ? nlohmann::json(*a.image_url) : nlohmann::json(nullptr)}};
}

nlohmann::json export_instrument(const SampleSet& sample, const AssignmentPlan& plan, const InstrumentSpec& spec,
                                 const Corpus& corpus) {
    const auto sampled = sample.all_ids();
    const std::set<std::string> sample_ids(sampled.begin(), sampled.end());
    std::set<std::string> planned;
    for (const auto& [r, list] : plan.lists) planned.insert(list.begin(), list.end());
    if (planned != sample_ids) {
        throw validation_error("plan_sample_mismatch", "the plan does not cover exactly the sampled articles");
    }

    std::unordered_map<std::string, const Article*> by_id;
    for (const auto& a : corpus.articles) by_id.emplace(a.id, &a);

    nlohmann::json items = nlohmann::json::array();
    for (const auto& i : spec.rating_items()) {
        items.push_back({{"key", i.key}, {"label", i.label}, {"min", spec.scale_min}, {"max", spec.scale_max}});
    }
    nlohmann::json respondents = nlohmann::json::array();
    for (const auto& rid : plan.respondent_ids) {
        nlohmann::json cards = nlohmann::json::array();
        for (const auto& aid : plan.lists.at(rid)) {
            const auto it = by_id.find(aid);
            if (it == by_id.end()) throw validation_error("plan_sample_mismatch", "article not in corpus: " + aid);
            cards.push_back(article_card(*it->second));
        }
        respondents.push_back({{"respondent_id", rid}, {"articles", cards}});
    }
    nlohmann::json spec_json = spec;
    return {{"preamble", spec.preamble},
            {"items", items},
            {"battery", spec_json["battery"]},
            {"demographics", spec_json["demographics"]},
            {"plan_seed", plan.seed},
            {"sample_seed", sample.seed},
            {"respondents", respondents}};
}

std::vector<ResponseRow> read_response_rows(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) return {};
    const auto& header = rows.front();
    const auto c_resp = column_index(header, "respondent_id");
    const auto c_art = column_index(header, "article_id");
    const auto c_key = column_index(header, "item_key");
    const auto c_score = column_index(header, "score");
    const auto c_time = column_index(header, "submitted_at");
    std::vector<ResponseRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        ResponseRow row;
        row.line = i + 1;
        auto get = [&r](std::size_t c) { return c < r.size() ? trim(r[c]) : std::string(); };
        row.respondent_id = get(c_resp);
        row.article_id = get(c_art);
        row.item_key = get(c_key);
        row.score = get(c_score);
        row.submitted_at = get(c_time);
        out.push_back(std::move(row));
    }
    return out;
}

void write_responses_csv(std::ostream& out, const std::vector<RatingResponse>& responses,
                         const std::vector<std::string>& keys) {
    write_csv_row(out, {"respondent_id", "article_id", "item_key", "score", "submitted_at"});
    for (const auto& r : responses) {
        for (const auto& key : keys) {
            const auto it = r.scores.find(key);
            if (it == r.scores.end()) continue;
            write_csv_row(out, {r.respondent_id, r.article_id, key, std::to_string(it->second), r.submitted_at});
        }
    }
}

IngestedResponses ingest_responses(const std::vector<ResponseRow>& rows, const AssignmentPlan& plan,
                                   const InstrumentSpec& spec) {
    const auto keys = spec.rating_keys();
    std::unordered_set<std::string> planned_articles;
    for (const auto& [r, list] : plan.lists) planned_articles.insert(list.begin(), list.end());

    // Group rows into submissions, keeping first-seen order.
    std::vector<std::vector<const ResponseRow*>> groups;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> group_of;
    for (const auto& row : rows) {
        const auto key = std::make_tuple(row.respondent_id, row.article_id, row.submitted_at);
        auto [it, inserted] = group_of.emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(&row);
    }

    IngestedResponses result;
    struct Candidate {
        RatingResponse response;
        std::chrono::sys_time<std::chrono::milliseconds> at;
    };
    std::map<std::pair<std::string, std::string>, Candidate> best;

    for (const auto& group : groups) {
        const ResponseRow& first = *group.front();
        auto reject = [&](std::string reason) {
            result.rejects.push_back({first.line, first.respondent_id, first.article_id, std::move(reason)});
        };
        if (plan.lists.count(first.respondent_id) == 0) {
            reject("unknown_respondent");
            continue;
        }
        if (planned_articles.count(first.article_id) == 0) {
            reject("unknown_article");
            continue;
        }
        if (!plan.contains(first.respondent_id, first.article_id)) {
            reject("not_in_plan");
            continue;
        }
        const auto at = parse_timestamp(first.submitted_at);
        if (!at) {
            reject("bad_timestamp");
            continue;
        }

        RatingResponse resp{first.respondent_id, first.article_id, {}, first.submitted_at};
        std::string problem;
        for (const auto* row : group) {
            if (std::find(keys.begin(), keys.end(), row->item_key) == keys.end()) {
                problem = "unknown_item";
                break;
            }
            const auto v = parse_int(row->score);
            if (!v) {
                problem = "bad_score";
                break;
            }
            if (*v < spec.scale_min || *v > spec.scale_max) {
                problem = "out_of_range";
                break;
            }
            if (!resp.scores.emplace(row->item_key, *v).second) {
                problem = "duplicate_item";
                break;
            }
        }
        if (problem.empty() && resp.scores.size() != keys.size()) problem = "incomplete";
        if (!problem.empty()) {
            reject(std::move(problem));
            continue;
        }

        const auto pair = std::make_pair(resp.respondent_id, resp.article_id);
        auto it = best.find(pair);
        if (it == best.end()) {
            best.emplace(pair, Candidate{std::move(resp), *at});
        } else {
            ++result.n_duplicates;
            if (*at < it->second.at) it->second = Candidate{std::move(resp), *at};
        }
    }
    for (auto& [pair, c] : best) result.accepted.push_back(std::move(c.response));
    return result;
}

double rescale(int score, const InstrumentSpec& spec) {
    return static_cast<double>(score - spec.scale_min) / static_cast<double>(spec.scale_max - spec.scale_min);
}

AggregateResult aggregate_labels(const std::vector<RatingResponse>& responses, std::size_t r_min,
                                 const InstrumentSpec& spec) {
    if (r_min < 1) throw validation_error("bad_r_min", "r_min must be >= 1");
    const auto sub_keys = spec.sub_dimension_keys();
    struct Sums {
        std::size_t n = 0;
        std::map<std::string, std::int64_t> sum;
        std::int64_t public_sq = 0;
    };
    // Integer sums keep every label independent of response order.
    std::map<std::string, Sums> by_article;
    for (const auto& r : responses) {
        auto& s = by_article[r.article_id];
        ++s.n;
        for (const auto& [key, v] : r.scores) s.sum[key] += v;
        const auto it = r.scores.find(kPublicImportance);
        if (it == r.scores.end()) throw validation_error("incomplete", "response lacks public_importance");
        s.public_sq += static_cast<std::int64_t>(it->second) * it->second;
    }

    const double range = static_cast<double>(spec.scale_max - spec.scale_min);
    auto mean_rescaled = [&](const Sums& s, const std::string& key) {
        const auto it = s.sum.find(key);
        const double total = it == s.sum.end() ? 0.0 : static_cast<double>(it->second);
        return (total / static_cast<double>(s.n) - spec.scale_min) / range;
    };

    AggregateResult result;
    for (const auto& [article, s] : by_article) {
        if (s.n < r_min) {
            ++result.n_omitted;
            continue;
        }
        ArticleLabel label;
        label.article_id = article;
        label.n_ratings = s.n;
        label.public_value = mean_rescaled(s, kPublicImportance);
        label.personal_interest = mean_rescaled(s, kPersonalInterest);
        for (const auto& key : sub_keys) label.sub_dimensions[key] = mean_rescaled(s, key);
        const auto n = static_cast<std::int64_t>(s.n);
        const std::int64_t sum = s.sum.at(kPublicImportance);
        const std::int64_t centered = n * s.public_sq - sum * sum;  // n^2 * variance on the raw scale
        label.rating_variance = static_cast<double>(centered) / (static_cast<double>(n * n) * range * range);
        result.labels.push_back(std::move(label));
    }
    return result;
}

void write_labels_csv(std::ostream& out, const std::vector<ArticleLabel>& labels, const InstrumentSpec& spec) {
    std::vector<std::string> header{"article_id", "public_value", "personal_interest"};
    const auto sub_keys = spec.sub_dimension_keys();
    header.insert(header.end(), sub_keys.begin(), sub_keys.end());
    header.emplace_back("n_ratings");
    header.emplace_back("rating_variance");
    write_csv_row(out, header);
    for (const auto& l : labels) {
        std::vector<std::string> row{l.article_id, format_double(l.public_value), format_double(l.personal_interest)};
        for (const auto& key : sub_keys) row.push_back(format_double(l.sub_dimensions.at(key)));
        row.push_back(std::to_string(l.n_ratings));
        row.push_back(format_double(l.rating_variance));
        write_csv_row(out, row);
    }
}

std::vector<ArticleLabel> read_labels_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw validation_error("bad_labels", "missing header");
    const auto& h = rows.front();
    const auto c_id = column_index(h, "article_id");
    const auto c_pv = column_index(h, "public_value");
    const auto c_pi = column_index(h, "personal_interest");
    const auto c_n = column_index(h, "n_ratings");
    const auto c_var = column_index(h, "rating_variance");
    std::vector<ArticleLabel> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != h.size()) throw validation_error("bad_labels", "row " + std::to_string(r));
        ArticleLabel l;
        l.article_id = row[c_id];
        l.public_value = parse_double(row[c_pv]);
        l.personal_interest = parse_double(row[c_pi]);
        for (std::size_t c = c_pi + 1; c < c_n; ++c) l.sub_dimensions[h[c]] = parse_double(row[c]);
        l.n_ratings = static_cast<std::size_t>(parse_double(row[c_n]));
        l.rating_variance = parse_double(row[c_var]);
        out.push_back(std::move(l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Civic profiles

std::string_view profile_name(Profile p) {
    switch (p) {
        case Profile::disengaged: return "disengaged";
        case Profile::issue_specific: return "issue_specific";
        case Profile::engaged: return "engaged";
    }
    return "disengaged";
}

std::optional<Profile> profile_from_name(std::string_view name) {
    for (auto p : {Profile::disengaged, Profile::issue_specific, Profile::engaged}) {
        if (profile_name(p) == name) return p;
    }
    return std::nullopt;
}

Profile profile_for_score(double civic_score) {
    if (civic_score <= kDisengagedCutpoint) return Profile::disengaged;
    if (civic_score <= kIssueSpecificCutpoint) return Profile::issue_specific;
    return Profile::engaged;
}

CivicProfile score_civic_profile(const BatteryResponse& battery, const InstrumentSpec& spec) {
    if (spec.battery.empty()) throw validation_error("empty_battery");
    std::int64_t total = 0;
    for (const auto& item : spec.battery) {
        const auto it = battery.scores.find(item.key);
        if (it == battery.scores.end()) throw validation_error("incomplete_battery", item.key);
        int v = it->second;
        if (v < spec.scale_min || v > spec.scale_max) throw validation_error("out_of_range", item.key);
        if (item.reverse_coded) v = spec.scale_min + spec.scale_max - v;
        total += v;
    }
    CivicProfile p;
    p.respondent_id = battery.respondent_id;
    p.civic_score = static_cast<double>(total) / static_cast<double>(spec.battery.size());
    p.profile = profile_for_score(p.civic_score);
    return p;
}

std::vector<BatteryResponse> read_battery_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) return {};
    const auto& h = rows.front();
    const auto c_resp = column_index(h, "respondent_id");
    const auto c_key = column_index(h, "item_key");
    const auto c_score = column_index(h, "score");
    const auto c_time = column_index(h, "submitted_at");
    std::map<std::string, BatteryResponse> by_resp;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != h.size()) throw validation_error("bad_battery", "row " + std::to_string(r));
        const auto v = parse_int(row[c_score]);
        if (!v) throw validation_error("bad_score", "battery row " + std::to_string(r));
        auto& b = by_resp[row[c_resp]];
        b.respondent_id = row[c_resp];
        if (b.submitted_at.empty()) b.submitted_at = row[c_time];
        b.scores.emplace(row[c_key], *v);  // first answer per item wins
    }
    std::vector<BatteryResponse> out;
    for (auto& [id, b] : by_resp) out.push_back(std::move(b));
    return out;
}

void write_battery_csv(std::ostream& out, const std::vector<BatteryResponse>& batteries) {
    write_csv_row(out, {"respondent_id", "item_key", "score", "submitted_at"});
    for (const auto& b : batteries) {
        for (const auto& [key, v] : b.scores) write_csv_row(out, {b.respondent_id, key, std::to_string(v), b.submitted_at});
    }
}

void write_profiles_csv(std::ostream& out, const std::vector<CivicProfile>& profiles) {
    write_csv_row(out, {"respondent_id", "civic_score", "profile"});
    for (const auto& p : profiles) {
        write_csv_row(out, {p.respondent_id, format_double(p.civic_score), std::string(profile_name(p.profile))});
    }
}

std::vector<CivicProfile> read_profiles_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) return {};
    const auto& h = rows.front();
    const auto c_resp = column_index(h, "respondent_id");
    const auto c_score = column_index(h, "civic_score");
    const auto c_prof = column_index(h, "profile");
    std::vector<CivicProfile> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto p = profile_from_name(row.at(c_prof));
        if (!p) throw validation_error("bad_profile", row.at(c_prof));
        out.push_back({row.at(c_resp), parse_double(row.at(c_score)), *p});
    }
    return out;
}

}  // namespace civicrank
