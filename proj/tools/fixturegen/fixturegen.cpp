#include "fixturegen.hpp"

#include "civicrank/enrich.hpp"
#include "civicrank/error.hpp"
#include "civicrank/rng.hpp"
#include "civicrank/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace civicrank::fixturegen {

namespace {

const std::vector<std::string> kFirstNames = {
    "Marla", "Dev", "Oksana", "Tomas", "Priya", "Keiran", "Lucia", "Bram", "Yuki", "Ngaire",
    "Hamish", "Zara", "Imogen", "Rafael", "Talia", "Corin", "Anouk", "Felix", "Maeve", "Jarrah"};
const std::vector<std::string> kLastNames = {
    "Jennings", "Okafor", "Lindqvist", "Barrow", "Castellano", "Whitlam", "Ferreira", "Nakamura",
    "Holloway", "Petrakis", "Quinlan", "Abernethy", "Mbeki", "Sorensen", "Tran", "Delacroix"};
const std::vector<std::string> kFillers = {
    "council", "budget",  "plan",   "water",  "housing", "school", "report", "road",    "hospital", "tax",
    "market",  "rail",    "vote",   "policy", "court",   "farm",   "energy", "climate", "health",   "jobs",
    "bridge",  "library", "harbour", "museum", "transport", "grant", "inquiry", "reform", "festival", "bushfire"};
const std::vector<std::string> kSecondPerson = {"you", "your"};
const std::vector<std::string> kDemonstratives = {"this", "these", "here's"};
const std::vector<std::string> kQuestionStarts = {"Why", "How", "What", "Who"};
const std::vector<std::string> kSuperlatives = {"best", "worst", "biggest", "ultimate"};
const std::vector<std::string> kCuriosity = {"you won't believe", "what happened next", "the truth about"};
const std::vector<std::string> kNumberWords = {"three", "five", "seven", "ten"};
const std::vector<std::string> kSections = {"politics", "local", "business", "lifestyle", "sport"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[static_cast<std::size_t>(rng.below(v.size()))];
}

std::vector<std::string> lexicon_words(const fs::path& path) {
    std::vector<std::string> out;
    std::ifstream in(path);
    if (!in) throw io_error("unreadable_file", path.string());
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        out.push_back(line.substr(0, line.find('\t')));
    }
    return out;
}

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string join(const std::vector<std::string>& parts, const char* sep = " ") {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

json search_response(const std::vector<std::string>& titles) {
    json hits = json::array();
    std::int64_t pageid = 1000;
    for (const auto& t : titles) hits.push_back({{"ns", 0}, {"title", t}, {"pageid", pageid++}});
    return {{"batchcomplete", ""}, {"query", {{"searchinfo", {{"totalhits", hits.size()}}}, {"search", hits}}}};
}

json pageview_response(const std::string& title, Date start, const std::vector<std::int64_t>& views) {
    json items = json::array();
    const std::string article = fixture_key(title);
    for (std::size_t d = 0; d < views.size(); ++d) {
        items.push_back({{"project", "en.wikipedia"},
                         {"article", article},
                         {"granularity", "daily"},
                         {"timestamp", start.plus_days(static_cast<int>(d)).compact() + "00"},
                         {"access", "all-access"},
                         {"agent", "user"},
                         {"views", views[d]}});
    }
    return {{"items", items}};
}

}  // namespace

json default_config(const fs::path& resources_dir) {
    return {
        {"output_dir", "out"},
        {"source_label", "synthetic-fixture"},
        {"paths",
         {{"articles", "articles.jsonl"},
          {"resources_dir", resources_dir.string()},
          {"background_unigrams", "background_unigrams.tsv"},
          {"background_bigrams", "background_bigrams.tsv"},
          {"fixtures_dir", "fixtures"},
          {"candidates", "candidates.json"}}},
        {"enrich", {{"short_window_days", 7}, {"long_window_days", 365}, {"burst_factor", 3.0}, {"pmi_floor", -10.0}}},
        {"cluster", {{"k_min", 2}, {"k_max", 8}, {"seed", 11}}},
        {"sample", {{"n", 120}, {"m_min", 5}, {"seed", 12}}},
        {"plan", {{"n_respondents", 60}, {"m", 20}, {"seed", 13}}},
        {"survey", {{"r_min", 3}}},
        {"extrapolate",
         {{"method", "ridge"}, {"alpha", 1.0}, {"fit_intercept", true}, {"k", 5}, {"eps", 1e-6}, {"folds", 5},
          {"seed", 14}, {"per_profile", false}}},
        {"rerank", {{"profile", "engaged"}, {"k", 10}}},
        {"simulate",
         {{"seed", 15},
          {"intercept", 0.15},
          {"weights", {{"clickbait", 0.5}, {"sent_emotionality", 0.3}, {"burst01", 0.05}}},
          {"noise_p", 0.2}}},
        {"service", {{"host", "127.0.0.1"}, {"port", 8080}}},
        {"wiki", {{"offline", true}}},
    };
}

Summary generate(const fs::path& dir, const fs::path& resources_dir, const Options& opt) {
    if (opt.n_articles > kFirstNames.size() * kLastNames.size()) {
        throw validation_error("too_many_articles", "not enough distinct entity names");
    }
    const auto stopwords = StopwordSet::load(resources_dir / "stopwords.txt");
    const auto emotive = lexicon_words(resources_dir / "lexicon.tsv");
    Rng rng(opt.seed);

    fs::create_directories(dir / "fixtures" / "search");
    fs::create_directories(dir / "fixtures" / "pageviews");

    std::vector<std::pair<std::string, std::string>> names;
    for (const auto& f : kFirstNames) {
        for (const auto& l : kLastNames) names.emplace_back(f, l);
    }
    rng.shuffle(names);

    Summary sum;
    std::string articles;
    std::map<std::string, json> search;  // surface -> response
    std::vector<json> candidates;

    for (std::size_t i = 0; i < opt.n_articles; ++i) {
        const Date pub = opt.first_date.plus_days(static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.span_days))));
        const bool has_entity = rng.bernoulli(opt.entity_fraction);
        const std::string entity = names[i].first + " " + names[i].second;

        std::vector<std::string> body;
        const std::size_t n_fill = 2 + static_cast<std::size_t>(rng.below(3));
        for (std::size_t f = 0; f < n_fill; ++f) body.push_back(pick(kFillers, rng));
        const std::size_t n_emo = static_cast<std::size_t>(rng.below(3));
        for (std::size_t e = 0; e < n_emo; ++e) body.push_back(pick(emotive, rng));
        if (rng.bernoulli(0.3)) body.push_back(pick(kSecondPerson, rng));
        if (rng.bernoulli(0.25)) body.push_back(pick(kDemonstratives, rng));
        if (rng.bernoulli(0.25)) body.push_back(pick(kSuperlatives, rng));
        rng.shuffle(body);
        if (has_entity) {
            const auto at = static_cast<std::ptrdiff_t>(rng.below(body.size() + 1));
            body.insert(body.begin() + at, entity);
        }
        if (rng.bernoulli(0.15)) body.push_back(pick(kCuriosity, rng));

        std::vector<std::string> head;
        if (rng.bernoulli(0.2)) {
            head.push_back(pick(kQuestionStarts, rng));
        } else if (rng.bernoulli(0.3)) {
            head.push_back(rng.bernoulli(0.5) ? std::to_string(3 + rng.below(12)) : pick(kNumberWords, rng));
        }
        head.insert(head.end(), body.begin(), body.end());
        head[0] = capitalize(head[0]);
        std::string headline = join(head);
        if (rng.bernoulli(0.3)) headline += rng.bernoulli(0.5) ? "!" : "?";

        // One search fixture per capitalized run, resolving to the entity
        // when the run contains it.
        const auto tokens = tokenize(headline);
        for (const auto& [b, e] : capitalized_runs(tokens, stopwords)) {
            std::vector<std::string> run(tokens.begin() + static_cast<std::ptrdiff_t>(b),
                                         tokens.begin() + static_cast<std::ptrdiff_t>(e));
            const std::string surface = join(run);
            const bool hit = has_entity && surface.find(entity) != std::string::npos;
            search[surface] = search_response(hit ? std::vector<std::string>{entity} : std::vector<std::string>{});
        }

        if (has_entity) {
            const Date start = pub.plus_days(-400);
            const double base = std::exp(std::log(50.0) + rng.uniform() * (std::log(5000.0) - std::log(50.0)));
            const bool burst = rng.bernoulli(opt.burst_fraction);
            const double spike = 5.0 + 5.0 * rng.uniform();
            std::vector<std::int64_t> views;
            for (int d = 0; d <= 405; ++d) {
                double v = base * (0.9 + 0.2 * rng.uniform());
                const Date day = start.plus_days(d);
                if (burst && day >= pub.plus_days(-7) && day < pub) v *= spike;
                views.push_back(static_cast<std::int64_t>(std::llround(v)));
            }
            write_file_atomic(dir / "fixtures" / "pageviews" / (fixture_key(entity) + ".json"),
                              pageview_response(entity, start, views).dump());
            ++sum.n_pageview_fixtures;
            if (burst) ++sum.n_burst;
        }

        json a = {{"url", fmt::format("https://news.example.org/{}/story-{:04d}", pick(kSections, rng), i)},
                  {"headline", headline},
                  {"byline", rng.bernoulli(0.3) ? "Ada Reporter and Sam Writer" : "Ada Reporter"},
                  {"date", pub.iso()},
                  {"image_url", fmt::format("https://img.example.org/{:04d}.jpg", i)},
                  {"section", pick(kSections, rng)}};
        articles += a.dump() + "\n";
        candidates.push_back({{"url", a["url"]}, {"relevance", std::round(rng.uniform() * 1000.0) / 1000.0}});
        ++sum.n_articles;
    }

    for (const auto& [surface, resp] : search) {
        write_file_atomic(dir / "fixtures" / "search" / (fixture_key(surface) + ".json"), resp.dump());
    }
    sum.n_search_fixtures = search.size();
    write_file_atomic(dir / "articles.jsonl", articles);

    // Background corpus: random filler sentences plus common emotive bigrams.
    std::vector<std::vector<std::string>> sentences;
    for (std::size_t s = 0; s < opt.background_sentences; ++s) {
        std::vector<std::string> words;
        const std::size_t len = 4 + static_cast<std::size_t>(rng.below(6));
        for (std::size_t w = 0; w < len; ++w) {
            words.push_back(rng.bernoulli(0.8) ? pick(kFillers, rng) : pick(emotive, rng));
        }
        sentences.push_back(content_words(join(words), stopwords));
    }
    BackgroundModel::count(sentences).save(dir / "background_unigrams.tsv", dir / "background_bigrams.tsv");

    // Rerank candidates keyed by article id.
    json cand = json::array();
    for (const auto& c : candidates) {
        cand.push_back({{"article_id", article_id_for_url(c.at("url").get<std::string>())}, {"relevance", c.at("relevance")}});
        if (cand.size() == 25) break;
    }
    write_file_atomic(dir / "candidates.json", cand.dump(2) + "\n");
    write_file_atomic(dir / "config.json", default_config(fs::absolute(resources_dir)).dump(2) + "\n");
    return sum;
}

}  // namespace civicrank::fixturegen
