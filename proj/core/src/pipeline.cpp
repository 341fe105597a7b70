#include "civicrank/pipeline.hpp"

#include "civicrank/cluster.hpp"
#include "civicrank/corpus.hpp"
#include "civicrank/date.hpp"
#include "civicrank/error.hpp"
#include "civicrank/rating_server.hpp"
#include "civicrank/rating_store.hpp"
#include "civicrank/rerank.hpp"
#include "civicrank/rng.hpp"
#include "civicrank/survey.hpp"
#include "civicrank/tables.hpp"
#include "civicrank/text.hpp"
#include "civicrank/wikiclient.hpp"

#include <fmt/format.h>

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#ifndef CIVICRANK_DATA_DIR_DEFAULT
#define CIVICRANK_DATA_DIR_DEFAULT "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace civicrank {

fs::path default_resources_dir() {
    if (const char* env = std::getenv("CIVICRANK_DATA_DIR"); env && *env) return env;
    return CIVICRANK_DATA_DIR_DEFAULT;
}

fs::path PipelineConfig::out_path(std::string_view name) const { return output_dir / std::string(name); }

namespace {

fs::path resolve(const fs::path& base, const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    const auto s = j.at(key).get<std::string>();
    if (s.empty()) return {};
    const fs::path p(s);
    return p.is_absolute() ? p : base / p;
}

template <typename T>
T required(const json& block, const char* block_name, const char* key) {
    if (!block.contains(key)) throw validation_error("bad_config", fmt::format("{}.{} is required", block_name, key));
    return block.at(key).get<T>();
}

const json& block(const json& j, const char* name) {
    static const json empty = json::object();
    return j.contains(name) ? j.at(name) : empty;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base) {
    try {
        PipelineConfig c;
        c.output_dir = resolve(base, j, "output_dir");
        if (c.output_dir.empty()) c.output_dir = base / "out";
        c.source_label = j.value("source_label", std::string("unknown"));
        c.ingested_at = j.value("ingested_at", std::string());

        const auto& p = block(j, "paths");
        c.articles = resolve(base, p, "articles");
        c.resources_dir = resolve(base, p, "resources_dir");
        if (c.resources_dir.empty()) c.resources_dir = default_resources_dir();
        c.background_unigrams = resolve(base, p, "background_unigrams");
        c.background_bigrams = resolve(base, p, "background_bigrams");
        c.instrument = resolve(base, p, "instrument");
        c.profiles = resolve(base, p, "profiles");
        if (c.profiles.empty()) c.profiles = c.resources_dir / "profiles.json";
        c.responses = resolve(base, p, "responses");
        if (c.responses.empty()) c.responses = c.out_path("responses.csv");
        c.battery = resolve(base, p, "battery");
        if (c.battery.empty()) c.battery = c.out_path("battery.csv");
        c.candidates = resolve(base, p, "candidates");
        c.ratings_log = resolve(base, p, "ratings_log");
        if (c.ratings_log.empty()) c.ratings_log = c.out_path("ratings.jsonl");
        c.static_dir = resolve(base, p, "static_dir");
        c.fixtures_dir = resolve(base, p, "fixtures_dir");
        c.cache_dir = resolve(base, p, "cache_dir");
        if (c.cache_dir.empty()) c.cache_dir = c.out_path("cache");

        const auto& e = block(j, "enrich");
        c.enrich.short_window_days = e.value("short_window_days", c.enrich.short_window_days);
        c.enrich.long_window_days = e.value("long_window_days", c.enrich.long_window_days);
        c.enrich.burst_factor = e.value("burst_factor", c.enrich.burst_factor);
        c.enrich.pmi_floor = e.value("pmi_floor", c.enrich.pmi_floor);

        const auto& cl = block(j, "cluster");
        c.k_min = cl.value("k_min", c.k_min);
        c.k_max = cl.value("k_max", c.k_max);
        c.cluster_seed = required<std::uint64_t>(cl, "cluster", "seed");

        const auto& s = block(j, "sample");
        c.sample_n = required<std::size_t>(s, "sample", "n");
        c.m_min = required<std::size_t>(s, "sample", "m_min");
        c.sample_seed = required<std::uint64_t>(s, "sample", "seed");

        const auto& pl = block(j, "plan");
        c.n_respondents = required<std::size_t>(pl, "plan", "n_respondents");
        c.m = required<std::size_t>(pl, "plan", "m");
        c.plan_seed = required<std::uint64_t>(pl, "plan", "seed");

        c.r_min = block(j, "survey").value("r_min", c.r_min);

        const auto& x = block(j, "extrapolate");
        c.method.method = method_from_name(x.value("method", std::string("ridge")));
        c.method.alpha = x.value("alpha", c.method.alpha);
        c.method.fit_intercept = x.value("fit_intercept", c.method.fit_intercept);
        c.method.knn.k = x.value("k", c.method.knn.k);
        c.method.knn.eps = x.value("eps", c.method.knn.eps);
        c.cv_folds = x.value("folds", c.cv_folds);
        c.cv_seed = required<std::uint64_t>(x, "extrapolate", "seed");
        c.per_profile = x.value("per_profile", false);

        const auto& r = block(j, "rerank");
        c.rerank_profile = r.value("profile", c.rerank_profile);
        c.rerank_k = r.value("k", c.rerank_k);

        const auto& sim = block(j, "simulate");
        c.simulate.seed = sim.value("seed", std::uint64_t{0});
        c.simulate.intercept = sim.value("intercept", 0.0);
        if (sim.contains("weights")) c.simulate.weights = sim.at("weights").get<std::map<std::string, double>>();
        c.simulate.noise_p = sim.value("noise_p", 0.0);
        c.simulate.base_time = sim.value("base_time", c.simulate.base_time);

        const auto& sv = block(j, "service");
        c.service.host = sv.value("host", c.service.host);
        c.service.port = sv.value("port", c.service.port);
        c.service.threads = sv.value("threads", c.service.threads);
        c.service.static_dir = c.static_dir;

        const auto& w = block(j, "wiki");
        c.offline = w.value("offline", false);
        c.requests_per_second = w.value("requests_per_second", c.requests_per_second);
        c.max_attempts = w.value("max_attempts", c.max_attempts);
        c.user_agent = w.value("user_agent", c.user_agent);
        if (c.fixtures_dir.empty() && w.contains("fixtures_dir")) c.fixtures_dir = resolve(base, w, "fixtures_dir");
        return c;
    } catch (const json::exception& ex) {
        throw validation_error("bad_config", ex.what());
    }
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    if (!fs::exists(path)) throw validation_error("missing_config", path.string());
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw validation_error("bad_config", "config is not a JSON object");
    return from_json(j, fs::absolute(path).parent_path());
}

double latent_value(const FeatureVector& f, const SimulationConfig& sim) {
    double v = sim.intercept;
    for (const auto& [name, w] : sim.weights) {
        const auto feat = feature_by_name(name);
        if (!feat) throw validation_error("unknown_feature", name);
        v += w * f[*feat];
    }
    return std::clamp(v, 0.0, 1.0);
}

namespace {

void require_file(const fs::path& p, std::string_view what) {
    if (p.empty()) throw validation_error("missing_input", fmt::format("no path configured for {}", what));
    if (!fs::exists(p)) throw validation_error("missing_input", fmt::format("{} not found: {}", what, p.string()));
}

json read_json(const fs::path& p, std::string_view what) {
    require_file(p, what);
    json j = json::parse(read_file(p), nullptr, false);
    if (j.is_discarded()) throw validation_error("bad_json", p.string());
    return j;
}

void write_json(const fs::path& p, const json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

template <typename F>
void write_stream(const fs::path& p, F&& f) {
    std::ostringstream os;
    f(os);
    write_file_atomic(p, os.str());
}

template <typename F>
auto read_stream(const fs::path& p, std::string_view what, F&& f) {
    require_file(p, what);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw io_error("unreadable_file", p.string());
    return f(in);
}

Corpus load_corpus(const PipelineConfig& c) {
    return read_stream(c.out_path("corpus.jsonl"), "corpus.jsonl (run ingest)",
                       [&](std::istream& in) { return read_corpus_jsonl(in, c.source_label); });
}

std::vector<std::pair<std::string, FeatureVector>> load_features(const PipelineConfig& c) {
    return read_stream(c.out_path("features.csv"), "features.csv (run enrich)",
                       [](std::istream& in) { return read_features_csv(in); });
}

Matrix feature_matrix(const std::vector<std::pair<std::string, FeatureVector>>& rows, std::vector<std::string>* ids) {
    Matrix X(rows.size(), kNumFeatures);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < kNumFeatures; ++c) X(r, c) = rows[r].second.values[c];
        if (ids) ids->push_back(rows[r].first);
    }
    return X;
}

InstrumentSpec load_instrument(const PipelineConfig& c) {
    if (c.instrument.empty()) return InstrumentSpec::defaults();
    auto spec = read_json(c.instrument, "instrument spec").get<InstrumentSpec>();
    spec.validate();
    return spec;
}

AssignmentPlan load_plan(const PipelineConfig& c) {
    return read_json(c.out_path("plan.json"), "plan.json (run plan)").get<AssignmentPlan>();
}

SampleSet load_sample(const PipelineConfig& c) {
    return read_json(c.out_path("sample.json"), "sample.json (run sample)").get<SampleSet>();
}

std::vector<std::string> feature_name_list() {
    return {kFeatureNames.begin(), kFeatureNames.end()};
}

// ---------------------------------------------------------------------------

json cmd_ingest(const PipelineConfig& c) {
    const auto raws = read_stream(c.articles, "articles", [](std::istream& in) { return read_jsonl(in); });
    auto [corpus, report] = ingest_articles(raws, c.source_label, c.ingested_at);
    fs::create_directories(c.output_dir);
    write_stream(c.out_path("corpus.jsonl"), [&](std::ostream& os) { write_corpus_jsonl(corpus, os); });
    const auto rj = report_to_json(report);
    write_json(c.out_path("ingest_report.json"), rj);
    return {{"command", "ingest"}, {"corpus", c.out_path("corpus.jsonl").string()}, {"report", rj}};
}

BackgroundModel load_background(const PipelineConfig& c, const Corpus& corpus, const StopwordSet& stopwords) {
    if (!c.background_unigrams.empty() || !c.background_bigrams.empty()) {
        require_file(c.background_unigrams, "background unigrams");
        require_file(c.background_bigrams, "background bigrams");
        return BackgroundModel::load(c.background_unigrams, c.background_bigrams);
    }
    std::vector<std::vector<std::string>> sentences;
    for (const auto& a : corpus.articles) sentences.push_back(content_words(a.headline, stopwords));
    return BackgroundModel::count(sentences);
}

json cmd_enrich(const PipelineConfig& c) {
    c.enrich.validate();
    const auto corpus = load_corpus(c);
    require_file(c.resources_dir / "stopwords.txt", "stopwords.txt");
    require_file(c.resources_dir / "lexicon.tsv", "lexicon.tsv");
    require_file(c.resources_dir / "clickbait", "clickbait word lists");

    WikiClientOptions wo;
    wo.mode = c.offline ? WikiMode::offline : WikiMode::live;
    wo.fixtures_dir = c.fixtures_dir;
    wo.cache_dir = c.cache_dir;
    wo.requests_per_second = c.requests_per_second;
    wo.max_attempts = c.max_attempts;
    wo.user_agent = c.user_agent;
    wo.apply_environment();
    if (wo.mode == WikiMode::offline && wo.fixtures_dir.empty()) {
        throw Error(ErrorKind::offline, "fixture_missing", "offline mode needs a fixtures directory");
    }
    WikiClient wiki(wo);

    EnrichResources res;
    res.stopwords = StopwordSet::load(c.resources_dir / "stopwords.txt");
    res.lexicon = Lexicon::load(c.resources_dir / "lexicon.tsv");
    res.clickbait = ClickbaitLexicon::load(c.resources_dir / "clickbait");
    res.background = load_background(c, corpus, res.stopwords);
    res.resolver = &wiki;
    res.pageviews = &wiki;

    std::vector<std::pair<std::string, FeatureVector>> rows;
    rows.reserve(corpus.articles.size());
    std::size_t with_entities = 0;
    for (const auto& a : corpus.articles) {
        rows.emplace_back(a.id, enrich_article(a, c.enrich, res));
        if (rows.back().second[Feature::n_entities] > 0) ++with_entities;
    }
    write_stream(c.out_path("features.csv"), [&](std::ostream& os) { write_features_csv(os, rows); });
    return {{"command", "enrich"},
            {"features", c.out_path("features.csv").string()},
            {"n_articles", rows.size()},
            {"n_with_entities", with_entities},
            {"mode", wo.mode == WikiMode::offline ? "offline" : "live"},
            {"requests_issued", wiki.requests_issued()}};
}

json cmd_cluster(const PipelineConfig& c) {
    const auto rows = load_features(c);
    std::vector<std::string> ids;
    const auto X = feature_matrix(rows, &ids);
    const auto sm = standardize(X, ids);
    if (X.rows() < 3) throw validation_error("too_few_rows", "clustering needs at least 3 articles");
    const std::size_t k_max = std::min(c.k_max, X.rows() - 1);
    const auto sel = select_k(sm.values, c.k_min, k_max, c.cluster_seed);
    const auto model = kmeans(sm, sel.k, c.cluster_seed);
    json j = model;
    json sil = json::object();
    for (const auto& [k, s] : sel.silhouettes) sil[std::to_string(k)] = s;
    j["silhouettes"] = sil;
    j["feature_names"] = feature_name_list();
    write_json(c.out_path("clusters.json"), j);
    return {{"command", "cluster"},
            {"k", model.k},
            {"inertia", model.inertia},
            {"cluster_sizes", model.cluster_sizes()},
            {"silhouettes", sil}};
}

json cmd_sample(const PipelineConfig& c) {
    const auto model = read_json(c.out_path("clusters.json"), "clusters.json (run cluster)").get<ClusterModel>();
    const auto sample = stratified_sample(model, c.sample_n, c.m_min, c.sample_seed);
    write_json(c.out_path("sample.json"), sample);
    std::vector<std::size_t> per;
    for (const auto& ids : sample.per_cluster) per.push_back(ids.size());
    return {{"command", "sample"}, {"n", sample.n}, {"per_cluster", per}};
}

json cmd_plan(const PipelineConfig& c) {
    const auto sample = load_sample(c);
    const auto plan = assign_to_respondents(sample, c.n_respondents, c.m, c.plan_seed);
    write_json(c.out_path("plan.json"), plan);
    std::size_t lo = SIZE_MAX;
    std::size_t hi = 0;
    for (const auto& [id, n] : plan.rating_counts()) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    return {{"command", "plan"},
            {"n_respondents", plan.respondent_ids.size()},
            {"m", plan.m},
            {"ratings_per_article", {{"min", lo}, {"max", hi}}}};
}

json cmd_export(const PipelineConfig& c) {
    const auto corpus = load_corpus(c);
    const auto j = export_instrument(load_sample(c), load_plan(c), load_instrument(c), corpus);
    write_json(c.out_path("instrument.json"), j);
    return {{"command", "export"}, {"instrument", c.out_path("instrument.json").string()}};
}

// Blocks SIGINT/SIGTERM for the calling thread (and the threads it creates)
// and stops the server from a dedicated waiter thread.
json cmd_serve(const PipelineConfig& c, std::ostream& out) {
    const auto corpus = load_corpus(c);
    RatingStore store(load_plan(c), load_instrument(c), c.ratings_log);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    RatingServer server(store, corpus, c.service);
    const int port = server.bind();
    out << json{{"listening", port}, {"host", c.service.host}, {"ratings", store.size()}}.dump() << std::endl;

    std::thread waiter([&server, set] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.run();
    // Wake the waiter if the server stopped for another reason.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return {{"command", "serve"}, {"ratings", store.size()}};
}

std::vector<ResponseRow> rows_from_log(const LogContents& log) {
    std::vector<ResponseRow> rows;
    std::size_t line = 0;
    for (const auto& r : log.ratings) {
        ++line;
        for (const auto& [key, score] : r.scores) {
            rows.push_back({line, r.respondent_id, r.article_id, key, std::to_string(score), r.submitted_at});
        }
    }
    return rows;
}

void write_rejects_csv(std::ostream& os, const std::vector<ResponseReject>& rejects) {
    write_csv_row(os, {"line", "respondent_id", "article_id", "reason"});
    for (const auto& r : rejects) write_csv_row(os, {std::to_string(r.line), r.respondent_id, r.article_id, r.reason});
}

json cmd_ingest_responses(const PipelineConfig& c) {
    const auto plan = load_plan(c);
    const auto spec = load_instrument(c);
    require_file(c.responses, "responses");
    std::vector<ResponseRow> rows;
    std::vector<BatteryResponse> batteries;
    const bool from_log = c.responses.extension() == ".jsonl";
    if (from_log) {
        const auto log = read_rating_log(c.responses);
        rows = rows_from_log(log);
        batteries = log.batteries;
    } else {
        rows = read_stream(c.responses, "responses", [](std::istream& in) { return read_response_rows(in); });
        if (fs::exists(c.battery)) {
            batteries = read_stream(c.battery, "battery", [](std::istream& in) { return read_battery_csv(in); });
        }
    }
    const auto ing = ingest_responses(rows, plan, spec);

    // Batteries: first submission per respondent in the plan, complete and in range.
    std::map<std::string, BatteryResponse> kept;
    std::size_t battery_rejects = 0;
    for (const auto& b : batteries) {
        if (!plan.lists.count(b.respondent_id)) {
            ++battery_rejects;
            continue;
        }
        try {
            score_civic_profile(b, spec);
        } catch (const Error&) {
            ++battery_rejects;
            continue;
        }
        auto it = kept.find(b.respondent_id);
        if (it == kept.end() || b.submitted_at < it->second.submitted_at) kept[b.respondent_id] = b;
    }
    std::vector<BatteryResponse> battery_out;
    for (auto& [id, b] : kept) battery_out.push_back(std::move(b));

    write_stream(c.out_path("ratings_clean.csv"),
                 [&](std::ostream& os) { write_responses_csv(os, ing.accepted, spec.rating_keys()); });
    write_stream(c.out_path("battery_clean.csv"), [&](std::ostream& os) { write_battery_csv(os, battery_out); });
    write_stream(c.out_path("response_rejects.csv"), [&](std::ostream& os) { write_rejects_csv(os, ing.rejects); });

    std::map<std::string, std::size_t> reasons;
    for (const auto& r : ing.rejects) ++reasons[r.reason];
    return {{"command", "ingest-responses"},
            {"source", from_log ? "log" : "csv"},
            {"n_accepted", ing.accepted.size()},
            {"n_rejected", ing.rejects.size()},
            {"n_duplicates", ing.n_duplicates},
            {"reject_reasons", reasons},
            {"n_batteries", battery_out.size()},
            {"n_battery_rejects", battery_rejects}};
}

std::vector<RatingResponse> load_clean_ratings(const PipelineConfig& c, const AssignmentPlan& plan,
                                               const InstrumentSpec& spec) {
    const auto rows = read_stream(c.out_path("ratings_clean.csv"), "ratings_clean.csv (run ingest-responses)",
                                  [](std::istream& in) { return read_response_rows(in); });
    auto ing = ingest_responses(rows, plan, spec);
    if (!ing.rejects.empty()) throw validation_error("bad_clean_ratings", "ratings_clean.csv has invalid rows");
    return std::move(ing.accepted);
}

json cmd_aggregate(const PipelineConfig& c) {
    const auto plan = load_plan(c);
    const auto spec = load_instrument(c);
    const auto ratings = load_clean_ratings(c, plan, spec);
    const auto agg = aggregate_labels(ratings, c.r_min, spec);
    write_stream(c.out_path("labels.csv"), [&](std::ostream& os) { write_labels_csv(os, agg.labels, spec); });

    std::vector<CivicProfile> profiles;
    if (fs::exists(c.out_path("battery_clean.csv"))) {
        const auto batteries = read_stream(c.out_path("battery_clean.csv"), "battery_clean.csv",
                                           [](std::istream& in) { return read_battery_csv(in); });
        for (const auto& b : batteries) profiles.push_back(score_civic_profile(b, spec));
    }
    write_stream(c.out_path("profiles.csv"), [&](std::ostream& os) { write_profiles_csv(os, profiles); });

    std::map<std::string, Profile> profile_of;
    for (const auto& p : profiles) profile_of[p.respondent_id] = p.profile;
    json per_profile = json::object();
    for (Profile p : {Profile::disengaged, Profile::issue_specific, Profile::engaged}) {
        std::vector<RatingResponse> subset;
        for (const auto& r : ratings) {
            const auto it = profile_of.find(r.respondent_id);
            if (it != profile_of.end() && it->second == p) subset.push_back(r);
        }
        const auto sub = aggregate_labels(subset, c.r_min, spec);
        const std::string name(profile_name(p));
        write_stream(c.out_path("labels_" + name + ".csv"),
                     [&](std::ostream& os) { write_labels_csv(os, sub.labels, spec); });
        std::set<std::string> respondents;
        for (const auto& [rid, prof] : profile_of) {
            if (prof == p) respondents.insert(rid);
        }
        per_profile[name] = {{"n_respondents", respondents.size()}, {"n_labels", sub.labels.size()}};
    }
    return {{"command", "aggregate"},
            {"n_labels", agg.labels.size()},
            {"n_omitted", agg.n_omitted},
            {"n_profiles", profiles.size()},
            {"per_profile", per_profile}};
}

struct LabeledData {
    Matrix X;
    std::vector<double> y;
    std::vector<std::string> ids;
};

LabeledData join_labels(const std::vector<std::pair<std::string, FeatureVector>>& features,
                        const std::vector<ArticleLabel>& labels) {
    std::map<std::string, const FeatureVector*> by_id;
    for (const auto& [id, f] : features) by_id.emplace(id, &f);
    LabeledData d;
    std::vector<std::vector<double>> rows;
    for (const auto& l : labels) {
        const auto it = by_id.find(l.article_id);
        if (it == by_id.end()) throw validation_error("unknown_article", "label without features: " + l.article_id);
        rows.emplace_back(it->second->values.begin(), it->second->values.end());
        d.y.push_back(l.public_value);
        d.ids.push_back(l.article_id);
    }
    d.X = rows.empty() ? Matrix(0, kNumFeatures) : Matrix::from_rows(rows);
    return d;
}

json fit_one(const PipelineConfig& c, const LabeledData& d, const fs::path& model_path, const fs::path& cv_path) {
    if (d.y.size() < 2) throw validation_error("too_few_labels", "need at least 2 labeled articles");
    const auto model = Extrapolator::fit(c.method, d.X, d.y, d.ids);
    json mj = model.to_json();
    mj["feature_names"] = feature_name_list();
    mj["target"] = "public_value";
    mj["n_labeled"] = d.y.size();
    write_json(model_path, mj);

    const std::size_t folds = std::min(c.cv_folds, d.y.size());
    json cvj = {{"method", method_name(c.method.method)}, {"folds", folds}, {"seed", c.cv_seed}};
    if (folds >= 2 && (c.method.method == Method::ridge || d.y.size() - d.y.size() / folds >= c.method.knn.k + 1)) {
        const auto cv = cross_validate(d.X, d.y, d.ids, folds, c.cv_seed, c.method);
        json per = json::array();
        for (const auto& m : cv.folds) per.push_back(metrics_to_json(m));
        cvj["per_fold"] = per;
        cvj["mean"] = metrics_to_json(cv.mean);
    } else {
        cvj["skipped"] = "too few labeled articles for cross-validation";
    }
    write_json(cv_path, cvj);
    return cvj;
}

json cmd_fit(const PipelineConfig& c) {
    const auto features = load_features(c);
    const auto labels = read_stream(c.out_path("labels.csv"), "labels.csv (run aggregate)",
                                    [](std::istream& in) { return read_labels_csv(in); });
    const auto d = join_labels(features, labels);
    json out = {{"command", "fit"},
                {"method", method_name(c.method.method)},
                {"n_labeled", d.y.size()},
                {"cv", fit_one(c, d, c.out_path("model.json"), c.out_path("cv_metrics.json"))}};
    if (c.per_profile) {
        json pp = json::object();
        for (Profile p : {Profile::disengaged, Profile::issue_specific, Profile::engaged}) {
            const std::string name(profile_name(p));
            const auto path = c.out_path("labels_" + name + ".csv");
            if (!fs::exists(path)) continue;
            const auto sub = read_stream(path, "profile labels", [](std::istream& in) { return read_labels_csv(in); });
            try {
                const auto sd = join_labels(features, sub);
                pp[name] = fit_one(c, sd, c.out_path("model_" + name + ".json"), c.out_path("cv_metrics_" + name + ".json"));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::validation) throw;
                pp[name] = {{"skipped", e.what()}};
            }
        }
        out["per_profile"] = pp;
    }
    return out;
}

void score_with(const fs::path& model_path, const std::vector<std::pair<std::string, FeatureVector>>& features,
                const fs::path& out_path) {
    const auto model = Extrapolator::from_json(read_json(model_path, "model"));
    std::vector<std::string> ids;
    const auto X = feature_matrix(features, &ids);
    const auto preds = model.predict(X);
    PredictionSet p;
    p.method = model.method();
    for (std::size_t i = 0; i < ids.size(); ++i) p.scores.emplace_back(ids[i], preds[i]);
    write_stream(out_path, [&](std::ostream& os) { write_predictions_csv(os, p); });
}

json cmd_score(const PipelineConfig& c) {
    const auto features = load_features(c);
    score_with(c.out_path("model.json"), features, c.out_path("predictions.csv"));
    json out = {{"command", "score"}, {"predictions", c.out_path("predictions.csv").string()},
                {"n_articles", features.size()}};
    json scored = json::array();
    for (Profile p : {Profile::disengaged, Profile::issue_specific, Profile::engaged}) {
        const std::string name(profile_name(p));
        if (!c.per_profile || !fs::exists(c.out_path("model_" + name + ".json"))) continue;
        score_with(c.out_path("model_" + name + ".json"), features, c.out_path("predictions_" + name + ".csv"));
        scored.push_back(name);
    }
    if (!scored.empty()) out["per_profile"] = scored;
    return out;
}

json cmd_rerank(const PipelineConfig& c) {
    const auto profiles = load_profiles(read_json(c.profiles, "profiles.json"));
    const auto pit = profiles.find(c.rerank_profile);
    if (pit == profiles.end()) throw validation_error("unknown_profile", c.rerank_profile);

    // A per-profile prediction file takes precedence when present.
    auto pred_path = c.out_path("predictions_" + c.rerank_profile + ".csv");
    if (!fs::exists(pred_path)) pred_path = c.out_path("predictions.csv");
    const auto preds = read_stream(pred_path, "predictions.csv (run score)",
                                   [](std::istream& in) { return read_predictions_csv(in); });
    std::map<std::string, double> civic(preds.scores.begin(), preds.scores.end());

    const auto cj = read_json(c.candidates, "candidates");
    if (!cj.is_array()) throw validation_error("bad_candidates", "candidates must be a JSON array");
    std::vector<Candidate> candidates;
    for (const auto& item : cj) {
        Candidate cand;
        cand.article_id = item.at("article_id").get<std::string>();
        cand.relevance = item.at("relevance").get<double>();
        if (item.contains("civic")) {
            cand.civic = item.at("civic").get<double>();
        } else {
            const auto it = civic.find(cand.article_id);
            if (it == civic.end()) throw validation_error("missing_civic", cand.article_id);
            cand.civic = it->second;
        }
        if (item.contains("sub_dimensions")) {
            cand.sub_dimensions = item.at("sub_dimensions").get<std::map<std::string, double>>();
        }
        candidates.push_back(std::move(cand));
    }
    const auto ranked = rerank(candidates, pit->second);

    std::vector<std::string> ids;
    std::vector<double> rel;
    std::map<std::string, double> civic_map;
    for (const auto& item : ranked.items) civic_map[item.article_id] = item.civic;
    for (const auto& cand : candidates) {
        ids.push_back(cand.article_id);
        rel.push_back(cand.relevance);
    }
    const auto base = argsort_desc(ids, rel);
    const auto shift = compare_rankings(base, ranked.ids(), civic_map, c.rerank_k);

    json out = ranked;
    out["diagnostics"] = shift_to_json(shift);
    write_json(c.out_path("reranked.json"), out);
    return {{"command", "rerank"}, {"profile", c.rerank_profile}, {"n_candidates", candidates.size()},
            {"diagnostics", shift_to_json(shift)}};
}

int noisy_rating(double v, double p, Rng& rng, const InstrumentSpec& spec) {
    const int span = spec.scale_max - spec.scale_min;
    int x = spec.scale_min + static_cast<int>(std::lround(span * v));
    if (rng.bernoulli(p)) x += rng.bernoulli(0.5) ? 1 : -1;
    return std::clamp(x, spec.scale_min, spec.scale_max);
}

json cmd_simulate(const PipelineConfig& c) {
    const auto features = load_features(c);
    const auto plan = load_plan(c);
    const auto spec = load_instrument(c);
    if (!(c.simulate.noise_p >= 0.0 && c.simulate.noise_p <= 1.0)) throw validation_error("bad_noise_p");
    const auto base = parse_timestamp(c.simulate.base_time);
    if (!base) throw validation_error("bad_timestamp", c.simulate.base_time);

    std::map<std::string, double> truth;
    for (const auto& [id, f] : features) truth[id] = latent_value(f, c.simulate);

    Rng rng(c.simulate.seed);
    std::vector<RatingResponse> responses;
    std::vector<BatteryResponse> batteries;
    const auto keys = spec.rating_keys();
    for (std::size_t ri = 0; ri < plan.respondent_ids.size(); ++ri) {
        const auto& rid = plan.respondent_ids[ri];
        const auto& list = plan.lists.at(rid);
        for (std::size_t j = 0; j < list.size(); ++j) {
            const auto it = truth.find(list[j]);
            if (it == truth.end()) throw validation_error("unknown_article", "planned article without features: " + list[j]);
            RatingResponse r;
            r.respondent_id = rid;
            r.article_id = list[j];
            for (const auto& key : keys) r.scores[key] = noisy_rating(it->second, c.simulate.noise_p, rng, spec);
            r.submitted_at = format_timestamp(*base + std::chrono::seconds(static_cast<long>(ri * 1000 + j)));
            responses.push_back(std::move(r));
        }
        BatteryResponse b;
        b.respondent_id = rid;
        const int level = spec.scale_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.scale_max - spec.scale_min + 1)));
        for (const auto& item : spec.battery) {
            int x = level;
            if (rng.bernoulli(c.simulate.noise_p)) x += rng.bernoulli(0.5) ? 1 : -1;
            x = std::clamp(x, spec.scale_min, spec.scale_max);
            b.scores[item.key] = item.reverse_coded ? spec.scale_min + spec.scale_max - x : x;
        }
        b.submitted_at = format_timestamp(*base + std::chrono::seconds(static_cast<long>(ri * 1000 + list.size())));
        batteries.push_back(std::move(b));
    }

    fs::create_directories(c.output_dir);
    write_stream(c.out_path("responses.csv"), [&](std::ostream& os) { write_responses_csv(os, responses, keys); });
    write_stream(c.out_path("battery.csv"), [&](std::ostream& os) { write_battery_csv(os, batteries); });
    write_stream(c.out_path("simulated_truth.csv"), [&](std::ostream& os) {
        write_csv_row(os, {"article_id", "value"});
        for (const auto& [id, f] : features) write_csv_row(os, {id, format_double(truth.at(id))});
    });
    return {{"command", "simulate-responses"},
            {"n_responses", responses.size()},
            {"n_respondents", batteries.size()},
            {"responses", c.out_path("responses.csv").string()}};
}

}  // namespace

json execute(std::string_view name, const PipelineConfig& c, std::ostream& out) {
    if (name == "ingest") return cmd_ingest(c);
    fs::create_directories(c.output_dir);
    if (name == "enrich") return cmd_enrich(c);
    if (name == "cluster") return cmd_cluster(c);
    if (name == "sample") return cmd_sample(c);
    if (name == "plan") return cmd_plan(c);
    if (name == "export") return cmd_export(c);
    if (name == "serve") return cmd_serve(c, out);
    if (name == "ingest-responses") return cmd_ingest_responses(c);
    if (name == "aggregate") return cmd_aggregate(c);
    if (name == "fit") return cmd_fit(c);
    if (name == "score") return cmd_score(c);
    if (name == "rerank") return cmd_rerank(c);
    if (name == "simulate-responses") return cmd_simulate(c);
    throw validation_error("unknown_command", std::string(name));
}

json execute(std::string_view name, const PipelineConfig& c) { return execute(name, c, std::cout); }

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case ErrorKind::validation: return 2;
            case ErrorKind::offline: return 3;
            default: return 1;
        }
    }
    return 1;
}

int run_command(std::string_view name, const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        out << execute(name, cfg, out).dump() << std::endl;
        return 0;
    } catch (const Error& e) {
        err << json{{"error", e.code()}, {"detail", e.detail()}}.dump() << std::endl;
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << json{{"error", "internal"}, {"detail", e.what()}}.dump() << std::endl;
        return 1;
    }
}

}  // namespace civicrank
