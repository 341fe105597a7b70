#include "civicrank/corpus.hpp"

#include "civicrank/error.hpp"
#include "civicrank/text.hpp"

#include <algorithm>
#include <unordered_set>

namespace civicrank {

namespace {

std::optional<std::string> string_field(const nlohmann::json& raw, const char* key) {
    const auto it = raw.find(key);
    if (it == raw.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

std::optional<std::string> optional_text(const nlohmann::json& raw, const char* key) {
    auto v = string_field(raw, key);
    if (!v) return std::nullopt;
    std::string t = trim(*v);
    if (t.empty()) return std::nullopt;
    return t;
}

}  // namespace

const Article* Corpus::find(std::string_view id) const {
    for (const auto& a : articles) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

std::string canonical_url(std::string_view url) {
    std::string u = trim(url);
    if (const auto hash = u.find('#'); hash != std::string::npos) u.erase(hash);
    if (const auto q = u.find('?'); q != std::string::npos) u.erase(q);

    std::size_t host_start = 0;
    if (const auto sep = u.find("://"); sep != std::string::npos) host_start = sep + 3;
    auto host_end = u.find('/', host_start);
    if (host_end == std::string::npos) host_end = u.size();
    // scheme and host together
    for (std::size_t i = 0; i < host_end; ++i) {
        if (u[i] >= 'A' && u[i] <= 'Z') u[i] = static_cast<char>(u[i] - 'A' + 'a');
    }
    while (u.size() > host_start && u.back() == '/') u.pop_back();
    return u;
}

std::string article_id_for_url(std::string_view url) { return hex64(stable_hash64(canonical_url(url))); }

std::vector<std::string> split_byline(std::string_view byline) {
    std::vector<std::string> names;
    for (const auto& part : split(byline, ',')) {
        std::string current;
        for (const auto& word : split(collapse_whitespace(part), ' ')) {
            if (iequals(word, "and")) {
                if (!current.empty()) names.push_back(current);
                current.clear();
                continue;
            }
            if (word.empty()) continue;
            if (!current.empty()) current.push_back(' ');
            current += word;
        }
        if (!current.empty()) names.push_back(current);
    }
    return names;
}

std::variant<Article, Rejection> normalize_article(const nlohmann::json& raw) {
    if (!raw.is_object()) return Rejection{"missing_field"};
    const auto url = optional_text(raw, "url");
    const auto headline_raw = string_field(raw, "headline");
    if (!url || !headline_raw) return Rejection{"missing_field"};
    std::string headline = collapse_whitespace(*headline_raw);
    if (headline.empty()) return Rejection{"missing_field"};

    auto date_text = string_field(raw, "date");
    if (!date_text) date_text = string_field(raw, "published_date");
    const auto date = date_text ? parse_date(*date_text) : std::nullopt;
    if (!date) return Rejection{"bad_date"};

    Article a;
    a.url = *url;
    a.id = article_id_for_url(*url);
    a.headline = std::move(headline);
    a.published_date = *date;
    if (const auto it = raw.find("byline"); it != raw.end()) {
        if (it->is_string()) {
            a.byline = split_byline(it->get<std::string>());
        } else if (it->is_array()) {
            for (const auto& name : *it) {
                if (!name.is_string()) continue;
                for (auto& n : split_byline(name.get<std::string>())) a.byline.push_back(std::move(n));
            }
        }
    }
    a.image_url = optional_text(raw, "image_url");
    a.section = optional_text(raw, "section");
    return a;
}

std::pair<Corpus, ValidationReport> ingest_articles(const std::vector<nlohmann::json>& raws,
                                                    std::string source_label, std::string ingested_at) {
    Corpus corpus;
    corpus.source_label = std::move(source_label);
    corpus.ingested_at = std::move(ingested_at);
    ValidationReport report;
    report.n_input = raws.size();

    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < raws.size(); ++i) {
        auto result = normalize_article(raws[i]);
        if (auto* rej = std::get_if<Rejection>(&result)) {
            ++report.n_rejected;
            report.rejection_reasons.emplace_back(i, rej->reason);
            continue;
        }
        auto& article = std::get<Article>(result);
        if (!seen.insert(canonical_url(article.url)).second) {
            ++report.n_duplicates;
            continue;
        }
        corpus.articles.push_back(std::move(article));
    }
    std::sort(corpus.articles.begin(), corpus.articles.end(), [](const Article& a, const Article& b) {
        if (a.published_date != b.published_date) return a.published_date < b.published_date;
        return a.id < b.id;
    });
    report.n_kept = corpus.articles.size();
    return {std::move(corpus), std::move(report)};
}

std::vector<nlohmann::json> read_jsonl(std::istream& in) {
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false));
        if (out.back().is_discarded()) out.back() = nullptr;
    }
    return out;
}

nlohmann::json article_to_json(const Article& a) {
    nlohmann::json j;
    j["id"] = a.id;
    j["headline"] = a.headline;
    j["byline"] = a.byline;
    j["published_date"] = a.published_date.iso();
    j["url"] = a.url;
    j["image_url"] = a.image_url ? nlohmann::json(*a.image_url) : nlohmann::json(nullptr);
    j["section"] = a.section ? nlohmann::json(*a.section) : nlohmann::json(nullptr);
    return j;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& a : corpus.articles) out << article_to_json(a).dump() << '\n';
}

Corpus read_corpus_jsonl(std::istream& in, std::string source_label) {
    const auto raws = read_jsonl(in);
    auto [corpus, report] = ingest_articles(raws, std::move(source_label));
    if (report.n_rejected > 0 || report.n_duplicates > 0) {
        throw validation_error("bad_corpus", "corpus file contains invalid or duplicate records");
    }
    return std::move(corpus);
}

nlohmann::json report_to_json(const ValidationReport& r) {
    nlohmann::json reasons = nlohmann::json::array();
    for (const auto& [index, reason] : r.rejection_reasons) {
        reasons.push_back({{"index", index}, {"reason", reason}});
    }
    return {{"n_input", r.n_input},
            {"n_kept", r.n_kept},
            {"n_duplicates", r.n_duplicates},
            {"n_rejected", r.n_rejected},
            {"rejection_reasons", reasons}};
}

}  // namespace civicrank
