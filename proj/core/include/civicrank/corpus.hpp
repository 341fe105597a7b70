#pragma once

#include "civicrank/date.hpp"

#include <nlohmann/json.hpp>

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace civicrank {

struct Article {
    std::string id;  // hex of stable_hash64(canonical_url(url))
    std::string headline;
    std::vector<std::string> byline;
    Date published_date;
    std::string url;
    std::optional<std::string> image_url;
    std::optional<std::string> section;

    bool operator==(const Article&) const = default;
};

struct Corpus {
    std::vector<Article> articles;  // sorted by (published_date, id)
    std::string source_label;
    std::string ingested_at;

    const Article* find(std::string_view id) const;
};

struct ValidationReport {
    std::size_t n_input = 0;
    std::size_t n_kept = 0;
    std::size_t n_duplicates = 0;
    std::size_t n_rejected = 0;
    std::vector<std::pair<std::size_t, std::string>> rejection_reasons;
};

struct Rejection {
    std::string reason;  // "missing_field" | "bad_date"
};

// Lowercases scheme and host, drops query string and fragment, strips
// trailing slashes from the path.
std::string canonical_url(std::string_view url);

std::string article_id_for_url(std::string_view url);

// Splits on commas and on the standalone word "and"; names are trimmed and
// empty names dropped.
std::vector<std::string> split_byline(std::string_view byline);

// Accepts the raw export keys (url, headline, byline, date, image_url,
// section) and also the canonical corpus keys (published_date, byline as
// an array) so a serialized corpus can be re-ingested unchanged.
std::variant<Article, Rejection> normalize_article(const nlohmann::json& raw);

std::pair<Corpus, ValidationReport> ingest_articles(const std::vector<nlohmann::json>& raws,
                                                    std::string source_label, std::string ingested_at = {});

// JSON Lines reader. Unparseable lines come back as JSON null so they are
// counted (and rejected) by ingest_articles rather than silently skipped.
std::vector<nlohmann::json> read_jsonl(std::istream& in);

nlohmann::json article_to_json(const Article& a);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
Corpus read_corpus_jsonl(std::istream& in, std::string source_label = {});

nlohmann::json report_to_json(const ValidationReport& r);

}  // namespace civicrank
