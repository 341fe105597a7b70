#pragma once

#include "civicrank/date.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace civicrank::fixturegen {

struct Options {
    std::size_t n_articles = 200;
    std::uint64_t seed = 7;
    Date first_date{2025, 1, 1};
    int span_days = 300;
    double entity_fraction = 0.85;
    double burst_fraction = 0.3;
    std::size_t background_sentences = 3000;
};

struct Summary {
    std::size_t n_articles = 0;
    std::size_t n_search_fixtures = 0;
    std::size_t n_pageview_fixtures = 0;
    std::size_t n_burst = 0;
};

// Synthetic headline corpus with matching offline Wikipedia fixtures. Writes
// into `dir`:
//   articles.jsonl                      raw article export
//   fixtures/search/*.json              one search response per capitalized run
//   fixtures/pageviews/*.json           daily series per entity
//   background_unigrams.tsv / _bigrams.tsv
//   config.json                         pipeline config wired to the above
// Word lists come from `resources_dir` (stopwords.txt, lexicon.tsv).
Summary generate(const std::filesystem::path& dir, const std::filesystem::path& resources_dir, const Options& opt);

// The config.json written by generate(), exposed so callers can tweak it.
nlohmann::json default_config(const std::filesystem::path& resources_dir);

}  // namespace civicrank::fixturegen
