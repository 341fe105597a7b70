#pragma once

#include "civicrank/corpus.hpp"
#include "civicrank/wikiclient.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace civicrank {

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

class StopwordSet {
public:
    StopwordSet() = default;
    explicit StopwordSet(std::unordered_set<std::string> words) : words_(std::move(words)) {}
    static StopwordSet load(const std::filesystem::path& path);

    // Case-insensitive.
    bool contains(std::string_view token) const;
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

// token -> valence in [-1, 1]
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::unordered_map<std::string, double> valence);
    static Lexicon load(const std::filesystem::path& path);

    std::optional<double> valence(std::string_view lower_token) const;

private:
    std::unordered_map<std::string, double> valence_;
};

// Unigram and bigram counts of a background corpus. Probabilities are
// maximum-likelihood: p(w) = c(w) / unigram_total, p(a,b) = c(a,b) / bigram_total.
class BackgroundModel {
public:
    // Counts over pre-tokenized sentences; bigrams never cross sentences.
    static BackgroundModel count(const std::vector<std::vector<std::string>>& sentences);
    static BackgroundModel load(const std::filesystem::path& unigrams, const std::filesystem::path& bigrams);
    void save(const std::filesystem::path& unigrams, const std::filesystem::path& bigrams) const;

    std::uint64_t unigram(std::string_view w) const;
    std::uint64_t bigram(std::string_view a, std::string_view b) const;
    std::uint64_t unigram_total() const { return unigram_total_; }
    std::uint64_t bigram_total() const { return bigram_total_; }

private:
    std::map<std::string, std::uint64_t, std::less<>> unigrams_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> bigrams_;
    std::uint64_t unigram_total_ = 0;
    std::uint64_t bigram_total_ = 0;
};

// Word lists behind the clickbait cues. All entries lowercase.
struct ClickbaitLexicon {
    std::unordered_set<std::string> number_words;
    std::unordered_set<std::string> second_person;
    std::unordered_set<std::string> demonstratives;
    std::unordered_set<std::string> question_words;
    std::unordered_set<std::string> superlatives;
    std::vector<std::vector<std::string>> curiosity_phrases;  // token sequences

    // Reads numbers.txt, second_person.txt, demonstratives.txt,
    // question_words.txt, superlatives.txt and curiosity_phrases.txt.
    static ClickbaitLexicon load(const std::filesystem::path& dir);
};

// ---------------------------------------------------------------------------
// Feature types
// ---------------------------------------------------------------------------

struct EnrichConfig {
    int short_window_days = 7;
    int long_window_days = 365;
    double burst_factor = 3.0;
    double pmi_floor = -10.0;

    void validate() const;
};

struct EntityMention {
    std::string surface;
    std::size_t token_start = 0;  // [start, end) into tokenize(headline)
    std::size_t token_end = 0;
    WikiEntity entity;
};

struct ProminenceStats {
    double short_views = 0;
    double long_views = 0;
    double short_daily_mean = 0;
    double long_daily_mean = 0;
    bool burst = false;
};

struct SentimentScores {
    double polarity = 0;
    double emotionality = 0;
    double coverage = 0;
};

struct SurpriseScore {
    double value = 0;
    std::size_t n_bigrams = 0;
};

enum class Cue : std::size_t {
    starts_with_number,
    contains_number,
    second_person,
    demonstrative,
    question_word_start,
    superlative,
    exclaim_or_question_mark,
    curiosity_gap_phrase,
};
inline constexpr std::size_t kNumCues = 8;
inline constexpr std::array<std::string_view, kNumCues> kCueNames = {
    "starts_with_number", "contains_number", "second_person",            "demonstrative",
    "question_word_start", "superlative",    "exclaim_or_question_mark", "curiosity_gap_phrase"};

struct ClickbaitFeatures {
    std::array<bool, kNumCues> cues{};
    double score = 0;

    bool has(Cue c) const { return cues[static_cast<std::size_t>(c)]; }
};

enum class Feature : std::size_t {
    prom_short_log,
    prom_long_log,
    burst01,
    n_entities,
    sent_polarity,
    sent_emotionality,
    sent_coverage,
    surprise,
    clickbait,
    word_count,
    avg_word_length,
    stopword_ratio,
};
inline constexpr std::size_t kNumFeatures = 12;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "prom_short_log", "prom_long_log", "burst01",    "n_entities", "sent_polarity",   "sent_emotionality",
    "sent_coverage",  "surprise",      "clickbait",  "word_count", "avg_word_length", "stopword_ratio"};

std::optional<Feature> feature_by_name(std::string_view name);

struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }

    bool operator==(const FeatureVector&) const = default;
};

struct EnrichResources {
    StopwordSet stopwords;
    Lexicon lexicon;
    BackgroundModel background;
    ClickbaitLexicon clickbait;
    EntityResolver* resolver = nullptr;
    PageviewSource* pageviews = nullptr;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Maximal runs of capitalized tokens, as [start, end) token ranges. Runs made
// only of stopwords are dropped.
std::vector<std::pair<std::size_t, std::size_t>> capitalized_runs(const std::vector<std::string>& tokens,
                                                                  const StopwordSet& stopwords);

std::vector<EntityMention> extract_entities(std::string_view headline, const StopwordSet& stopwords,
                                            EntityResolver& resolver);

ProminenceStats compute_prominence(const std::vector<EntityMention>& mentions, Date pub_date,
                                   const EnrichConfig& cfg, PageviewSource& pageviews);

// Prominence from already-fetched per-entity series; each series must cover
// [pub_date - max(window), pub_date - 1].
ProminenceStats prominence_from_series(const std::vector<PageviewSeries>& series, Date pub_date,
                                       const EnrichConfig& cfg);

SentimentScores compute_sentiment(std::string_view headline, const Lexicon& lexicon, const StopwordSet& stopwords);

// Lowercased, stopword-free tokens: the unit both surprise scoring and
// background-model counting work on.
std::vector<std::string> content_words(std::string_view text, const StopwordSet& stopwords);

double pmi(const BackgroundModel& model, std::string_view a, std::string_view b, double floor);

SurpriseScore compute_surprise(std::string_view headline, const BackgroundModel& model, const StopwordSet& stopwords,
                               double pmi_floor);

ClickbaitFeatures compute_clickbait(std::string_view headline, const ClickbaitLexicon& lists);

FeatureVector enrich_article(const Article& article, const EnrichConfig& cfg, const EnrichResources& res);

// features.csv: header "article_id,<12 names>", one row per article.
void write_features_csv(std::ostream& out, const std::vector<std::pair<std::string, FeatureVector>>& rows);
std::vector<std::pair<std::string, FeatureVector>> read_features_csv(std::istream& in);

}  // namespace civicrank
