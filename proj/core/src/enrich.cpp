#include "civicrank/enrich.hpp"

#include "civicrank/error.hpp"
#include "civicrank/tables.hpp"
#include "civicrank/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace civicrank {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> lowered(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(to_lower_ascii(t));
    return out;
}

std::unordered_set<std::string> word_set(const fs::path& path) {
    const auto words = read_word_list(path);
    return {words.begin(), words.end()};
}

bool is_capitalized(std::string_view token) { return !token.empty() && token.front() >= 'A' && token.front() <= 'Z'; }

bool is_numeric_token(std::string_view lower, const ClickbaitLexicon& lists) {
    if (!lower.empty() && std::isdigit(static_cast<unsigned char>(lower.front())) != 0) return true;
    return lists.number_words.count(std::string(lower)) > 0;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::vector<std::string> tab_fields(const std::string& line) { return split(line, '\t'); }

}  // namespace

// ---------------------------------------------------------------------------
// Resources

StopwordSet StopwordSet::load(const fs::path& path) { return StopwordSet(word_set(path)); }

bool StopwordSet::contains(std::string_view token) const { return words_.count(to_lower_ascii(token)) > 0; }

Lexicon::Lexicon(std::unordered_map<std::string, double> valence) : valence_(std::move(valence)) {
    for (const auto& [token, v] : valence_) {
        if (!(v >= -1.0 && v <= 1.0)) throw validation_error("bad_valence", token);
    }
}

Lexicon Lexicon::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("unreadable_file", path.string());
    std::unordered_map<std::string, double> valence;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        const auto f = tab_fields(line);
        if (f.size() < 2) throw validation_error("bad_lexicon_row", line);
        valence[to_lower_ascii(trim(f[0]))] = parse_double(f[1]);
    }
    return Lexicon(std::move(valence));
}

std::optional<double> Lexicon::valence(std::string_view lower_token) const {
    const auto it = valence_.find(std::string(lower_token));
    if (it == valence_.end()) return std::nullopt;
    return it->second;
}

BackgroundModel BackgroundModel::count(const std::vector<std::vector<std::string>>& sentences) {
    BackgroundModel m;
    for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            ++m.unigrams_[s[i]];
            ++m.unigram_total_;
            if (i + 1 < s.size()) {
                ++m.bigrams_[{s[i], s[i + 1]}];
                ++m.bigram_total_;
            }
        }
    }
    return m;
}

BackgroundModel BackgroundModel::load(const fs::path& unigrams, const fs::path& bigrams) {
    BackgroundModel m;
    std::string line;
    std::ifstream uin(unigrams);
    if (!uin) throw io_error("unreadable_file", unigrams.string());
    while (std::getline(uin, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        const auto f = tab_fields(line);
        if (f.size() != 2) throw validation_error("bad_unigram_row", line);
        const auto c = static_cast<std::uint64_t>(std::stoull(f[1]));
        m.unigrams_[f[0]] += c;
        m.unigram_total_ += c;
    }
    std::ifstream bin(bigrams);
    if (!bin) throw io_error("unreadable_file", bigrams.string());
    while (std::getline(bin, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        const auto f = tab_fields(line);
        if (f.size() != 3) throw validation_error("bad_bigram_row", line);
        const auto c = static_cast<std::uint64_t>(std::stoull(f[2]));
        m.bigrams_[{f[0], f[1]}] += c;
        m.bigram_total_ += c;
    }
    return m;
}

void BackgroundModel::save(const fs::path& unigrams, const fs::path& bigrams) const {
    std::string u;
    for (const auto& [w, c] : unigrams_) u += w + "\t" + std::to_string(c) + "\n";
    write_file_atomic(unigrams, u);
    std::string b;
    for (const auto& [pair, c] : bigrams_) b += pair.first + "\t" + pair.second + "\t" + std::to_string(c) + "\n";
    write_file_atomic(bigrams, b);
}

std::uint64_t BackgroundModel::unigram(std::string_view w) const {
    const auto it = unigrams_.find(w);
    return it == unigrams_.end() ? 0 : it->second;
}

std::uint64_t BackgroundModel::bigram(std::string_view a, std::string_view b) const {
    const auto it = bigrams_.find({std::string(a), std::string(b)});
    return it == bigrams_.end() ? 0 : it->second;
}

ClickbaitLexicon ClickbaitLexicon::load(const fs::path& dir) {
    ClickbaitLexicon l;
    l.number_words = word_set(dir / "numbers.txt");
    l.second_person = word_set(dir / "second_person.txt");
    l.demonstratives = word_set(dir / "demonstratives.txt");
    l.question_words = word_set(dir / "question_words.txt");
    l.superlatives = word_set(dir / "superlatives.txt");
    for (const auto& phrase : read_word_list(dir / "curiosity_phrases.txt")) {
        auto toks = lowered(tokenize(phrase));
        if (!toks.empty()) l.curiosity_phrases.push_back(std::move(toks));
    }
    return l;
}

void EnrichConfig::validate() const {
    if (short_window_days < 1 || long_window_days < 1) throw validation_error("bad_window", "windows must be >= 1");
    if (!(burst_factor > 1.0)) throw validation_error("bad_burst_factor", "burst factor must be > 1");
    if (!std::isfinite(pmi_floor)) throw validation_error("bad_pmi_floor");
}

std::optional<Feature> feature_by_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (kFeatureNames[i] == name) return static_cast<Feature>(i);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Prominence

std::vector<std::pair<std::size_t, std::size_t>> capitalized_runs(const std::vector<std::string>& tokens,
                                                                  const StopwordSet& stopwords) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!is_capitalized(tokens[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        bool all_stop = true;
        while (j < tokens.size() && is_capitalized(tokens[j])) {
            all_stop = all_stop && stopwords.contains(tokens[j]);
            ++j;
        }
        if (!all_stop) runs.emplace_back(i, j);
        i = j;
    }
    return runs;
}

std::vector<EntityMention> extract_entities(std::string_view headline, const StopwordSet& stopwords,
                                            EntityResolver& resolver) {
    const auto tokens = tokenize(headline);
    std::vector<EntityMention> mentions;
    for (const auto& [start, end] : capitalized_runs(tokens, stopwords)) {
        std::string surface = tokens[start];
        for (std::size_t k = start + 1; k < end; ++k) surface += " " + tokens[k];
        WikiEntity e = resolver.resolve_entity(surface);
        if (!e.resolved) continue;
        mentions.push_back({std::move(surface), start, end, std::move(e)});
    }
    return mentions;
}

ProminenceStats prominence_from_series(const std::vector<PageviewSeries>& series, Date pub_date,
                                       const EnrichConfig& cfg) {
    ProminenceStats st;
    if (series.empty()) return st;
    const Date yesterday = pub_date.plus_days(-1);
    const Date short_start = pub_date.plus_days(-cfg.short_window_days);
    const Date long_start = pub_date.plus_days(-cfg.long_window_days);

    std::int64_t best_short = 0;
    std::int64_t best_long = 0;
    std::size_t lead = 0;  // entity with the largest long-window total
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto s = series[i].total_between(short_start, yesterday);
        const auto l = series[i].total_between(long_start, yesterday);
        best_short = std::max(best_short, s);
        if (i == 0 || l > best_long) {
            lead = i;
            best_long = l;
        }
    }
    st.short_views = static_cast<double>(best_short);
    st.long_views = static_cast<double>(best_long);
    st.short_daily_mean = st.short_views / cfg.short_window_days;
    st.long_daily_mean = st.long_views / cfg.long_window_days;

    const double lead_short = static_cast<double>(series[lead].total_between(short_start, yesterday));
    const double lead_long = static_cast<double>(series[lead].total_between(long_start, yesterday));
    const double lead_short_mean = lead_short / cfg.short_window_days;
    const double lead_long_mean = lead_long / cfg.long_window_days;
    st.burst = lead_long_mean == 0.0 ? lead_short > 0.0 : lead_short_mean > cfg.burst_factor * lead_long_mean;
    return st;
}

ProminenceStats compute_prominence(const std::vector<EntityMention>& mentions, Date pub_date,
                                   const EnrichConfig& cfg, PageviewSource& pageviews) {
    if (mentions.empty()) return {};
    const int span = std::max(cfg.short_window_days, cfg.long_window_days);
    const Date start = pub_date.plus_days(-span);
    const Date end = pub_date.plus_days(-1);
    std::vector<PageviewSeries> series;
    series.reserve(mentions.size());
    for (const auto& m : mentions) series.push_back(pageviews.fetch_daily_pageviews(m.entity.title, start, end));
    return prominence_from_series(series, pub_date, cfg);
}

// ---------------------------------------------------------------------------
// Sentiment

SentimentScores compute_sentiment(std::string_view headline, const Lexicon& lexicon, const StopwordSet& stopwords) {
    SentimentScores s;
    std::size_t content = 0;
    std::size_t matched = 0;
    double sum = 0.0;
    double abs_sum = 0.0;
    for (const auto& tok : tokenize(headline)) {
        if (stopwords.contains(tok)) continue;
        ++content;
        if (const auto v = lexicon.valence(to_lower_ascii(tok))) {
            ++matched;
            sum += *v;
            abs_sum += std::fabs(*v);
        }
    }
    if (matched == 0) return s;
    s.polarity = sum / static_cast<double>(matched);
    s.emotionality = abs_sum / static_cast<double>(matched);
    s.coverage = static_cast<double>(matched) / static_cast<double>(content);
    return s;
}

// ---------------------------------------------------------------------------
// Surprise

std::vector<std::string> content_words(std::string_view text, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    for (const auto& tok : tokenize(text)) {
        if (!stopwords.contains(tok)) out.push_back(to_lower_ascii(tok));
    }
    return out;
}

double pmi(const BackgroundModel& model, std::string_view a, std::string_view b, double floor) {
    const auto cab = model.bigram(a, b);
    const auto ca = model.unigram(a);
    const auto cb = model.unigram(b);
    if (cab == 0 || ca == 0 || cb == 0) return floor;
    const double nb = static_cast<double>(model.bigram_total());
    const double nu = static_cast<double>(model.unigram_total());
    const double p_ab = static_cast<double>(cab) / nb;
    const double p_a = static_cast<double>(ca) / nu;
    const double p_b = static_cast<double>(cb) / nu;
    return std::log2(p_ab / (p_a * p_b));
}

SurpriseScore compute_surprise(std::string_view headline, const BackgroundModel& model, const StopwordSet& stopwords,
                               double pmi_floor) {
    const auto words = content_words(headline, stopwords);
    SurpriseScore s;
    if (words.size() < 2) return s;
    double lowest = 0.0;
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
        const double v = pmi(model, words[i], words[i + 1], pmi_floor);
        lowest = i == 0 ? v : std::min(lowest, v);
    }
    s.n_bigrams = words.size() - 1;
    s.value = std::max(0.0, -lowest);
    return s;
}

// ---------------------------------------------------------------------------
// Clickbait

ClickbaitFeatures compute_clickbait(std::string_view headline, const ClickbaitLexicon& lists) {
    const auto tokens = lowered(tokenize(headline));
    ClickbaitFeatures f;
    auto set = [&f](Cue c) { f.cues[static_cast<std::size_t>(c)] = true; };
    auto any_in = [&tokens](const std::unordered_set<std::string>& words) {
        return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return words.count(t) > 0; });
    };

    if (!tokens.empty() && is_numeric_token(tokens.front(), lists)) set(Cue::starts_with_number);
    if (std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return is_numeric_token(t, lists); })) {
        set(Cue::contains_number);
    }
    if (any_in(lists.second_person)) set(Cue::second_person);
    if (any_in(lists.demonstratives)) set(Cue::demonstrative);
    if (!tokens.empty() && lists.question_words.count(tokens.front()) > 0) set(Cue::question_word_start);
    if (any_in(lists.superlatives)) set(Cue::superlative);
    if (headline.find_first_of("!?") != std::string_view::npos) set(Cue::exclaim_or_question_mark);
    for (const auto& phrase : lists.curiosity_phrases) {
        if (std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end()) {
            set(Cue::curiosity_gap_phrase);
            break;
        }
    }
    const auto n = std::count(f.cues.begin(), f.cues.end(), true);
    f.score = static_cast<double>(n) / static_cast<double>(kNumCues);
    return f;
}

// ---------------------------------------------------------------------------
// Composition

FeatureVector enrich_article(const Article& article, const EnrichConfig& cfg, const EnrichResources& res) {
    if (res.resolver == nullptr || res.pageviews == nullptr) throw validation_error("resources_not_loaded");
    const auto tokens = tokenize(article.headline);
    const auto mentions = extract_entities(article.headline, res.stopwords, *res.resolver);
    const auto prom = compute_prominence(mentions, article.published_date, cfg, *res.pageviews);
    const auto sent = compute_sentiment(article.headline, res.lexicon, res.stopwords);
    const auto surp = compute_surprise(article.headline, res.background, res.stopwords, cfg.pmi_floor);
    const auto bait = compute_clickbait(article.headline, res.clickbait);

    std::size_t chars = 0;
    std::size_t stops = 0;
    for (const auto& t : tokens) {
        chars += utf8_length(t);
        if (res.stopwords.contains(t)) ++stops;
    }
    const double n = static_cast<double>(tokens.size());

    FeatureVector v;
    v[Feature::prom_short_log] = std::log10(1.0 + prom.short_views);
    v[Feature::prom_long_log] = std::log10(1.0 + prom.long_views);
    v[Feature::burst01] = prom.burst ? 1.0 : 0.0;
    v[Feature::n_entities] = static_cast<double>(mentions.size());
    v[Feature::sent_polarity] = sent.polarity;
    v[Feature::sent_emotionality] = sent.emotionality;
    v[Feature::sent_coverage] = sent.coverage;
    v[Feature::surprise] = surp.value;
    v[Feature::clickbait] = bait.score;
    v[Feature::word_count] = n;
    v[Feature::avg_word_length] = tokens.empty() ? 0.0 : static_cast<double>(chars) / n;
    v[Feature::stopword_ratio] = tokens.empty() ? 0.0 : static_cast<double>(stops) / n;
    return v;
}

void write_features_csv(std::ostream& out, const std::vector<std::pair<std::string, FeatureVector>>& rows) {
    std::vector<std::string> header{"article_id"};
    for (auto name : kFeatureNames) header.emplace_back(name);
    write_csv_row(out, header);
    for (const auto& [id, fv] : rows) {
        std::vector<std::string> fields{id};
        for (double v : fv.values) fields.push_back(format_double(v));
        write_csv_row(out, fields);
    }
}

std::vector<std::pair<std::string, FeatureVector>> read_features_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw validation_error("bad_features", "missing header");
    const auto& header = rows.front();
    const auto id_col = column_index(header, "article_id");
    std::array<std::size_t, kNumFeatures> cols{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) cols[i] = column_index(header, kFeatureNames[i]);
    std::vector<std::pair<std::string, FeatureVector>> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) throw validation_error("bad_features", "row " + std::to_string(r));
        FeatureVector fv;
        for (std::size_t i = 0; i < kNumFeatures; ++i) fv.values[i] = parse_double(rows[r][cols[i]]);
        out.emplace_back(rows[r][id_col], fv);
    }
    return out;
}

}  // namespace civicrank
