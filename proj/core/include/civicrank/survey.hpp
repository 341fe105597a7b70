#pragma once

#include "civicrank/cluster.hpp"
#include "civicrank/corpus.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace civicrank {

inline constexpr const char* kPersonalInterest = "personal_interest";
inline constexpr const char* kPublicImportance = "public_importance";

struct InstrumentItem {
    std::string key;
    std::string label;
    bool reverse_coded = false;  // battery items only
};

struct DemographicField {
    std::string key;
    std::vector<std::string> options;
};

struct InstrumentSpec {
    std::string preamble;
    int scale_min = 1;
    int scale_max = 5;
    std::vector<InstrumentItem> sub_dimensions;  // D items
    std::vector<InstrumentItem> battery;         // B items
    std::vector<DemographicField> demographics;

    // personal_interest, public_importance, then the sub-dimensions.
    std::vector<InstrumentItem> rating_items() const;
    std::vector<std::string> rating_keys() const;
    std::vector<std::string> sub_dimension_keys() const;

    // Unique keys, B >= 1, scale_min < scale_max.
    void validate() const;

    static InstrumentSpec defaults();
};

void to_json(nlohmann::json& j, const InstrumentSpec& s);
void from_json(const nlohmann::json& j, InstrumentSpec& s);

struct RatingResponse {
    std::string respondent_id;
    std::string article_id;
    std::map<std::string, int> scores;
    std::string submitted_at;  // ISO 8601, UTC

    bool operator==(const RatingResponse&) const = default;
};

struct BatteryResponse {
    std::string respondent_id;
    std::map<std::string, int> scores;
    std::string submitted_at;
};

void to_json(nlohmann::json& j, const RatingResponse& r);
void from_json(const nlohmann::json& j, RatingResponse& r);

// Field-level validation against the instrument. Returns an empty vector
// when valid, else (field, reason) pairs; reasons are "out_of_range",
// "missing_item", "unknown_item".
std::vector<std::pair<std::string, std::string>> check_scores(const std::map<std::string, int>& scores,
                                                              const std::vector<std::string>& keys,
                                                              const InstrumentSpec& spec);

// ---------------------------------------------------------------------------

nlohmann::json article_card(const Article& a);

// instrument.json: preamble, item definitions, battery, demographics, and one
// block of article cards per respondent in plan order.
nlohmann::json export_instrument(const SampleSet& sample, const AssignmentPlan& plan, const InstrumentSpec& spec,
                                 const Corpus& corpus);

// Long-format responses.csv row: respondent_id,article_id,item_key,score,submitted_at.
struct ResponseRow {
    std::size_t line = 0;
    std::string respondent_id;
    std::string article_id;
    std::string item_key;
    std::string score;
    std::string submitted_at;
};

std::vector<ResponseRow> read_response_rows(std::istream& in);
void write_responses_csv(std::ostream& out, const std::vector<RatingResponse>& responses,
                         const std::vector<std::string>& keys);

struct ResponseReject {
    std::size_t line = 0;
    std::string respondent_id;
    std::string article_id;
    std::string reason;
};

struct IngestedResponses {
    std::vector<RatingResponse> accepted;  // sorted by (respondent_id, article_id)
    std::vector<ResponseReject> rejects;
    std::size_t n_duplicates = 0;
};

// Rows sharing (respondent, article, submitted_at) form one submission. A
// submission is rejected as a whole for unknown ids ("unknown_respondent",
// "unknown_article"), pairs outside the plan ("not_in_plan"), unknown item
// keys, scores outside the scale ("out_of_range"), unparseable values
// ("bad_score", "bad_timestamp") or missing items ("incomplete"). Among valid
// submissions for the same pair the earliest submitted_at wins.
IngestedResponses ingest_responses(const std::vector<ResponseRow>& rows, const AssignmentPlan& plan,
                                   const InstrumentSpec& spec);

struct ArticleLabel {
    std::string article_id;
    double public_value = 0;
    double personal_interest = 0;
    std::map<std::string, double> sub_dimensions;
    std::size_t n_ratings = 0;
    double rating_variance = 0;
};

struct AggregateResult {
    std::vector<ArticleLabel> labels;  // sorted by article_id
    std::size_t n_omitted = 0;         // articles with fewer than r_min ratings
};

// (x - scale_min) / (scale_max - scale_min); (x-1)/4 on the default scale.
double rescale(int score, const InstrumentSpec& spec);

AggregateResult aggregate_labels(const std::vector<RatingResponse>& responses, std::size_t r_min,
                                 const InstrumentSpec& spec);

void write_labels_csv(std::ostream& out, const std::vector<ArticleLabel>& labels, const InstrumentSpec& spec);
std::vector<ArticleLabel> read_labels_csv(std::istream& in);

enum class Profile { disengaged, issue_specific, engaged };

inline constexpr double kDisengagedCutpoint = 2.33;
inline constexpr double kIssueSpecificCutpoint = 3.67;

std::string_view profile_name(Profile p);
std::optional<Profile> profile_from_name(std::string_view name);
Profile profile_for_score(double civic_score);

struct CivicProfile {
    std::string respondent_id;
    double civic_score = 0;
    Profile profile = Profile::disengaged;
};

// Reverse-coded items map x -> (scale_min + scale_max) - x; civic_score is the
// mean. Throws "incomplete_battery" when an item is missing.
CivicProfile score_civic_profile(const BatteryResponse& battery, const InstrumentSpec& spec);

// battery.csv: respondent_id,item_key,score,submitted_at (long format).
std::vector<BatteryResponse> read_battery_csv(std::istream& in);
void write_battery_csv(std::ostream& out, const std::vector<BatteryResponse>& batteries);

void write_profiles_csv(std::ostream& out, const std::vector<CivicProfile>& profiles);
std::vector<CivicProfile> read_profiles_csv(std::istream& in);

}  // namespace civicrank
