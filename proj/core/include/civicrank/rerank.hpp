#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace civicrank {

struct Candidate {
    std::string article_id;
    double relevance = 0;  // any scale
    double civic = 0;      // [0, 1]
    std::map<std::string, double> sub_dimensions;
};

struct ProfileWeights {
    std::string profile;
    double lambda = 0;
    std::map<std::string, double> sub_weights;  // empty: use the scalar civic score

    // lambda in [0,1]; sub-weights non-negative and summing to 1 within 1e-9.
    void validate() const;
};

struct RankedItem {
    std::string article_id;
    double score = 0;
    double relevance_norm = 0;
    double civic = 0;
};

struct RankedList {
    std::vector<RankedItem> items;  // blended score non-increasing, ties by id
    ProfileWeights weights;

    std::vector<std::string> ids() const;
};

struct RankShift {
    double kendall_tau = 1;
    double civic_uplift = 0;
    std::size_t k = 0;
};

// Weighted sum of sub-dimension scores, or the scalar civic field when the
// profile has no sub-weights. Throws "missing_sub_dimension".
double civic_score(const Candidate& c, const ProfileWeights& w);

// Relevance is min-max normalized over the set (constant set -> 0.5), then
// blended = (1-λ)·relevance + λ·civic. Throws "empty_candidates".
RankedList rerank(const std::vector<Candidate>& candidates, const ProfileWeights& w);

// Kendall tau-a over all pairs.
double kendall_tau(const std::vector<std::string>& a, const std::vector<std::string>& b);

// uplift = mean civic of reranked top-k minus mean civic of base top-k.
// Throws "id_set_mismatch" and "missing_civic".
RankShift compare_rankings(const std::vector<std::string>& base, const std::vector<std::string>& reranked,
                           const std::map<std::string, double>& civic, std::size_t k);

// Ids sorted by descending value, ties by id ascending.
std::vector<std::string> argsort_desc(const std::vector<std::string>& ids, const std::vector<double>& values);

void to_json(nlohmann::json& j, const Candidate& c);
void from_json(const nlohmann::json& j, Candidate& c);
void to_json(nlohmann::json& j, const ProfileWeights& w);
void from_json(const nlohmann::json& j, ProfileWeights& w);
void to_json(nlohmann::json& j, const RankedList& r);
nlohmann::json shift_to_json(const RankShift& s);

// profiles.json: {"profiles": {name: {lambda, sub_weights}}}. Keys starting
// with '_' are comments and ignored.
std::map<std::string, ProfileWeights> load_profiles(const nlohmann::json& j);

}  // namespace civicrank
