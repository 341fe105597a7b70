#pragma once

#include "civicrank/matrix.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace civicrank {

struct StandardizedMatrix {
    std::vector<std::string> row_ids;
    Matrix values;
    ColumnStats stats;
};

// Population-std z-scores per column; constant columns become all zeros.
// Throws "too_few_rows" when n < 2.
StandardizedMatrix standardize(const Matrix& m, std::vector<std::string> row_ids = {});

struct ClusterModel {
    std::size_t k = 0;
    Matrix centroids;                      // k x d, standardized space
    std::vector<std::size_t> assignments;  // row index -> cluster
    std::vector<std::string> row_ids;
    ColumnStats stats;  // standardization used, empty for raw input
    double inertia = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    std::vector<double> inertia_history;  // inertia after each assignment step

    std::vector<std::size_t> cluster_sizes() const;
};

inline constexpr std::size_t kMaxLloydIterations = 300;

// k-means++ seeding then Lloyd iterations until the assignment reaches a
// fixpoint or kMaxLloydIterations. An empty cluster is reseeded with the point
// farthest from its current centroid. Throws "k_too_large" when k > n.
ClusterModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed);
ClusterModel kmeans(const StandardizedMatrix& m, std::size_t k, std::uint64_t seed);

// Mean silhouette coefficient; points in singleton clusters score 0.
double silhouette_score(const Matrix& points, const std::vector<std::size_t>& labels);

struct SelectKResult {
    std::size_t k = 0;
    std::map<std::size_t, double> silhouettes;
};

// The k in [k_min, k_max] with the highest mean silhouette; ties go to the
// smaller k. Requires 2 <= k_min <= k_max <= n - 1.
SelectKResult select_k(const Matrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed);

// Largest-remainder allocation of n across clusters proportional to size,
// then clusters below min(m_min, size) are raised, taking the excess back one
// at a time from the cluster with the largest allocation above its minimum.
// Throws "infeasible_minimum" when n < k * m_min or n > total size.
std::vector<std::size_t> allocate_sample(const std::vector<std::size_t>& cluster_sizes, std::size_t n,
                                         std::size_t m_min);

struct SampleSet {
    std::vector<std::vector<std::string>> per_cluster;  // chosen ids per cluster
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t m_min = 0;

    std::vector<std::string> all_ids() const;
};

SampleSet stratified_sample(const ClusterModel& model, std::size_t n, std::size_t m_min, std::uint64_t seed);

struct AssignmentPlan {
    std::vector<std::string> respondent_ids;
    std::map<std::string, std::vector<std::string>> lists;  // respondent -> ordered article ids
    std::size_t m = 0;
    std::uint64_t seed = 0;

    std::map<std::string, std::size_t> rating_counts() const;
    bool contains(const std::string& respondent, const std::string& article) const;
};

std::string respondent_id(std::size_t index);

// Shuffles the pooled sample under `seed` and deals it to respondents in
// consecutive runs of m along the cyclic shuffled order, so every respondent
// gets m distinct articles and rating counts differ by at most one.
// Throws "infeasible_plan" when m > |sample| or n_respondents * m < |sample|.
AssignmentPlan assign_to_respondents(const SampleSet& sample, std::size_t n_respondents, std::size_t m,
                                     std::uint64_t seed);

void to_json(nlohmann::json& j, const ClusterModel& m);
void from_json(const nlohmann::json& j, ClusterModel& m);
void to_json(nlohmann::json& j, const SampleSet& s);
void from_json(const nlohmann::json& j, SampleSet& s);
void to_json(nlohmann::json& j, const AssignmentPlan& p);
void from_json(const nlohmann::json& j, AssignmentPlan& p);

}  // namespace civicrank
