#pragma once

#include "civicrank/matrix.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace civicrank {

struct LinearModel {
    std::vector<double> weights;  // standardized space
    double intercept = 0;
    double alpha = 0;
    bool fit_intercept = true;
    ColumnStats stats;  // fit-time statistics, reused verbatim at prediction

    double predict_raw(std::span<const double> row) const;
};

// Ridge regression on internally standardized X: solves
// (XᵀX + αI) w = Xᵀ(y - ȳ) with a dense column-pivoting QR. The intercept is
// not penalized. With standardize=false, X is only centered (fit_intercept)
// or used as-is. Throws "singular_fit" when alpha=0 and XᵀX is rank deficient.
LinearModel fit_ridge(const Matrix& X, std::span<const double> y, double alpha, bool fit_intercept,
                      bool standardize = true);

// Predictions clipped to [0, 1]. Throws "column_mismatch".
std::vector<double> predict(const LinearModel& model, const Matrix& X);

struct KnnParams {
    std::size_t k = 5;
    double eps = 1e-6;
};

struct KnnModel {
    KnnParams params;
    ColumnStats stats;  // from the labeled set
    std::vector<std::string> ids;
    Matrix X;           // raw labeled features
    Matrix X_std;
    std::vector<double> y;
};

KnnModel fit_knn(const Matrix& X_lab, std::span<const double> y_lab, std::vector<std::string> ids, KnnParams params);

// Euclidean distance in the labeled set's standardized space. Labeled points
// closer than eps count as exact matches and their labels are averaged;
// otherwise the k nearest (ties by id) are averaged with weights 1/(d+eps).
std::vector<double> knn_predict(const KnnModel& model, const Matrix& X_unlab);

std::vector<double> knn_propagate(const Matrix& X_lab, std::span<const double> y_lab,
                                  std::vector<std::string> ids, const Matrix& X_unlab, std::size_t k, double eps);

struct EvalMetrics {
    double rmse = 0;
    double spearman_rho = 0;  // NaN when fewer than two test points
    std::size_t n_test = 0;
};

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

// Spearman correlation of average ranks. Returns 0 when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

// Throws "length_mismatch" or "too_few_points" (n < 2).
EvalMetrics evaluate(std::span<const double> preds, std::span<const double> truth);

enum class Method { ridge, knn };

std::string_view method_name(Method m);
Method method_from_name(std::string_view name);

struct MethodConfig {
    Method method = Method::ridge;
    double alpha = 1.0;
    bool fit_intercept = true;
    KnnParams knn;
};

// Either fitted model behind one predict().
class Extrapolator {
public:
    static Extrapolator fit(const MethodConfig& cfg, const Matrix& X, std::span<const double> y,
                            std::vector<std::string> ids);

    std::vector<double> predict(const Matrix& X) const;

    Method method() const { return cfg_.method; }
    const MethodConfig& config() const { return cfg_; }
    const LinearModel& linear() const { return linear_; }
    const KnnModel& knn() const { return knn_; }

    nlohmann::json to_json() const;
    static Extrapolator from_json(const nlohmann::json& j);

private:
    MethodConfig cfg_;
    LinearModel linear_;
    KnnModel knn_;
};

struct CrossValidation {
    std::vector<EvalMetrics> folds;
    EvalMetrics mean;  // spearman averaged over folds where it is defined
    std::vector<std::size_t> fold_of;  // row -> fold
};

// Seeded shuffle, contiguous fold split (earlier folds take the remainder),
// fit on the other folds, evaluate on the held-out one.
CrossValidation cross_validate(const Matrix& X, std::span<const double> y, const std::vector<std::string>& ids,
                               std::size_t folds, std::uint64_t seed, const MethodConfig& cfg);

nlohmann::json metrics_to_json(const EvalMetrics& m);

struct PredictionSet {
    std::vector<std::pair<std::string, double>> scores;  // in [0, 1]
    Method method = Method::ridge;
};

void write_predictions_csv(std::ostream& out, const PredictionSet& p);
PredictionSet read_predictions_csv(std::istream& in);

}  // namespace civicrank
