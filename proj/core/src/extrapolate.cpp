#include "civicrank/extrapolate.hpp"

#include "civicrank/error.hpp"
#include "civicrank/rng.hpp"
#include "civicrank/tables.hpp"
#include "civicrank/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

namespace civicrank {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

ColumnStats centering_stats(const Matrix& X) {
    ColumnStats st = ColumnStats::fit(X);
    std::fill(st.stds.begin(), st.stds.end(), 1.0);
    return st;
}

}  // namespace

double LinearModel::predict_raw(std::span<const double> row) const {
    if (row.size() != weights.size()) throw validation_error("column_mismatch");
    double v = intercept;
    for (std::size_t c = 0; c < row.size(); ++c) {
        const double z = stats.is_constant(c) ? 0.0 : (row[c] - stats.means[c]) / stats.stds[c];
        v += z * weights[c];
    }
    return v;
}

LinearModel fit_ridge(const Matrix& X, std::span<const double> y, double alpha, bool fit_intercept, bool standardize) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n != y.size()) throw validation_error("length_mismatch");
    if (n < 2) throw validation_error("too_few_rows", "ridge needs at least 2 rows");
    if (!(alpha >= 0.0)) throw validation_error("bad_alpha", "alpha must be >= 0");

    LinearModel model;
    model.alpha = alpha;
    model.fit_intercept = fit_intercept;
    if (standardize) {
        model.stats = ColumnStats::fit(X);
    } else if (fit_intercept) {
        model.stats = centering_stats(X);
    } else {
        model.stats = ColumnStats::identity(d);
    }
    const Matrix Z = model.stats.apply(X);

    double y_mean = 0.0;
    if (fit_intercept) {
        for (double v : y) y_mean += v;
        y_mean /= static_cast<double>(n);
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Zm(
        Z.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) yc(static_cast<Eigen::Index>(i)) = y[i] - y_mean;
    A.noalias() = Zm.transpose() * Zm;
    A.diagonal().array() += alpha;
    b.noalias() = Zm.transpose() * yc;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < static_cast<Eigen::Index>(d)) {
        throw validation_error("singular_fit", "normal equations are singular; use alpha > 0");
    }
    const Eigen::VectorXd w = qr.solve(b);
    model.weights.assign(w.data(), w.data() + w.size());
    model.intercept = y_mean;
    return model;
}

std::vector<double> predict(const LinearModel& model, const Matrix& X) {
    if (X.cols() != model.weights.size()) throw validation_error("column_mismatch");
    std::vector<double> out(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) out[r] = clip01(model.predict_raw(X.row(r)));
    return out;
}

KnnModel fit_knn(const Matrix& X_lab, std::span<const double> y_lab, std::vector<std::string> ids, KnnParams params) {
    if (X_lab.rows() == 0) throw validation_error("no_labeled_points");
    if (X_lab.rows() != y_lab.size()) throw validation_error("length_mismatch");
    if (params.k < 1 || params.k > X_lab.rows()) throw validation_error("bad_k", "need 1 <= k <= n_labeled");
    if (!(params.eps > 0.0)) throw validation_error("bad_eps", "eps must be > 0");
    if (ids.empty()) {
        for (std::size_t i = 0; i < X_lab.rows(); ++i) ids.push_back(std::to_string(i));
    }
    if (ids.size() != X_lab.rows()) throw validation_error("length_mismatch");
    KnnModel m;
    m.params = params;
    m.stats = ColumnStats::fit(X_lab);
    m.ids = std::move(ids);
    m.X = X_lab;
    m.X_std = m.stats.apply(X_lab);
    m.y.assign(y_lab.begin(), y_lab.end());
    return m;
}

std::vector<double> knn_predict(const KnnModel& m, const Matrix& X_unlab) {
    if (X_unlab.cols() != m.X_std.cols()) throw validation_error("column_mismatch");
    const std::size_t n = m.X_std.rows();
    std::vector<std::size_t> order(n);
    std::vector<double> dist(n);
    std::vector<double> q(X_unlab.cols());
    std::vector<double> out(X_unlab.rows());
    for (std::size_t r = 0; r < X_unlab.rows(); ++r) {
        m.stats.apply_row(X_unlab.row(r), q);
        for (std::size_t i = 0; i < n; ++i) dist[i] = std::sqrt(squared_distance(q, m.X_std.row(i)));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (dist[a] != dist[b]) return dist[a] < dist[b];
            return m.ids[a] < m.ids[b];
        });
        double exact_sum = 0.0;
        std::size_t exact_n = 0;
        for (std::size_t i : order) {
            if (dist[i] >= m.params.eps) break;
            exact_sum += m.y[i];
            ++exact_n;
        }
        if (exact_n > 0) {
            out[r] = exact_sum / static_cast<double>(exact_n);
            continue;
        }
        double num = 0.0;
        double den = 0.0;
        for (std::size_t t = 0; t < m.params.k; ++t) {
            const std::size_t i = order[t];
            const double w = 1.0 / (dist[i] + m.params.eps);
            num += w * m.y[i];
            den += w;
        }
        out[r] = num / den;
    }
    return out;
}

std::vector<double> knn_propagate(const Matrix& X_lab, std::span<const double> y_lab, std::vector<std::string> ids,
                                  const Matrix& X_unlab, std::size_t k, double eps) {
    return knn_predict(fit_knn(X_lab, y_lab, std::move(ids), {k, eps}), X_unlab);
}

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const auto n = static_cast<double>(ra.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

EvalMetrics evaluate_any(std::span<const double> preds, std::span<const double> truth) {
    EvalMetrics m;
    m.n_test = preds.size();
    double se = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) se += (preds[i] - truth[i]) * (preds[i] - truth[i]);
    m.rmse = preds.empty() ? 0.0 : std::sqrt(se / static_cast<double>(preds.size()));
    m.spearman_rho = preds.size() < 2 ? std::numeric_limits<double>::quiet_NaN() : spearman(preds, truth);
    return m;
}

}  // namespace

EvalMetrics evaluate(std::span<const double> preds, std::span<const double> truth) {
    if (preds.size() != truth.size()) throw validation_error("length_mismatch");
    if (preds.size() < 2) throw validation_error("too_few_points", "evaluation needs at least 2 points");
    return evaluate_any(preds, truth);
}

std::string_view method_name(Method m) { return m == Method::ridge ? "ridge" : "knn"; }

Method method_from_name(std::string_view name) {
    if (name == "ridge") return Method::ridge;
    if (name == "knn") return Method::knn;
    throw validation_error("unknown_method", std::string(name));
}

Extrapolator Extrapolator::fit(const MethodConfig& cfg, const Matrix& X, std::span<const double> y,
                               std::vector<std::string> ids) {
    Extrapolator e;
    e.cfg_ = cfg;
    if (cfg.method == Method::ridge) {
        e.linear_ = fit_ridge(X, y, cfg.alpha, cfg.fit_intercept);
    } else {
        e.knn_ = fit_knn(X, y, std::move(ids), cfg.knn);
    }
    return e;
}

std::vector<double> Extrapolator::predict(const Matrix& X) const {
    return cfg_.method == Method::ridge ? civicrank::predict(linear_, X) : knn_predict(knn_, X);
}

nlohmann::json Extrapolator::to_json() const {
    nlohmann::json j;
    j["method"] = method_name(cfg_.method);
    if (cfg_.method == Method::ridge) {
        j["config"] = {{"alpha", cfg_.alpha}, {"fit_intercept", cfg_.fit_intercept}};
        j["weights"] = linear_.weights;
        j["intercept"] = linear_.intercept;
        j["standardization"] = linear_.stats;
    } else {
        j["config"] = {{"k", cfg_.knn.k}, {"eps", cfg_.knn.eps}};
        j["standardization"] = knn_.stats;
        j["labeled"] = {{"ids", knn_.ids}, {"X", knn_.X}, {"y", knn_.y}};
    }
    return j;
}

Extrapolator Extrapolator::from_json(const nlohmann::json& j) {
    Extrapolator e;
    e.cfg_.method = method_from_name(j.at("method").get<std::string>());
    const auto& cfg = j.at("config");
    if (e.cfg_.method == Method::ridge) {
        e.cfg_.alpha = cfg.at("alpha").get<double>();
        e.cfg_.fit_intercept = cfg.at("fit_intercept").get<bool>();
        e.linear_.alpha = e.cfg_.alpha;
        e.linear_.fit_intercept = e.cfg_.fit_intercept;
        e.linear_.weights = j.at("weights").get<std::vector<double>>();
        e.linear_.intercept = j.at("intercept").get<double>();
        e.linear_.stats = j.at("standardization").get<ColumnStats>();
        if (e.linear_.stats.means.size() != e.linear_.weights.size()) throw validation_error("bad_model");
    } else {
        e.cfg_.knn.k = cfg.at("k").get<std::size_t>();
        e.cfg_.knn.eps = cfg.at("eps").get<double>();
        e.knn_.params = e.cfg_.knn;
        e.knn_.stats = j.at("standardization").get<ColumnStats>();
        const auto& lab = j.at("labeled");
        e.knn_.ids = lab.at("ids").get<std::vector<std::string>>();
        e.knn_.X = lab.at("X").get<Matrix>();
        e.knn_.y = lab.at("y").get<std::vector<double>>();
        e.knn_.X_std = e.knn_.stats.apply(e.knn_.X);
    }
    return e;
}

CrossValidation cross_validate(const Matrix& X, std::span<const double> y, const std::vector<std::string>& ids,
                               std::size_t folds, std::uint64_t seed, const MethodConfig& cfg) {
    const std::size_t n = X.rows();
    if (folds < 2 || n < folds) throw validation_error("bad_folds", "need 2 <= folds <= n");
    if (y.size() != n || (!ids.empty() && ids.size() != n)) throw validation_error("length_mismatch");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    CrossValidation cv;
    cv.fold_of.assign(n, 0);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;
    std::size_t pos = 0;
    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        bounds.emplace_back(pos, pos + len);
        for (std::size_t t = pos; t < pos + len; ++t) cv.fold_of[order[t]] = f;
        pos += len;
    }

    double rmse_sum = 0.0;
    double rho_sum = 0.0;
    std::size_t rho_n = 0;
    for (const auto& [b, e] : bounds) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(b),
                                      order.begin() + static_cast<std::ptrdiff_t>(e));
        train.insert(train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(b));
        train.insert(train.end(), order.begin() + static_cast<std::ptrdiff_t>(e), order.end());

        std::vector<double> y_train;
        std::vector<std::string> id_train;
        for (auto i : train) {
            y_train.push_back(y[i]);
            id_train.push_back(ids.empty() ? std::to_string(i) : ids[i]);
        }
        std::vector<double> y_test;
        for (auto i : test) y_test.push_back(y[i]);

        const auto model = Extrapolator::fit(cfg, X.select_rows(train), y_train, std::move(id_train));
        const auto preds = model.predict(X.select_rows(test));
        const auto m = evaluate_any(preds, y_test);
        cv.folds.push_back(m);
        rmse_sum += m.rmse;
        if (!std::isnan(m.spearman_rho)) {
            rho_sum += m.spearman_rho;
            ++rho_n;
        }
    }
    cv.mean.rmse = rmse_sum / static_cast<double>(folds);
    cv.mean.spearman_rho = rho_n == 0 ? std::numeric_limits<double>::quiet_NaN() : rho_sum / static_cast<double>(rho_n);
    cv.mean.n_test = n;
    return cv;
}

nlohmann::json metrics_to_json(const EvalMetrics& m) {
    return {{"rmse", m.rmse},
            {"spearman_rho", std::isnan(m.spearman_rho) ? nlohmann::json(nullptr) : nlohmann::json(m.spearman_rho)},
            {"n_test", m.n_test}};
}

void write_predictions_csv(std::ostream& out, const PredictionSet& p) {
    write_csv_row(out, {"article_id", "score", "method"});
    const std::string method(method_name(p.method));
    for (const auto& [id, score] : p.scores) write_csv_row(out, {id, format_double(score), method});
}

PredictionSet read_predictions_csv(std::istream& in) {
    const auto rows = read_csv(in);
    if (rows.empty()) throw validation_error("bad_predictions", "missing header");
    const auto c_id = column_index(rows.front(), "article_id");
    const auto c_score = column_index(rows.front(), "score");
    const auto c_method = column_index(rows.front(), "method");
    PredictionSet p;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        p.scores.emplace_back(rows[r].at(c_id), parse_double(rows[r].at(c_score)));
        p.method = method_from_name(rows[r].at(c_method));
    }
    return p;
}

}  // namespace civicrank
