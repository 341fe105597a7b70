#include "civicrank/cluster.hpp"

#include "civicrank/error.hpp"
#include "civicrank/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace civicrank {

namespace {

constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

std::vector<std::string> index_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    return ids;
}

std::size_t nearest(const Matrix& centroids, std::span<const double> p, double& best_d) {
    std::size_t best = 0;
    best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(p, centroids.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

Matrix plus_plus_init(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<bool> chosen(n, false);
    auto take = [&](std::size_t idx, std::size_t slot) {
        chosen[idx] = true;
        const auto src = points.row(idx);
        std::copy(src.begin(), src.end(), centroids.row(slot).begin());
    };

    take(static_cast<std::size_t>(rng.below(n)), 0);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = kUnassigned;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > target) break;
            }
        } else {
            // every point coincides with a centroid: take the first unused row
            for (std::size_t i = 0; i < n && pick == kUnassigned; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        take(pick, c);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
    }
    return centroids;
}

}  // namespace

std::vector<std::size_t> ClusterModel::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
}

StandardizedMatrix standardize(const Matrix& m, std::vector<std::string> row_ids) {
    if (m.rows() < 2) throw validation_error("too_few_rows", "standardize needs at least 2 rows");
    if (row_ids.empty()) row_ids = index_ids(m.rows());
    if (row_ids.size() != m.rows()) throw validation_error("row_id_mismatch");
    StandardizedMatrix out;
    out.stats = ColumnStats::fit(m);
    out.values = out.stats.apply(m);
    out.row_ids = std::move(row_ids);
    return out;
}

ClusterModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (k == 0) throw validation_error("bad_k", "k must be >= 1");
    if (k > n) throw validation_error("k_too_large", fmt::format("k={} > n={}", k, n));

    Rng rng(seed);
    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.row_ids = index_ids(n);
    model.centroids = plus_plus_init(points, k, rng);
    model.assignments.assign(n, kUnassigned);
    std::vector<double> dist(n, 0.0);

    for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = nearest(model.centroids, points.row(i), dist[i]);
            inertia += dist[i];
            if (c != model.assignments[i]) {
                model.assignments[i] = c;
                changed = true;
            }
        }
        model.inertia_history.push_back(inertia);
        model.iterations = iter + 1;

        auto sizes = model.cluster_sizes();
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = kUnassigned;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[model.assignments[i]] < 2) continue;
                if (far == kUnassigned || dist[i] > dist[far]) far = i;
            }
            if (far == kUnassigned) break;
            --sizes[model.assignments[far]];
            ++sizes[c];
            model.assignments[far] = c;
            dist[far] = 0.0;
            const auto src = points.row(far);
            std::copy(src.begin(), src.end(), model.centroids.row(c).begin());
            changed = true;
        }
        if (!changed) break;

        Matrix sums(k, points.cols());
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = sums.row(model.assignments[i]);
            const auto src = points.row(i);
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            auto dst = model.centroids.row(c);
            const auto src = sums.row(c);
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / static_cast<double>(sizes[c]);
        }
    }

    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        model.inertia += squared_distance(points.row(i), model.centroids.row(model.assignments[i]));
    }
    return model;
}

ClusterModel kmeans(const StandardizedMatrix& m, std::size_t k, std::uint64_t seed) {
    ClusterModel model = kmeans(m.values, k, seed);
    model.row_ids = m.row_ids;
    model.stats = m.stats;
    return model;
}

double silhouette_score(const Matrix& points, const std::vector<std::size_t>& labels) {
    const std::size_t n = points.rows();
    if (n == 0) return 0.0;
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = labels[i];
        if (sizes[own] <= 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sums[labels[j]] += std::sqrt(squared_distance(points.row(i), points.row(j)));
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && sizes[c] > 0) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        if (!std::isfinite(b)) continue;
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

SelectKResult select_k(const Matrix& points, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
    const std::size_t n = points.rows();
    if (k_min < 2 || k_min > k_max || n < 1 || k_max > n - 1) {
        throw validation_error("bad_k_range", fmt::format("need 2 <= {} <= {} <= {}", k_min, k_max, n - 1));
    }
    SelectKResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= k_max; ++k) {
        const auto model = kmeans(points, k, seed);
        const double s = silhouette_score(points, model.assignments);
        result.silhouettes[k] = s;
        if (s > best) {
            best = s;
            result.k = k;
        }
    }
    return result;
}

std::vector<std::size_t> allocate_sample(const std::vector<std::size_t>& sizes, std::size_t n, std::size_t m_min) {
    const std::size_t k = sizes.size();
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (k == 0) throw validation_error("no_clusters");
    if (n < k * m_min) throw validation_error("infeasible_minimum", fmt::format("n={} < k*m_min={}", n, k * m_min));
    if (n > total) throw validation_error("sample_too_large", fmt::format("n={} > corpus size {}", n, total));

    std::vector<std::size_t> alloc(k);
    std::vector<std::size_t> remainder(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto q = static_cast<unsigned __int128>(n) * sizes[i];
        alloc[i] = static_cast<std::size_t>(q / total);
        remainder[i] = static_cast<std::size_t>(q % total);
        assigned += alloc[i];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t pos = 0; assigned < n; pos = (pos + 1) % k) {
        const std::size_t i = order[pos];
        if (alloc[i] < sizes[i]) {
            ++alloc[i];
            ++assigned;
        }
    }

    std::vector<std::size_t> floor(k);
    for (std::size_t i = 0; i < k; ++i) {
        floor[i] = std::min(m_min, sizes[i]);
        if (alloc[i] < floor[i]) {
            assigned += floor[i] - alloc[i];
            alloc[i] = floor[i];
        }
    }
    while (assigned > n) {
        std::size_t pick = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (alloc[i] > floor[i] && (pick == k || alloc[i] > alloc[pick])) pick = i;
        }
        --alloc[pick];
        --assigned;
    }
    return alloc;
}

std::vector<std::string> SampleSet::all_ids() const {
    std::vector<std::string> ids;
    for (const auto& c : per_cluster) ids.insert(ids.end(), c.begin(), c.end());
    return ids;
}

SampleSet stratified_sample(const ClusterModel& model, std::size_t n, std::size_t m_min, std::uint64_t seed) {
    const auto alloc = allocate_sample(model.cluster_sizes(), n, m_min);
    std::vector<std::vector<std::string>> members(model.k);
    for (std::size_t i = 0; i < model.assignments.size(); ++i) {
        members[model.assignments[i]].push_back(model.row_ids[i]);
    }
    Rng rng(seed);
    SampleSet s;
    s.n = n;
    s.seed = seed;
    s.m_min = m_min;
    s.per_cluster.resize(model.k);
    for (std::size_t c = 0; c < model.k; ++c) {
        auto& pool = members[c];
        std::sort(pool.begin(), pool.end());
        for (std::size_t t = 0; t < alloc[c]; ++t) {
            const auto j = t + static_cast<std::size_t>(rng.below(pool.size() - t));
            std::swap(pool[t], pool[j]);
        }
        s.per_cluster[c].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(alloc[c]));
    }
    return s;
}

std::map<std::string, std::size_t> AssignmentPlan::rating_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& [r, list] : lists) {
        for (const auto& a : list) ++counts[a];
    }
    return counts;
}

bool AssignmentPlan::contains(const std::string& respondent, const std::string& article) const {
    const auto it = lists.find(respondent);
    return it != lists.end() && std::find(it->second.begin(), it->second.end(), article) != it->second.end();
}

std::string respondent_id(std::size_t index) { return fmt::format("R{:04d}", index + 1); }

AssignmentPlan assign_to_respondents(const SampleSet& sample, std::size_t n_respondents, std::size_t m,
                                     std::uint64_t seed) {
    auto order = sample.all_ids();
    const std::size_t s = order.size();
    if (s == 0 || m == 0 || m > s || n_respondents == 0 || n_respondents * m < s) {
        throw validation_error("infeasible_plan",
                               fmt::format("sample={} respondents={} m={}", s, n_respondents, m));
    }
    Rng rng(seed);
    rng.shuffle(order);
    AssignmentPlan plan;
    plan.m = m;
    plan.seed = seed;
    for (std::size_t r = 0; r < n_respondents; ++r) {
        const auto id = respondent_id(r);
        plan.respondent_ids.push_back(id);
        auto& list = plan.lists[id];
        for (std::size_t j = 0; j < m; ++j) list.push_back(order[(r * m + j) % s]);
    }
    return plan;
}

void to_json(nlohmann::json& j, const ClusterModel& m) {
    nlohmann::json assignments = nlohmann::json::object();
    for (std::size_t i = 0; i < m.assignments.size(); ++i) assignments[m.row_ids[i]] = m.assignments[i];
    j = {{"k", m.k},
         {"seed", m.seed},
         {"inertia", m.inertia},
         {"iterations", m.iterations},
         {"inertia_history", m.inertia_history},
         {"centroids", m.centroids},
         {"standardization", m.stats},
         {"assignments", assignments}};
}

void from_json(const nlohmann::json& j, ClusterModel& m) {
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inertia = j.at("inertia").get<double>();
    m.iterations = j.value("iterations", std::size_t{0});
    m.inertia_history = j.value("inertia_history", std::vector<double>{});
    m.centroids = j.at("centroids").get<Matrix>();
    if (j.contains("standardization")) m.stats = j.at("standardization").get<ColumnStats>();
    m.row_ids.clear();
    m.assignments.clear();
    for (const auto& [id, c] : j.at("assignments").items()) {
        const auto cluster = c.get<std::size_t>();
        if (cluster >= m.k) throw validation_error("bad_cluster_model", "assignment out of range for " + id);
        m.row_ids.push_back(id);
        m.assignments.push_back(cluster);
    }
}

void to_json(nlohmann::json& j, const SampleSet& s) {
    j = {{"n", s.n}, {"seed", s.seed}, {"m_min", s.m_min}, {"clusters", s.per_cluster}};
}

void from_json(const nlohmann::json& j, SampleSet& s) {
    s.n = j.at("n").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.m_min = j.value("m_min", std::size_t{0});
    s.per_cluster = j.at("clusters").get<std::vector<std::vector<std::string>>>();
}

void to_json(nlohmann::json& j, const AssignmentPlan& p) {
    nlohmann::json respondents = nlohmann::json::array();
    for (const auto& id : p.respondent_ids) respondents.push_back({{"respondent_id", id}, {"articles", p.lists.at(id)}});
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [id, c] : p.rating_counts()) counts[id] = c;
    j = {{"m", p.m}, {"seed", p.seed}, {"respondents", respondents}, {"rating_counts", counts}};
}

void from_json(const nlohmann::json& j, AssignmentPlan& p) {
    p.m = j.at("m").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.respondent_ids.clear();
    p.lists.clear();
    for (const auto& r : j.at("respondents")) {
        const auto id = r.at("respondent_id").get<std::string>();
        p.respondent_ids.push_back(id);
        p.lists[id] = r.at("articles").get<std::vector<std::string>>();
    }
}

}  // namespace civicrank
