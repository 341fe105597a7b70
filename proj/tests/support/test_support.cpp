#include "test_support.hpp"

#include "civicrank/error.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>

namespace fs = std::filesystem;

namespace civicrank::testing {

fs::path data_dir() { return CIVICRANK_TEST_DATA_DIR; }

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("civicrank-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_text(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << s;
}

WikiEntity FakeWiki::resolve_entity(std::string_view surface) {
    const auto it = titles.find(std::string(surface));
    if (it == titles.end()) return {std::string(surface), "", false};
    return {std::string(surface), it->second, true};
}

PageviewSeries FakeWiki::fetch_daily_pageviews(std::string_view title, Date start, Date end) {
    PageviewSeries s{std::string(title), start, end, {}};
    const auto& days = views[std::string(title)];
    for (Date d = start; d <= end; d = d.plus_days(1)) {
        const auto it = days.find(d);
        s.daily_views.push_back(it == days.end() ? 0 : it->second);
    }
    return s;
}

Matrix make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double std_dev,
                  std::uint64_t seed, std::vector<std::size_t>& labels) {
    Rng rng(seed);
    const std::size_t d = centers.front().size();
    Matrix m(centers.size() * per_blob, d);
    labels.clear();
    std::size_t r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t i = 0; i < per_blob; ++i, ++r) {
            for (std::size_t j = 0; j < d; ++j) m(r, j) = centers[c][j] + std_dev * rng.normal();
            labels.push_back(c);
        }
    }
    return m;
}

double brute_force_surprise(const std::vector<std::vector<std::string>>& background,
                            const std::vector<std::string>& headline_words, double floor) {
    if (headline_words.size() < 2) return 0.0;
    double lowest = 0.0;
    for (std::size_t i = 0; i + 1 < headline_words.size(); ++i) {
        const auto& a = headline_words[i];
        const auto& b = headline_words[i + 1];
        std::uint64_t nu = 0, nb = 0, ca = 0, cb = 0, cab = 0;
        for (const auto& s : background) {
            for (std::size_t t = 0; t < s.size(); ++t) {
                ++nu;
                ca += s[t] == a;
                cb += s[t] == b;
                if (t + 1 < s.size()) {
                    ++nb;
                    cab += s[t] == a && s[t + 1] == b;
                }
            }
        }
        double v = floor;
        if (cab > 0 && ca > 0 && cb > 0) {
            const double p_ab = static_cast<double>(cab) / static_cast<double>(nb);
            const double p_a = static_cast<double>(ca) / static_cast<double>(nu);
            const double p_b = static_cast<double>(cb) / static_cast<double>(nu);
            v = std::log2(p_ab / (p_a * p_b));
        }
        lowest = i == 0 ? v : std::min(lowest, v);
    }
    return std::max(0.0, -lowest);
}

std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        }
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * x[c];
        x[i] = s / A[i][i];
    }
    return x;
}

namespace {

std::vector<std::vector<double>> oracle_z(const RidgeOracle& o, const std::vector<std::vector<double>>& X) {
    auto Z = X;
    for (auto& row : Z) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = o.stds[c] < 1e-12 ? 0.0 : (row[c] - o.means[c]) / o.stds[c];
        }
    }
    return Z;
}

}  // namespace

RidgeOracle brute_force_ridge(const std::vector<std::vector<double>>& X, const std::vector<double>& y, double alpha) {
    const std::size_t n = X.size();
    const std::size_t d = X.front().size();
    RidgeOracle o;
    o.means.assign(d, 0.0);
    o.stds.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        for (const auto& row : X) o.means[c] += row[c];
        o.means[c] /= static_cast<double>(n);
        for (const auto& row : X) o.stds[c] += (row[c] - o.means[c]) * (row[c] - o.means[c]);
        o.stds[c] = std::sqrt(o.stds[c] / static_cast<double>(n));
    }
    const auto Z = oracle_z(o, X);
    o.intercept = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
    std::vector<double> b(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < d; ++p) {
            b[p] += Z[i][p] * (y[i] - o.intercept);
            for (std::size_t q = 0; q < d; ++q) A[p][q] += Z[i][p] * Z[i][q];
        }
    }
    for (std::size_t p = 0; p < d; ++p) A[p][p] += alpha;
    o.weights = gauss_solve(A, b);
    return o;
}

double ridge_loss(const RidgeOracle& o, const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                  const std::vector<double>& w, double intercept, double alpha) {
    const auto Z = oracle_z(o, X);
    double loss = 0.0;
    for (std::size_t i = 0; i < Z.size(); ++i) {
        double f = intercept;
        for (std::size_t c = 0; c < w.size(); ++c) f += Z[i][c] * w[c];
        loss += (y[i] - f) * (y[i] - f);
    }
    for (double v : w) loss += alpha * v * v;
    return loss;
}

double brute_force_silhouette(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& labels) {
    auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(s);
    };
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            sum[labels[j]] += dist(pts[i], pts[j]);
            ++cnt[labels[j]];
        }
        if (cnt[labels[i]] == 0) continue;  // singleton scores 0
        const double a = sum[labels[i]] / static_cast<double>(cnt[labels[i]]);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != labels[i] && cnt[c] > 0) b = std::min(b, sum[c] / static_cast<double>(cnt[c]));
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(pts.size());
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::map<std::pair<std::size_t, std::size_t>, double> nij;
    std::map<std::size_t, double> ai, bj;
    for (std::size_t i = 0; i < a.size(); ++i) {
        nij[{a[i], b[i]}] += 1;
        ai[a[i]] += 1;
        bj[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double sum_ij = 0, sum_a = 0, sum_b = 0;
    for (const auto& [k, v] : nij) sum_ij += c2(v);
    for (const auto& [k, v] : ai) sum_a += c2(v);
    for (const auto& [k, v] : bj) sum_b += c2(v);
    const double expected = sum_a * sum_b / c2(static_cast<double>(a.size()));
    const double max_index = (sum_a + sum_b) / 2;
    if (max_index == expected) return 1.0;
    return (sum_ij - expected) / (max_index - expected);
}

}  // namespace civicrank::testing
