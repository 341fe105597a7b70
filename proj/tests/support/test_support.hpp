#pragma once

#include "civicrank/date.hpp"
#include "civicrank/enrich.hpp"
#include "civicrank/matrix.hpp"
#include "civicrank/rng.hpp"
#include "civicrank/wikiclient.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace civicrank::testing {

std::filesystem::path data_dir();

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& s);

// In-memory resolver and pageview source.
class FakeWiki : public EntityResolver, public PageviewSource {
public:
    std::map<std::string, std::string> titles;          // surface -> title
    std::map<std::string, std::map<Date, std::int64_t>> views;  // title -> day -> views

    WikiEntity resolve_entity(std::string_view surface) override;
    PageviewSeries fetch_daily_pageviews(std::string_view title, Date start, Date end) override;
};

// Gaussian blobs around the given centers; labels returned alongside.
Matrix make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double std_dev,
                  std::uint64_t seed, std::vector<std::size_t>& labels);

// ---------------------------------------------------------------------------
// Independent oracles

// PMI minimum over adjacent pairs by direct enumeration of the background
// sentences (no BackgroundModel involved).
double brute_force_surprise(const std::vector<std::vector<std::string>>& background,
                            const std::vector<std::string>& headline_words, double floor);

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b);

struct RidgeOracle {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<double> weights;
    double intercept = 0;
};

// Standardize (population std, constant columns zeroed), center y, solve
// (ZᵀZ + αI) w = Zᵀ(y - ȳ) through gauss_solve.
RidgeOracle brute_force_ridge(const std::vector<std::vector<double>>& X, const std::vector<double>& y, double alpha);

// ||y - ȳ - Zw||² + α||w||² in the oracle's standardized space.
double ridge_loss(const RidgeOracle& o, const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                  const std::vector<double>& w, double intercept, double alpha);

double brute_force_silhouette(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& labels);

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace civicrank::testing
