#pragma once

#include "civicrank/enrich.hpp"
#include "civicrank/extrapolate.hpp"
#include "civicrank/rating_server.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace civicrank {

struct SimulationConfig {
    std::uint64_t seed = 0;
    double intercept = 0;
    std::map<std::string, double> weights;  // feature name -> weight
    double noise_p = 0;
    std::string base_time = "2025-01-01T00:00:00Z";
};

struct PipelineConfig {
    std::filesystem::path output_dir;
    std::string source_label;
    std::string ingested_at;

    // Inputs. Empty optional paths fall back to the defaults noted in out_path().
    std::filesystem::path articles;
    std::filesystem::path resources_dir;  // stopwords.txt, lexicon.tsv, clickbait/, profiles.json
    std::filesystem::path background_unigrams;  // empty: count the corpus headlines
    std::filesystem::path background_bigrams;
    std::filesystem::path instrument;  // empty: built-in instrument
    std::filesystem::path profiles;
    std::filesystem::path responses;
    std::filesystem::path battery;
    std::filesystem::path candidates;
    std::filesystem::path ratings_log;
    std::filesystem::path static_dir;
    std::filesystem::path fixtures_dir;
    std::filesystem::path cache_dir;

    EnrichConfig enrich;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    std::uint64_t cluster_seed = 0;
    std::size_t sample_n = 0;
    std::size_t m_min = 0;
    std::uint64_t sample_seed = 0;
    std::size_t n_respondents = 0;
    std::size_t m = 0;
    std::uint64_t plan_seed = 0;
    std::size_t r_min = 3;

    MethodConfig method;
    std::size_t cv_folds = 5;
    std::uint64_t cv_seed = 0;
    bool per_profile = false;

    std::string rerank_profile = "engaged";
    std::size_t rerank_k = 10;

    SimulationConfig simulate;
    ServiceOptions service;

    bool offline = false;
    double requests_per_second = 10.0;
    int max_attempts = 3;
    std::string user_agent = "civicrank/0.1 (news value enrichment)";

    // output_dir / name
    std::filesystem::path out_path(std::string_view name) const;

    // Relative paths resolve against `base` (normally the config's directory).
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base);
    static PipelineConfig load(const std::filesystem::path& path);
};

// Directory holding the shipped resources: $CIVICRANK_DATA_DIR if set, else
// the directory configured at build time.
std::filesystem::path default_resources_dir();

inline constexpr std::string_view kCommands[] = {
    "ingest", "enrich",   "cluster",   "sample", "plan",  "export", "serve", "ingest-responses",
    "aggregate", "fit", "score", "rerank", "simulate-responses"};

// Runs one pipeline stage, writes its artifacts under output_dir and prints a
// JSON summary line to `out`. Returns the process exit status: 0 on success,
// 2 on validation errors, 3 when a fixture is missing in offline mode, 1
// otherwise. Errors are printed to `err` as {"error", "detail"}.
int run_command(std::string_view name, const PipelineConfig& cfg, std::ostream& out, std::ostream& err);

// Same, but throws instead of mapping errors to exit codes. Returns the
// summary; `out` only receives the serve command's "listening" line.
nlohmann::json execute(std::string_view name, const PipelineConfig& cfg, std::ostream& out);
nlohmann::json execute(std::string_view name, const PipelineConfig& cfg);

int exit_code_for(const std::exception& e);

// Synthetic latent value used by simulate-responses:
// clip(intercept + sum of weight * feature, 0, 1).
double latent_value(const FeatureVector& f, const SimulationConfig& sim);

}  // namespace civicrank
