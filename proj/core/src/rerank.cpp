#include "civicrank/rerank.hpp"

#include "civicrank/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace civicrank {

void ProfileWeights::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw validation_error("bad_lambda", "lambda must be in [0, 1]");
    if (sub_weights.empty()) return;
    double sum = 0.0;
    for (const auto& [k, v] : sub_weights) {
        if (!(v >= 0.0)) throw validation_error("bad_sub_weight", k);
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw validation_error("bad_sub_weights", "sub-dimension weights must sum to 1");
}

std::vector<std::string> RankedList::ids() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.article_id);
    return out;
}

double civic_score(const Candidate& c, const ProfileWeights& w) {
    if (w.sub_weights.empty()) return c.civic;
    double s = 0.0;
    for (const auto& [dim, weight] : w.sub_weights) {
        const auto it = c.sub_dimensions.find(dim);
        if (it == c.sub_dimensions.end()) {
            throw validation_error("missing_sub_dimension", c.article_id + ": " + dim);
        }
        s += weight * it->second;
    }
    return s;
}

RankedList rerank(const std::vector<Candidate>& candidates, const ProfileWeights& w) {
    if (candidates.empty()) throw validation_error("empty_candidates");
    w.validate();
    double lo = candidates.front().relevance;
    double hi = lo;
    for (const auto& c : candidates) {
        lo = std::min(lo, c.relevance);
        hi = std::max(hi, c.relevance);
    }
    RankedList out;
    out.weights = w;
    for (const auto& c : candidates) {
        RankedItem it;
        it.article_id = c.article_id;
        it.relevance_norm = hi > lo ? (c.relevance - lo) / (hi - lo) : 0.5;
        it.civic = civic_score(c, w);
        it.score = (1.0 - w.lambda) * it.relevance_norm + w.lambda * it.civic;
        out.items.push_back(std::move(it));
    }
    std::sort(out.items.begin(), out.items.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.article_id < b.article_id;
    });
    return out;
}

double kendall_tau(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) throw validation_error("id_set_mismatch");
    std::map<std::string, std::size_t> pos_b;
    for (std::size_t i = 0; i < b.size(); ++i) pos_b[b[i]] = i;
    if (pos_b.size() != b.size()) throw validation_error("duplicate_id");
    std::vector<std::size_t> p;
    p.reserve(a.size());
    for (const auto& id : a) {
        const auto it = pos_b.find(id);
        if (it == pos_b.end()) throw validation_error("id_set_mismatch", id);
        p.push_back(it->second);
    }
    const std::size_t n = p.size();
    if (n < 2) return 1.0;
    long long concordant = 0;
    long long discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (p[i] < p[j]) ++concordant;
            else ++discordant;
        }
    }
    const auto pairs = static_cast<double>(n * (n - 1) / 2);
    return static_cast<double>(concordant - discordant) / pairs;
}

RankShift compare_rankings(const std::vector<std::string>& base, const std::vector<std::string>& reranked,
                           const std::map<std::string, double>& civic, std::size_t k) {
    RankShift s;
    s.kendall_tau = kendall_tau(base, reranked);
    s.k = std::min(k, base.size());
    if (s.k == 0) return s;
    auto mean_top = [&](const std::vector<std::string>& ids) {
        double sum = 0.0;
        for (std::size_t i = 0; i < s.k; ++i) {
            const auto it = civic.find(ids[i]);
            if (it == civic.end()) throw validation_error("missing_civic", ids[i]);
            sum += it->second;
        }
        return sum / static_cast<double>(s.k);
    };
    s.civic_uplift = mean_top(reranked) - mean_top(base);
    return s;
}

std::vector<std::string> argsort_desc(const std::vector<std::string>& ids, const std::vector<double>& values) {
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return ids[a] < ids[b];
    });
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : order) out.push_back(ids[i]);
    return out;
}

void to_json(nlohmann::json& j, const Candidate& c) {
    j = {{"article_id", c.article_id}, {"relevance", c.relevance}, {"civic", c.civic}};
    if (!c.sub_dimensions.empty()) j["sub_dimensions"] = c.sub_dimensions;
}

void from_json(const nlohmann::json& j, Candidate& c) {
    c.article_id = j.at("article_id").get<std::string>();
    c.relevance = j.at("relevance").get<double>();
    c.civic = j.value("civic", 0.0);
    if (!(c.civic >= 0.0 && c.civic <= 1.0)) throw validation_error("bad_civic", c.article_id);
    if (j.contains("sub_dimensions")) c.sub_dimensions = j.at("sub_dimensions").get<std::map<std::string, double>>();
}

void to_json(nlohmann::json& j, const ProfileWeights& w) {
    j = {{"profile", w.profile}, {"lambda", w.lambda}, {"sub_weights", w.sub_weights}};
}

void from_json(const nlohmann::json& j, ProfileWeights& w) {
    w.profile = j.value("profile", std::string());
    w.lambda = j.at("lambda").get<double>();
    if (j.contains("sub_weights")) w.sub_weights = j.at("sub_weights").get<std::map<std::string, double>>();
    w.validate();
}

void to_json(nlohmann::json& j, const RankedList& r) {
    j = nlohmann::json::object();
    j["profile"] = r.weights;
    auto& items = j["items"] = nlohmann::json::array();
    for (const auto& it : r.items) {
        items.push_back({{"article_id", it.article_id},
                         {"score", it.score},
                         {"relevance_norm", it.relevance_norm},
                         {"civic", it.civic}});
    }
}

nlohmann::json shift_to_json(const RankShift& s) {
    return {{"kendall_tau", s.kendall_tau}, {"civic_uplift", s.civic_uplift}, {"k", s.k}};
}

std::map<std::string, ProfileWeights> load_profiles(const nlohmann::json& j) {
    std::map<std::string, ProfileWeights> out;
    for (const auto& [name, body] : j.at("profiles").items()) {
        if (!name.empty() && name.front() == '_') continue;
        auto w = body.get<ProfileWeights>();
        w.profile = name;
        out.emplace(name, std::move(w));
    }
    return out;
}

}  // namespace civicrank
