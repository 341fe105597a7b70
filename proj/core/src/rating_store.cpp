#include "civicrank/rating_store.hpp"

#include "civicrank/date.hpp"
#include "civicrank/error.hpp"
#include "civicrank/text.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace civicrank {

namespace {

std::string now_timestamp() {
    return format_timestamp(std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()));
}

nlohmann::json battery_to_json(const BatteryResponse& b) {
    return {{"type", "battery"}, {"respondent_id", b.respondent_id}, {"scores", b.scores},
            {"submitted_at", b.submitted_at}};
}

BatteryResponse battery_from_json(const nlohmann::json& j) {
    BatteryResponse b;
    b.respondent_id = j.at("respondent_id").get<std::string>();
    b.scores = j.at("scores").get<std::map<std::string, int>>();
    b.submitted_at = j.at("submitted_at").get<std::string>();
    return b;
}

struct ParsedLog {
    LogContents contents;
    std::size_t good_bytes = 0;  // prefix length made of complete, valid lines
};

ParsedLog parse_log(const std::string& data, const std::filesystem::path& path) {
    ParsedLog out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
        ++line_no;
        const auto nl = data.find('\n', pos);
        const bool complete = nl != std::string::npos;
        const std::string line = data.substr(pos, complete ? nl - pos : std::string::npos);
        const std::size_t next = complete ? nl + 1 : data.size();
        if (trim(line).empty()) {
            if (complete) out.good_bytes = next;
            pos = next;
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        bool ok = !j.is_discarded() && j.is_object();
        if (ok) {
            try {
                if (j.value("type", std::string("rating")) == "battery") {
                    out.contents.batteries.push_back(battery_from_json(j));
                } else {
                    out.contents.ratings.push_back(j.get<RatingResponse>());
                }
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) {
            if (!complete) break;  // torn tail
            throw Error(ErrorKind::io, "corrupt_log", path.string() + ":" + std::to_string(line_no));
        }
        if (!complete) break;  // valid JSON but no newline: treat as torn as well
        out.good_bytes = next;
        pos = next;
    }
    return out;
}

}  // namespace

LogContents read_rating_log(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return parse_log(read_file(path), path).contents;
}

RatingStore::RatingStore(AssignmentPlan plan, InstrumentSpec spec, std::filesystem::path log_path)
    : plan_(std::move(plan)), spec_(std::move(spec)), log_path_(std::move(log_path)) {
    spec_.validate();
    if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
    replay();
    fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw io_error("open_failed", log_path_.string() + ": " + std::strerror(errno));
}

RatingStore::~RatingStore() {
    if (fd_ >= 0) ::close(fd_);
}

void RatingStore::replay() {
    if (!std::filesystem::exists(log_path_)) return;
    const std::string data = read_file(log_path_);
    const auto parsed = parse_log(data, log_path_);
    if (parsed.good_bytes < data.size()) {
        std::filesystem::resize_file(log_path_, parsed.good_bytes);
    }
    for (const auto& r : parsed.contents.ratings) ratings_.try_emplace({r.respondent_id, r.article_id}, r);
    for (const auto& b : parsed.contents.batteries) batteries_.try_emplace(b.respondent_id, b);
}

void RatingStore::append_line(const std::string& line) {
    const std::string buf = line + "\n";
    std::size_t off = 0;
    while (off < buf.size()) {
        const auto n = ::write(fd_, buf.data() + off, buf.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw io_error("write_failed", std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw io_error("fsync_failed", std::strerror(errno));
}

void RatingStore::require_respondent(const std::string& respondent_id) const {
    if (plan_.lists.count(respondent_id) == 0) throw Error(ErrorKind::not_found, "unknown_respondent", respondent_id);
}

std::optional<std::string> RatingStore::next_assignment(const std::string& respondent_id) const {
    require_respondent(respondent_id);
    std::shared_lock lock(mu_);
    for (const auto& a : plan_.lists.at(respondent_id)) {
        if (ratings_.count({respondent_id, a}) == 0) return a;
    }
    return std::nullopt;
}

Progress RatingStore::progress(const std::string& respondent_id) const {
    require_respondent(respondent_id);
    const auto& list = plan_.lists.at(respondent_id);
    Progress p{respondent_id, 0, list.size()};
    std::shared_lock lock(mu_);
    for (const auto& a : list) p.rated += ratings_.count({respondent_id, a});
    return p;
}

SubmitOutcome RatingStore::submit(RatingResponse r) {
    require_respondent(r.respondent_id);
    SubmitOutcome out;
    if (!plan_.contains(r.respondent_id, r.article_id)) {
        out.error = "not_in_plan";
        return out;
    }
    out.fields = check_scores(r.scores, spec_.rating_keys(), spec_);
    if (r.submitted_at.empty()) {
        r.submitted_at = now_timestamp();
    } else {
        if (!parse_timestamp(r.submitted_at)) out.fields.emplace_back("submitted_at", "bad_timestamp");
    }
    if (!out.fields.empty()) {
        out.error = "invalid_scores";
        return out;
    }

    std::unique_lock lock(mu_);
    const auto key = std::make_pair(r.respondent_id, r.article_id);
    if (const auto it = ratings_.find(key); it != ratings_.end()) {
        out.status = SubmitOutcome::Status::duplicate;
        out.stored = it->second;
        return out;
    }
    append_line(nlohmann::json(r).dump());
    ratings_.emplace(key, r);
    out.status = SubmitOutcome::Status::accepted;
    out.stored = std::move(r);
    return out;
}

SubmitOutcome RatingStore::submit_battery(BatteryResponse b) {
    require_respondent(b.respondent_id);
    SubmitOutcome out;
    std::vector<std::string> keys;
    for (const auto& item : spec_.battery) keys.push_back(item.key);
    out.fields = check_scores(b.scores, keys, spec_);
    if (b.submitted_at.empty()) b.submitted_at = now_timestamp();
    if (!out.fields.empty()) {
        out.error = "invalid_scores";
        return out;
    }
    std::unique_lock lock(mu_);
    if (batteries_.count(b.respondent_id) != 0) {
        out.status = SubmitOutcome::Status::duplicate;
        return out;
    }
    append_line(battery_to_json(b).dump());
    batteries_.emplace(b.respondent_id, b);
    out.status = SubmitOutcome::Status::accepted;
    return out;
}

std::optional<RatingResponse> RatingStore::find(const std::string& respondent_id, const std::string& article_id) const {
    std::shared_lock lock(mu_);
    const auto it = ratings_.find({respondent_id, article_id});
    if (it == ratings_.end()) return std::nullopt;
    return it->second;
}

bool RatingStore::has_battery(const std::string& respondent_id) const {
    std::shared_lock lock(mu_);
    return batteries_.count(respondent_id) != 0;
}

std::vector<RatingResponse> RatingStore::all_ratings() const {
    std::shared_lock lock(mu_);
    std::vector<RatingResponse> out;
    out.reserve(ratings_.size());
    for (const auto& [k, r] : ratings_) out.push_back(r);
    return out;
}

std::vector<BatteryResponse> RatingStore::all_batteries() const {
    std::shared_lock lock(mu_);
    std::vector<BatteryResponse> out;
    for (const auto& [k, b] : batteries_) out.push_back(b);
    return out;
}

std::size_t RatingStore::size() const {
    std::shared_lock lock(mu_);
    return ratings_.size();
}

}  // namespace civicrank
