#pragma once

#include "civicrank/cluster.hpp"
#include "civicrank/survey.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace civicrank {

struct Progress {
    std::string respondent_id;
    std::size_t rated = 0;
    std::size_t total = 0;

    double fraction() const { return total == 0 ? 1.0 : static_cast<double>(rated) / static_cast<double>(total); }
};

struct SubmitOutcome {
    enum class Status { accepted, duplicate, rejected };
    Status status = Status::rejected;
    std::string error;  // set when rejected
    std::vector<std::pair<std::string, std::string>> fields;  // (field, reason)
    RatingResponse stored;  // the persisted response for accepted and duplicate
};

// Ratings and battery answers persisted as an append-only JSON Lines log.
// Every line is written and fsync'd before the submit call returns, so an
// acknowledged submission survives a crash. On open the log is replayed; a
// torn final line from an interrupted write is cut off.
class RatingStore {
public:
    RatingStore(AssignmentPlan plan, InstrumentSpec spec, std::filesystem::path log_path);
    ~RatingStore();

    RatingStore(const RatingStore&) = delete;
    RatingStore& operator=(const RatingStore&) = delete;

    // Throws Error(not_found, "unknown_respondent").
    std::optional<std::string> next_assignment(const std::string& respondent_id) const;
    Progress progress(const std::string& respondent_id) const;

    // First write wins: a second submission for the same pair is reported as
    // a duplicate and leaves the stored response untouched. A missing
    // submitted_at is stamped with the current UTC time.
    SubmitOutcome submit(RatingResponse r);
    SubmitOutcome submit_battery(BatteryResponse b);

    std::optional<RatingResponse> find(const std::string& respondent_id, const std::string& article_id) const;
    bool has_battery(const std::string& respondent_id) const;

    std::vector<RatingResponse> all_ratings() const;  // sorted by (respondent, article)
    std::vector<BatteryResponse> all_batteries() const;
    std::size_t size() const;

    const AssignmentPlan& plan() const { return plan_; }
    const InstrumentSpec& instrument() const { return spec_; }
    const std::filesystem::path& log_path() const { return log_path_; }

private:
    void replay();
    void append_line(const std::string& line);
    void require_respondent(const std::string& respondent_id) const;

    AssignmentPlan plan_;
    InstrumentSpec spec_;
    std::filesystem::path log_path_;
    int fd_ = -1;

    mutable std::shared_mutex mu_;
    std::map<std::pair<std::string, std::string>, RatingResponse> ratings_;
    std::map<std::string, BatteryResponse> batteries_;
};

struct LogContents {
    std::vector<RatingResponse> ratings;  // in log order
    std::vector<BatteryResponse> batteries;
};

// Parses a ratings log without opening it for writing. A torn final line is
// ignored; any other malformed line throws "corrupt_log".
LogContents read_rating_log(const std::filesystem::path& path);

}  // namespace civicrank
