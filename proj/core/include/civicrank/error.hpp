#pragma once

#include <stdexcept>
#include <string>

namespace civicrank {

// Broad failure class. The CLI maps these onto exit codes.
enum class ErrorKind {
    validation,  // bad input or infeasible parameters (exit 2)
    offline,     // fixture missing in offline mode (exit 3)
    retriable,   // transient network / HTTP failure
    not_found,   // unknown respondent or article (HTTP 404)
    io,          // unreadable or unwritable file
};

// All library failures carry a short machine-readable code such as
// "infeasible_minimum" plus free-form detail text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& detail = {})
        : std::runtime_error(detail.empty() ? code : code + ": " + detail),
          kind_(kind),
          code_(std::move(code)),
          detail_(detail) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string code_;
    std::string detail_;
};

inline Error validation_error(std::string code, const std::string& detail = {}) {
    return Error(ErrorKind::validation, std::move(code), detail);
}

inline Error io_error(std::string code, const std::string& detail = {}) {
    return Error(ErrorKind::io, std::move(code), detail);
}

}  // namespace civicrank
