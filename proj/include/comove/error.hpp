#pragma once

#include <stdexcept>
#include <string>

namespace comove {

/// Input that violates a documented precondition (too short, mismatched, non-finite...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Design matrix without full column rank. `column()` names the first regressor
/// that lies (numerically) in the span of the preceding ones.
class RankDeficient : public std::runtime_error {
public:
    RankDeficient(std::string column, const std::string& what)
        : std::runtime_error(what), column_(std::move(column)) {}

    [[nodiscard]] const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

/// Malformed input file (missing, bad header, duplicate dates, empty series).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Run configuration rejected before any computation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace comove
