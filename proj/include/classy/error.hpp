#pragma once

#include <stdexcept>
#include <string>

namespace classy {

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataErrorKind {
    missing_file,
    missing_column,
    non_numeric,
    ragged_row,
    single_class,
    empty,
    dimension_mismatch,
    empty_part,
    not_stochastic,
    missing_member,
};

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    DataError(DataErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {
    }

    DataErrorKind kind() const noexcept { return kind_; }

private:
    DataErrorKind kind_;
};

} // namespace classy
