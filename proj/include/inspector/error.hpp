#pragma once

#include <stdexcept>
#include <string>

namespace inspector {

enum class ErrorKind {
    invalid_argument,
    dimension_mismatch,
    format,
    truncated,
    io,
    not_found,
    labels_not_found,
    integrity,
    unsupported_version,
    degenerate_labels,
    non_finite,
};

const char* to_string(ErrorKind kind);

// Every failure surfaced by the library carries a machine-readable kind so the
// CLI can emit structured errors without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace inspector
