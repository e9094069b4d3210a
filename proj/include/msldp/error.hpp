#pragma once

#include <stdexcept>
#include <string>

namespace msldp {

/// Error raised by every module. `kind` is a stable identifier such as
/// "ZeroNetChange" or "ScalingViolation"; `what()` carries the detail.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& detail)
        : std::runtime_error(kind + ": " + detail), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

}  // namespace msldp
