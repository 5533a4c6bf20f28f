#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tabsynth {

// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
    usage,
    io,
    data,
    config,
    version,
    plugin,
    sampling,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

std::string_view to_string(ErrorKind kind) noexcept;
int exit_code(ErrorKind kind) noexcept;

}  // namespace tabsynth
