#include "tabsynth/error.hpp"

namespace tabsynth {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::io: return "io";
        case ErrorKind::data: return "data";
        case ErrorKind::config: return "config";
        case ErrorKind::version: return "version";
        case ErrorKind::plugin: return "plugin";
        case ErrorKind::sampling: return "sampling";
    }
    return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage: return 2;
        case ErrorKind::io: return 3;
        case ErrorKind::data: return 4;
        case ErrorKind::config: return 5;
        case ErrorKind::version: return 6;
        case ErrorKind::plugin: return 7;
        case ErrorKind::sampling: return 8;
    }
    return 1;
}

}  // namespace tabsynth
