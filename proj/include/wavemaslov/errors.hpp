#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wavemaslov {

// Runtime failure with a stable machine-readable code ("NonConvergence",
// "TailTooFat", ...). The CLI maps codes to exit status and stderr text.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void raise(const std::string& code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace wavemaslov
