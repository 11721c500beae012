#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hazeforge {

#ifdef HAZEFORGE_REAL32
using real = float;
#else
using real = double;
#endif

// Error taxonomy surfaced by the CLI as "CODE: message" single lines.
// code() strings are stable machine-parsable identifiers.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline Error dim_error(const std::string& msg) { return Error("E_DIM", msg); }
inline Error io_error(const std::string& msg) { return Error("E_IO", msg); }
inline Error format_error(const std::string& msg) { return Error("E_FORMAT", msg); }
inline Error config_error(const std::string& msg) { return Error("E_CONFIG", msg); }
inline Error numeric_error(const std::string& msg) { return Error("E_NUMERIC", msg); }
inline Error state_error(const std::string& msg) { return Error("E_STATE", msg); }

// Worker-thread cap from HAZEFORGE_THREADS; 0 means serial deterministic mode.
int thread_cap();

}  // namespace hazeforge
