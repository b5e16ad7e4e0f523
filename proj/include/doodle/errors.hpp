#pragma once

#include <stdexcept>
#include <string>

namespace doodle {

// I/O failures (missing files, unwritable paths, short reads).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed on-disk data (bad magic, bad version, truncated container).
struct DataFormatError : std::runtime_error {
    explicit DataFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss/targets/gradients during optimization.
struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation called on an object in the wrong state (e.g. stepping a finished episode).
struct InvalidState : std::logic_error {
    explicit InvalidState(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace doodle
