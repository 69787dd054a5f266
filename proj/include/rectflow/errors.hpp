#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rectflow {

// Error taxonomy shared across the library. The CLI maps each class to a
// distinct exit code (see tools/rectflow_main.cpp).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation called before its required state exists (e.g. backward with no
// recorded forward pass).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stage-role misuse: one-step model where a continuous flow is required, or
// the reverse.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Artifact produced by a different stage/config than the one it is claimed
// to belong to.
struct LineageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what, std::ptrdiff_t param_index = -1)
        : std::runtime_error(what), param_index_(param_index) {}
    std::ptrdiff_t param_index() const noexcept { return param_index_; }

private:
    std::ptrdiff_t param_index_;
};

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, int step)
        : std::runtime_error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace rectflow
