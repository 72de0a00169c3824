#pragma once

#include <stdexcept>
#include <string>

namespace mrcp {

// Invalid arguments / preconditions (bad quantile level, empty index set, ...).
struct argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Model fitting failures: separation, rank deficiency, singular information.
struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Empirical-likelihood solver could not take a feasible descent step.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iteration budget exhausted before reaching tolerance.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input violates a documented consistency rule (e.g. r=1 with missing y).
struct consistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mrcp
