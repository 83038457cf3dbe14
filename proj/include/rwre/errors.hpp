#pragma once

#include <stdexcept>

namespace rwre {

// Budgets are explicit and failures loud: an exact claim that would require
// exceeding a node/step/memory cap throws instead of silently truncating.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotNormalized : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrivialFixedPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rwre
