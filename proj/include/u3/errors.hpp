#pragma once

#include <stdexcept>
#include <string>

namespace u3 {

/// Bad user-facing input (CLI exit code 2).
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NotFundamental : InvalidInput {
    using InvalidInput::InvalidInput;
};
struct NotInert : InvalidInput {
    using InvalidInput::InvalidInput;
};

/// Enumeration would exceed the configured cell budget (CLI exit code 3).
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A valuation or congruence was queried below the known precision.
struct PrecisionLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotAUnit : std::domain_error {
    using std::domain_error::domain_error;
};
struct NotNormOne : std::domain_error {
    using std::domain_error::domain_error;
};
struct NoInvariantVector : std::domain_error {
    using std::domain_error::domain_error;
};
struct PoleInGamma : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace u3
