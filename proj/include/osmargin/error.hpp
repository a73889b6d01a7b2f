#ifndef OSMARGIN_ERROR_HPP
#define OSMARGIN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace osm {

// A precondition stated in a function contract was violated by the caller
// (bad label index, shape mismatch, empty input, ...).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed input file (CSV, config); message carries file and line context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A CTC target that no frame alignment of the given length can produce.
struct InfeasibleTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exhaustive computation whose search space exceeds the allowed budget.
struct SizeLimitExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or incomplete experiment configuration; the CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace osm

#endif
