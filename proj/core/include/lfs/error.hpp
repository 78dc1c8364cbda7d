#pragma once

#include <stdexcept>
#include <string>

namespace lfs {

/// A precondition of a library call was violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data (dataset files, pair sets) could not be parsed or is inconsistent.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A serialized checkpoint is malformed: bad magic, truncated, or shape-inconsistent.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested false-acceptance rate cannot be resolved with the available negatives.
class FarUnresolvable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw ContractError(message);
    }
}

} // namespace lfs
