#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace t2s {

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant. Carries every issue found,
/// not just the first.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> issues);
    ValidationError(const std::string& issue) : ValidationError(std::vector<std::string>{issue}) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

/// Caller broke an operation's precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The rendered prompt does not fit even with zero exemplars.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(std::size_t overflow, std::size_t limit);
    std::size_t overflow() const noexcept { return overflow_; }

private:
    std::size_t overflow_;
};

/// A similarity index has no vector for a pool member.
class IndexIncomplete : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace t2s
