#pragma once

#include <stdexcept>
#include <string>

namespace dmdp {

/// Base class for all library errors. The category maps onto CLI exit codes.
class Error : public std::runtime_error {
public:
    enum class Category { validation = 2, budget = 3, numeric = 4, structural = 5 };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

/// Malformed model or argument: non-stochastic rows, bad indices, schema violations.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(Category::validation, what) {}
};

/// An enumeration or state space exceeds its configured budget.
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what) : Error(Category::budget, what) {}
};

/// A linear solve or iteration failed to meet its accuracy contract.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(Category::numeric, what) {}
};

/// Input violates a structural precondition (e.g. a graph without complement transitivity).
class StructuralError : public Error {
public:
    explicit StructuralError(const std::string& what) : Error(Category::structural, what) {}
};

} // namespace dmdp
