#pragma once

#include <stdexcept>
#include <string>

namespace ergozeta {

/// Argument outside the domain of a map or operator.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Evaluation requested at the pole z = 1 of the zeta function.
class PoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative or adaptive procedure stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid command line or configuration file contents.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace ergozeta
