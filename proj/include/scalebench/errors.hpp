#pragma once

#include <stdexcept>
#include <string>

namespace scalebench {

/// Base class for every error thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed inputs: bad sizes, bad patterns, inconsistent plan configs.
class invalid_spec_error : public error {
public:
    using error::error;
};

/// Allocation failures and exceeded memory budgets.
class resource_error : public error {
public:
    using error::error;
};

/// A backend was asked for a primitive it does not implement.
class capability_error : public error {
public:
    using error::error;
};

/// A worker failed while executing a parallel region or timed body.
class execution_error : public error {
public:
    using error::error;
};

/// Missing baselines, mismatched grids and other analysis preconditions.
class analysis_error : public error {
public:
    using error::error;
};

/// Result-file problems: unsupported versions, duplicate point keys.
class schema_error : public error {
public:
    using error::error;
};

/// Registry misuse, e.g. duplicate kernel ids.
class registry_error : public error {
public:
    using error::error;
};

} // namespace scalebench
