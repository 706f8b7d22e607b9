// Copyright 2026 The flowpilot Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flowpilot {

/// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// A peer answered, but not in the documented shape.
class ProtocolError : public Error
{
public:
    using Error::Error;
};

/// Transport-level failure after all retries were spent.
class TransportError : public Error
{
public:
    TransportError(std::string const & what, int attempts)
    : Error(what + " (after " + std::to_string(attempts) + " attempts)")
    , attempts_(attempts)
    {}

    [[nodiscard]] int attempts() const noexcept { return attempts_; }
    [[nodiscard]] bool retryable() const noexcept { return true; }

private:
    int attempts_;
};

/// A generation backend could not serve a request (no rule matched, role
/// unsupported, ...). Not retryable.
class BackendError : public Error
{
public:
    using Error::Error;
};

class ClassificationError : public Error
{
public:
    ClassificationError(std::string const & what, std::string raw)
    : Error(what)
    , raw_(std::move(raw))
    {}

    [[nodiscard]] std::string const & raw_response() const noexcept { return raw_; }

private:
    std::string raw_;
};

class DecisionError : public Error
{
public:
    DecisionError(std::string const & what, std::vector<std::string> raw)
    : Error(what)
    , raw_(std::move(raw))
    {}

    [[nodiscard]] std::vector<std::string> const & raw_responses() const noexcept { return raw_; }

private:
    std::vector<std::string> raw_;
};

/// Scenario or data file could not be loaded.
class LoadError : public Error
{
public:
    using Error::Error;
};

/// Operation on an environment in the wrong lifecycle state.
class LifecycleError : public Error
{
public:
    using Error::Error;
};

/// Metric requested over an empty or degenerate input.
class UndefinedInputError : public Error
{
public:
    using Error::Error;
};

} // namespace flowpilot
