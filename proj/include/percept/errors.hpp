#pragma once

#include <stdexcept>
#include <string>

namespace percept {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated an operation's precondition.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(what) {}
};

/// A timeline does not cover the requested observation window.
class InsufficientData : public Error {
public:
    explicit InsufficientData(const std::string& what) : Error(what) {}
};

/// A demonstration pool cannot satisfy the requested sample size.
class InsufficientDemos : public Error {
public:
    InsufficientDemos(const std::string& what, int requested, int available)
        : Error(what), requested(requested), available(available) {}
    int requested;
    int available;
};

/// No label could be extracted from a model response.
class UnparseableResponse : public Error {
public:
    explicit UnparseableResponse(const std::string& what) : Error(what) {}
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, int epoch) : Error(what), epoch(epoch) {}
    int epoch;
};

/// No test participant satisfies the evaluation-set constraints.
class EmptyEvalSet : public Error {
public:
    explicit EmptyEvalSet(const std::string& what) : Error(what) {}
};

}  // namespace percept
