#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace fxtda {

enum class ErrorKind {
    Parse,
    EmptyInput,
    DisjointRange,
    Domain,
    DegenerateColumn,
    InsufficientData,
    UndefinedCorrelation,
    Parameter,
    Embedding,
    DimensionMismatch,
    MissingDiagram,
    UndefinedMetric,
    MismatchedItems,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `what()` carries the kind tag and the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers.
/// Each index is visited exactly once; the first exception thrown is rethrown
/// on the calling thread after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace fxtda
