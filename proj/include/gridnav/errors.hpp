#pragma once

#include <stdexcept>
#include <string>

namespace gridnav {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input bytes (map files, JSON payloads).
struct ParseError : Error {
    using Error::Error;
};

// Well-formed input that contradicts itself (e.g. landmark on an obstacle).
struct ConsistencyError : Error {
    using Error::Error;
};

// One cell asked to carry two different region ids.
struct ConflictError : Error {
    using Error::Error;
};

// A decision backend failed to produce an action.
struct BackendError : Error {
    using Error::Error;
};

// Goal unreachable within the known navigable cells.
struct NoPathError : BackendError {
    using BackendError::BackendError;
};

// Task clause with no matching landmark or region in the scene graph.
struct UnresolvedTargetError : Error {
    using Error::Error;
};

// Trajectory breaks the one-legal-action-per-step waypoint invariant.
struct InvalidTrajectoryError : Error {
    using Error::Error;
};

// Cached trajectory no longer replayable against the current graph.
struct CacheCorruptionError : Error {
    using Error::Error;
};

// Episode whose goal has no ground-truth path from the start.
struct UnreachableGoalError : Error {
    using Error::Error;
};

// Network-level failure after all retries.
struct TransportError : BackendError {
    using BackendError::BackendError;
};

// HTTP reply unusable: non-2xx status or malformed body.
struct ProtocolError : BackendError {
    using BackendError::BackendError;
};

// Reply text contains none of the four action phrases.
struct UnparseableActionError : BackendError {
    using BackendError::BackendError;
};

}  // namespace gridnav
