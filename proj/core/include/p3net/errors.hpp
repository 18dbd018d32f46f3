#pragma once

#include <stdexcept>
#include <string>

namespace p3net {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

/// Bad magic, version, or shape in a serialized artifact.
struct FormatError : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct DimMismatch : Error {
  using Error::Error;
};

/// A parameter does not fit the Q8.16 range; message names the layer/index.
struct RangeOverflow : Error {
  using Error::Error;
};

/// Fused BN scale cache is stale (parameters changed since refresh).
struct InvalidCache : Error {
  using Error::Error;
};

struct NoForwardState : Error {
  using Error::Error;
};

struct EmptyDataset : Error {
  using Error::Error;
};

struct NoObstacles : Error {
  using Error::Error;
};

/// Start or goal lies inside an obstacle.
struct InvalidEndpoint : Error {
  using Error::Error;
};

struct TaskGenExhausted : Error {
  using Error::Error;
};

struct GroundTruthFailed : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace p3net
