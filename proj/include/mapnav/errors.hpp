#ifndef MAPNAV_ERRORS_HPP_
#define MAPNAV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mapnav {

// Bad values handed to an operation (non-finite numbers, wrong sizes).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent configuration (unknown keys, action count mismatch, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called out of order, e.g. backward without forward.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A policy produced something the simulator cannot accept mid-episode.
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mapnav

#endif  // MAPNAV_ERRORS_HPP_
