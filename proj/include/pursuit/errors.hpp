#pragma once

#include <stdexcept>

namespace pursuit {

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class MapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidPoseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class FilterInitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pursuit
