#pragma once

#include <stdexcept>
#include <string>

namespace dmpcrl {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or inconsistent configuration / input dimensions.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Solver-side failures.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& msg) : Error(msg) {}
};

class InfeasibleError : public SolverError {
 public:
  explicit InfeasibleError(const std::string& msg) : SolverError(msg) {}
};

class NotStrictlyConvexError : public SolverError {
 public:
  explicit NotStrictlyConvexError(const std::string& msg) : SolverError(msg) {}
};

class MaxIterationsError : public SolverError {
 public:
  explicit MaxIterationsError(const std::string& msg) : SolverError(msg) {}
};

class DivergenceError : public SolverError {
 public:
  explicit DivergenceError(const std::string& msg) : SolverError(msg) {}
};

// Duals handed to the sensitivity computation do not satisfy the KKT
// conditions tightly enough.
class StaleDualsError : public SolverError {
 public:
  explicit StaleDualsError(const std::string& msg) : SolverError(msg) {}
};

}  // namespace dmpcrl
