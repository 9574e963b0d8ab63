#pragma once

#include <stdexcept>
#include <string>

namespace prefnet {

// Precondition on an argument was violated (bad shape, out-of-range entry).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input graph/path is structurally inconsistent (missing edge, unknown node).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unroutable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NodeDown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a tensor op produces NaN/Inf.
class NonFinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace prefnet
