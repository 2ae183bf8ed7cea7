#pragma once

#include <stdexcept>
#include <string>

namespace synthkit {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: config keys, preconditions, malformed files.
class ValidationError : public SynthError {
 public:
  using SynthError::SynthError;
};

// Model output (or a structured file) did not match the expected grammar.
class ParseError : public SynthError {
 public:
  using SynthError::SynthError;
};

class IoError : public SynthError {
 public:
  using SynthError::SynthError;
};

// Transport failure that survived the retry policy.
class GatewayError : public SynthError {
 public:
  using SynthError::SynthError;
};

}  // namespace synthkit
