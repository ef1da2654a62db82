#pragma once

#include <stdexcept>
#include <string>

namespace spectra {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedInput : public Error {
 public:
  using Error::Error;
};

class ConcatenationError : public Error {
 public:
  ConcatenationError(std::size_t junction, const std::string& what)
      : Error(what), junction_(junction) {}
  std::size_t junction() const { return junction_; }

 private:
  std::size_t junction_;
};

class CompleteSubshiftError : public Error {
 public:
  CompleteSubshiftError(std::size_t first, std::size_t second, const std::string& what)
      : Error(what), first_(first), second_(second) {}
  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }

 private:
  std::size_t first_, second_;
};

class EnumerationOverflow : public Error {
 public:
  using Error::Error;
};

// The sublevel set is empty or too thin; a mathematical outcome, not a crash.
class ExtractionImpossible : public Error {
 public:
  using Error::Error;
};

class CertificationFailed : public Error {
 public:
  using Error::Error;
};

class Inconclusive : public Error {
 public:
  using Error::Error;
};

class VerificationFailed : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace spectra
