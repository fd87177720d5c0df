#pragma once

#include <stdexcept>
#include <string>

namespace pemfc {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed settings file; carries the 1-based line number.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error("parse error (line " + std::to_string(line) + "): " + what),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// A configuration invariant was violated; names the offending field.
class ValidationError : public Error {
public:
  ValidationError(const std::string& field, const std::string& what)
      : Error("invalid " + field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

class UnknownPreset : public Error {
public:
  explicit UnknownPreset(const std::string& name)
      : Error("unknown preset: " + name) {}
};

// Argument outside a correlation's validity range.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// RHS produced a non-finite derivative at an accepted state.
class NonFiniteDerivative : public Error {
public:
  NonFiniteDerivative(int slot, double t)
      : Error("non-finite derivative in slot " + std::to_string(slot) +
              " at t = " + std::to_string(t)),
        slot_(slot), t_(t) {}
  int slot() const { return slot_; }
  double time() const { return t_; }

private:
  int slot_;
  double t_;
};

class InsufficientSamples : public Error {
public:
  explicit InsufficientSamples(const std::string& what) : Error(what) {}
};

class CheckpointMismatch : public Error {
public:
  explicit CheckpointMismatch(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

}  // namespace pemfc
