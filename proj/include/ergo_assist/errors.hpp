#pragma once

#include <stdexcept>
#include <string>

namespace ergo_assist {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scene document field (wrong type, missing key, unknown key).
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A scene invariant is violated; the message names the invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class UnknownObject : public Error {
 public:
  explicit UnknownObject(const std::string& id) : Error("unknown object: " + id) {}
};

class ObjectAttached : public Error {
 public:
  explicit ObjectAttached(const std::string& id) : Error("object is attached: " + id) {}
};

class NotAttached : public Error {
 public:
  explicit NotAttached(const std::string& id) : Error("object is not attached: " + id) {}
};

class JointLimit : public Error {
 public:
  using Error::Error;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class SideDisabled : public Error {
 public:
  using Error::Error;
};

class NoFeasibleArrangement : public Error {
 public:
  using Error::Error;
};

class PlanningFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace ergo_assist
