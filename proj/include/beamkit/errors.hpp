#pragma once

#include <stdexcept>
#include <string>

namespace beamkit {

/** Base class for every error this library throws on purpose. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** A caller broke a documented precondition. */
class ContractError : public Error {
 public:
  using Error::Error;
};

/** A file could not be opened or a prefix is not a path in a lattice. */
class PathError : public Error {
 public:
  using Error::Error;
};

/** Input bytes do not parse (bad JSON, bad CSV, bad schema). */
class FormatError : public Error {
 public:
  using Error::Error;
};

/** Input parsed but violates a semantic invariant. */
class ValidationError : public Error {
 public:
  using Error::Error;
};

/** Search reached a state with no admissible continuation. */
class DeadEndError : public Error {
 public:
  using Error::Error;
};

/** A requested computation exceeds a hard size guard. */
class BudgetError : public Error {
 public:
  using Error::Error;
};

/** A keyed lookup missed (oracle table, id out of range). */
class LookupError : public Error {
 public:
  using Error::Error;
};

/** Invalid flag combination or value on the command line. */
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace beamkit
