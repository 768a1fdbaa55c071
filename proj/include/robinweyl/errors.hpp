#pragma once

#include <stdexcept>
#include <string>

namespace robinweyl {

// Broad classes used by the CLI to pick an exit code.
enum class ErrorClass { Config, Numerical, Resource, File };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define ROBINWEYL_DEFINE_ERROR(Name, Cls)                                       \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {}    \
  };

ROBINWEYL_DEFINE_ERROR(DomainError, Numerical)
ROBINWEYL_DEFINE_ERROR(GeometryError, Numerical)
ROBINWEYL_DEFINE_ERROR(NoBoundStateError, Numerical)
ROBINWEYL_DEFINE_ERROR(ConsistencyError, Numerical)
ROBINWEYL_DEFINE_ERROR(ThresholdCollisionError, Numerical)
ROBINWEYL_DEFINE_ERROR(ConvergenceError, Numerical)
ROBINWEYL_DEFINE_ERROR(CoefficientBoundError, Numerical)
ROBINWEYL_DEFINE_ERROR(HypothesisError, Numerical)
ROBINWEYL_DEFINE_ERROR(ResourceError, Resource)
ROBINWEYL_DEFINE_ERROR(ConfigError, Config)
ROBINWEYL_DEFINE_ERROR(FileError, File)

#undef ROBINWEYL_DEFINE_ERROR

// 0 success, 2 config, 3 numerical, 4 resource. File errors count as config
// problems from the caller's point of view.
inline int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Config: return 2;
    case ErrorClass::File: return 2;
    case ErrorClass::Numerical: return 3;
    case ErrorClass::Resource: return 4;
  }
  return 3;
}

}  // namespace robinweyl
