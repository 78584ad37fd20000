#pragma once

#include <stdexcept>
#include <string>

namespace qcrb {

/// Base class for all library errors. `kind()` is a stable machine-readable
/// name used by the CLI when mapping failures to exit diagnostics.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

#define QCRB_DEFINE_ERROR(NAME)                                                \
    class NAME : public Error {                                                \
      public:                                                                  \
        explicit NAME(const std::string& what) : Error(#NAME, what) {}         \
    }

QCRB_DEFINE_ERROR(InvalidOperator);
QCRB_DEFINE_ERROR(DimensionError);
QCRB_DEFINE_ERROR(SingularSupport);
QCRB_DEFINE_ERROR(SupportBoundary);
QCRB_DEFINE_ERROR(CapacityError);
QCRB_DEFINE_ERROR(PartitionError);
QCRB_DEFINE_ERROR(DegenerateModel);
QCRB_DEFINE_ERROR(NoData);
QCRB_DEFINE_ERROR(InfeasibleLikelihood);
QCRB_DEFINE_ERROR(DesignError);
QCRB_DEFINE_ERROR(TooFewSamples);
QCRB_DEFINE_ERROR(IoError);
QCRB_DEFINE_ERROR(ConfigError);

#undef QCRB_DEFINE_ERROR

} // namespace qcrb
