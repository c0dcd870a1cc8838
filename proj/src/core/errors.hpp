#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace predisso {

// Every computational failure carries a stable machine-readable code.
// The CLI prints failures as "E:<code>: <message>" on stderr.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define PREDISSO_ERROR(Name)                                                 \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& m) : Error(#Name, m) {}             \
    }

PREDISSO_ERROR(PoleAtPoint);
PREDISSO_ERROR(EmptySea);
PREDISSO_ERROR(ResolutionError);
PREDISSO_ERROR(RampOutOfDomain);
PREDISSO_ERROR(ConvergenceFailure);
PREDISSO_ERROR(SingularMatrix);
PREDISSO_ERROR(EmptyWindow);
PREDISSO_ERROR(GapViolation);
PREDISSO_ERROR(CountMismatch);
PREDISSO_ERROR(StabilityFailure);
PREDISSO_ERROR(DeflationFailure);
PREDISSO_ERROR(NewtonDivergence);
PREDISSO_ERROR(RootCollision);
PREDISSO_ERROR(DiscOverlap);
PREDISSO_ERROR(QuadratureNotConverged);
PREDISSO_ERROR(EpsilonTooSmall);
PREDISSO_ERROR(StepInstability);
PREDISSO_ERROR(TimeBeyondRecurrence);
PREDISSO_ERROR(GridMismatch);
PREDISSO_ERROR(DegenerateFit);
PREDISSO_ERROR(ConfigError);

#undef PREDISSO_ERROR

}  // namespace predisso
