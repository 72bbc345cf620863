#pragma once

#include <stdexcept>
#include <string>

namespace pcad {

// Base class for every error thrown by the library. `code()` returns a
// stable identifier used by the CLI to map failures onto exit codes.
class Error : public std::runtime_error {
  public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

#define PCAD_DEFINE_ERROR(NAME)                                          \
    class NAME : public Error {                                          \
      public:                                                            \
        explicit NAME(const std::string& msg) : Error(#NAME, msg) {}     \
    }

// codec / grammar
PCAD_DEFINE_ERROR(RangeError);
PCAD_DEFINE_ERROR(UnknownToken);
PCAD_DEFINE_ERROR(TruncatedStream);
PCAD_DEFINE_ERROR(GrammarError);
PCAD_DEFINE_ERROR(TrailingTokens);
PCAD_DEFINE_ERROR(MissingTerminator);
PCAD_DEFINE_ERROR(MalformedProgram);
PCAD_DEFINE_ERROR(ValidationFailed);
PCAD_DEFINE_ERROR(UnsupportedOperation);

// kernel
PCAD_DEFINE_ERROR(NonPlanarSketchTarget);
PCAD_DEFINE_ERROR(DegenerateDirection);
PCAD_DEFINE_ERROR(DegenerateProjection);
PCAD_DEFINE_ERROR(SelfIntersectingLoop);
PCAD_DEFINE_ERROR(AmbiguousRegion);
PCAD_DEFINE_ERROR(SnapFailure);
PCAD_DEFINE_ERROR(EmptyResult);
PCAD_DEFINE_ERROR(NonManifoldResult);
PCAD_DEFINE_ERROR(UnsupportedEdge);
PCAD_DEFINE_ERROR(ChamferTooLarge);
PCAD_DEFINE_ERROR(FilletTooLarge);
PCAD_DEFINE_ERROR(PointerResolutionFailed);
PCAD_DEFINE_ERROR(DegenerateGeometry);

// pointer resolution
PCAD_DEFINE_ERROR(NonManifoldInput);
PCAD_DEFINE_ERROR(NoCandidates);
PCAD_DEFINE_ERROR(UnknownEntity);

// neural
PCAD_DEFINE_ERROR(ShapeError);
PCAD_DEFINE_ERROR(ConfigError);

// io
PCAD_DEFINE_ERROR(IoError);
PCAD_DEFINE_ERROR(FormatError);

#undef PCAD_DEFINE_ERROR

}  // namespace pcad
