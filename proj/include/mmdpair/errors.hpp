#pragma once

#include <stdexcept>
#include <string>

namespace mmdpair {

// Error taxonomy for the whole library.  Codes that describe bad user input
// (files, layouts, parameter ranges) map to CLI exit code 2; InternalError
// maps to exit code 1.
enum class Errc {
    // data model / input
    DuplicateRecord,
    HeterogeneousKinds,
    GridMismatch,
    InvalidTimepoint,
    MissingCovariate,
    EmptyInput,
    ParseError,
    IoError,
    // parameters
    InvalidArgument,
    IncompatibleAlpha,
    IncompatibleLayout,
    KindMismatch,
    // numeric degeneracies
    DegenerateBandwidth,
    DegenerateScale,
    DegenerateLabels,
    SeparationError,
    DegenerateWeights,
    // implementation bug (never a user error)
    InternalError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::DuplicateRecord: return "DuplicateRecord";
        case Errc::HeterogeneousKinds: return "HeterogeneousKinds";
        case Errc::GridMismatch: return "GridMismatch";
        case Errc::InvalidTimepoint: return "InvalidTimepoint";
        case Errc::MissingCovariate: return "MissingCovariate";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::ParseError: return "ParseError";
        case Errc::IoError: return "IoError";
        case Errc::InvalidArgument: return "InvalidArgument";
        case Errc::IncompatibleAlpha: return "IncompatibleAlpha";
        case Errc::IncompatibleLayout: return "IncompatibleLayout";
        case Errc::KindMismatch: return "KindMismatch";
        case Errc::DegenerateBandwidth: return "DegenerateBandwidth";
        case Errc::DegenerateScale: return "DegenerateScale";
        case Errc::DegenerateLabels: return "DegenerateLabels";
        case Errc::SeparationError: return "SeparationError";
        case Errc::DegenerateWeights: return "DegenerateWeights";
        case Errc::InternalError: return "InternalError";
    }
    return "UnknownError";
}

}  // namespace mmdpair
