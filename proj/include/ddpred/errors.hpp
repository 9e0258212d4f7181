#pragma once

#include <stdexcept>

namespace ddpred {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad scalar, bad enum, ...).
struct InvalidArgument : Error { using Error::Error; };
/// Matrix or vector shapes are inconsistent.
struct DimensionError : Error { using Error::Error; };

struct UnobservableSystem : Error { using Error::Error; };
struct LagTooShort : Error { using Error::Error; };
struct UnstableSystem : Error { using Error::Error; };
struct GenerationFailed : Error { using Error::Error; };

struct TrajectoryTooShort : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };

struct InfeasibleConstraint : Error { using Error::Error; };
struct MissingQ : Error { using Error::Error; };
struct GeneralNoiseUnsupported : Error { using Error::Error; };
struct SingularProjection : Error { using Error::Error; };
struct MissingGammaSource : Error { using Error::Error; };
struct NonPositiveW : Error { using Error::Error; };

struct SingularSigma : Error { using Error::Error; };
struct NotTwoDimensional : Error { using Error::Error; };

struct CampaignError : Error { using Error::Error; };

/// Malformed content in an input file.
struct FormatError : Error { using Error::Error; };
/// Filesystem-level failure (open, write, rename).
struct IoError : Error { using Error::Error; };
/// Bad command line.
struct UsageError : Error { using Error::Error; };

}  // namespace ddpred
