// Error types shared across the library.  Every failure mode that callers
// are expected to branch on gets its own exception class; everything else
// surfaces as std::runtime_error from the site that detected it.

#pragma once

#include <stdexcept>
#include <string>

namespace rigidlab {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- exact linear / polynomial layer ---------------------------------------
struct NotUnimodular : Error { using Error::Error; };
struct NotHyperbolic : Error { using Error::Error; };
struct DegreeTooLarge : Error { using Error::Error; };
struct TooManyPoints : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };

// --- perturbed maps ----------------------------------------------------------
struct PerturbationTooLarge : Error { using Error::Error; };
struct SpectrumClash : Error { using Error::Error; };
struct NewtonDiverged : Error { using Error::Error; };

// --- cocycle / periodic layer ------------------------------------------------
struct SlowDomination : Error { using Error::Error; };
struct CountMismatch : Error { using Error::Error; };

// --- transfer functions / conformal metrics ---------------------------------
struct ObstructionFailed : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct LeafTracingFailed : Error { using Error::Error; };
struct OdeStepFailure : Error { using Error::Error; };
struct RefinementExplosion : Error { using Error::Error; };

// --- conjugacy / regularity --------------------------------------------------
struct SeriesStalled : Error { using Error::Error; };
struct InsufficientScales : Error { using Error::Error; };

// --- experiment driver -------------------------------------------------------
struct ConfigInvalid : Error { using Error::Error; };
struct StageFailed : Error { using Error::Error; };

} // namespace rigidlab
