#pragma once
#include <stdexcept>
#include <string>

namespace trwf {

// Base for everything thrown by the library. Each concrete type corresponds to
// one failure mode of the public interface; catch the base in drivers.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define TRWF_ERROR_TYPE(Name)                                        \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

TRWF_ERROR_TYPE(GridTooNarrow);        // time window cut before the conformal map relaxes
TRWF_ERROR_TYPE(SingularFrequency);    // frequency grid touches or crosses zero
TRWF_ERROR_TYPE(DecompositionFailed);  // mode decomposition inconsistent with its kernel
TRWF_ERROR_TYPE(GateTooWide);          // gate transfer negligible on the whole grid
TRWF_ERROR_TYPE(SpacingViolation);     // discrete-mode spacing inequality broken
TRWF_ERROR_TYPE(DegenerateSubtraction);// subtraction from a state with no photons
TRWF_ERROR_TYPE(GridTruncation);       // characteristic function not decayed at grid edge
TRWF_ERROR_TYPE(GridMismatch);         // operands sampled on different grids
TRWF_ERROR_TYPE(DuplicatePhases);      // repeated quadrature phase in a tomography set
TRWF_ERROR_TYPE(InsufficientPhases);   // fewer phases than the moment order requires
TRWF_ERROR_TYPE(TooFewPhases);         // back-projection starved of projection angles
TRWF_ERROR_TYPE(NoSqueezingDetected);  // covariance series indistinguishable from vacuum
TRWF_ERROR_TYPE(NegativeMarginal);     // sampled marginal clipped by more than tolerance
TRWF_ERROR_TYPE(UnphysicalCovariance); // covariance violates the uncertainty bound
TRWF_ERROR_TYPE(ConfigInvalid);        // run configuration rejected, message names the field
TRWF_ERROR_TYPE(MissingArtifact);      // comparison input bundle lacks a required file
TRWF_ERROR_TYPE(EmptyPassband);        // spectral filter removes the whole probe

#undef TRWF_ERROR_TYPE

} // namespace trwf
