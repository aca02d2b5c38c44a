#pragma once

#include <stdexcept>
#include <string>

namespace hetero {

// Base for all library-specific failures. Callers that want blanket handling
// catch this; everything below refines it.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// f has a pole at the requested evaluation point (z = 0 with pole_at_zero).
struct PoleEvaluation : Error {
    using Error::Error;
};

// z lies on the branch cut of the chosen log branch.
struct BranchCut : Error {
    using Error::Error;
};

// grad W requested where |f| is below the singularity guard and q < 2.
struct SingularGradient : Error {
    using Error::Error;
};

// g(beta) == g(alpha): the segment between the critical values has no length.
struct DegenerateSegment : Error {
    using Error::Error;
};

// f'(alpha) == 0: the square-root start expansion does not exist.
struct StartDegenerate : Error {
    using Error::Error;
};

// Adaptive stepper underflowed its minimum step on every candidate arc.
struct StepFailure : Error {
    using Error::Error;
};

// Operation requires a curve that reached beta.
struct NotConnected : Error {
    using Error::Error;
};

// Sampled well-shape check failed (monotonicity or coercivity proxy).
struct HypothesisViolated : Error {
    using Error::Error;
};

// Existence sweep saw the same verdict at every coarse point.
struct NoTransition : Error {
    using Error::Error;
};

// A family that promises a connection for every minima pair failed to trace one.
struct UnexpectedNonexistence : Error {
    using Error::Error;
};

} // namespace hetero
