#pragma once

#include <stdexcept>
#include <string>

namespace ncwwlab {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define NCWWLAB_DEFINE_ERROR(Name) \
    struct Name final : Error {    \
        using Error::Error;        \
    }

// tracealg
NCWWLAB_DEFINE_ERROR(EmptyBlockList);
NCWWLAB_DEFINE_ERROR(NonpositiveWeight);
NCWWLAB_DEFINE_ERROR(NonpositiveDim);
NCWWLAB_DEFINE_ERROR(AlgebraMismatch);
NCWWLAB_DEFINE_ERROR(InvalidExponent);
NCWWLAB_DEFINE_ERROR(NotSelfAdjoint);

// weights
NCWWLAB_DEFINE_ERROR(NotUnimodular);
NCWWLAB_DEFINE_ERROR(InvalidHorizon);
NCWWLAB_DEFINE_ERROR(ClassMismatch);

// superop
NCWWLAB_DEFINE_ERROR(NotContraction);
NCWWLAB_DEFINE_ERROR(NotAutomorphism);
NCWWLAB_DEFINE_ERROR(NotProbability);
NCWWLAB_DEFINE_ERROR(IncompatibleSubalgebra);
NCWWLAB_DEFINE_ERROR(NotCoprime);
NCWWLAB_DEFINE_ERROR(NonpositiveTime);

// spectral
NCWWLAB_DEFINE_ERROR(NotPowerBounded);
NCWWLAB_DEFINE_ERROR(UnimodularGap);
NCWWLAB_DEFINE_ERROR(DecompositionDegenerate);
NCWWLAB_DEFINE_ERROR(NotL2Contraction);

// harness
NCWWLAB_DEFINE_ERROR(InvalidWindow);
NCWWLAB_DEFINE_ERROR(BudgetTooSmall);

// cli
NCWWLAB_DEFINE_ERROR(ParseError);
NCWWLAB_DEFINE_ERROR(ValidationError);

#undef NCWWLAB_DEFINE_ERROR

}  // namespace ncwwlab
