#pragma once

#include <vector>

#include "ncwwlab/superop.hpp"
#include "ncwwlab/weights.hpp"

namespace ncwwlab {

struct EigenPair {
    Complex value;                  // unimodular eigenvalue (cluster representative)
    std::vector<AlgElement> basis;  // orthonormal basis of ker(A - λ)
    Eigen::MatrixXcd basis_cols;    // same basis as HS columns
};

// Jacobs-de Leeuw-Glicksberg decomposition of the HS representation:
// reversible part = span of unimodular eigenvectors, flight part = spectral
// subspace for |λ| < 1. Projections are oblique in general, orthogonal when
// T is normal on L_2.
struct JdlgSplit {
    std::vector<AlgElement> reversible_basis;
    std::vector<AlgElement> flight_basis;
    Eigen::MatrixXcd proj_reversible;
    Eigen::MatrixXcd proj_flight;
    std::vector<EigenPair> unimodular_eigenpairs;
    double flight_spectral_radius = 0.0;
    // Similarity condition number of the flight block; +inf when the block is
    // not diagonalizable to working precision.
    double flight_condition = 0.0;
    bool oblique = false;
    Eigen::MatrixXcd flight_block;  // restriction of A to the flight subspace

    AlgElement project_reversible(const AlgElement& x) const;
    AlgElement project_flight(const AlgElement& x) const;
    TracialAlgebra algebra;
};

JdlgSplit jdlg_split(const SuperOperator& T, double unimodular_tol = 1e-8);

struct EigenProjection {
    Eigen::MatrixXcd matrix;  // acts on HS coordinates; zero map if λ absent
    bool oblique = false;
    double condition = 1.0;  // ‖P‖ for oblique projections

    AlgElement apply(const TracialAlgebra& alg, const AlgElement& x) const;
};

// Projection onto ker(A - λ): orthogonal when T is normal on L_2, otherwise
// along range(A - λ) with the obliqueness flagged. The zero map when λ is not
// an eigenvalue.
EigenProjection eigen_projection(const SuperOperator& T, Complex lambda);

// Predicted limit of M_n^α(T)(x) for Hartman α: Σ_λ c_α(λ) E(λ̄)(x) with the
// coefficients estimated at horizon n_coeff. λ_set is closed under
// conjugation internally so no eigenvalue contribution is dropped.
AlgElement spectral_weighted_limit(const SuperOperator& T, const WeightSequence& alpha,
                                   const AlgElement& x, const std::vector<Complex>& lambda_set,
                                   std::uint64_t n_coeff);

// C ρ^n with ρ the flight spectral radius and C the similarity condition
// number; a true bound for ‖T^n‖ on the flight subspace (vacuous +inf when
// the block is defective).
double flight_decay_bound(const JdlgSplit& split, std::uint64_t n);

}  // namespace ncwwlab
