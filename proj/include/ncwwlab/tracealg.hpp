#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <vector>

#include "ncwwlab/detrng.hpp"
#include "ncwwlab/errors.hpp"

namespace ncwwlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

namespace numeric {
// Global numeric policy. One place for the tolerances that define what
// "self-adjoint", "projection" and "unimodular" mean throughout.
inline constexpr double selfadjoint_tol = 1e-10;
inline constexpr double projection_tol = 1e-10;
inline constexpr double unimodular_tol = 1e-12;
inline constexpr double infinity = std::numeric_limits<double>::infinity();
}  // namespace numeric

struct AlgebraBlock {
    int dim;
    double weight;
    bool operator==(const AlgebraBlock& o) const { return dim == o.dim && weight == o.weight; }
};

// Finite direct sum of full matrix blocks M_{d_1} ⊕ … ⊕ M_{d_m} with trace
// τ(x) = Σ_b weight_b · Tr(x_b). Block order is fixed at construction.
class TracialAlgebra {
public:
    TracialAlgebra() = default;
    static TracialAlgebra make(std::vector<AlgebraBlock> blocks);

    const std::vector<AlgebraBlock>& blocks() const { return blocks_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    int dim(int b) const { return blocks_[static_cast<std::size_t>(b)].dim; }
    double weight(int b) const { return blocks_[static_cast<std::size_t>(b)].weight; }
    double total_trace() const { return total_trace_; }
    // Dimension of the algebra as a Hilbert space under ⟨x,y⟩ = τ(y*x).
    int hs_dim() const { return hs_dim_; }

    bool operator==(const TracialAlgebra& o) const { return blocks_ == o.blocks_; }
    bool operator!=(const TracialAlgebra& o) const { return !(*this == o); }

private:
    std::vector<AlgebraBlock> blocks_;
    double total_trace_ = 0.0;
    int hs_dim_ = 0;
};

// Block-diagonal element of a TracialAlgebra. Immutable by convention: all
// operations return new values.
class AlgElement {
public:
    AlgElement() = default;
    AlgElement(TracialAlgebra alg, std::vector<Matrix> data);

    static AlgElement zero(const TracialAlgebra& alg);
    static AlgElement identity(const TracialAlgebra& alg);
    // e_{ij} in block b, zero elsewhere.
    static AlgElement matrix_unit(const TracialAlgebra& alg, int block, int i, int j);
    static AlgElement diagonal(const TracialAlgebra& alg, const std::vector<Complex>& entries);

    const TracialAlgebra& algebra() const { return alg_; }
    int block_count() const { return alg_.block_count(); }
    const Matrix& block(int b) const { return data_[static_cast<std::size_t>(b)]; }
    Matrix& block(int b) { return data_[static_cast<std::size_t>(b)]; }

    AlgElement adjoint() const;

    AlgElement& operator+=(const AlgElement& o);
    AlgElement& operator-=(const AlgElement& o);
    AlgElement& operator*=(Complex c);

private:
    TracialAlgebra alg_;
    std::vector<Matrix> data_;
};

AlgElement operator+(AlgElement a, const AlgElement& b);
AlgElement operator-(AlgElement a, const AlgElement& b);
AlgElement operator*(const AlgElement& a, const AlgElement& b);  // block-wise product
AlgElement operator*(Complex c, AlgElement a);
AlgElement operator*(AlgElement a, Complex c);

// Decreasing rearrangement of the block singular values, each step carrying
// measure-length weight_b. Exact step function, no sampling grid.
class SingularProfile {
public:
    struct Step {
        double value;
        double length;
    };

    explicit SingularProfile(std::vector<Step> steps) : steps_(std::move(steps)) {}

    const std::vector<Step>& steps() const { return steps_; }
    // ∫_0^∞ μ_t dt, exact for the step function.
    double integral() const;
    // μ_t at a given t ≥ 0.
    double value_at(double t) const;

private:
    std::vector<Step> steps_;
};

// --- operations ------------------------------------------------------------

TracialAlgebra new_algebra(const std::vector<std::pair<int, double>>& blocks);

Complex trace(const AlgElement& x);

// For p < ∞: (Σ_b w_b Σ_i s_{b,i}^p)^{1/p}; for p = ∞ the largest singular
// value over all blocks. Pass numeric::infinity for p = ∞.
double lp_norm(const AlgElement& x, double p);
double op_norm(const AlgElement& x);  // shorthand for lp_norm(x, ∞)

SingularProfile singular_profile(const AlgElement& x);

bool is_positive(const AlgElement& x, double tol);

// Orthogonal projection onto the eigenvectors of x with eigenvalue in [a, b].
AlgElement spectral_projection(const AlgElement& x, double a, double b,
                               double selfadjoint_tol = numeric::selfadjoint_tol);

Complex hs_inner(const AlgElement& x, const AlgElement& y);  // τ(y* x)

// |x| = (x*x)^{1/2} through a Hermitian eigensolve of x*x.
AlgElement abs_element(const AlgElement& x);

bool is_projection(const AlgElement& e, double tol = numeric::projection_tol);

// --- random fixtures (deterministic via DetRng) ------------------------------

AlgElement random_element(const TracialAlgebra& alg, DetRng& rng);
AlgElement random_selfadjoint(const TracialAlgebra& alg, DetRng& rng);
AlgElement random_positive(const TracialAlgebra& alg, DetRng& rng);
AlgElement random_unitary(const TracialAlgebra& alg, DetRng& rng);
// Random element rescaled to operator norm ≤ 1.
AlgElement random_contraction(const TracialAlgebra& alg, DetRng& rng);

namespace detail {
void require_same_algebra(const AlgElement& a, const AlgElement& b, const char* op);
}

}  // namespace ncwwlab
