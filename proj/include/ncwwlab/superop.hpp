#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ncwwlab/tracealg.hpp"

namespace ncwwlab {

// Coordinatization of an AlgElement in the orthonormal Hilbert-Schmidt basis
// e^{(b)}_{ij} / sqrt(w_b), blocks in order, entries row-major. In these
// coordinates hs_inner(x, y) is the standard inner product.
Eigen::VectorXcd vec(const AlgElement& x);
AlgElement unvec(const TracialAlgebra& alg, const Eigen::VectorXcd& v);

// Which Dunford-Schwartz hypotheses hold by construction for a structured
// operator; generic matrices carry no tags and get sampled verdicts instead.
struct ProofTags {
    bool positive = false;
    bool l1_contraction = false;
    bool linf_contraction = false;
    bool trace_preserving = false;
    bool unital = false;
    bool l2_self_adjoint = false;
    bool l2_positive = false;
    bool l2_normal = false;
};

class SuperOperator;

namespace structure {

struct Conjugation {
    AlgElement u;  // T(x) = u* x u
};

struct Convolution {
    std::shared_ptr<const SuperOperator> phi;      // trace-preserving *-automorphism
    std::shared_ptr<const SuperOperator> phi_inv;  // set when mu has negative support
    std::vector<std::pair<long, double>> mu;       // finitely supported probability on Z
};

struct SubalgebraSpec {
    enum class Kind { diagonal, scalars, block_scalars, tensor_factor };
    Kind kind;
    int factor_dim = 0;  // tensor_factor: dimension of the averaged factor
};

struct ExpectationProduct {
    std::vector<SubalgebraSpec> factors;  // T = E_1 ∘ … ∘ E_d
};

struct HeatMultiplier {
    int q, p;
    double t;
    std::vector<Matrix> basis;       // u^m v^n, index m*q + n
    std::vector<double> multiplier;  // e^{-t λ(m,n)}
    double basis_norm_sq;            // hs_inner(B, B), same for every B
};

struct GenericMatrix {
    Eigen::MatrixXcd mat;  // action in the HS basis
};

using Structure =
    std::variant<Conjugation, Convolution, ExpectationProduct, HeatMultiplier, GenericMatrix>;

}  // namespace structure

// Linear map on AlgElements, stored structurally plus as a lazily cached
// dense matrix in the HS coordinatization. Immutable after construction.
// A default-constructed value is an empty handle; assign before use.
class SuperOperator {
public:
    SuperOperator() = default;
    const TracialAlgebra& algebra() const;
    const ProofTags& tags() const;
    const std::string& kind() const;
    const structure::Structure& structure() const;
    int hs_dim() const;

    AlgElement apply(const AlgElement& x) const;
    const Eigen::MatrixXcd& hs_matrix() const;  // built once, thread-safe

    struct State;
    explicit SuperOperator(std::shared_ptr<const State> st) : st_(std::move(st)) {}

private:
    std::shared_ptr<const State> st_;
};

// --- constructors ----------------------------------------------------------

// Example catalog: T_u(x) = u* x u for a contraction u.
SuperOperator make_conjugation(const AlgElement& u);
// T = Σ_n μ({n}) Φ^n for a trace-preserving *-automorphism Φ and a finitely
// supported probability μ on Z.
SuperOperator make_convolution(const SuperOperator& phi,
                               const std::vector<std::pair<long, double>>& mu);
// T = E_1 ∘ … ∘ E_d, each factor a trace-preserving conditional expectation.
SuperOperator make_expectation_product(const TracialAlgebra& alg,
                                       const std::vector<structure::SubalgebraSpec>& specs);
// Discrete heat multiplier on the rational noncommutative torus model:
// T(u^m v^n) = e^{-t λ(m,n)} u^m v^n, λ(m,n) = 4 sin²(πm/q) + 4 sin²(πn/q).
SuperOperator make_nc_torus_heat(int q, int p, double t,
                                 std::optional<TracialAlgebra> alg = std::nullopt);
SuperOperator make_generic(const TracialAlgebra& alg, Eigen::MatrixXcd hs_matrix);
SuperOperator make_identity(const TracialAlgebra& alg);

SuperOperator power(const SuperOperator& T, int k);

// --- validation --------------------------------------------------------------

struct Verdict {
    enum class Kind { pass, fail, sampled };
    Kind kind;
    double bound = 0.0;   // observed extreme (ratio / min eigenvalue)
    std::string witness;  // description of the worst sample for failures
};

std::string to_string(Verdict::Kind k);

struct L2Properties {
    double self_adjoint_residual;  // ‖A - A*‖
    double positive_min_eig;       // min eig of (A + A*)/2
    double normal_residual;        // ‖AA* - A*A‖
};

struct StoltzReport {
    double delta;  // smallest usable delta estimated from the sampled points
    bool verdict;  // points fit in some Stoltz region with vertex 1
    Complex worst_point;
};

struct ValidationReport {
    Verdict positivity;
    Verdict l1_contraction;
    Verdict linf_contraction;
    L2Properties l2_restriction;
    std::vector<Complex> numerical_range;
    StoltzReport stoltz;
    double tol;
    int samples;
};

ValidationReport validate_ds(const SuperOperator& T, int samples, std::uint64_t seed, double tol);

L2Properties l2_properties(const SuperOperator& T);

// Boundary support points of the field of values of the HS representation,
// via extremal eigenvectors of the rotated Hermitian part.
std::vector<Complex> numerical_range_boundary(const SuperOperator& T, int angles = 720);

struct StoltzCheck {
    bool verdict;
    Complex worst_point;
    double worst_margin;  // |vertex - z| - delta (1 - |z|), maximized
};

StoltzCheck stoltz_check(const std::vector<Complex>& points, double delta, Complex vertex);

}  // namespace ncwwlab
