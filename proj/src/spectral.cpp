#include "ncwwlab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace ncwwlab {

namespace {

double matrix_op_norm(const Eigen::MatrixXcd& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

bool hs_normal(const Eigen::MatrixXcd& a) {
    return matrix_op_norm(a * a.adjoint() - a.adjoint() * a) <= 1e-10 * std::max(1.0, a.norm());
}

// Orthonormal basis of ker(a - λ) via SVD; empty when λ is (numerically) not
// an eigenvalue.
Eigen::MatrixXcd kernel_basis(const Eigen::MatrixXcd& a, Complex lambda, double tol) {
    Eigen::MatrixXcd shifted = a - lambda * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double thresh = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    const int nullity = static_cast<int>(a.cols()) - rank;
    return svd.matrixV().rightCols(nullity);
}

// Orthonormal basis of range(a - λ) via the same SVD.
Eigen::MatrixXcd range_basis(const Eigen::MatrixXcd& a, Complex lambda, double tol) {
    Eigen::MatrixXcd shifted = a - lambda * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    const double thresh = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++rank;
    return svd.matrixU().leftCols(rank);
}

// Riesz projection onto ker(a - λ) along range(a - λ); valid for semisimple λ
// (which unimodular eigenvalues of a power-bounded matrix always are).
Eigen::MatrixXcd oblique_projection(const Eigen::MatrixXcd& a, Complex lambda, double tol) {
    const Eigen::MatrixXcd K = kernel_basis(a, lambda, tol);
    if (K.cols() == 0) return Eigen::MatrixXcd::Zero(a.rows(), a.cols());
    const Eigen::MatrixXcd R = range_basis(a, lambda, tol);
    Eigen::MatrixXcd basis(a.rows(), K.cols() + R.cols());
    basis << K, R;
    Eigen::MatrixXcd inv = basis.partialPivLu().solve(
        Eigen::MatrixXcd::Identity(a.rows(), a.cols()));
    return K * inv.topRows(K.cols());
}

constexpr double kKernelTol = 1e-8;

}  // namespace

AlgElement JdlgSplit::project_reversible(const AlgElement& x) const {
    return unvec(algebra, proj_reversible * vec(x));
}

AlgElement JdlgSplit::project_flight(const AlgElement& x) const {
    return unvec(algebra, proj_flight * vec(x));
}

JdlgSplit jdlg_split(const SuperOperator& T, double unimodular_tol) {
    const Eigen::MatrixXcd& a = T.hs_matrix();
    const int d = static_cast<int>(a.rows());

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, /*computeEigenvectors=*/false);
    const auto& evs = es.eigenvalues();

    double rho = 0.0;
    for (int i = 0; i < evs.size(); ++i) rho = std::max(rho, std::abs(evs(i)));
    if (rho > 1.0 + 1e-8)
        throw NotPowerBounded("jdlg_split: spectral radius " + std::to_string(rho));

    // classify; flight eigenvalues must clear the unimodular zone by a factor
    // of 10, otherwise the classification is declared ambiguous
    std::vector<Complex> unimodular;
    double flight_rho = 0.0;
    for (int i = 0; i < evs.size(); ++i) {
        const double m = std::abs(evs(i));
        if (std::abs(m - 1.0) <= unimodular_tol) {
            unimodular.push_back(evs(i));
        } else if (m < 1.0 - 10.0 * unimodular_tol) {
            flight_rho = std::max(flight_rho, m);
        } else {
            throw UnimodularGap("jdlg_split: eigenvalue with |lambda| = " + std::to_string(m) +
                                " in the ambiguous band; widen or shrink unimodular_tol");
        }
    }

    // cluster unimodular eigenvalues within the tolerance
    std::sort(unimodular.begin(), unimodular.end(), [](Complex x, Complex y) {
        return std::arg(x) < std::arg(y);
    });
    std::vector<Complex> reps;
    for (const Complex& z : unimodular) {
        bool merged = false;
        for (const Complex& r : reps)
            if (std::abs(z - r) <= 10.0 * unimodular_tol) merged = true;
        if (!merged) reps.push_back(z);
    }

    JdlgSplit split;
    split.algebra = T.algebra();
    split.oblique = !hs_normal(a);
    split.flight_spectral_radius = flight_rho;

    Eigen::MatrixXcd p_rev = Eigen::MatrixXcd::Zero(d, d);
    std::vector<Eigen::MatrixXcd> kernels;
    for (const Complex& lam : reps) {
        Eigen::MatrixXcd K = kernel_basis(a, lam, kKernelTol);
        if (K.cols() == 0)
            throw DecompositionDegenerate("jdlg_split: no kernel found for claimed eigenvalue");
        if (split.oblique)
            p_rev += oblique_projection(a, lam, kKernelTol);
        else
            p_rev += K * K.adjoint();

        EigenPair pair;
        pair.value = lam;
        pair.basis_cols = K;
        for (int c = 0; c < K.cols(); ++c)
            pair.basis.push_back(unvec(T.algebra(), K.col(c)));
        kernels.push_back(K);
        split.unimodular_eigenpairs.push_back(std::move(pair));
    }

    split.proj_reversible = p_rev;
    split.proj_flight = Eigen::MatrixXcd::Identity(d, d) - p_rev;

    // reversible basis: orthonormalized union of the kernels
    int rev_dim = 0;
    for (const auto& K : kernels) rev_dim += static_cast<int>(K.cols());
    if (rev_dim > 0) {
        Eigen::MatrixXcd all(d, rev_dim);
        int off = 0;
        for (const auto& K : kernels) {
            all.middleCols(off, K.cols()) = K;
            off += static_cast<int>(K.cols());
        }
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(all);
        Eigen::MatrixXcd q = qr.householderQ();
        for (int c = 0; c < rev_dim; ++c)
            split.reversible_basis.push_back(unvec(T.algebra(), q.col(c)));
    }

    // flight basis: orthonormal basis of range(P_flight)
    const int flight_dim = d - rev_dim;
    Eigen::MatrixXcd F(d, flight_dim);
    if (flight_dim > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(split.proj_flight, Eigen::ComputeFullU);
        F = svd.matrixU().leftCols(flight_dim);
        for (int c = 0; c < flight_dim; ++c)
            split.flight_basis.push_back(unvec(T.algebra(), F.col(c)));
    }

    // restriction of A to the flight subspace and its similarity condition
    if (flight_dim > 0) {
        // coordinates: x = F c + reversible part; M = F^+ (A restricted)
        // F has orthonormal columns and the flight subspace is A-invariant
        split.flight_block = F.adjoint() * a * F;
        const Eigen::MatrixXcd& m = split.flight_block;
        if (matrix_op_norm(m * m.adjoint() - m.adjoint() * m) <=
            1e-10 * std::max(1.0, m.norm())) {
            // normal blocks are unitarily diagonalizable
            split.flight_condition = 1.0;
        } else {
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> fes(m);
            const Eigen::MatrixXcd W = fes.eigenvectors();
            Eigen::JacobiSVD<Eigen::MatrixXcd> wsvd(W);
            const double smax = wsvd.singularValues()(0);
            const double smin = wsvd.singularValues()(wsvd.singularValues().size() - 1);
            const bool invertible = smin > 1e-12 * std::max(1.0, smax);
            double resid = numeric::infinity;
            if (invertible) {
                const Eigen::MatrixXcd recon = W * fes.eigenvalues().asDiagonal() * W.inverse();
                resid = (recon - m).norm();
            }
            const bool diagonalizable = invertible && resid <= 1e-8 * std::max(1.0, m.norm());
            split.flight_condition = diagonalizable ? smax / smin : numeric::infinity;
        }
    } else {
        split.flight_block = Eigen::MatrixXcd::Zero(0, 0);
        split.flight_condition = 0.0;
    }

    if (flight_dim > 0 && split.flight_spectral_radius >= 1.0 - 1e-10)
        throw DecompositionDegenerate("jdlg_split: flight spectral radius too close to 1");

    return split;
}

AlgElement EigenProjection::apply(const TracialAlgebra& alg, const AlgElement& x) const {
    return unvec(alg, matrix * vec(x));
}

EigenProjection eigen_projection(const SuperOperator& T, Complex lambda) {
    if (std::abs(std::abs(lambda) - 1.0) > numeric::unimodular_tol)
        throw NotUnimodular("eigen_projection: lambda must be unimodular");
    const Eigen::MatrixXcd& a = T.hs_matrix();
    EigenProjection out;
    const Eigen::MatrixXcd K = kernel_basis(a, lambda, kKernelTol);
    if (K.cols() == 0) {
        out.matrix = Eigen::MatrixXcd::Zero(a.rows(), a.cols());
        return out;
    }
    if (hs_normal(a)) {
        out.matrix = K * K.adjoint();
        out.oblique = false;
        out.condition = 1.0;
    } else {
        out.matrix = oblique_projection(a, lambda, kKernelTol);
        out.oblique = true;
        out.condition = matrix_op_norm(out.matrix);
    }
    return out;
}

AlgElement spectral_weighted_limit(const SuperOperator& T, const WeightSequence& alpha,
                                   const AlgElement& x, const std::vector<Complex>& lambda_set,
                                   std::uint64_t n_coeff) {
    const Eigen::MatrixXcd& a = T.hs_matrix();
    if (matrix_op_norm(a) > 1.0 + 1e-8)
        throw NotL2Contraction("spectral_weighted_limit: T is not an L2 contraction");

    // close the set under conjugation so E(λ̄) terms are never dropped
    std::vector<Complex> lambdas;
    auto add = [&](Complex z) {
        for (const Complex& w : lambdas)
            if (std::abs(w - z) <= 1e-10) return;
        lambdas.push_back(z);
    };
    for (const Complex& z : lambda_set) {
        add(z);
        add(std::conj(z));
    }

    AlgElement acc = AlgElement::zero(T.algebra());
    for (const Complex& lam : lambdas) {
        const EigenProjection proj = eigen_projection(T, std::conj(lam));
        if (proj.matrix.isZero(0.0)) continue;
        const Complex c = hartman_coefficient(alpha, lam, n_coeff).estimate;
        acc += c * proj.apply(T.algebra(), x);
    }
    return acc;
}

double flight_decay_bound(const JdlgSplit& split, std::uint64_t n) {
    if (split.flight_basis.empty()) return 0.0;
    if (!std::isfinite(split.flight_condition)) return numeric::infinity;
    return split.flight_condition * std::pow(split.flight_spectral_radius,
                                             static_cast<double>(n));
}

}  // namespace ncwwlab
