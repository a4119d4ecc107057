#include "ncwwlab/superop.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "ncwwlab/detrng.hpp"

namespace ncwwlab {

Eigen::VectorXcd vec(const AlgElement& x) {
    const auto& alg = x.algebra();
    Eigen::VectorXcd v(alg.hs_dim());
    int off = 0;
    for (int b = 0; b < alg.block_count(); ++b) {
        const double s = std::sqrt(alg.weight(b));
        const int d = alg.dim(b);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) v(off + i * d + j) = s * x.block(b)(i, j);
        off += d * d;
    }
    return v;
}

AlgElement unvec(const TracialAlgebra& alg, const Eigen::VectorXcd& v) {
    if (v.size() != alg.hs_dim()) throw AlgebraMismatch("unvec: wrong vector length");
    AlgElement x = AlgElement::zero(alg);
    int off = 0;
    for (int b = 0; b < alg.block_count(); ++b) {
        const double s = 1.0 / std::sqrt(alg.weight(b));
        const int d = alg.dim(b);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) x.block(b)(i, j) = s * v(off + i * d + j);
        off += d * d;
    }
    return x;
}

struct SuperOperator::State {
    TracialAlgebra alg;
    structure::Structure str;
    ProofTags tags;
    std::string kind;

    mutable std::once_flag hs_once;
    mutable Eigen::MatrixXcd hs;
};

const TracialAlgebra& SuperOperator::algebra() const { return st_->alg; }
const ProofTags& SuperOperator::tags() const { return st_->tags; }
const std::string& SuperOperator::kind() const { return st_->kind; }
const structure::Structure& SuperOperator::structure() const { return st_->str; }
int SuperOperator::hs_dim() const { return st_->alg.hs_dim(); }

namespace {

using structure::Conjugation;
using structure::Convolution;
using structure::ExpectationProduct;
using structure::GenericMatrix;
using structure::HeatMultiplier;
using structure::SubalgebraSpec;

SuperOperator wrap(TracialAlgebra alg, structure::Structure str, ProofTags tags,
                   std::string kind) {
    auto st = std::make_shared<SuperOperator::State>();
    st->alg = std::move(alg);
    st->str = std::move(str);
    st->tags = tags;
    st->kind = std::move(kind);
    return SuperOperator(std::move(st));
}

AlgElement apply_expectation(const TracialAlgebra& alg, const SubalgebraSpec& spec,
                             const AlgElement& x) {
    switch (spec.kind) {
        case SubalgebraSpec::Kind::diagonal: {
            AlgElement y = AlgElement::zero(alg);
            for (int b = 0; b < alg.block_count(); ++b)
                y.block(b) = x.block(b).diagonal().asDiagonal();
            return y;
        }
        case SubalgebraSpec::Kind::scalars: {
            const Complex c = trace(x) / alg.total_trace();
            AlgElement y = AlgElement::identity(alg);
            y *= c;
            return y;
        }
        case SubalgebraSpec::Kind::block_scalars: {
            AlgElement y = AlgElement::zero(alg);
            for (int b = 0; b < alg.block_count(); ++b) {
                const Complex c = x.block(b).trace() / static_cast<double>(alg.dim(b));
                y.block(b) = c * Matrix::Identity(alg.dim(b), alg.dim(b));
            }
            return y;
        }
        case SubalgebraSpec::Kind::tensor_factor: {
            // block = M_{d1} ⊗ M_{d2}, average the second factor:
            // E(x) = (id ⊗ tr/d2)(x) ⊗ 1_{d2}
            AlgElement y = AlgElement::zero(alg);
            const int d2 = spec.factor_dim;
            for (int b = 0; b < alg.block_count(); ++b) {
                const int d = alg.dim(b);
                const int d1 = d / d2;
                Matrix partial = Matrix::Zero(d1, d1);
                for (int i = 0; i < d1; ++i)
                    for (int j = 0; j < d1; ++j) {
                        Complex s = 0.0;
                        for (int k = 0; k < d2; ++k) s += x.block(b)(i * d2 + k, j * d2 + k);
                        partial(i, j) = s / static_cast<double>(d2);
                    }
                Matrix out = Matrix::Zero(d, d);
                for (int i = 0; i < d1; ++i)
                    for (int j = 0; j < d1; ++j)
                        for (int k = 0; k < d2; ++k) out(i * d2 + k, j * d2 + k) = partial(i, j);
                y.block(b) = std::move(out);
            }
            return y;
        }
    }
    throw Error("unreachable");
}

double matrix_op_norm(const Eigen::MatrixXcd& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues()(0);
}

}  // namespace

AlgElement SuperOperator::apply(const AlgElement& x) const {
    if (x.algebra() != st_->alg) throw AlgebraMismatch("apply: element on different algebra");
    const auto& alg = st_->alg;

    if (const auto* c = std::get_if<Conjugation>(&st_->str)) {
        AlgElement y = AlgElement::zero(alg);
        for (int b = 0; b < alg.block_count(); ++b)
            y.block(b) = c->u.block(b).adjoint() * x.block(b) * c->u.block(b);
        return y;
    }
    if (const auto* cv = std::get_if<Convolution>(&st_->str)) {
        AlgElement acc = AlgElement::zero(alg);
        long max_pos = 0, min_neg = 0;
        for (const auto& [n, w] : cv->mu) {
            (void)w;
            max_pos = std::max(max_pos, n);
            min_neg = std::min(min_neg, n);
        }
        auto weight_at = [&](long n) -> double {
            for (const auto& [m, w] : cv->mu)
                if (m == n) return w;
            return 0.0;
        };
        AlgElement z = x;
        for (long n = 0; n <= max_pos; ++n) {
            const double w = weight_at(n);
            if (w != 0.0) acc += w * z;
            if (n < max_pos) z = cv->phi->apply(z);
        }
        if (min_neg < 0) {
            z = x;
            for (long n = -1; n >= min_neg; --n) {
                z = cv->phi_inv->apply(z);
                const double w = weight_at(n);
                if (w != 0.0) acc += w * z;
            }
        }
        return acc;
    }
    if (const auto* ep = std::get_if<ExpectationProduct>(&st_->str)) {
        AlgElement y = x;
        // rightmost factor acts first: T = E_1 ∘ … ∘ E_d
        for (auto it = ep->factors.rbegin(); it != ep->factors.rend(); ++it)
            y = apply_expectation(alg, *it, y);
        return y;
    }
    if (const auto* h = std::get_if<HeatMultiplier>(&st_->str)) {
        AlgElement y = AlgElement::zero(alg);
        const Matrix& xb = x.block(0);
        for (std::size_t i = 0; i < h->basis.size(); ++i) {
            // coefficient of x on u^m v^n via the HS inner product
            const Complex c =
                alg.weight(0) * (h->basis[i].conjugate().cwiseProduct(xb)).sum() / h->basis_norm_sq;
            y.block(0) += (c * h->multiplier[i]) * h->basis[i];
        }
        return y;
    }
    const auto& g = std::get<GenericMatrix>(st_->str);
    return unvec(alg, g.mat * vec(x));
}

const Eigen::MatrixXcd& SuperOperator::hs_matrix() const {
    std::call_once(st_->hs_once, [this] {
        if (const auto* g = std::get_if<GenericMatrix>(&st_->str)) {
            st_->hs = g->mat;
            return;
        }
        const int d = st_->alg.hs_dim();
        Eigen::MatrixXcd a(d, d);
        Eigen::VectorXcd basis = Eigen::VectorXcd::Zero(d);
        for (int j = 0; j < d; ++j) {
            basis(j) = 1.0;
            a.col(j) = vec(apply(unvec(st_->alg, basis)));
            basis(j) = 0.0;
        }
        st_->hs = std::move(a);
    });
    return st_->hs;
}

// --- constructors ---------------------------------------------------------------

SuperOperator make_conjugation(const AlgElement& u) {
    if (op_norm(u) > 1.0 + 1e-12)
        throw NotContraction("make_conjugation: ||u|| must be <= 1");
    ProofTags tags;
    tags.positive = true;
    tags.l1_contraction = true;
    tags.linf_contraction = true;
    const AlgElement uu = u * u.adjoint();
    const AlgElement id = AlgElement::identity(u.algebra());
    tags.trace_preserving = op_norm(uu - id) <= 1e-12;
    tags.unital = op_norm(u.adjoint() * u - id) <= 1e-12;
    tags.l2_normal = op_norm(u * u.adjoint() - u.adjoint() * u) <= 1e-12;
    tags.l2_self_adjoint = op_norm(u - u.adjoint()) <= 1e-12;
    tags.l2_positive = tags.l2_self_adjoint && is_positive(u, 1e-12);
    return wrap(u.algebra(), Conjugation{u}, tags, "conjugation");
}

SuperOperator make_convolution(const SuperOperator& phi,
                               const std::vector<std::pair<long, double>>& mu) {
    // μ must be a probability
    double total = 0.0;
    bool has_negative_support = false;
    for (const auto& [n, w] : mu) {
        if (w < -1e-15) throw NotProbability("make_convolution: negative mass at n=" + std::to_string(n));
        total += w;
        if (n < 0) has_negative_support = true;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw NotProbability("make_convolution: masses sum to " + std::to_string(total));

    // Φ must be a trace-preserving *-automorphism; checked on random samples.
    const auto& alg = phi.algebra();
    DetRng rng(0x5eedf00dULL);
    for (int s = 0; s < 4; ++s) {
        const AlgElement x = random_element(alg, rng);
        const AlgElement y = random_element(alg, rng);
        const double scale = lp_norm(x, 2.0) * lp_norm(y, 2.0) + 1.0;
        if (lp_norm(phi.apply(x * y) - phi.apply(x) * phi.apply(y), 2.0) > 1e-10 * scale)
            throw NotAutomorphism("make_convolution: phi is not multiplicative");
        if (std::abs(trace(phi.apply(x)) - trace(x)) > 1e-10 * (std::abs(trace(x)) + 1.0))
            throw NotAutomorphism("make_convolution: phi is not trace-preserving");
        if (lp_norm(phi.apply(x.adjoint()) - phi.apply(x).adjoint(), 2.0) > 1e-10 * scale)
            throw NotAutomorphism("make_convolution: phi does not respect the adjoint");
    }

    std::shared_ptr<const SuperOperator> phi_inv;
    if (has_negative_support) {
        // structural inverse for unitary conjugations, dense inverse otherwise
        if (const auto* c = std::get_if<Conjugation>(&phi.structure());
            c && phi.tags().trace_preserving && phi.tags().unital) {
            phi_inv = std::make_shared<SuperOperator>(make_conjugation(c->u.adjoint()));
        } else {
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(phi.hs_matrix());
            Eigen::MatrixXcd inv =
                lu.solve(Eigen::MatrixXcd::Identity(phi.hs_dim(), phi.hs_dim()));
            const double resid =
                matrix_op_norm(phi.hs_matrix() * inv -
                               Eigen::MatrixXcd::Identity(phi.hs_dim(), phi.hs_dim()));
            if (resid > 1e-8) throw NotAutomorphism("make_convolution: phi is not invertible");
            phi_inv = std::make_shared<SuperOperator>(make_generic(alg, std::move(inv)));
        }
    }

    bool symmetric = true;
    for (const auto& [n, w] : mu) {
        double wneg = 0.0;
        for (const auto& [m, v] : mu)
            if (m == -n) wneg = v;
        if (std::abs(w - wneg) > 1e-15) symmetric = false;
    }

    ProofTags tags;
    tags.positive = true;
    tags.l1_contraction = true;
    tags.linf_contraction = true;
    tags.trace_preserving = true;
    tags.unital = true;
    tags.l2_self_adjoint = symmetric;
    tags.l2_normal = symmetric;  // Σ μ(n) Φ^n is normal when it is self-adjoint

    Convolution cv;
    cv.phi = std::make_shared<SuperOperator>(phi);
    cv.phi_inv = std::move(phi_inv);
    cv.mu = mu;
    std::sort(cv.mu.begin(), cv.mu.end());
    return wrap(alg, std::move(cv), tags, "convolution");
}

SuperOperator make_expectation_product(const TracialAlgebra& alg,
                                       const std::vector<structure::SubalgebraSpec>& specs) {
    if (specs.empty()) throw IncompatibleSubalgebra("expectation product needs >= 1 factor");
    for (const auto& spec : specs) {
        if (spec.kind == SubalgebraSpec::Kind::tensor_factor) {
            if (spec.factor_dim < 2)
                throw IncompatibleSubalgebra("tensor_factor needs factor_dim >= 2");
            for (int b = 0; b < alg.block_count(); ++b)
                if (alg.dim(b) % spec.factor_dim != 0)
                    throw IncompatibleSubalgebra("tensor_factor: block dim " +
                                                 std::to_string(alg.dim(b)) +
                                                 " not divisible by " +
                                                 std::to_string(spec.factor_dim));
        }
    }
    // each factor must satisfy τ∘E = τ; checked on random samples
    DetRng rng(0xe9ec7a70ULL);
    for (const auto& spec : specs) {
        for (int s = 0; s < 4; ++s) {
            const AlgElement x = random_element(alg, rng);
            const AlgElement ex = apply_expectation(alg, spec, x);
            if (std::abs(trace(ex) - trace(x)) > 1e-10 * (std::abs(trace(x)) + 1.0))
                throw IncompatibleSubalgebra("conditional expectation fails tau o E = tau");
        }
    }
    ProofTags tags;
    tags.positive = true;
    tags.l1_contraction = true;
    tags.linf_contraction = true;
    tags.trace_preserving = true;
    tags.unital = true;
    if (specs.size() == 1) {
        // a single trace-preserving conditional expectation is an orthogonal
        // projection on L_2
        tags.l2_self_adjoint = true;
        tags.l2_positive = true;
        tags.l2_normal = true;
    }
    return wrap(alg, ExpectationProduct{specs}, tags, "expectation_product");
}

SuperOperator make_nc_torus_heat(int q, int p, double t, std::optional<TracialAlgebra> alg_in) {
    if (q < 2) throw NonpositiveDim("nc_torus_heat: q must be >= 2");
    if (std::gcd(static_cast<long>(((p % q) + q) % q), static_cast<long>(q)) != 1)
        throw NotCoprime("nc_torus_heat: gcd(p, q) must be 1");
    if (!(t > 0.0)) throw NonpositiveTime("nc_torus_heat: t must be > 0");

    TracialAlgebra alg = alg_in ? *alg_in
                                : new_algebra({{q, 1.0 / static_cast<double>(q)}});
    if (alg.block_count() != 1 || alg.dim(0) != q)
        throw AlgebraMismatch("nc_torus_heat: algebra must be a single block of dim q");

    // clock u, cyclic shift v with v u = e^{-2πip/q} u v
    const Complex zeta = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(p) /
                                             static_cast<double>(q));
    Matrix u = Matrix::Zero(q, q), v = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) {
        u(j, j) = std::pow(zeta, j);
        v((j + 1) % q, j) = 1.0;
    }

    HeatMultiplier h;
    h.q = q;
    h.p = p;
    h.t = t;
    h.basis.reserve(static_cast<std::size_t>(q) * q);
    h.multiplier.reserve(static_cast<std::size_t>(q) * q);
    Matrix um = Matrix::Identity(q, q);
    for (int m = 0; m < q; ++m) {
        Matrix umvn = um;
        for (int n = 0; n < q; ++n) {
            h.basis.push_back(umvn);
            const double sm = std::sin(std::numbers::pi * m / q);
            const double sn = std::sin(std::numbers::pi * n / q);
            h.multiplier.push_back(std::exp(-t * (4.0 * sm * sm + 4.0 * sn * sn)));
            umvn = umvn * v;
        }
        um = um * u;
    }
    h.basis_norm_sq = alg.weight(0) * static_cast<double>(q);  // τ(B*B) = τ(1)

    ProofTags tags;
    tags.positive = true;
    tags.l1_contraction = true;
    tags.linf_contraction = true;
    tags.trace_preserving = true;
    tags.unital = true;
    tags.l2_self_adjoint = true;
    tags.l2_positive = true;
    tags.l2_normal = true;
    return wrap(std::move(alg), std::move(h), tags, "nc_torus_heat");
}

SuperOperator make_generic(const TracialAlgebra& alg, Eigen::MatrixXcd hs_matrix) {
    if (hs_matrix.rows() != alg.hs_dim() || hs_matrix.cols() != alg.hs_dim())
        throw AlgebraMismatch("make_generic: matrix shape does not match hs dimension");
    return wrap(alg, GenericMatrix{std::move(hs_matrix)}, ProofTags{}, "matrix");
}

SuperOperator make_identity(const TracialAlgebra& alg) {
    return make_conjugation(AlgElement::identity(alg));
}

SuperOperator power(const SuperOperator& T, int k) {
    if (k < 1) throw InvalidExponent("power: k must be >= 1");
    if (k == 1) return T;

    if (const auto* c = std::get_if<Conjugation>(&T.structure())) {
        AlgElement uk = c->u;
        for (int i = 1; i < k; ++i) uk = uk * c->u;
        return make_conjugation(uk);
    }
    if (const auto* h = std::get_if<HeatMultiplier>(&T.structure()))
        return make_nc_torus_heat(h->q, h->p, h->t * k, T.algebra());
    if (const auto* cv = std::get_if<Convolution>(&T.structure())) {
        // k-fold convolution power of mu
        std::vector<std::pair<long, double>> acc = {{0, 1.0}};
        for (int i = 0; i < k; ++i) {
            std::vector<std::pair<long, double>> next;
            for (const auto& [n1, w1] : acc)
                for (const auto& [n2, w2] : cv->mu) {
                    bool found = false;
                    for (auto& [n, w] : next)
                        if (n == n1 + n2) {
                            w += w1 * w2;
                            found = true;
                        }
                    if (!found) next.emplace_back(n1 + n2, w1 * w2);
                }
            acc = std::move(next);
        }
        return make_convolution(*cv->phi, acc);
    }
    if (const auto* ep = std::get_if<ExpectationProduct>(&T.structure())) {
        std::vector<SubalgebraSpec> reps;
        for (int i = 0; i < k; ++i)
            reps.insert(reps.end(), ep->factors.begin(), ep->factors.end());
        return make_expectation_product(T.algebra(), reps);
    }
    Eigen::MatrixXcd a = T.hs_matrix();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    int e = k;
    while (e > 0) {
        if (e & 1) out = out * a;
        a = a * a;
        e >>= 1;
    }
    return make_generic(T.algebra(), std::move(out));
}

// --- validation ----------------------------------------------------------------

std::string to_string(Verdict::Kind k) {
    switch (k) {
        case Verdict::Kind::pass: return "pass";
        case Verdict::Kind::fail: return "fail";
        case Verdict::Kind::sampled: return "sampled";
    }
    return "?";
}

L2Properties l2_properties(const SuperOperator& T) {
    const Eigen::MatrixXcd& a = T.hs_matrix();
    L2Properties out;
    out.self_adjoint_residual = matrix_op_norm(a - a.adjoint());
    Eigen::MatrixXcd herm = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    out.positive_min_eig = es.eigenvalues().minCoeff();
    out.normal_residual = matrix_op_norm(a * a.adjoint() - a.adjoint() * a);
    return out;
}

std::vector<Complex> numerical_range_boundary(const SuperOperator& T, int angles) {
    if (angles < 3) throw InvalidExponent("numerical_range_boundary: angles must be >= 3");
    const Eigen::MatrixXcd& a = T.hs_matrix();
    std::vector<Complex> pts;
    pts.reserve(static_cast<std::size_t>(angles));
    for (int j = 0; j < angles; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / angles;
        const Complex rot = std::polar(1.0, theta);
        Eigen::MatrixXcd herm = 0.5 * (rot * a + (rot * a).adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
        const auto xi = es.eigenvectors().col(a.rows() - 1);  // eigenvalues ascend
        pts.push_back((xi.adjoint() * a * xi)(0, 0));
    }
    return pts;
}

StoltzCheck stoltz_check(const std::vector<Complex>& points, double delta, Complex vertex) {
    if (!(delta > 0.0)) throw InvalidExponent("stoltz_check: delta must be > 0");
    StoltzCheck out{true, vertex, -numeric::infinity};
    for (const Complex& z : points) {
        if (std::abs(z - vertex) <= 1e-14) continue;  // the vertex itself is admitted
        const double margin = std::abs(vertex - z) - delta * (1.0 - std::abs(z));
        if (margin > out.worst_margin) {
            out.worst_margin = margin;
            out.worst_point = z;
        }
        if (!(margin < 1e-10)) out.verdict = false;
    }
    return out;
}

ValidationReport validate_ds(const SuperOperator& T, int samples, std::uint64_t seed,
                             double tol) {
    if (samples < 1) throw InvalidExponent("validate_ds: samples must be >= 1");
    ValidationReport rep;
    rep.tol = tol;
    rep.samples = samples;
    DetRng rng(seed);
    const auto& alg = T.algebra();
    const auto& tags = T.tags();

    // positivity
    if (tags.positive) {
        rep.positivity = {Verdict::Kind::pass, 0.0, "by construction"};
    } else {
        double min_eig = numeric::infinity;
        int worst = -1;
        for (int s = 0; s < samples; ++s) {
            const AlgElement y = T.apply(random_positive(alg, rng));
            const AlgElement herm = 0.5 * (y + y.adjoint());
            for (int b = 0; b < alg.block_count(); ++b) {
                Eigen::SelfAdjointEigenSolver<Matrix> es(herm.block(b), Eigen::EigenvaluesOnly);
                const double m = es.eigenvalues().minCoeff();
                if (m < min_eig) {
                    min_eig = m;
                    worst = s;
                }
            }
        }
        rep.positivity = {min_eig >= -tol ? Verdict::Kind::sampled : Verdict::Kind::fail, min_eig,
                          "min eigenvalue of T(x*x) at sample " + std::to_string(worst)};
    }

    // L1 / Linf contraction
    auto contraction_verdict = [&](double pnorm, bool tagged) -> Verdict {
        if (tagged) return {Verdict::Kind::pass, 1.0, "by construction"};
        double worst_ratio = 0.0;
        int worst = -1;
        for (int s = 0; s < samples; ++s) {
            const AlgElement x = random_element(alg, rng);
            const double nx = lp_norm(x, pnorm);
            if (nx == 0.0) continue;
            const double r = lp_norm(T.apply(x), pnorm) / nx;
            if (r > worst_ratio) {
                worst_ratio = r;
                worst = s;
            }
        }
        return {worst_ratio <= 1.0 + tol ? Verdict::Kind::sampled : Verdict::Kind::fail,
                worst_ratio, "worst ratio at sample " + std::to_string(worst)};
    };
    rep.l1_contraction = contraction_verdict(1.0, tags.l1_contraction);
    rep.linf_contraction = contraction_verdict(numeric::infinity, tags.linf_contraction);

    rep.l2_restriction = l2_properties(T);
    rep.numerical_range = numerical_range_boundary(T, 72);

    // smallest Stoltz delta that contains the sampled boundary (vertex 1)
    double delta = 0.0;
    bool feasible = true;
    Complex worst = 1.0;
    for (const Complex& z : rep.numerical_range) {
        if (std::abs(z - 1.0) <= 1e-12) continue;
        const double margin = 1.0 - std::abs(z);
        if (margin <= 1e-14) {
            feasible = false;
            worst = z;
            continue;
        }
        const double need = std::abs(1.0 - z) / margin;
        if (need > delta) {
            delta = need;
            worst = z;
        }
    }
    rep.stoltz = {feasible ? delta : numeric::infinity, feasible, worst};
    return rep;
}

}  // namespace ncwwlab
