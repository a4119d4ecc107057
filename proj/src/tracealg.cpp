#include "ncwwlab/tracealg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ncwwlab {

TracialAlgebra TracialAlgebra::make(std::vector<AlgebraBlock> blocks) {
    if (blocks.empty()) throw EmptyBlockList("algebra needs at least one block");
    TracialAlgebra alg;
    for (const auto& b : blocks) {
        if (b.dim < 1) throw NonpositiveDim("block dim must be >= 1, got " + std::to_string(b.dim));
        if (!(b.weight > 0.0))
            throw NonpositiveWeight("trace weight must be > 0, got " + std::to_string(b.weight));
        alg.total_trace_ += b.weight * b.dim;
        alg.hs_dim_ += b.dim * b.dim;
    }
    alg.blocks_ = std::move(blocks);
    return alg;
}

TracialAlgebra new_algebra(const std::vector<std::pair<int, double>>& blocks) {
    std::vector<AlgebraBlock> bs;
    bs.reserve(blocks.size());
    for (const auto& [d, w] : blocks) bs.push_back({d, w});
    return TracialAlgebra::make(std::move(bs));
}

AlgElement::AlgElement(TracialAlgebra alg, std::vector<Matrix> data)
    : alg_(std::move(alg)), data_(std::move(data)) {
    if (static_cast<int>(data_.size()) != alg_.block_count())
        throw AlgebraMismatch("element has wrong number of blocks");
    for (int b = 0; b < alg_.block_count(); ++b) {
        const auto& m = data_[static_cast<std::size_t>(b)];
        if (m.rows() != alg_.dim(b) || m.cols() != alg_.dim(b))
            throw AlgebraMismatch("block " + std::to_string(b) + " has wrong shape");
    }
}

AlgElement AlgElement::zero(const TracialAlgebra& alg) {
    std::vector<Matrix> data;
    data.reserve(static_cast<std::size_t>(alg.block_count()));
    for (int b = 0; b < alg.block_count(); ++b) data.push_back(Matrix::Zero(alg.dim(b), alg.dim(b)));
    return AlgElement(alg, std::move(data));
}

AlgElement AlgElement::identity(const TracialAlgebra& alg) {
    std::vector<Matrix> data;
    data.reserve(static_cast<std::size_t>(alg.block_count()));
    for (int b = 0; b < alg.block_count(); ++b)
        data.push_back(Matrix::Identity(alg.dim(b), alg.dim(b)));
    return AlgElement(alg, std::move(data));
}

AlgElement AlgElement::matrix_unit(const TracialAlgebra& alg, int block, int i, int j) {
    AlgElement e = zero(alg);
    e.block(block)(i, j) = 1.0;
    return e;
}

AlgElement AlgElement::diagonal(const TracialAlgebra& alg, const std::vector<Complex>& entries) {
    AlgElement e = zero(alg);
    std::size_t k = 0;
    for (int b = 0; b < alg.block_count(); ++b)
        for (int i = 0; i < alg.dim(b); ++i) {
            if (k >= entries.size()) throw AlgebraMismatch("diagonal: not enough entries");
            e.block(b)(i, i) = entries[k++];
        }
    if (k != entries.size()) throw AlgebraMismatch("diagonal: too many entries");
    return e;
}

AlgElement AlgElement::adjoint() const {
    std::vector<Matrix> data;
    data.reserve(data_.size());
    for (const auto& m : data_) data.push_back(m.adjoint());
    return AlgElement(alg_, std::move(data));
}

namespace detail {
void require_same_algebra(const AlgElement& a, const AlgElement& b, const char* op) {
    if (a.algebra() != b.algebra())
        throw AlgebraMismatch(std::string(op) + ": elements live on different algebras");
}
}  // namespace detail

AlgElement& AlgElement::operator+=(const AlgElement& o) {
    detail::require_same_algebra(*this, o, "add");
    for (std::size_t b = 0; b < data_.size(); ++b) data_[b] += o.data_[b];
    return *this;
}

AlgElement& AlgElement::operator-=(const AlgElement& o) {
    detail::require_same_algebra(*this, o, "sub");
    for (std::size_t b = 0; b < data_.size(); ++b) data_[b] -= o.data_[b];
    return *this;
}

AlgElement& AlgElement::operator*=(Complex c) {
    for (auto& m : data_) m *= c;
    return *this;
}

AlgElement operator+(AlgElement a, const AlgElement& b) { return a += b; }
AlgElement operator-(AlgElement a, const AlgElement& b) { return a -= b; }

AlgElement operator*(const AlgElement& a, const AlgElement& b) {
    detail::require_same_algebra(a, b, "mul");
    std::vector<Matrix> data;
    data.reserve(static_cast<std::size_t>(a.block_count()));
    for (int i = 0; i < a.block_count(); ++i) data.push_back(a.block(i) * b.block(i));
    return AlgElement(a.algebra(), std::move(data));
}

AlgElement operator*(Complex c, AlgElement a) { return a *= c; }
AlgElement operator*(AlgElement a, Complex c) { return a *= c; }

Complex trace(const AlgElement& x) {
    Complex t = 0.0;
    for (int b = 0; b < x.block_count(); ++b) t += x.algebra().weight(b) * x.block(b).trace();
    return t;
}

Complex hs_inner(const AlgElement& x, const AlgElement& y) {
    detail::require_same_algebra(x, y, "hs_inner");
    Complex t = 0.0;
    // τ(y* x) = Σ_b w_b Σ_{ij} conj(y_ij) x_ij
    for (int b = 0; b < x.block_count(); ++b)
        t += x.algebra().weight(b) * (y.block(b).conjugate().cwiseProduct(x.block(b))).sum();
    return t;
}

namespace {

std::vector<double> block_singular_values(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return std::vector<double>(sv.data(), sv.data() + sv.size());
}

}  // namespace

double lp_norm(const AlgElement& x, double p) {
    if (!(p >= 1.0))
        throw InvalidExponent("lp_norm: p must satisfy p >= 1, got " + std::to_string(p));
    if (std::isinf(p)) {
        double m = 0.0;
        for (int b = 0; b < x.block_count(); ++b)
            for (double s : block_singular_values(x.block(b))) m = std::max(m, s);
        return m;
    }
    double acc = 0.0;
    for (int b = 0; b < x.block_count(); ++b) {
        const double w = x.algebra().weight(b);
        for (double s : block_singular_values(x.block(b))) acc += w * std::pow(s, p);
    }
    return std::pow(acc, 1.0 / p);
}

double op_norm(const AlgElement& x) { return lp_norm(x, numeric::infinity); }

SingularProfile singular_profile(const AlgElement& x) {
    std::vector<SingularProfile::Step> raw;
    for (int b = 0; b < x.block_count(); ++b) {
        const double w = x.algebra().weight(b);
        for (double s : block_singular_values(x.block(b))) raw.push_back({s, w});
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.value > b.value; });
    std::vector<SingularProfile::Step> merged;
    for (const auto& st : raw) {
        if (!merged.empty() && merged.back().value == st.value)
            merged.back().length += st.length;
        else
            merged.push_back(st);
    }
    return SingularProfile(std::move(merged));
}

double SingularProfile::integral() const {
    double acc = 0.0;
    for (const auto& s : steps_) acc += s.value * s.length;
    return acc;
}

double SingularProfile::value_at(double t) const {
    double pos = 0.0;
    for (const auto& s : steps_) {
        pos += s.length;
        if (t < pos) return s.value;
    }
    return 0.0;
}

bool is_positive(const AlgElement& x, double tol) {
    const AlgElement diff = x - x.adjoint();
    if (op_norm(diff) > tol) return false;
    for (int b = 0; b < x.block_count(); ++b) {
        Matrix h = 0.5 * (x.block(b) + x.block(b).adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -tol) return false;
    }
    return true;
}

AlgElement spectral_projection(const AlgElement& x, double a, double b, double selfadjoint_tol) {
    if (op_norm(x - x.adjoint()) > selfadjoint_tol)
        throw NotSelfAdjoint("spectral_projection: element is not self-adjoint");
    std::vector<Matrix> data;
    for (int bl = 0; bl < x.block_count(); ++bl) {
        Matrix h = 0.5 * (x.block(bl) + x.block(bl).adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        Matrix p = Matrix::Zero(h.rows(), h.cols());
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            const double ev = es.eigenvalues()(i);
            if (ev >= a && ev <= b) {
                const auto v = es.eigenvectors().col(i);
                p += v * v.adjoint();
            }
        }
        data.push_back(std::move(p));
    }
    return AlgElement(x.algebra(), std::move(data));
}

AlgElement abs_element(const AlgElement& x) {
    std::vector<Matrix> data;
    for (int b = 0; b < x.block_count(); ++b) {
        Matrix prod = x.block(b).adjoint() * x.block(b);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (prod + prod.adjoint()));
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        data.push_back(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
    }
    return AlgElement(x.algebra(), std::move(data));
}

bool is_projection(const AlgElement& e, double tol) {
    return op_norm(e * e - e) <= tol && op_norm(e.adjoint() - e) <= tol;
}

AlgElement random_element(const TracialAlgebra& alg, DetRng& rng) {
    std::vector<Matrix> data;
    for (int b = 0; b < alg.block_count(); ++b) {
        Matrix m(alg.dim(b), alg.dim(b));
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.gaussian_complex();
        data.push_back(std::move(m));
    }
    return AlgElement(alg, std::move(data));
}

AlgElement random_selfadjoint(const TracialAlgebra& alg, DetRng& rng) {
    AlgElement x = random_element(alg, rng);
    return 0.5 * (x + x.adjoint());
}

AlgElement random_positive(const TracialAlgebra& alg, DetRng& rng) {
    AlgElement x = random_element(alg, rng);
    return x.adjoint() * x;
}

AlgElement random_unitary(const TracialAlgebra& alg, DetRng& rng) {
    AlgElement x = random_element(alg, rng);
    std::vector<Matrix> data;
    for (int b = 0; b < alg.block_count(); ++b) {
        Eigen::HouseholderQR<Matrix> qr(x.block(b));
        Matrix q = qr.householderQ();
        Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
        // fix phases so the factorization is unique
        for (int i = 0; i < q.cols(); ++i) {
            Complex d = r(i, i);
            const double a = std::abs(d);
            q.col(i) *= (a > 0.0) ? d / a : Complex(1.0);
        }
        data.push_back(std::move(q));
    }
    return AlgElement(alg, std::move(data));
}

AlgElement random_contraction(const TracialAlgebra& alg, DetRng& rng) {
    AlgElement x = random_element(alg, rng);
    const double n = op_norm(x);
    if (n > 0.0) x *= Complex(1.0 / n);
    return x;
}

}  // namespace ncwwlab
