#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "ncwwlab/superop.hpp"
#include "oracles.hpp"

using namespace ncwwlab;

namespace {

// Eigen-hull oracle: distance from a point to the convex hull of a spectrum,
// computed by support functions over a fine angle grid.
double hull_violation(const std::vector<Complex>& points, const Eigen::VectorXcd& spectrum) {
    double worst = 0.0;
    for (const Complex& z : points) {
        double violation = 0.0;
        for (int a = 0; a < 2048; ++a) {
            const double th = 2.0 * std::numbers::pi * a / 2048;
            const Complex dir = std::polar(1.0, th);
            double support = -1e300;
            for (int i = 0; i < spectrum.size(); ++i)
                support = std::max(support, (std::conj(dir) * spectrum(i)).real());
            violation = std::max(violation, (std::conj(dir) * z).real() - support);
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

}  // namespace

TEST_CASE("vec/unvec are mutually inverse and isometric") {
    DetRng rng(7);
    const auto alg = new_algebra({{2, 0.4}, {3, 1.7}});
    for (int i = 0; i < 10; ++i) {
        const auto x = random_element(alg, rng);
        const auto v = vec(x);
        CHECK(op_norm(unvec(alg, v) - x) < 1e-13);
        const double n2 = lp_norm(x, 2.0);
        CHECK(std::abs(v.norm() - n2) < 1e-12 * std::max(1.0, n2));
    }
}

TEST_CASE("conjugation operator") {
    const auto alg = new_algebra({{2, 1.0}});

    const auto id = make_identity(alg);
    DetRng rng(1);
    const auto x = random_element(alg, rng);
    CHECK(op_norm(id.apply(x) - x) < 1e-14);

    // u = diag(1, i): T(e_{jk}) = conj(λ_j) λ_k e_{jk}
    const auto u = AlgElement::diagonal(alg, {1.0, Complex(0.0, 1.0)});
    const auto t = make_conjugation(u);
    const auto e12 = AlgElement::matrix_unit(alg, 0, 0, 1);
    CHECK(op_norm(t.apply(e12) - Complex(0.0, 1.0) * e12) < 1e-14);

    // unitary conjugation is an L2 isometry
    DetRng rng2(2);
    const auto w = random_unitary(alg, rng2);
    const auto tw = make_conjugation(w);
    const auto y = random_element(alg, rng2);
    CHECK(lp_norm(tw.apply(y), 2.0) == doctest::Approx(lp_norm(y, 2.0)));

    CHECK_THROWS_AS(make_conjugation(Complex(2.0) * AlgElement::identity(alg)), NotContraction);
}

TEST_CASE("conjugation spectrum containment for diagonal contractions") {
    // u diagonal with entries in [0,1]·U_4: hs eigenvalues must lie in
    // conj(spec) * spec
    const auto alg = new_algebra({{4, 1.0}});
    const std::vector<Complex> lams = {0.9, Complex(0.0, 0.7), -0.5, Complex(0.0, -1.0)};
    const auto u = AlgElement::diagonal(alg, lams);
    const auto t = make_conjugation(u);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t.hs_matrix());
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        double best = 1e300;
        for (const Complex& a : lams)
            for (const Complex& b : lams) best = std::min(best, std::abs(std::conj(a) * b - ev));
        CHECK(best < 1e-8);
    }
}

TEST_CASE("representation consistency: apply agrees with the hs matrix") {
    DetRng rng(3);
    const auto alg = new_algebra({{2, 0.5}, {2, 1.5}});
    const auto u = random_contraction(alg, rng);
    std::vector<SuperOperator> ops;
    ops.push_back(make_conjugation(u));
    ops.push_back(make_expectation_product(
        alg, {{structure::SubalgebraSpec::Kind::diagonal}}));
    ops.push_back(make_nc_torus_heat(3, 1, 0.1));
    const auto phi = make_conjugation(random_unitary(alg, rng));
    ops.push_back(make_convolution(phi, {{1, 0.5}, {-1, 0.5}}));

    for (const auto& T : ops) {
        const auto& a = T.hs_matrix();
        for (int i = 0; i < 100; ++i) {
            const auto x = random_element(T.algebra(), rng);
            const auto via_apply = T.apply(x);
            const auto via_matrix = unvec(T.algebra(), a * vec(x));
            CHECK(lp_norm(via_apply - via_matrix, 2.0) < 1e-10);
        }
    }
}

TEST_CASE("convolution operator") {
    const auto alg = new_algebra({{4, 0.25}});
    DetRng rng(4);
    const auto phi = make_conjugation(random_unitary(alg, rng));

    // μ = δ_0 is the identity
    const auto tid = make_convolution(phi, {{0, 1.0}});
    const auto x = random_element(alg, rng);
    CHECK(lp_norm(tid.apply(x) - x, 2.0) < 1e-12);

    // symmetric μ gives a self-adjoint L2 restriction
    const auto tsym = make_convolution(phi, {{1, 0.5}, {-1, 0.5}});
    CHECK(tsym.tags().l2_self_adjoint);
    CHECK(l2_properties(tsym).self_adjoint_residual < 1e-10);

    CHECK_THROWS_AS(make_convolution(phi, {{0, 0.7}}), NotProbability);
    CHECK_THROWS_AS(make_convolution(phi, {{0, 1.5}, {1, -0.5}}), NotProbability);

    // a non-automorphism Φ is rejected
    const auto bad = make_conjugation(Complex(0.5) * AlgElement::identity(alg));
    CHECK_THROWS_AS(make_convolution(bad, {{0, 1.0}}), NotAutomorphism);
}

TEST_CASE("convolution by the q=4 shift has real spectrum in [-1,1] for symmetric mu") {
    const int q = 4;
    const auto alg = new_algebra({{q, 1.0 / q}});
    Matrix shift = Matrix::Zero(q, q);
    for (int j = 0; j < q; ++j) shift((j + 1) % q, j) = 1.0;
    const auto phi = make_conjugation(AlgElement(alg, {shift}));
    const auto t = make_convolution(phi, {{1, 0.5}, {-1, 0.5}});

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t.hs_matrix());
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        CHECK(std::abs(ev.imag()) < 1e-10);
        CHECK(ev.real() > -1.0 - 1e-10);
        CHECK(ev.real() < 1.0 + 1e-10);
    }
}

TEST_CASE("expectation products") {
    const auto alg = new_algebra({{2, 1.0}});
    DetRng rng(5);
    const auto x = random_element(alg, rng);

    const auto diag = make_expectation_product(
        alg, {{structure::SubalgebraSpec::Kind::diagonal}});
    const auto dx = diag.apply(x);
    CHECK(std::abs(dx.block(0)(0, 1)) < 1e-15);
    CHECK(std::abs(dx.block(0)(0, 0) - x.block(0)(0, 0)) < 1e-15);

    // [diagonal, scalars] sends x to τ(x)/τ(1) · 1
    const auto comp = make_expectation_product(
        alg, {{structure::SubalgebraSpec::Kind::diagonal},
              {structure::SubalgebraSpec::Kind::scalars}});
    const auto cx = comp.apply(x);
    const Complex mean = trace(x) / alg.total_trace();
    CHECK(op_norm(cx - mean * AlgElement::identity(alg)) < 1e-13);

    // idempotence of a single expectation
    const auto once = diag.apply(x);
    const auto twice = diag.apply(once);
    CHECK(op_norm(twice - once) < 1e-12);

    // tensor factor average on a 4 = 2x2 block
    const auto alg4 = new_algebra({{4, 1.0}});
    const auto tf = make_expectation_product(
        alg4, {{structure::SubalgebraSpec::Kind::tensor_factor, 2}});
    const auto y = random_element(alg4, rng);
    const auto ty = tf.apply(y);
    CHECK(std::abs(trace(ty) - trace(y)) < 1e-12);
    CHECK(op_norm(tf.apply(ty) - ty) < 1e-12);

    CHECK_THROWS_AS(make_expectation_product(
                        alg, {{structure::SubalgebraSpec::Kind::tensor_factor, 3}}),
                    IncompatibleSubalgebra);
}

TEST_CASE("heat multiplier on the rational torus") {
    const auto t01 = make_nc_torus_heat(3, 1, 0.1);
    const auto& alg = t01.algebra();
    CHECK(alg.total_trace() == doctest::Approx(1.0));

    // T(1) = 1 exactly
    const auto one = AlgElement::identity(alg);
    CHECK(op_norm(t01.apply(one) - one) < 1e-13);

    // eigenvalue on u^1 v^0 is e^{-0.1 * 4 sin^2(pi/3)} = e^{-0.3}
    const auto& h = std::get<structure::HeatMultiplier>(t01.structure());
    const auto u10 = AlgElement(alg, {h.basis[1 * 3 + 0]});
    const auto tu = t01.apply(u10);
    CHECK(lp_norm(tu - Complex(std::exp(-0.3)) * u10, 2.0) < 1e-12);

    // t -> 0 limit: T ~ id
    const auto teps = make_nc_torus_heat(3, 1, 1e-8);
    Eigen::MatrixXcd diff = teps.hs_matrix() -
                            Eigen::MatrixXcd::Identity(teps.hs_dim(), teps.hs_dim());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(diff);
    CHECK(svd.singularValues()(0) < 1e-6);

    CHECK_THROWS_AS(make_nc_torus_heat(4, 2, 0.1), NotCoprime);
    CHECK_THROWS_AS(make_nc_torus_heat(3, 1, 0.0), NonpositiveTime);
}

TEST_CASE("DS contraction and positivity for proof-tagged fixtures") {
    DetRng rng(6);
    const auto alg = new_algebra({{2, 0.7}, {2, 1.1}});
    std::vector<SuperOperator> ops;
    ops.push_back(make_conjugation(random_contraction(alg, rng)));
    ops.push_back(make_convolution(make_conjugation(random_unitary(alg, rng)),
                                   {{2, 0.25}, {0, 0.5}, {-2, 0.25}}));
    ops.push_back(make_expectation_product(
        alg, {{structure::SubalgebraSpec::Kind::diagonal},
              {structure::SubalgebraSpec::Kind::block_scalars}}));
    ops.push_back(make_nc_torus_heat(4, 1, 0.2));

    for (const auto& T : ops) {
        DetRng local(17);
        for (int i = 0; i < 100; ++i) {
            const auto x = random_element(T.algebra(), local);
            for (double p : {1.0, 2.0, 4.0, numeric::infinity})
                CHECK(lp_norm(T.apply(x), p) <= lp_norm(x, p) + 1e-10);
            CHECK(is_positive(T.apply(x.adjoint() * x), 1e-10));
        }
    }
}

TEST_CASE("validate_ds verdicts") {
    const auto alg = new_algebra({{2, 1.0}});
    DetRng rng(8);

    const auto good = make_conjugation(random_contraction(alg, rng));
    const auto rep = validate_ds(good, 20, 99, 1e-10);
    CHECK(rep.positivity.kind == Verdict::Kind::pass);
    CHECK(rep.l1_contraction.kind == Verdict::Kind::pass);
    CHECK(rep.linf_contraction.kind == Verdict::Kind::pass);

    // 2·id as a generic matrix fails the contraction checks
    const auto twice = make_generic(
        alg, 2.0 * Eigen::MatrixXcd::Identity(alg.hs_dim(), alg.hs_dim()));
    const auto rep2 = validate_ds(twice, 20, 99, 1e-10);
    CHECK(rep2.l1_contraction.kind == Verdict::Kind::fail);
    CHECK(rep2.l1_contraction.bound == doctest::Approx(2.0));
    CHECK(rep2.linf_contraction.kind == Verdict::Kind::fail);
    CHECK(rep2.positivity.kind == Verdict::Kind::sampled);

    const auto sym = make_convolution(make_conjugation(random_unitary(alg, rng)),
                                      {{1, 0.5}, {-1, 0.5}});
    const auto rep3 = validate_ds(sym, 20, 99, 1e-10);
    CHECK(rep3.positivity.kind == Verdict::Kind::pass);
    CHECK(rep3.l2_restriction.self_adjoint_residual < 1e-10);
}

TEST_CASE("l2 properties of catalog operators") {
    // heat multiplier: diagonal positive
    const auto heat = make_nc_torus_heat(3, 1, 0.1);
    const auto lh = l2_properties(heat);
    CHECK(lh.self_adjoint_residual < 1e-12);
    CHECK(lh.positive_min_eig >= -1e-14);
    CHECK(lh.normal_residual < 1e-12);

    // conjugation by diag(1, i): normal but far from self-adjoint
    const auto alg = new_algebra({{2, 1.0}});
    const auto t = make_conjugation(AlgElement::diagonal(alg, {1.0, Complex(0.0, 1.0)}));
    const auto lt = l2_properties(t);
    CHECK(lt.normal_residual < 1e-12);
    CHECK(lt.self_adjoint_residual > 0.1);
}

TEST_CASE("self-adjoint L2 restriction gives a positive square") {
    DetRng rng(9);
    const auto alg = new_algebra({{3, 1.0}});
    for (int i = 0; i < 20; ++i) {
        const auto phi = make_conjugation(random_unitary(alg, rng));
        const auto t = make_convolution(phi, {{1, 0.5}, {-1, 0.5}});
        REQUIRE(l2_properties(t).self_adjoint_residual < 1e-10);
        const auto t2 = power(t, 2);
        CHECK(l2_properties(t2).positive_min_eig >= -1e-10);
    }
}

TEST_CASE("power of operators") {
    const auto alg = new_algebra({{2, 1.0}});
    DetRng rng(10);
    const auto u = random_contraction(alg, rng);
    const auto t = make_conjugation(u);
    CHECK(&power(t, 1).structure() == &t.structure());

    // structural conjugation power agrees with the matrix power
    const auto t3 = power(t, 3);
    Eigen::MatrixXcd a3 = t.hs_matrix() * t.hs_matrix() * t.hs_matrix();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(t3.hs_matrix() - a3);
    CHECK(svd.singularValues()(0) < 1e-10);

    // multiplier eigenvalue e^{-0.3} cubes to e^{-0.9}
    const auto heat = make_nc_torus_heat(3, 1, 0.1);
    const auto heat3 = power(heat, 3);
    const auto& h3 = std::get<structure::HeatMultiplier>(heat3.structure());
    CHECK(h3.multiplier[1 * 3 + 0] == doctest::Approx(std::exp(-0.9)));
}

TEST_CASE("numerical range boundary") {
    const auto alg = new_algebra({{2, 1.0}});

    // identity: every boundary point is 1
    const auto id = make_identity(alg);
    for (const Complex& z : numerical_range_boundary(id, 16))
        CHECK(std::abs(z - Complex(1.0)) < 1e-12);

    // normal operator: boundary points inside the eigenvalue hull
    DetRng rng(11);
    const auto t = make_conjugation(random_unitary(alg, rng));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(t.hs_matrix());
    const auto pts = numerical_range_boundary(t, 64);
    CHECK(hull_violation(pts, es.eigenvalues()) < 1e-8);

    // diag(0, 1) HS representation spans [0, 1]
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
    d(1, 1) = 1.0;
    const auto proj = make_generic(alg, d);
    double lo = 2.0, hi = -2.0;
    for (const Complex& z : numerical_range_boundary(proj, 256)) {
        CHECK(std::abs(z.imag()) < 1e-10);
        lo = std::min(lo, z.real());
        hi = std::max(hi, z.real());
    }
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("stoltz region check") {
    const auto inside = stoltz_check({Complex(0.5, 0.0)}, 2.0, 1.0);
    CHECK(inside.verdict);

    const auto outside = stoltz_check({Complex(0.0, 0.9)}, 2.0, 1.0);
    CHECK_FALSE(outside.verdict);
    CHECK(outside.worst_point == Complex(0.0, 0.9));

    const auto vertex = stoltz_check({Complex(1.0, 0.0)}, 2.0, 1.0);
    CHECK(vertex.verdict);
}
