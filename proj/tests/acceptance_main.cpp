// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ncwwlab/runner.hpp"
#include "ncwwlab/spectral.hpp"
#include "oracles.hpp"

using namespace ncwwlab;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number;
    std::string name;
    double time_limit_s;  // 0 = no limit
    std::function<bool(std::string&)> body;
};

bool expect(bool ok, const std::string& what, std::string& log) {
    if (!ok && log.size() < 400) log += (log.empty() ? "" : "; ") + what;
    return ok;
}

TracialAlgebra random_algebra(DetRng& rng) {
    const int nblocks = 1 + static_cast<int>(rng.next_u64() % 3);
    std::vector<std::pair<int, double>> blocks;
    int total = 0;
    for (int b = 0; b < nblocks; ++b) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 6);
        if (total + d > 16) break;
        total += d;
        blocks.emplace_back(d, 0.1 + 2.0 * rng.uniform());
    }
    if (blocks.empty()) blocks.emplace_back(2, 1.0);
    return new_algebra(blocks);
}

AlgElement direct_weighted_average(const SuperOperator& T, const AlgElement& x,
                                   const WeightSequence& alpha, std::uint64_t n) {
    AlgElement acc = AlgElement::zero(T.algebra());
    AlgElement y = x;
    for (std::uint64_t k = 0; k < n; ++k) {
        acc += alpha.at(k) * y;
        y = T.apply(y);
    }
    return Complex(1.0 / static_cast<double>(n)) * acc;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --- criteria ---------------------------------------------------------------

bool criterion_algebra_axioms(std::string& log) {
    DetRng rng(1001);
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const auto alg = random_algebra(rng);
        const auto x = random_element(alg, rng);
        const auto y = random_element(alg, rng);
        const Complex c{rng.gaussian(), rng.gaussian()};

        ok &= expect(std::abs(trace(x + c * y) - (trace(x) + c * trace(y))) <= 1e-10,
                     "trace linearity", log);
        ok &= expect(std::abs(trace(x * y) - trace(y * x)) <= 1e-10, "tracial property", log);

        const double p = 1.0 + 3.0 * rng.uniform();
        const double q = p / (p - 1.0);
        ok &= expect(lp_norm(x * y, 1.0) <= lp_norm(x, p) * lp_norm(y, q) + 1e-10, "Hoelder", log);
        for (double pp : {1.0, 2.0, 4.0, numeric::infinity})
            ok &= expect(lp_norm(x + y, pp) <= lp_norm(x, pp) + lp_norm(y, pp) + 1e-10,
                         "triangle inequality", log);

        const auto pos = x.adjoint() * x;
        const double integral = singular_profile(pos).integral();
        const double tr = trace(pos).real();
        ok &= expect(std::abs(integral - tr) <= 1e-12 * std::max(1.0, std::abs(tr)),
                     "mu_t integral identity", log);
    }
    return ok;
}

bool criterion_ds_catalog(std::string& log) {
    DetRng rng(1002);
    const auto alg = new_algebra({{2, 0.8}, {3, 1.2}});
    std::vector<std::pair<std::string, SuperOperator>> catalog;
    catalog.emplace_back("conjugation", make_conjugation(random_contraction(alg, rng)));
    catalog.emplace_back("symmetric convolution",
                         make_convolution(make_conjugation(random_unitary(alg, rng)),
                                          {{1, 0.3}, {0, 0.4}, {-1, 0.3}}));
    catalog.emplace_back("expectation product",
                         make_expectation_product(
                             alg, {{structure::SubalgebraSpec::Kind::diagonal},
                                   {structure::SubalgebraSpec::Kind::block_scalars}}));
    catalog.emplace_back("heat multiplier", make_nc_torus_heat(4, 1, 0.2));

    bool ok = true;
    for (const auto& [name, T] : catalog) {
        const auto rep = validate_ds(T, 100, 2024, 1e-10);
        ok &= expect(rep.positivity.kind != Verdict::Kind::fail, name + " positivity", log);
        ok &= expect(rep.l1_contraction.kind != Verdict::Kind::fail, name + " l1", log);
        ok &= expect(rep.linf_contraction.kind != Verdict::Kind::fail, name + " linf", log);

        DetRng local(555);
        for (int s = 0; s < 100; ++s) {
            const auto x = random_element(T.algebra(), local);
            for (double p : {1.0, 2.0, 4.0, numeric::infinity})
                ok &= expect(lp_norm(T.apply(x), p) <= lp_norm(x, p) + 1e-10,
                             name + " contraction p", log);
            ok &= expect(is_positive(T.apply(x.adjoint() * x), 1e-10), name + " positivity sample",
                         log);
        }
    }
    return ok;
}

bool criterion_selfadjoint_square(std::string& log) {
    DetRng rng(1003);
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
        const auto alg = new_algebra({{2 + static_cast<int>(rng.next_u64() % 3), 1.0}});
        const auto phi = make_conjugation(random_unitary(alg, rng));
        // random symmetric probability on {-2,...,2}
        const double w1 = 0.05 + 0.15 * rng.uniform();
        const double w2 = 0.05 + 0.10 * rng.uniform();
        const double w0 = 1.0 - 2.0 * w1 - 2.0 * w2;
        const auto T = make_convolution(phi, {{1, w1}, {-1, w1}, {2, w2}, {-2, w2}, {0, w0}});
        ok &= expect(l2_properties(T).self_adjoint_residual <= 1e-10, "self-adjoint residual", log);
        ok &= expect(l2_properties(power(T, 2)).positive_min_eig >= -1e-10, "T^2 min eig", log);
    }
    return ok;
}

bool criterion_jdlg(std::string& log) {
    DetRng rng(1004);
    const auto alg = new_algebra({{2, 1.0}, {2, 0.5}});
    std::vector<SuperOperator> fixtures;
    fixtures.push_back(make_nc_torus_heat(3, 1, 0.1));
    fixtures.push_back(make_nc_torus_heat(4, 3, 0.25));
    fixtures.push_back(make_conjugation(random_unitary(alg, rng)));
    fixtures.push_back(make_expectation_product(
        alg, {{structure::SubalgebraSpec::Kind::scalars}}));
    fixtures.push_back(make_convolution(make_conjugation(random_unitary(alg, rng)),
                                        {{1, 0.5}, {-1, 0.5}}));

    bool ok = true;
    for (const auto& T : fixtures) {
        const auto split = jdlg_split(T);
        DetRng local(7);
        for (int i = 0; i < 100; ++i) {
            const auto x = random_element(T.algebra(), local);
            ok &= expect(lp_norm(split.project_reversible(x) + split.project_flight(x) - x, 2.0) <=
                             1e-10,
                         "reconstruction", log);
        }
        for (int i = 0; i < 20; ++i) {
            const auto x = split.project_flight(random_element(T.algebra(), local));
            const auto tx = T.apply(x);
            ok &= expect(lp_norm(tx - split.project_flight(tx), 2.0) <= 1e-9, "invariance", log);
            const double n0 = lp_norm(x, 2.0);
            if (n0 < 1e-12) continue;
            AlgElement y = x;
            for (std::uint64_t n = 1; n <= 200; ++n) {
                y = T.apply(y);
                if (!(lp_norm(y, 2.0) <= flight_decay_bound(split, n) * n0 + 1e-10)) {
                    ok = expect(false, "flight decay", log);
                    break;
                }
            }
        }
    }
    const auto heat = jdlg_split(make_nc_torus_heat(3, 1, 0.1));
    ok &= expect(std::abs(heat.flight_spectral_radius - std::exp(-0.3)) <= 1e-10,
                 "heat flight radius e^-0.3", log);
    return ok;
}

bool criterion_spectral_prediction(std::string& log) {
    DetRng rng(1005);
    const std::uint64_t N = 10000;
    const std::uint64_t n_coeff = 100000;
    bool ok = true;
    for (int fixture = 0; fixture < 10; ++fixture) {
        const auto alg = new_algebra({{2 + fixture % 3, 1.0}});
        const SuperOperator T =
            fixture % 2 == 0 ? make_conjugation(random_unitary(alg, rng))
                             : make_convolution(make_conjugation(random_unitary(alg, rng)),
                                                {{1, 0.5}, {-1, 0.5}});
        std::vector<std::pair<Complex, Complex>> coeffs;
        const int terms = 1 + static_cast<int>(rng.next_u64() % 3);
        for (int j = 0; j < terms; ++j)
            coeffs.emplace_back(rng.gaussian_complex(), rng.unit_complex());
        const auto alpha = gen_trig_poly(coeffs);

        const auto split = jdlg_split(T);
        std::vector<Complex> lams;
        for (const auto& p : split.unimodular_eigenpairs) lams.push_back(p.value);

        DetRng xr(900 + fixture);
        const auto x = random_element(alg, xr);

        const auto streamed = direct_weighted_average(T, x, alpha, N);
        const auto predicted = spectral_weighted_limit(T, alpha, x, lams, n_coeff);

        double coeff_sum = 0.0;
        for (const auto& [r, lam] : coeffs) coeff_sum += std::abs(r);
        double worst_geo = 0.0;
        for (const auto& [r, lam] : coeffs)
            for (const Complex& mu : lams) {
                const double gap = std::abs(1.0 - lam * mu);
                if (gap > 1e-6) worst_geo = std::max(worst_geo, 4.0 / gap);
            }
        if (!split.flight_basis.empty() && split.flight_spectral_radius < 1.0)
            worst_geo = std::max(
                worst_geo, 2.0 * split.flight_condition / (1.0 - split.flight_spectral_radius));
        const double K = coeff_sum * lp_norm(x, 2.0) * worst_geo;
        ok &= expect(lp_norm(streamed - predicted, 2.0) <= K / static_cast<double>(N) + 1e-8,
                     "fixture " + std::to_string(fixture), log);
    }
    return ok;
}

bool criterion_prime_averages(std::string& log) {
    bool ok = true;
    // eigenvector fixture T(x) = -x
    const auto alg = new_algebra({{2, 1.0}});
    const auto T = make_conjugation(AlgElement::diagonal(alg, {1.0, -1.0}));
    const auto x =
        AlgElement::matrix_unit(alg, 0, 0, 1) + AlgElement::matrix_unit(alg, 0, 1, 0);
    const auto diag = prime_average_stream(T, x, {100, 10000});
    for (std::size_t i = 0; i < diag.checkpoints.size(); ++i) {
        const double n = static_cast<double>(diag.checkpoints[i]);
        const double scalar = (2.0 - n) / n;
        ok &= expect(lp_norm(diag.iterates[i] - Complex(scalar) * x, 2.0) <= 1e-12,
                     "eigenvector scalar at n=" + std::to_string(diag.checkpoints[i]), log);
    }

    // flight fixture: truncated residual below 1e-2 by n = 1e4
    const auto heat = make_nc_torus_heat(3, 1, 0.1);
    DetRng rng(1006);
    const auto xf = jdlg_split(heat).project_flight(random_element(heat.algebra(), rng));
    StreamOptions opts;
    opts.trace_budget_fraction = 0.4;
    opts.limit = AlgElement::zero(heat.algebra());
    const auto fdiag = prime_average_stream(heat, xf, dyadic_checkpoints(10000), opts);
    ok &= expect(fdiag.rows.back().trunc_resid_inf <= 1e-2, "flight truncated residual", log);
    return ok;
}

bool criterion_von_mangoldt(std::string& log) {
    // oracle first: independent sieve value of ψ(n)/n
    const std::uint64_t n = 1000000;
    const double oracle = oracles::psi_over_n(n);
    bool ok = expect(std::abs(oracle - 1.0) <= 5e-3, "oracle psi(n)/n near 1", log);

    const auto alg = new_algebra({{1, 1.0}});
    const auto diag =
        mangoldt_average_stream(make_identity(alg), AlgElement::identity(alg), {n});
    const double scalar = diag.iterates[0].block(0)(0, 0).real();
    ok &= expect(std::abs(scalar - oracle) <= 1e-9, "stream matches the sieve oracle", log);
    ok &= expect(std::abs(scalar - 1.0) <= 5e-3, "PNT anchor |scalar - 1| <= 5e-3", log);
    return ok;
}

bool criterion_moving(std::string& log) {
    DetRng rng(1007);
    bool ok = true;

    const auto alg = new_algebra({{3, 1.0}});
    const auto T = make_conjugation(random_unitary(alg, rng));
    const auto x = random_element(alg, rng);
    const auto cps = dyadic_checkpoints(1024);
    const auto plain = weighted_average_stream(T, x, gen_constant(1.0), cps);
    const auto moving = moving_average_stream(T, x, MovingWindow::affine(1, 0, 0, 0), cps);
    for (std::size_t i = 0; i < cps.size(); ++i)
        ok &= expect(lp_norm(plain.iterates[i] - moving.iterates[i], 2.0) <= 1e-10,
                     "window (n, 0) equals the Cesaro stream", log);

    const auto heat = make_nc_torus_heat(3, 1, 0.1);  // rho = e^{-0.3}
    const auto xf = jdlg_split(heat).project_flight(random_element(heat.algebra(), rng));
    const auto shifted =
        moving_average_stream(heat, xf, MovingWindow::affine(1, 0, 1, 0), {100});
    ok &= expect(lp_norm(shifted.iterates[0], 2.0) <= 1e-6, "m_n = n decay below 1e-6", log);
    return ok;
}

bool criterion_uniform_scan(std::string& log) {
    const auto heat = make_nc_torus_heat(3, 1, 0.1);
    DetRng rng(1008);
    const auto xf = jdlg_split(heat).project_flight(random_element(heat.algebra(), rng));
    StreamOptions opts;
    opts.trace_budget_fraction = 0.4;
    const auto scan = uniform_ww_scan(heat, xf, 2.0, 1.0, 100, 4242, {100, 10000}, opts);
    const double at_1e2 = scan.sup_trunc_resid[0];
    const double at_1e4 = scan.sup_trunc_resid[1];
    bool ok = expect(at_1e4 > 0.0 || at_1e2 == 0.0, "nonzero curve", log);
    ok &= expect(at_1e2 >= 10.0 * at_1e4, "decrease factor >= 10", log);
    return ok;
}

bool criterion_stability_probe(std::string& log) {
    const auto heat = make_nc_torus_heat(3, 1, 0.1);
    DetRng rng(1009);
    const auto x = random_element(heat.algebra(), rng);
    std::vector<WeightSequence> family = {gen_constant(1.0),
                                          gen_trig_poly({{1.0, std::polar(1.0, 0.37)}})};
    bool ok = true;
    double cmin = 1e300, cmax = 0.0;
    for (int draw = 0; draw < 10; ++draw) {
        DetRng local(3000 + draw);
        const auto y = random_element(heat.algebra(), local);
        std::vector<AlgElement> xs;
        for (double s : {1.0, 0.1, 0.01}) xs.push_back(x + Complex(s) * y);
        const auto rep =
            approximation_stability_probe(heat, xs, x, family, dyadic_checkpoints(256));
        ok &= expect(std::isfinite(rep.measured_constant) && rep.measured_constant > 0.0,
                     "finite constant", log);
        cmin = std::min(cmin, rep.measured_constant);
        cmax = std::max(cmax, rep.measured_constant);
        double rmin = 1e300, rmax = 0.0;
        for (const auto& row : rep.rows) {
            rmin = std::min(rmin, row.ratio);
            rmax = std::max(rmax, row.ratio);
        }
        ok &= expect(rmax <= 2.0 * rmin, "linear scaling within factor 2", log);
    }
    ok &= expect(cmax <= 2.0 * cmin, "constant stable across draws", log);
    return ok;
}

bool criterion_return_times(std::string& log) {
    const double theta = std::sqrt(2.0) - 1.0;
    const std::uint64_t n = 1000000;
    const auto alg = new_algebra({{1, 1.0}});
    const auto samples = return_time_experiment(theta, 2, 0.0, 0.5, make_identity(alg),
                                                AlgElement::identity(alg), {n}, 77);
    bool ok = true;
    for (const auto& s : samples) {
        const double scalar = s.weighted.iterates[0].block(0)(0, 0).real();
        const Complex oracle = oracles::rotation_orbit_mean(
            theta, s.omega, n, [](double t) { return Complex(t < 0.5 ? 1.0 : 0.0); });
        ok &= expect(std::abs(scalar - oracle.real()) <= 1e-12, "matches equidistribution oracle",
                     log);
        ok &= expect(std::abs(scalar - 0.5) <= 1e-2, "|scalar - 0.5| <= 1e-2", log);
    }
    return ok;
}

bool criterion_determinism(std::string& log) {
    const std::string dir = NCWWLAB_SCENARIO_DIR;
    const std::vector<std::string> suite = {"minimal.json", "eigenvector_minus.json",
                                            "heat_flight.json", "mangoldt_identity.json",
                                            "return_time.json"};
    const auto tmp = fs::temp_directory_path() / "ncwwlab_acceptance";
    fs::remove_all(tmp);
    bool ok = true;
    for (const auto& name : suite) {
        std::vector<std::string> outputs;
        int run_idx = 0;
        for (int threads : {1, 8}) {
            for (int rep = 0; rep < 2; ++rep) {
                Overrides ov;
                ov.threads = threads;
                ov.out_dir = (tmp / (name + "_" + std::to_string(run_idx++))).string();
                const auto res = run_scenario_file(dir + "/" + name, ov);
                if (res.exit_code != 0) ok = expect(false, name + " exit code", log);
                outputs.push_back(slurp(res.rows_path));
            }
        }
        for (std::size_t i = 1; i < outputs.size(); ++i)
            ok &= expect(outputs[i] == outputs[0], name + " rows.csv bytes", log);
    }
    return ok;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "algebra axioms on 100 random algebras (1e-10 / 1e-12)", 10.0,
         criterion_algebra_axioms},
        {2, "DS+ catalog positivity and {1,2,4,inf}-contraction (1e-10, 100 samples)", 30.0,
         criterion_ds_catalog},
        {3, "self-adjoint square chain on 20 symmetric convolutions", 0.0, criterion_selfadjoint_square},
        {4, "JdLG reconstruction/invariance/flight decay; heat radius e^-0.3 (1e-10)", 0.0,
         criterion_jdlg},
        {5, "spectral prediction agreement on 10 fixtures (K/N + 1e-8 at N=1e4)", 60.0,
         criterion_spectral_prediction},
        {6, "prime averages: exact eigenvector scalars; flight residual <= 1e-2", 0.0,
         criterion_prime_averages},
        {7, "von Mangoldt PNT anchor at n=1e6 (5e-3, sieve oracle first)", 30.0,
         criterion_von_mangoldt},
        {8, "moving averages: Cesaro match (1e-10); m_n = n decay below 1e-6", 0.0,
         criterion_moving},
        {9, "uniform scan: sup residual decreases 10x between n=1e2 and 1e4", 0.0,
         criterion_uniform_scan},
        {10, "Banach-principle probe: stable constant, linear scaling (factor 2)", 0.0,
         criterion_stability_probe},
        {11, "return times at theta = sqrt(2)-1: scalar within 1e-2 of 0.5 at n=1e6", 0.0,
         criterion_return_times},
        {12, "determinism: bundled suite bit-identical at --threads 1 and 8", 0.0,
         criterion_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string log;
        bool ok = false;
        try {
            ok = c.body(log);
        } catch (const std::exception& e) {
            log = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
            ok = false;
            log += (log.empty() ? "" : "; ") + std::string("runtime ") + std::to_string(secs) +
                   "s exceeds " + std::to_string(c.time_limit_s) + "s";
        }
        std::printf("%s  criterion %2d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", c.number,
                    c.name.c_str(), secs, log.empty() ? "" : " -- ", log.c_str());
        std::fflush(stdout);
        if (!ok) ++failed;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed;
}
