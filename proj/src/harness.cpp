#include "ncwwlab/harness.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "ncwwlab/detrng.hpp"

namespace ncwwlab {

Checkpoints dyadic_checkpoints(std::uint64_t n_max) {
    Checkpoints cp;
    for (std::uint64_t n = 1; n <= n_max; n *= 2) {
        cp.push_back(n);
        if (n > n_max / 2) break;
    }
    if (cp.empty() || cp.back() != n_max) cp.push_back(n_max);
    return cp;
}

std::string to_string(TruncationMode m) {
    return m == TruncationMode::bilateral ? "bilateral" : "right";
}

TruncationResult truncation_search(std::span<const AlgElement> orbitvals, double epsilon,
                                   TruncationMode mode, bool require_cut) {
    if (orbitvals.empty()) throw std::invalid_argument("truncation_search: empty orbit list");
    const TracialAlgebra& alg = orbitvals[0].algebra();
    if (!(epsilon > 0.0) || !(epsilon < alg.total_trace()))
        throw std::invalid_argument("truncation_search: need 0 < epsilon < tau(1)");

    // dominant envelope s = Σ_n 2^{-n-1} |y_n|
    AlgElement envelope = AlgElement::zero(alg);
    double w = 0.5;
    for (const AlgElement& y : orbitvals) {
        envelope += w * abs_element(y);
        w *= 0.5;
    }

    // eigenvalues of s, each carrying trace weight w_b
    struct Entry {
        double value;
        int block;
        int col;
    };
    std::vector<Entry> entries;
    std::vector<Matrix> eigvecs(static_cast<std::size_t>(alg.block_count()));
    for (int b = 0; b < alg.block_count(); ++b) {
        Matrix h = 0.5 * (envelope.block(b) + envelope.block(b).adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        eigvecs[static_cast<std::size_t>(b)] = es.eigenvectors();
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            entries.push_back({es.eigenvalues()(i), b, i});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.block != b.block) return a.block < b.block;
        return a.col < b.col;
    });

    // cut the largest eigenvalues of the envelope until the budget is hit;
    // stopping at the first miss keeps e a spectral cut e = proj(s <= c)
    double min_weight = numeric::infinity;
    for (int b = 0; b < alg.block_count(); ++b) min_weight = std::min(min_weight, alg.weight(b));
    const bool any_possible = min_weight <= epsilon;
    if (require_cut && !any_possible)
        throw BudgetTooSmall("truncation_search: epsilon " + std::to_string(epsilon) +
                             " is below every block weight; no cut is possible");

    AlgElement e = AlgElement::identity(alg);
    double removed = 0.0;
    for (const Entry& en : entries) {
        const double wb = alg.weight(en.block);
        if (removed + wb > epsilon) break;
        const auto v = eigvecs[static_cast<std::size_t>(en.block)].col(en.col);
        e.block(en.block) -= v * v.adjoint();
        removed += wb;
    }

    TruncationResult out{e, removed, 0.0, any_possible, mode};
    for (const AlgElement& y : orbitvals) {
        const double r = mode == TruncationMode::bilateral ? op_norm(e * y * e)
                                                           : op_norm(y * e);
        out.achieved_sup = std::max(out.achieved_sup, r);
    }
    return out;
}

namespace {

void require_checkpoints(const Checkpoints& cps) {
    if (cps.empty()) throw std::invalid_argument("checkpoints must be nonempty");
    for (std::size_t i = 1; i < cps.size(); ++i)
        if (cps[i] <= cps[i - 1])
            throw std::invalid_argument("checkpoints must be strictly increasing");
    if (cps.front() == 0) throw std::invalid_argument("checkpoints start at n = 1");
}

}  // namespace

// Shared post-processing: Cauchy residuals, residuals to the limit, budgeted
// truncation curve.
ConvergenceDiagnostics diagnostics_from_iterates(const TracialAlgebra& alg,
                                                 const Checkpoints& cps,
                                                 std::vector<AlgElement> iterates,
                                                 const StreamOptions& opts) {
    ConvergenceDiagnostics diag;
    diag.checkpoints = cps;
    diag.iterates = std::move(iterates);
    if (opts.limit) {
        diag.estimated_limit = *opts.limit;
        diag.limit_is_last_iterate = false;
    } else {
        diag.estimated_limit = diag.iterates.empty() ? AlgElement::zero(alg)
                                                     : diag.iterates.back();
        diag.limit_is_last_iterate = true;
    }

    std::vector<AlgElement> residuals;
    residuals.reserve(diag.iterates.size());
    for (const AlgElement& m : diag.iterates) residuals.push_back(m - diag.estimated_limit);

    if (opts.with_truncation && !residuals.empty()) {
        const double eps = opts.trace_budget_fraction * alg.total_trace();
        diag.truncation = truncation_search(residuals, eps, opts.mode);
    }

    for (std::size_t i = 0; i < diag.iterates.size(); ++i) {
        CheckpointRow row;
        row.n = diag.checkpoints[i];
        if (i == 0) {
            row.cauchy_2 = 0.0;
            row.cauchy_inf = 0.0;
        } else {
            const AlgElement d = diag.iterates[i] - diag.iterates[i - 1];
            row.cauchy_2 = lp_norm(d, 2.0);
            row.cauchy_inf = op_norm(d);
        }
        row.resid_limit_2 = lp_norm(residuals[i], 2.0);
        row.resid_limit_inf = op_norm(residuals[i]);
        if (diag.truncation) {
            const AlgElement& e = diag.truncation->projection;
            row.trunc_resid_inf = opts.mode == TruncationMode::bilateral
                                      ? op_norm(e * residuals[i] * e)
                                      : op_norm(residuals[i] * e);
        } else {
            row.trunc_resid_inf = row.resid_limit_inf;
        }
        diag.rows.push_back(row);
    }
    return diag;
}

std::vector<std::vector<AlgElement>> weighted_iterates_multi(
    const SuperOperator& T, const AlgElement& x, std::span<const WeightSequence> weights,
    const Checkpoints& checkpoints) {
    detail::require_same_algebra(AlgElement::zero(T.algebra()), x, "weighted_average");
    require_checkpoints(checkpoints);
    const std::uint64_t n_last = checkpoints.back();

    std::vector<AlgElement> accs(weights.size(), AlgElement::zero(T.algebra()));
    std::vector<std::vector<AlgElement>> iterates(weights.size());

    AlgElement y = x;  // T^k(x)
    std::size_t cp_pos = 0;
    for (std::uint64_t k = 0; k < n_last; ++k) {
        for (std::size_t wi = 0; wi < weights.size(); ++wi)
            accs[wi] += weights[wi].at(k) * y;
        const std::uint64_t n = k + 1;
        if (cp_pos < checkpoints.size() && checkpoints[cp_pos] == n) {
            for (std::size_t wi = 0; wi < weights.size(); ++wi)
                iterates[wi].push_back(Complex(1.0 / static_cast<double>(n)) * accs[wi]);
            ++cp_pos;
        }
        if (n < n_last) y = T.apply(y);
    }
    return iterates;
}

std::vector<ConvergenceDiagnostics> weighted_average_multi(
    const SuperOperator& T, const AlgElement& x, std::span<const WeightSequence> weights,
    const Checkpoints& checkpoints, const StreamOptions& opts) {
    auto iterates = weighted_iterates_multi(T, x, weights, checkpoints);
    std::vector<ConvergenceDiagnostics> out;
    out.reserve(weights.size());
    for (std::size_t wi = 0; wi < weights.size(); ++wi)
        out.push_back(
            diagnostics_from_iterates(T.algebra(), checkpoints, std::move(iterates[wi]), opts));
    return out;
}

ConvergenceDiagnostics weighted_average_stream(const SuperOperator& T, const AlgElement& x,
                                               const WeightSequence& alpha,
                                               const Checkpoints& checkpoints,
                                               const StreamOptions& opts) {
    return std::move(
        weighted_average_multi(T, x, std::span<const WeightSequence>(&alpha, 1), checkpoints,
                               opts)[0]);
}

ConvergenceDiagnostics subsequence_average_stream(const SuperOperator& T, const AlgElement& x,
                                                  const SubsequenceRule& rule,
                                                  const Checkpoints& checkpoints,
                                                  const StreamOptions& opts) {
    detail::require_same_algebra(AlgElement::zero(T.algebra()), x, "subsequence_average");
    require_checkpoints(checkpoints);
    const std::uint64_t n_last = checkpoints.back();

    AlgElement acc = AlgElement::zero(T.algebra());
    std::vector<AlgElement> iterates;
    AlgElement y = x;
    std::uint64_t cur_pow = 0;
    std::size_t cp_pos = 0;
    for (std::uint64_t j = 0; j < n_last; ++j) {
        const std::uint64_t target = rule.index(j);
        while (cur_pow < target) {
            y = T.apply(y);
            ++cur_pow;
        }
        acc += y;
        const std::uint64_t n = j + 1;
        if (cp_pos < checkpoints.size() && checkpoints[cp_pos] == n) {
            iterates.push_back(Complex(1.0 / static_cast<double>(n)) * acc);
            ++cp_pos;
        }
    }
    return diagnostics_from_iterates(T.algebra(), checkpoints, std::move(iterates), opts);
}

ConvergenceDiagnostics prime_average_stream(const SuperOperator& T, const AlgElement& x,
                                            const Checkpoints& checkpoints,
                                            const StreamOptions& opts) {
    return subsequence_average_stream(T, x, SubsequenceRule::primes(), checkpoints, opts);
}

ConvergenceDiagnostics mangoldt_average_stream(const SuperOperator& T, const AlgElement& x,
                                               const Checkpoints& checkpoints,
                                               const StreamOptions& opts) {
    const WeightSequence lambda = gen_von_mangoldt();
    return weighted_average_stream(T, x, lambda, checkpoints, opts);
}

ConvergenceDiagnostics moving_average_stream(const SuperOperator& T, const AlgElement& x,
                                             const MovingWindow& window,
                                             const Checkpoints& checkpoints,
                                             const StreamOptions& opts) {
    detail::require_same_algebra(AlgElement::zero(T.algebra()), x, "moving_average");
    require_checkpoints(checkpoints);
    window.validate_prefix(checkpoints.back());

    // cache of computed orbit points T^pow(x) at window boundaries; bounded
    // by two entries per checkpoint, so no pruning is needed
    std::map<std::uint64_t, AlgElement> orbit_cache;
    orbit_cache.emplace(0, x);

    std::vector<AlgElement> iterates;
    for (const std::uint64_t n : checkpoints) {
        const auto [k_n, m_n] = window.at(n);
        auto it = orbit_cache.upper_bound(m_n);
        --it;  // largest cached power <= m_n (0 always present)
        std::uint64_t pow = it->first;
        AlgElement y = it->second;
        while (pow < m_n) {
            y = T.apply(y);
            ++pow;
        }
        orbit_cache.emplace(m_n, y);
        AlgElement acc = y;
        for (std::uint64_t j = 1; j < k_n; ++j) {
            y = T.apply(y);
            acc += y;
        }
        orbit_cache.emplace(m_n + k_n - 1, y);
        iterates.push_back(Complex(1.0 / static_cast<double>(k_n)) * acc);
    }
    return diagnostics_from_iterates(T.algebra(), checkpoints, std::move(iterates), opts);
}

UniformScanResult uniform_ww_scan(const SuperOperator& T, const AlgElement& x, double r, double b,
                                  int family_size, std::uint64_t seed,
                                  const Checkpoints& checkpoints, const StreamOptions& opts) {
    if (!(b > 0.0)) throw std::invalid_argument("uniform_ww_scan: b must be > 0");
    if (!(r > 1.0)) throw InvalidExponent("uniform_ww_scan: r must lie in (1, inf]");
    if (family_size < 1) throw std::invalid_argument("uniform_ww_scan: family_size >= 1");
    require_checkpoints(checkpoints);
    const std::uint64_t n_last = checkpoints.back();

    // family: random trig polynomials and random phase sequences, rescaled by
    // their measured sup-seminorm so |α|_{W_r} ≤ b holds by construction
    DetRng rng(seed);
    std::vector<WeightSequence> family;
    std::vector<std::string> names;
    for (int i = 0; i < family_size; ++i) {
        WeightSequence base = [&]() {
            if (i % 2 == 0) {
                const int terms = 1 + static_cast<int>(rng.next_u64() % 4);
                std::vector<std::pair<Complex, Complex>> coeffs;
                for (int t = 0; t < terms; ++t)
                    coeffs.emplace_back(rng.gaussian_complex(), rng.unit_complex());
                return gen_trig_poly(coeffs);
            }
            return gen_random_phases(rng.next_u64());
        }();
        const double sup = w_r_seminorm(base, r, std::min<std::uint64_t>(n_last, 1 << 14), 1.0)
                               .sup_estimate;
        family.push_back(scaled(base, sup > 0.0 ? b / sup : b));
        names.push_back(family.back().description());
    }

    // one orbit pass feeding every accumulator; residuals are to zero
    StreamOptions stream_opts = opts;
    stream_opts.limit = AlgElement::zero(T.algebra());
    stream_opts.with_truncation = false;
    auto diags = weighted_average_multi(T, x, family, checkpoints, stream_opts);

    // projection from the orbit envelope at the checkpoints
    std::vector<AlgElement> orbit;
    AlgElement y = x;
    std::size_t cp_pos = 0;
    for (std::uint64_t k = 0; k < n_last && cp_pos < checkpoints.size(); ++k) {
        if (k + 1 == checkpoints[cp_pos]) {
            orbit.push_back(y);
            ++cp_pos;
        }
        if (k + 1 < n_last) y = T.apply(y);
    }
    const double eps = opts.trace_budget_fraction * T.algebra().total_trace();
    TruncationResult trunc = truncation_search(orbit, eps, opts.mode);

    UniformScanResult out;
    out.checkpoints = checkpoints;
    out.truncation = trunc;
    out.family = std::move(names);
    out.sup_trunc_resid.assign(checkpoints.size(), 0.0);
    out.sup_full_resid.assign(checkpoints.size(), 0.0);
    const AlgElement& e = trunc.projection;
    for (const auto& diag : diags)
        for (std::size_t i = 0; i < diag.iterates.size(); ++i) {
            const AlgElement& m = diag.iterates[i];
            const double full = op_norm(m);
            const double truncated = opts.mode == TruncationMode::bilateral
                                         ? op_norm(e * m * e)
                                         : op_norm(m * e);
            out.sup_full_resid[i] = std::max(out.sup_full_resid[i], full);
            out.sup_trunc_resid[i] = std::max(out.sup_trunc_resid[i], truncated);
        }
    return out;
}

std::vector<ReturnTimeSample> return_time_experiment(double theta, int omega_samples,
                                                     double interval_a, double interval_b,
                                                     const SuperOperator& T, const AlgElement& x,
                                                     const Checkpoints& checkpoints,
                                                     std::uint64_t seed,
                                                     const StreamOptions& opts) {
    if (!(interval_a < interval_b) || interval_a < 0.0 || interval_b > 1.0)
        throw std::invalid_argument("return_time_experiment: need 0 <= a < b <= 1");
    if (omega_samples < 1)
        throw std::invalid_argument("return_time_experiment: need at least one sample");
    require_checkpoints(checkpoints);

    DetRng rng(seed);
    std::vector<ReturnTimeSample> out;
    for (int s = 0; s < omega_samples; ++s) {
        ReturnTimeSample sample;
        sample.omega = rng.uniform();
        const double omega = sample.omega;

        const WeightSequence alpha =
            gen_ergodic_sample(theta, omega, CircleFunction::indicator(interval_a, interval_b));
        sample.weighted = weighted_average_stream(T, x, alpha, checkpoints, opts);

        auto in_interval = [theta, omega, interval_a, interval_b](std::uint64_t k) {
            double t = std::fmod(omega + static_cast<double>(k) * theta, 1.0);
            if (t < 0.0) t += 1.0;
            return t >= interval_a && t < interval_b;
        };
        const SubsequenceRule visits = SubsequenceRule::density_one_mask(
            in_interval, "visits[" + std::to_string(interval_a) + "," +
                             std::to_string(interval_b) + ")");
        sample.visits = subsequence_average_stream(T, x, visits, checkpoints, opts);
        out.push_back(std::move(sample));
    }
    return out;
}

StabilityProbeReport approximation_stability_probe(const SuperOperator& T,
                                                   std::span<const AlgElement> x_sequence,
                                                   const AlgElement& x,
                                                   std::span<const WeightSequence> alpha_family,
                                                   const Checkpoints& checkpoints, double p,
                                                   const StreamOptions& opts) {
    if (x_sequence.empty())
        throw std::invalid_argument("approximation_stability_probe: empty x sequence");
    if (alpha_family.empty())
        throw std::invalid_argument("approximation_stability_probe: empty weight family");
    require_checkpoints(checkpoints);

    // sup-seminorm bound over the family at the horizon
    double bound = 0.0;
    for (const WeightSequence& a : alpha_family)
        bound = std::max(bound,
                         w_r_seminorm(a, 1.0, checkpoints.back(), 1.0).sup_estimate);

    StreamOptions stream_opts = opts;
    stream_opts.limit = AlgElement::zero(T.algebra());
    stream_opts.with_truncation = false;

    StabilityProbeReport report;
    report.seminorm_bound = bound;
    report.measured_constant = 0.0;
    const double eps = opts.trace_budget_fraction * T.algebra().total_trace();

    for (const AlgElement& xj : x_sequence) {
        const AlgElement yj = xj - x;
        const double dist = lp_norm(yj, p);

        auto diags = weighted_average_multi(T, yj, alpha_family, checkpoints, stream_opts);
        std::vector<AlgElement> all_iterates;
        for (const auto& d : diags)
            all_iterates.insert(all_iterates.end(), d.iterates.begin(), d.iterates.end());

        const TruncationResult trunc = truncation_search(all_iterates, eps, opts.mode);
        const AlgElement& e = trunc.projection;
        double worst = 0.0;
        for (const AlgElement& m : all_iterates) {
            const double v = opts.mode == TruncationMode::bilateral ? op_norm(e * m * e)
                                                                    : op_norm(m * e);
            worst = std::max(worst, v);
        }
        const double denom = bound * dist;
        const double ratio = denom > 0.0 ? worst / denom : 0.0;
        report.rows.push_back({dist, worst, ratio});
        report.measured_constant = std::max(report.measured_constant, ratio);
    }
    return report;
}

}  // namespace ncwwlab
