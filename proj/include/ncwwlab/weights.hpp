#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ncwwlab/errors.hpp"

namespace ncwwlab {

using Complex = std::complex<double>;

enum class WeightClass {
    constant,
    convergent,
    rotation,
    trig_poly,
    besicovich,
    ergodic_sample,
    von_mangoldt,
    custom,
};

std::string to_string(WeightClass c);

// Pointwise-evaluable function on the circle [0,1), used by ergodic sampling.
class CircleFunction {
public:
    static CircleFunction exponential();                    // t ↦ e^{2πit}
    static CircleFunction indicator(double a, double b);    // 1_{[a,b)}
    static CircleFunction constant(Complex c);
    static CircleFunction custom(std::function<Complex(double)> f, std::string desc);

    Complex operator()(double t) const { return fn_(t); }
    const std::string& description() const { return desc_; }

private:
    CircleFunction(std::function<Complex(double)> fn, std::string desc)
        : fn_(std::move(fn)), desc_(std::move(desc)) {}
    std::function<Complex(double)> fn_;
    std::string desc_;
};

// Deterministic weight sequence α_0, α_1, …  Values are memoized in chunks of
// 1024 so arbitrary-index access stays amortized O(1) and bit-reproducible
// regardless of query order; the chunk cache is internally synchronized.
class WeightSequence {
public:
    Complex at(std::uint64_t k) const;

    WeightClass declared_class() const;
    const std::string& description() const;
    std::optional<Complex> declared_limit() const;
    bool drift_warning() const;
    const std::string& drift_message() const;
    // Known sup-norm bound when the constructor guarantees one.
    std::optional<double> winf_bound() const;

    struct Impl;
    explicit WeightSequence(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<Impl> impl_;
};

// --- generators -------------------------------------------------------------

WeightSequence gen_constant(Complex c);
// α_k = μ^k by repeated rotation, renormalized to the unit circle every 1024
// steps to stop multiplicative drift over long horizons.
WeightSequence gen_rotation(Complex mu);
// α_k = Σ_j r_j λ_j^k with unimodular λ_j.
WeightSequence gen_trig_poly(const std::vector<std::pair<Complex, Complex>>& coeffs);
// Wraps a caller-supplied rule declared convergent with limit l(α). Only a
// finite-prefix drift check is run; failures set a warning, never an error.
WeightSequence gen_convergent(std::function<Complex(std::uint64_t)> rule, Complex limit);
// α_k = f((ω + kθ) mod 1), the circle-rotation sample. f_class declares the
// W_r class the sample is expected to live in (metadata only).
WeightSequence gen_ergodic_sample(double theta, double omega, const CircleFunction& f,
                                  double f_class = std::numeric_limits<double>::infinity());
// α_n = Λ(n), sieve-backed.
WeightSequence gen_von_mangoldt();
WeightSequence gen_custom(std::function<Complex(std::uint64_t)> rule, std::string desc);
// α_k = e^{2πi u_k} with u_k a stateless hash of (seed, k).
WeightSequence gen_random_phases(std::uint64_t seed);
// Same values as inner scaled by a constant factor.
WeightSequence scaled(const WeightSequence& inner, Complex factor);

// --- prime / von Mangoldt infrastructure ------------------------------------

// Shared Eratosthenes sieve with chunked extension (chunks of 2^20 entries).
// Queries are synchronized; the table contents do not depend on the order of
// extension requests.
class PrimeSieve {
public:
    static PrimeSieve& shared();

    double mangoldt(std::uint64_t n);
    std::uint64_t nth_prime(std::uint64_t j);  // p_0 = 2
    std::uint64_t limit() const;

private:
    struct State;
    std::shared_ptr<State> st_;
    PrimeSieve();
};

// Strictly increasing index sequences k_0 < k_1 < … used by subsequential
// averages.
class SubsequenceRule {
public:
    enum class Kind { primes, explicit_list, density_one_mask };

    static SubsequenceRule primes();
    static SubsequenceRule explicit_list(std::vector<std::uint64_t> indices);
    static SubsequenceRule density_one_mask(std::function<bool(std::uint64_t)> mask,
                                            std::string desc);

    std::uint64_t index(std::uint64_t j) const;
    Kind kind() const;
    const std::string& description() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    explicit SubsequenceRule(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

std::uint64_t nth_prime(std::uint64_t j);
double von_mangoldt(std::uint64_t n);

// Moving average window n ↦ (k_n, m_n), n ≥ 1.
class MovingWindow {
public:
    // k_n = max(1, round(k_a·n + k_b)), m_n = max(0, round(m_a·n + m_b)).
    static MovingWindow affine(double k_a, double k_b, double m_a, double m_b);
    static MovingWindow explicit_list(std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs);

    std::pair<std::uint64_t, std::uint64_t> at(std::uint64_t n) const;
    // k_n → ∞ heuristic on the queried prefix: require min_{n ≥ N/2} k_n ≥
    // threshold (default ⌈log₂ N⌉). Throws InvalidWindow.
    void validate_prefix(std::uint64_t horizon, std::optional<std::uint64_t> threshold = {}) const;
    const std::string& description() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    explicit MovingWindow(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

// --- estimators ---------------------------------------------------------------

struct WrSeminormEstimate {
    double limsup_estimate;  // max of running means over the tail window
    double sup_estimate;     // max of running means over all n ≤ N
};

// Finite-horizon proxies for ‖α‖_{W_r} (limsup) and the sup factor of
// |α|_{W_r}. The tail window (fraction of the horizon) is disclosed in
// reports.
WrSeminormEstimate w_r_seminorm(const WeightSequence& alpha, double r, std::uint64_t horizon,
                                double window = 0.1);

struct HartmanEstimate {
    Complex estimate;   // (1/N) Σ_{k<N} α_k conj(λ)^k
    double tail_drift;  // max running-average deviation over the last 10%
};

HartmanEstimate hartman_coefficient(const WeightSequence& alpha, Complex lambda,
                                    std::uint64_t horizon);

// W_r limsup estimate of k ↦ α_k − poly_k; poly must be a trig polynomial.
double besicovich_distance(const WeightSequence& alpha, const WeightSequence& poly, double r,
                           std::uint64_t horizon, double window = 0.1);

}  // namespace ncwwlab
