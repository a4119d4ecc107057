#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ncwwlab/spectral.hpp"
#include "ncwwlab/superop.hpp"
#include "ncwwlab/weights.hpp"

namespace ncwwlab {

using Checkpoints = std::vector<std::uint64_t>;

// Powers of two up to n_max, plus n_max itself.
Checkpoints dyadic_checkpoints(std::uint64_t n_max);

enum class TruncationMode { bilateral, right };

std::string to_string(TruncationMode m);

struct TruncationResult {
    AlgElement projection;  // e
    double tau_perp;        // τ(e⊥), reported exactly
    double achieved_sup;    // sup_n ‖e y_n e‖_∞ (or ‖y_n e‖_∞), re-verified
    bool cut_possible;      // false when ε is below every block weight
    TruncationMode mode;
};

// Certified upper-bound projection search: spectral cut of
// the weighted max-abs envelope Σ_n 2^{-n-1} |y_n| with τ(e⊥) ≤ ε. Not
// claimed optimal; both τ(e⊥) and the achieved sup are reported.
TruncationResult truncation_search(std::span<const AlgElement> orbitvals, double epsilon,
                                   TruncationMode mode = TruncationMode::bilateral,
                                   bool require_cut = false);

struct CheckpointRow {
    std::uint64_t n;
    double cauchy_2;          // ‖M_n − M_prev‖₂ (0 at the first checkpoint)
    double cauchy_inf;        // same in ‖·‖_∞
    double resid_limit_2;     // ‖M_n − limit‖₂, e = 1
    double resid_limit_inf;   // ‖M_n − limit‖_∞, e = 1
    double trunc_resid_inf;   // ‖e (M_n − limit) e‖_∞ for the budgeted e
};

struct ConvergenceDiagnostics {
    Checkpoints checkpoints;
    std::vector<AlgElement> iterates;  // M_n at the checkpoints
    AlgElement estimated_limit;
    bool limit_is_last_iterate = true;
    std::vector<CheckpointRow> rows;
    std::optional<TruncationResult> truncation;
};

struct StreamOptions {
    // ε = trace_budget_fraction · τ(1) for the truncation search
    double trace_budget_fraction = 0.05;
    TruncationMode mode = TruncationMode::bilateral;
    std::optional<AlgElement> limit;  // spectral prediction; default last iterate
    bool with_truncation = true;
};

// One orbit pass over T^k(x), returning the checkpoint iterates M_n per
// weight. O(1) state per weight; this is the engine every weighted consumer
// shares.
std::vector<std::vector<AlgElement>> weighted_iterates_multi(
    const SuperOperator& T, const AlgElement& x, std::span<const WeightSequence> weights,
    const Checkpoints& checkpoints);

// Assemble diagnostics (Cauchy residuals, limit residuals, truncation curve)
// from precomputed checkpoint iterates.
ConvergenceDiagnostics diagnostics_from_iterates(const TracialAlgebra& alg,
                                                 const Checkpoints& checkpoints,
                                                 std::vector<AlgElement> iterates,
                                                 const StreamOptions& opts = {});

// M_n^α(T)(x) = (1/n) Σ_{k<n} α_k T^k(x), one orbit pass, O(1) state per
// weight. Several weights share the orbit.
std::vector<ConvergenceDiagnostics> weighted_average_multi(
    const SuperOperator& T, const AlgElement& x, std::span<const WeightSequence> weights,
    const Checkpoints& checkpoints, const StreamOptions& opts = {});

ConvergenceDiagnostics weighted_average_stream(const SuperOperator& T, const AlgElement& x,
                                               const WeightSequence& alpha,
                                               const Checkpoints& checkpoints,
                                               const StreamOptions& opts = {});

// (1/n) Σ_{j<n} T^{k_j}(x) along a strictly increasing index rule; the orbit
// advances through the gaps, O(k_{n-1}) applications total.
ConvergenceDiagnostics subsequence_average_stream(const SuperOperator& T, const AlgElement& x,
                                                  const SubsequenceRule& rule,
                                                  const Checkpoints& checkpoints,
                                                  const StreamOptions& opts = {});

ConvergenceDiagnostics prime_average_stream(const SuperOperator& T, const AlgElement& x,
                                            const Checkpoints& checkpoints,
                                            const StreamOptions& opts = {});

ConvergenceDiagnostics mangoldt_average_stream(const SuperOperator& T, const AlgElement& x,
                                               const Checkpoints& checkpoints,
                                               const StreamOptions& opts = {});

// M_{w,n}(T)(x) = (1/k_n) Σ_{j<k_n} T^{m_n+j}(x); orbit prefixes are reused
// across checkpoints when the window starts are nondecreasing.
ConvergenceDiagnostics moving_average_stream(const SuperOperator& T, const AlgElement& x,
                                             const MovingWindow& window,
                                             const Checkpoints& checkpoints,
                                             const StreamOptions& opts = {});

struct UniformScanResult {
    Checkpoints checkpoints;
    std::vector<double> sup_trunc_resid;  // sup over the family, budgeted e
    std::vector<double> sup_full_resid;   // sup over the family, e = 1
    TruncationResult truncation;          // projection from the orbit envelope
    std::vector<std::string> family;      // descriptions of the sampled weights
};

// Uniform scan over a seminorm ball: samples weight sequences with |α|_{W_r} ≤ b (random
// trig polynomials and random phase sequences rescaled by their measured
// seminorm), runs every stream in one orbit pass and reports the family sup
// of truncated residuals to zero.
UniformScanResult uniform_ww_scan(const SuperOperator& T, const AlgElement& x, double r, double b,
                                  int family_size, std::uint64_t seed,
                                  const Checkpoints& checkpoints, const StreamOptions& opts = {});

struct ReturnTimeSample {
    double omega;
    ConvergenceDiagnostics weighted;  // α_k = 1_E((ω + kθ) mod 1)
    ConvergenceDiagnostics visits;    // subsequence average along the visit times
};

// Return-time experiment: indicator weights and visit-time subsequences of
// the circle rotation, per sampled starting point.
std::vector<ReturnTimeSample> return_time_experiment(double theta, int omega_samples,
                                                     double interval_a, double interval_b,
                                                     const SuperOperator& T, const AlgElement& x,
                                                     const Checkpoints& checkpoints,
                                                     std::uint64_t seed,
                                                     const StreamOptions& opts = {});

struct StabilityProbeRow {
    double distance;   // ‖x_j − x‖_p
    double worst_sup;  // sup over the family and checkpoints of ‖e M_n^α(y_j) e‖_∞
    double ratio;      // worst_sup / (max_α |α|_{W1} · distance)
};

struct StabilityProbeReport {
    std::vector<StabilityProbeRow> rows;
    double measured_constant;  // max ratio: the empirical h(s) = s constant
    double seminorm_bound;     // max_α |α|_{W1} sup-estimate used
};

// Empirical maximal-inequality probe for the W1 Banach-principle machinery:
// residuals of M_n^α on x_j − x must be controlled by |α|_{W1} ‖x_j − x‖_p.
StabilityProbeReport approximation_stability_probe(const SuperOperator& T,
                                                   std::span<const AlgElement> x_sequence,
                                                   const AlgElement& x,
                                                   std::span<const WeightSequence> alpha_family,
                                                   const Checkpoints& checkpoints, double p = 2.0,
                                                   const StreamOptions& opts = {});

}  // namespace ncwwlab
