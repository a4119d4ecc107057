#include "ncwwlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "ncwwlab/detrng.hpp"

namespace ncwwlab {

namespace {
constexpr std::uint64_t kChunkLen = 1024;
constexpr double kUnimodularTol = 1e-12;

void require_unimodular(Complex z, const char* who) {
    if (std::abs(std::abs(z) - 1.0) > kUnimodularTol)
        throw NotUnimodular(std::string(who) + ": |mu| must be 1 within 1e-12");
}
}  // namespace

std::string to_string(WeightClass c) {
    switch (c) {
        case WeightClass::constant: return "constant";
        case WeightClass::convergent: return "convergent";
        case WeightClass::rotation: return "rotation";
        case WeightClass::trig_poly: return "trig_poly";
        case WeightClass::besicovich: return "besicovich";
        case WeightClass::ergodic_sample: return "ergodic_sample";
        case WeightClass::von_mangoldt: return "von_mangoldt";
        case WeightClass::custom: return "custom";
    }
    return "?";
}

CircleFunction CircleFunction::exponential() {
    return CircleFunction(
        [](double t) { return std::polar(1.0, 2.0 * std::numbers::pi * t); }, "exp(2*pi*i*t)");
}

CircleFunction CircleFunction::indicator(double a, double b) {
    return CircleFunction([a, b](double t) { return (t >= a && t < b) ? 1.0 : 0.0; },
                          "indicator[" + std::to_string(a) + "," + std::to_string(b) + ")");
}

CircleFunction CircleFunction::constant(Complex c) {
    return CircleFunction([c](double) { return c; }, "constant");
}

CircleFunction CircleFunction::custom(std::function<Complex(double)> f, std::string desc) {
    return CircleFunction(std::move(f), std::move(desc));
}

// --- WeightSequence ----------------------------------------------------------

// Chunks are always filled in index order under the mutex, so generators may
// carry sequential state (rotation values) and still produce bit-identical
// results for any query order.
struct WeightSequence::Impl {
    WeightClass cls = WeightClass::custom;
    std::string desc;
    std::optional<Complex> limit;
    bool drift_warning = false;
    std::string drift_msg;
    std::optional<double> winf;

    std::function<void(std::uint64_t chunk, Complex* out)> fill;

    mutable std::mutex mu;
    mutable std::vector<std::vector<Complex>> chunks;

    Complex at(std::uint64_t k) const {
        const std::uint64_t c = k / kChunkLen;
        std::lock_guard<std::mutex> lock(mu);
        while (chunks.size() <= c) {
            std::vector<Complex> buf(kChunkLen);
            fill(chunks.size(), buf.data());
            chunks.push_back(std::move(buf));
        }
        return chunks[c][k % kChunkLen];
    }
};

Complex WeightSequence::at(std::uint64_t k) const { return impl_->at(k); }
WeightClass WeightSequence::declared_class() const { return impl_->cls; }
const std::string& WeightSequence::description() const { return impl_->desc; }
std::optional<Complex> WeightSequence::declared_limit() const { return impl_->limit; }
bool WeightSequence::drift_warning() const { return impl_->drift_warning; }
const std::string& WeightSequence::drift_message() const { return impl_->drift_msg; }
std::optional<double> WeightSequence::winf_bound() const { return impl_->winf; }

WeightSequence gen_constant(Complex c) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::constant;
    impl->desc = "constant";
    impl->limit = c;
    impl->winf = std::abs(c);
    impl->fill = [c](std::uint64_t, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i) out[i] = c;
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_rotation(Complex mu) {
    require_unimodular(mu, "gen_rotation");
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::rotation;
    impl->desc = "rotation";
    impl->winf = 1.0;
    // carry = α at the start of the next chunk, renormalized at each boundary
    auto carry = std::make_shared<Complex>(1.0);
    impl->fill = [mu, carry](std::uint64_t, Complex* out) {
        Complex v = *carry;
        for (std::uint64_t i = 0; i < kChunkLen; ++i) {
            out[i] = v;
            v *= mu;
        }
        *carry = v / std::abs(v);
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_trig_poly(const std::vector<std::pair<Complex, Complex>>& coeffs) {
    for (const auto& [r, lam] : coeffs) {
        (void)r;
        require_unimodular(lam, "gen_trig_poly");
    }
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::trig_poly;
    impl->desc = "trig_poly[" + std::to_string(coeffs.size()) + " terms]";
    double bound = 0.0;
    for (const auto& [r, lam] : coeffs) {
        (void)lam;
        bound += std::abs(r);
    }
    impl->winf = bound;
    struct Carry {
        std::vector<Complex> lambdas;
        std::vector<Complex> coeffs;
        std::vector<Complex> vals;  // λ_j^k at chunk start
    };
    auto carry = std::make_shared<Carry>();
    for (const auto& [r, lam] : coeffs) {
        carry->coeffs.push_back(r);
        carry->lambdas.push_back(lam);
        carry->vals.push_back(1.0);
    }
    impl->fill = [carry](std::uint64_t, Complex* out) {
        std::vector<Complex> v = carry->vals;
        for (std::uint64_t i = 0; i < kChunkLen; ++i) {
            Complex acc = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                acc += carry->coeffs[j] * v[j];
                v[j] *= carry->lambdas[j];
            }
            out[i] = acc;
        }
        for (auto& z : v) z /= std::abs(z);
        carry->vals = std::move(v);
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_convergent(std::function<Complex(std::uint64_t)> rule, Complex limit) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::convergent;
    impl->desc = "convergent";
    impl->limit = limit;
    // finite-prefix drift check: the tail deviation of a convergent rule
    // should sit well below the head deviation
    double head = 0.0, tail = 0.0;
    for (std::uint64_t k = 0; k < kChunkLen; ++k) {
        const double d = std::abs(rule(k) - limit);
        if (k < kChunkLen / 2)
            head = std::max(head, d);
        else
            tail = std::max(tail, d);
    }
    if (tail > 1e-6 && tail > 0.75 * head) {
        impl->drift_warning = true;
        impl->drift_msg = "prefix drift: tail deviation " + std::to_string(tail) +
                          " does not decay below head deviation " + std::to_string(head);
    }
    impl->fill = [rule = std::move(rule)](std::uint64_t chunk, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i) out[i] = rule(chunk * kChunkLen + i);
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_ergodic_sample(double theta, double omega, const CircleFunction& f,
                                  double f_class) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::ergodic_sample;
    impl->desc = "ergodic_sample[theta=" + std::to_string(theta) + ", f=" + f.description() +
                 (std::isinf(f_class) ? std::string(", class=W_inf]")
                                      : ", class=W_" + std::to_string(f_class) + "]");
    impl->fill = [theta, omega, f](std::uint64_t chunk, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i) {
            const std::uint64_t k = chunk * kChunkLen + i;
            double t = std::fmod(omega + static_cast<double>(k) * theta, 1.0);
            if (t < 0.0) t += 1.0;
            out[i] = f(t);
        }
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_von_mangoldt() {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::von_mangoldt;
    impl->desc = "von_mangoldt";
    impl->fill = [](std::uint64_t chunk, Complex* out) {
        auto& sieve = PrimeSieve::shared();
        for (std::uint64_t i = 0; i < kChunkLen; ++i)
            out[i] = sieve.mangoldt(chunk * kChunkLen + i);
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_custom(std::function<Complex(std::uint64_t)> rule, std::string desc) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::custom;
    impl->desc = std::move(desc);
    impl->fill = [rule = std::move(rule)](std::uint64_t chunk, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i) out[i] = rule(chunk * kChunkLen + i);
    };
    return WeightSequence(std::move(impl));
}

WeightSequence gen_random_phases(std::uint64_t seed) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = WeightClass::custom;
    impl->desc = "random_phases[seed=" + std::to_string(seed) + "]";
    impl->winf = 1.0;
    impl->fill = [seed](std::uint64_t chunk, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i) {
            const std::uint64_t k = chunk * kChunkLen + i;
            out[i] = std::polar(1.0, 2.0 * std::numbers::pi * hash_uniform(seed, k));
        }
    };
    return WeightSequence(std::move(impl));
}

WeightSequence scaled(const WeightSequence& inner, Complex factor) {
    auto impl = std::make_shared<WeightSequence::Impl>();
    impl->cls = inner.declared_class();
    impl->desc = "scaled(" + inner.description() + ")";
    if (inner.declared_limit()) impl->limit = factor * (*inner.declared_limit());
    if (inner.winf_bound()) impl->winf = std::abs(factor) * (*inner.winf_bound());
    impl->fill = [inner, factor](std::uint64_t chunk, Complex* out) {
        for (std::uint64_t i = 0; i < kChunkLen; ++i)
            out[i] = factor * inner.at(chunk * kChunkLen + i);
    };
    return WeightSequence(std::move(impl));
}

// --- sieve --------------------------------------------------------------------

struct PrimeSieve::State {
    std::mutex mu;
    std::vector<double> lambda;        // Λ(0..limit-1)
    std::vector<std::uint64_t> primes;
    std::uint64_t limit = 0;           // entries [0, limit) are valid

    // Rebuild the full table up to new_limit. Rebuilding (rather than a
    // segmented extension) keeps the code simple; total work stays within 2x
    // of a single pass because limits double.
    void grow_to(std::uint64_t new_limit) {
        constexpr std::uint64_t kChunk = 1ULL << 20;
        std::uint64_t target = std::max<std::uint64_t>(kChunk, limit);
        while (target < new_limit) target *= 2;
        if (target <= limit) return;

        std::vector<bool> composite(target, false);
        lambda.assign(target, 0.0);
        primes.clear();
        for (std::uint64_t p = 2; p < target; ++p) {
            if (composite[p]) continue;
            primes.push_back(p);
            const double lp = std::log(static_cast<double>(p));
            for (std::uint64_t q = p;;) {
                lambda[q] = lp;
                if (q > (target - 1) / p) break;
                q *= p;
            }
            if (p <= (target - 1) / p)
                for (std::uint64_t m = p * p; m < target; m += p) composite[m] = true;
        }
        limit = target;
    }
};

PrimeSieve::PrimeSieve() : st_(std::make_shared<State>()) {}

PrimeSieve& PrimeSieve::shared() {
    static PrimeSieve instance;
    return instance;
}

double PrimeSieve::mangoldt(std::uint64_t n) {
    std::lock_guard<std::mutex> lock(st_->mu);
    if (n >= st_->limit) st_->grow_to(n + 1);
    return st_->lambda[n];
}

std::uint64_t PrimeSieve::nth_prime(std::uint64_t j) {
    std::lock_guard<std::mutex> lock(st_->mu);
    while (j >= st_->primes.size()) st_->grow_to(st_->limit * 2 + 2);
    return st_->primes[j];
}

std::uint64_t PrimeSieve::limit() const { return st_->limit; }

std::uint64_t nth_prime(std::uint64_t j) { return PrimeSieve::shared().nth_prime(j); }
double von_mangoldt(std::uint64_t n) { return PrimeSieve::shared().mangoldt(n); }

// --- SubsequenceRule -----------------------------------------------------------

struct SubsequenceRule::Impl {
    Kind kind;
    std::string desc;
    std::vector<std::uint64_t> explicit_indices;
    std::function<bool(std::uint64_t)> mask;

    std::mutex mu;
    std::vector<std::uint64_t> mask_cache;  // indices with mask true, in order
    std::uint64_t mask_scanned = 0;
};

SubsequenceRule SubsequenceRule::primes() {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::primes;
    impl->desc = "primes";
    return SubsequenceRule(std::move(impl));
}

SubsequenceRule SubsequenceRule::explicit_list(std::vector<std::uint64_t> indices) {
    for (std::size_t i = 1; i < indices.size(); ++i)
        if (indices[i] <= indices[i - 1])
            throw InvalidWindow("subsequence indices must be strictly increasing");
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::explicit_list;
    impl->desc = "explicit[" + std::to_string(indices.size()) + "]";
    impl->explicit_indices = std::move(indices);
    return SubsequenceRule(std::move(impl));
}

SubsequenceRule SubsequenceRule::density_one_mask(std::function<bool(std::uint64_t)> mask,
                                                  std::string desc) {
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::density_one_mask;
    impl->desc = std::move(desc);
    impl->mask = std::move(mask);
    return SubsequenceRule(std::move(impl));
}

std::uint64_t SubsequenceRule::index(std::uint64_t j) const {
    switch (impl_->kind) {
        case Kind::primes:
            return PrimeSieve::shared().nth_prime(j);
        case Kind::explicit_list:
            if (j >= impl_->explicit_indices.size())
                throw InvalidWindow("explicit subsequence exhausted at j=" + std::to_string(j));
            return impl_->explicit_indices[j];
        case Kind::density_one_mask: {
            std::lock_guard<std::mutex> lock(impl_->mu);
            while (impl_->mask_cache.size() <= j) {
                if (impl_->mask(impl_->mask_scanned))
                    impl_->mask_cache.push_back(impl_->mask_scanned);
                ++impl_->mask_scanned;
            }
            return impl_->mask_cache[j];
        }
    }
    throw Error("unreachable");
}

SubsequenceRule::Kind SubsequenceRule::kind() const { return impl_->kind; }
const std::string& SubsequenceRule::description() const { return impl_->desc; }

// --- MovingWindow ---------------------------------------------------------------

struct MovingWindow::Impl {
    bool is_affine = true;
    double ka = 1.0, kb = 0.0, ma = 0.0, mb = 0.0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    std::string desc;
};

MovingWindow MovingWindow::affine(double k_a, double k_b, double m_a, double m_b) {
    auto impl = std::make_shared<Impl>();
    impl->ka = k_a;
    impl->kb = k_b;
    impl->ma = m_a;
    impl->mb = m_b;
    impl->desc = "affine[k=" + std::to_string(k_a) + "n+" + std::to_string(k_b) +
                 ", m=" + std::to_string(m_a) + "n+" + std::to_string(m_b) + "]";
    return MovingWindow(std::move(impl));
}

MovingWindow MovingWindow::explicit_list(
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs) {
    auto impl = std::make_shared<Impl>();
    impl->is_affine = false;
    impl->pairs = std::move(pairs);
    impl->desc = "explicit[" + std::to_string(impl->pairs.size()) + "]";
    return MovingWindow(std::move(impl));
}

std::pair<std::uint64_t, std::uint64_t> MovingWindow::at(std::uint64_t n) const {
    if (n == 0) throw InvalidWindow("moving window is indexed from n = 1");
    if (!impl_->is_affine) {
        if (n > impl_->pairs.size())
            throw InvalidWindow("explicit window exhausted at n=" + std::to_string(n));
        const auto& [k, m] = impl_->pairs[n - 1];
        if (k == 0) throw InvalidWindow("k_n must be positive");
        return {k, m};
    }
    const double kd = impl_->ka * static_cast<double>(n) + impl_->kb;
    const double md = impl_->ma * static_cast<double>(n) + impl_->mb;
    const std::uint64_t k = kd < 1.0 ? 1 : static_cast<std::uint64_t>(std::llround(kd));
    const std::uint64_t m = md < 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(md));
    return {k, m};
}

void MovingWindow::validate_prefix(std::uint64_t horizon,
                                   std::optional<std::uint64_t> threshold) const {
    if (horizon == 0) return;
    const std::uint64_t thr =
        threshold ? *threshold
                  : static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(
                        std::max<std::uint64_t>(horizon, 2)))));
    std::uint64_t min_tail_k = UINT64_MAX;
    for (std::uint64_t n = std::max<std::uint64_t>(1, horizon / 2); n <= horizon; ++n)
        min_tail_k = std::min(min_tail_k, at(n).first);
    if (min_tail_k < thr)
        throw InvalidWindow("window fails k_n -> infinity heuristic: min tail k " +
                            std::to_string(min_tail_k) + " < " + std::to_string(thr));
}

const std::string& MovingWindow::description() const { return impl_->desc; }

// --- estimators ------------------------------------------------------------------

WrSeminormEstimate w_r_seminorm(const WeightSequence& alpha, double r, std::uint64_t horizon,
                                double window) {
    if (!(r >= 1.0)) throw InvalidExponent("w_r_seminorm: r must be >= 1");
    if (horizon < 10) throw InvalidHorizon("w_r_seminorm: horizon must be >= 10");
    if (!(window > 0.0 && window <= 1.0))
        throw InvalidHorizon("w_r_seminorm: window must be in (0,1]");

    if (std::isinf(r)) {
        double m = 0.0;
        for (std::uint64_t k = 0; k < horizon; ++k) m = std::max(m, std::abs(alpha.at(k)));
        return {m, m};
    }

    const std::uint64_t tail_start = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil((1.0 - window) * static_cast<double>(horizon))));
    double acc = 0.0, sup = 0.0, tail_sup = 0.0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        const double a = std::abs(alpha.at(n - 1));
        if (r == 1.0)
            acc += a;
        else if (r == 2.0)
            acc += a * a;
        else
            acc += std::pow(a, r);
        const double mean = std::pow(acc / static_cast<double>(n), 1.0 / r);
        sup = std::max(sup, mean);
        if (n >= tail_start) tail_sup = std::max(tail_sup, mean);
    }
    return {tail_sup, sup};
}

HartmanEstimate hartman_coefficient(const WeightSequence& alpha, Complex lambda,
                                    std::uint64_t horizon) {
    require_unimodular(lambda, "hartman_coefficient");
    if (horizon < 10) throw InvalidHorizon("hartman_coefficient: horizon must be >= 10");

    const Complex lbar = std::conj(lambda);
    const std::uint64_t tail_start =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                       std::ceil(0.9 * static_cast<double>(horizon))));
    Complex acc = 0.0;
    Complex rot = 1.0;  // conj(λ)^k, renormalized every 1024 steps
    std::vector<Complex> tail_means;
    tail_means.reserve(horizon - tail_start + 2);
    for (std::uint64_t k = 0; k < horizon; ++k) {
        acc += alpha.at(k) * rot;
        rot *= lbar;
        if ((k & 1023) == 1023) rot /= std::abs(rot);
        const std::uint64_t n = k + 1;
        if (n >= tail_start) tail_means.push_back(acc / static_cast<double>(n));
    }
    const Complex final_mean = acc / static_cast<double>(horizon);
    double drift = 0.0;
    for (const Complex& m : tail_means) drift = std::max(drift, std::abs(m - final_mean));
    return {final_mean, drift};
}

double besicovich_distance(const WeightSequence& alpha, const WeightSequence& poly, double r,
                           std::uint64_t horizon, double window) {
    if (poly.declared_class() != WeightClass::trig_poly)
        throw ClassMismatch("besicovich_distance: poly must have declared class trig_poly");
    if (!(r >= 1.0) || std::isinf(r))
        throw InvalidExponent("besicovich_distance: r must be finite and >= 1");
    if (horizon < 10) throw InvalidHorizon("besicovich_distance: horizon must be >= 10");

    const std::uint64_t tail_start = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil((1.0 - window) * static_cast<double>(horizon))));
    double acc = 0.0, tail_sup = 0.0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        const double d = std::abs(alpha.at(n - 1) - poly.at(n - 1));
        acc += (r == 1.0) ? d : std::pow(d, r);
        if (n >= tail_start)
            tail_sup = std::max(tail_sup, std::pow(acc / static_cast<double>(n), 1.0 / r));
    }
    return tail_sup;
}

}  // namespace ncwwlab
