#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace simbank {

// Purpose labels for the keyed random streams. This is a closed set: every
// random draw made by the simulator belongs to exactly one purpose.
enum class StreamPurpose : std::uint32_t {
    case_init = 0,
    loop_count,
    call_redraw,
    duration,
    client_decision,
    regime,
    policy_noise,
};

inline constexpr std::size_t kStreamPurposeCount = 7;

inline constexpr std::array<const char*, kStreamPurposeCount> kStreamPurposeNames = {
    "case-init", "loop-count", "call-redraw", "duration",
    "client-decision", "regime", "policy-noise"};

inline const char* to_string(StreamPurpose p) {
    const auto i = static_cast<std::size_t>(p);
    if (i >= kStreamPurposeCount) throw std::invalid_argument("unknown stream purpose");
    return kStreamPurposeNames[i];
}

inline StreamPurpose stream_purpose_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kStreamPurposeCount; ++i) {
        if (name == kStreamPurposeNames[i]) return static_cast<StreamPurpose>(i);
    }
    throw std::invalid_argument("unknown stream purpose: " + std::string(name));
}

// Position of one logical draw: (case_nr, purpose, occurrence). Occurrence
// indices are assigned by meaning (e.g. "duration of the second call"), not
// by draw order, so counterfactual branches of the same case address the
// same noise.
struct StreamKey {
    std::int64_t case_nr = 0;
    StreamPurpose purpose = StreamPurpose::case_init;
    std::uint32_t occurrence = 0;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
    friend auto operator<=>(const StreamKey&, const StreamKey&) = default;
};

namespace detail {

// splitmix64 finalizer; chained below to spread (seed, key) into 64 bits.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

// Stateless counter-based generator. Every value is a pure function of
// (global_seed, key, sub); there is no sequential state to desynchronize
// when counterfactual branches take different actions.
class StreamProvider {
public:
    StreamProvider() = default;
    explicit StreamProvider(std::uint64_t global_seed) : seed_(global_seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t word(const StreamKey& key, std::uint32_t sub = 0) const {
        if (static_cast<std::size_t>(key.purpose) >= kStreamPurposeCount) {
            throw std::invalid_argument("unknown stream purpose");
        }
        std::uint64_t h = detail::mix64(seed_);
        h = detail::mix64(h ^ static_cast<std::uint64_t>(key.case_nr));
        h = detail::mix64(h ^ ((static_cast<std::uint64_t>(key.purpose) << 32) |
                               static_cast<std::uint64_t>(key.occurrence)));
        return detail::mix64(h ^ sub);
    }

    // Uniform in [0,1). One word.
    double uniform(const StreamKey& key, std::uint32_t sub = 0) const {
        return static_cast<double>(word(key, sub) >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo,hi). One word.
    double uniform_range(const StreamKey& key, double lo, double hi, std::uint32_t sub = 0) const {
        if (!(lo <= hi)) throw std::invalid_argument("uniform_range: lo > hi");
        return lo + uniform(key, sub) * (hi - lo);
    }

    // Box-Muller. Two words (subs sub, sub+1).
    double normal(const StreamKey& key, double mean, double stddev, std::uint32_t sub = 0) const {
        if (stddev < 0.0) throw std::invalid_argument("normal: negative stddev");
        if (stddev == 0.0) return mean;
        const double u1 = uniform(key, sub);
        const double u2 = uniform(key, sub + 1);
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return mean + stddev * r * std::cos(2.0 * M_PI * u2);
    }

    // exp(Normal(log_mean, log_sd)). Two words.
    double lognormal(const StreamKey& key, double log_mean, double log_sd, std::uint32_t sub = 0) const {
        return std::exp(normal(key, log_mean, log_sd, sub));
    }

    // Beta(a,b) for integer a,b >= 1 via order statistics: the a-th smallest
    // of (a+b-1) uniforms. Fixed budget of a+b-1 words.
    double beta_int(const StreamKey& key, int a, int b, std::uint32_t sub = 0) const {
        if (a < 1 || b < 1 || a + b - 1 > 16) {
            throw std::invalid_argument("beta_int: requires 1 <= a,b and a+b-1 <= 16");
        }
        const int n = a + b - 1;
        std::array<double, 16> u{};
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = uniform(key, sub + static_cast<std::uint32_t>(i));
        std::nth_element(u.begin(), u.begin() + (a - 1), u.begin() + n);
        return u[static_cast<std::size_t>(a - 1)];
    }

    // One word.
    bool bernoulli(const StreamKey& key, double p, std::uint32_t sub = 0) const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p outside [0,1]");
        return uniform(key, sub) < p;
    }

    // Index into `weights` (nonnegative, positive sum). One word.
    std::size_t categorical(const StreamKey& key, const std::vector<double>& weights,
                            std::uint32_t sub = 0) const {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("categorical: bad weight");
            total += w;
        }
        if (weights.empty() || total <= 0.0) throw std::invalid_argument("categorical: empty or zero-sum weights");
        const double x = uniform(key, sub) * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size() - 1;
    }

    // Uniform over {0, ..., n-1}. One word.
    std::uint32_t uniform_int(const StreamKey& key, std::uint32_t n, std::uint32_t sub = 0) const {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        const auto i = static_cast<std::uint32_t>(uniform(key, sub) * static_cast<double>(n));
        return std::min(i, n - 1);
    }

private:
    std::uint64_t seed_ = 0;
};

// Deterministic seed derivation for repetitions, shards and sub-experiments.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0) {
    return detail::mix64(detail::mix64(base ^ detail::mix64(tag)) + index);
}

}  // namespace simbank
