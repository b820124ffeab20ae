#ifndef RATELAB_RNG_HPP
#define RATELAB_RNG_HPP

#include <cstdint>
#include <random>
#include <span>

#include "ratelab/errors.hpp"

namespace ratelab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Per-stream seed derivation: replication r of a run gets an independent,
/// reproducible stream no matter how replications are scheduled.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0xD1342543DE82EF95ULL * (stream + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

/// mt19937_64 behind a fixed uniform mapping, so draws are identical on every
/// platform (uniform_real_distribution is implementation-defined; this is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Inverse-CDF draw from a pmf given as probabilities (need not be
    /// perfectly normalized; residual rounding mass goes to the last
    /// positive entry).
    std::size_t sample(std::span<const double> pmf) {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last_positive = pmf.size();
        for (std::size_t i = 0; i < pmf.size(); ++i) {
            if (pmf[i] <= 0.0) continue;
            last_positive = i;
            acc += pmf[i];
            if (u < acc) return i;
        }
        if (last_positive == pmf.size()) raise(errc::domain, "sample: pmf has no positive mass");
        return last_positive;
    }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace ratelab

#endif
