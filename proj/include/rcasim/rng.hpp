#ifndef RCASIM_RNG_HPP
#define RCASIM_RNG_HPP

#include <cstdint>
#include <random>

namespace rcasim {

// Seeded generator with a fully specified draw sequence, so a (scenario, seed)
// pair maps to one reproducible stream regardless of standard-library version.
// Draw order during a run setup: node placement (with connectivity resampling),
// flow endpoint selection, flow start jitter. The event loop itself draws nothing.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi], inclusive
    int uniform_int(int lo, int hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        const auto wide = static_cast<unsigned __int128>(gen_()) * range;
        return lo + static_cast<int>(wide >> 64);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace rcasim

#endif
