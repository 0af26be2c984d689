#ifndef DMCD_RNG_HPP
#define DMCD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

namespace dmcd {

// Splittable deterministic generator. All randomness in the library flows
// through this type so that identical seeds give identical bytes regardless
// of platform or standard-library vendor (std distributions are
// implementation-defined and are deliberately avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so that small seeds do not produce correlated streams.
        next_u64();
        next_u64();
    }

    // SplitMix64 step.
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; one value per call, cached pair dropped
    // to keep the stream position easy to reason about.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Derive an independent child stream, e.g. one per run index or per node.
    Rng split(std::uint64_t stream_id) {
        const std::uint64_t mixed = next_u64() ^ (stream_id * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
        return Rng(mixed);
    }

private:
    std::uint64_t state_;
};

// Stable 64-bit FNV-1a digest, used for prompt record/replay keys.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_hex(const std::string& s) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t h = fnv1a64(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace dmcd

#endif
