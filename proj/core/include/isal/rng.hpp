#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace isal {

// Deterministic random source. mt19937_64 output is fixed by the standard;
// the uniform mapping below is spelled out explicitly so that generated
// bytes do not depend on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform index in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(gen_() % static_cast<std::uint64_t>(n));
    }

    // Fisher-Yates; avoids std::shuffle whose draw order is unspecified.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace isal
