// Copyright (c) 2026 the hdrvox authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hdrvox {

// Deterministic RNG wrapper. mt19937_64 output is fully specified by the
// standard; the bounded/real draws below avoid std::*_distribution, whose
// sequences are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform integer in [0, n) by rejection on the top multiple of n.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = eng_(); } while (v >= limit);
        return v % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Marsaglia polar method.
    double normal() {
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        return u * std::sqrt(-2.0 * std::log(s) / s);
    }

    std::string state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }
    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
    }

private:
    std::mt19937_64 eng_;
};

// Fisher-Yates with explicit draws, so shuffles are bit-stable across
// standard libraries.
template <class V>
inline void shuffle(V& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = std::size_t(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// Runs fn(begin, end, worker) over [0, total) split into `workers` contiguous
// chunks. With workers <= 1 the call runs inline. The chunking is a pure
// function of (total, workers), so reductions merged in worker order are
// deterministic for a fixed worker count.
inline void parallel_chunks(std::size_t total, int workers,
                            const std::function<void(std::size_t, std::size_t, int)>& fn) {
    if (workers <= 1 || total <= 1) {
        fn(0, total, 0);
        return;
    }
    const int n = std::min<std::size_t>(workers, total);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int w = 0; w < n; ++w) {
        const std::size_t begin = total * w / n;
        const std::size_t end = total * (w + 1) / n;
        threads.emplace_back(fn, begin, end, w);
    }
    for (auto& t : threads) t.join();
}

}  // namespace hdrvox
