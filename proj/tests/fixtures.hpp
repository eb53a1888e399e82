#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phishrl/corpus.hpp"
#include "phishrl/rng.hpp"

namespace fixtures {

struct SeparableData {
    std::vector<phishrl::StateVector> states;
    std::vector<int> labels;
};

// Two informative coordinates in [0,1], the rest zero. Label 1 iff
// x0 - x1 > margin/2, label 0 iff x1 - x0 > margin/2; points inside the
// margin band are redrawn.
inline SeparableData separable_states(std::size_t n, std::uint64_t seed, std::size_t dim = phishrl::kStateDim,
                                      double margin = 0.1) {
    phishrl::Rng rng(seed);
    SeparableData d;
    while (d.states.size() < n) {
        const double a = rng.uniform01();
        const double b = rng.uniform01();
        if (std::abs(a - b) < margin / 2) continue;
        phishrl::StateVector s(dim, 0.0);
        s[0] = a;
        s[1] = b;
        d.states.push_back(std::move(s));
        d.labels.push_back(a > b ? 1 : 0);
    }
    return d;
}

// Labeled records whose first two feature columns separate the classes.
inline std::vector<phishrl::SampleRecord> separable_records(std::size_t n, std::uint64_t seed) {
    phishrl::Rng rng(seed);
    std::vector<phishrl::SampleRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        phishrl::SampleRecord r;
        r.label = static_cast<int>(i % 2);
        r.url = r.label ? "http://secure-login-" + std::to_string(i) + ".xyz/verify/account"
                        : "https://www.site" + std::to_string(i) + ".com/";
        const double hi = 60.0 + 40.0 * rng.uniform01();
        const double lo = 10.0 + 40.0 * rng.uniform01();
        r.features[0] = r.label ? hi : lo;
        r.features[1] = r.label ? lo : hi;
        r.embedding_key = phishrl::embedding_key(r.url);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace fixtures
