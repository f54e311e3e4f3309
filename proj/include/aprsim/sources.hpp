// Copyright 2026 The aprsim developers.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file sources.hpp
 * Pulsed photon-pair sources.
 *
 * A source emits k entangled pairs per pulse with k capped at max_pairs;
 * the per-pulse weights follow one of three truncation schemes of the
 * underlying pair statistics, all sharing P(>=1 pair) ~ p and
 * P(2 pairs) ~ p^2:
 *
 *   geometric: (1-p, p(1-p), p^2), the thermal law with its tail folded
 *              into the top bin. P(0) is exactly 1-p.
 *   linear:    (1-p-p^2, p, p^2), a first-order truncation.
 *   poisson:   (e^-p, p e^-p, 1-(1+p)e^-p).
 *
 * The schemes agree to O(p^2) but differ in P(0); ratio benchmarks against
 * the closed form 2(1-p)^2 single out the geometric scheme, which is the
 * default.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aprsim/types.hpp"

namespace aprsim {

enum class EmissionScheme { geometric, linear, poisson };

inline const char* scheme_name(EmissionScheme s) {
    switch (s) {
        case EmissionScheme::geometric: return "geometric";
        case EmissionScheme::linear: return "linear";
        case EmissionScheme::poisson: return "poisson";
    }
    return "?";
}

inline EmissionScheme scheme_from_name(const std::string& s) {
    if (s == "geometric") return EmissionScheme::geometric;
    if (s == "linear") return EmissionScheme::linear;
    if (s == "poisson") return EmissionScheme::poisson;
    throw config_error("unknown emission scheme: " + s);
}

/**
 * @brief Operating point of the pulsed pair sources.
 *
 * p is the per-pulse pair probability, pulse_rate the laser repetition
 * rate in Hz and eta the end-to-end efficiency each photon sees between
 * its source and a detector. Individual photons can override eta through
 * the noise model.
 */
struct SourceModel {
    double p = 0.0344;
    int max_pairs = 2;
    double pulse_rate = 8.0e7;
    double eta = 0.38;
    EmissionScheme scheme = EmissionScheme::geometric;

    void validate() const {
        if (!(p >= 0.0 && p <= 0.3))
            throw config_error("pair probability p must lie in [0, 0.3]");
        if (max_pairs < 1 || max_pairs > 2)
            throw config_error("max_pairs must be 1 or 2");
        if (!(pulse_rate > 0.0))
            throw config_error("pulse_rate must be positive");
        if (!(eta > 0.0 && eta <= 1.0))
            throw config_error("eta must lie in (0, 1]");
    }
};

/// Per-pulse pair-count weights w[0..max_pairs]; they sum to one.
inline std::vector<double> emission_weights(const SourceModel& m) {
    m.validate();
    const double p = m.p;
    if (m.max_pairs == 1) {
        if (m.scheme == EmissionScheme::poisson)
            return {std::exp(-p), 1.0 - std::exp(-p)};
        return {1.0 - p, p};
    }
    switch (m.scheme) {
        case EmissionScheme::geometric:
            return {1.0 - p, p * (1.0 - p), p * p};
        case EmissionScheme::linear:
            return {1.0 - p - p * p, p, p * p};
        case EmissionScheme::poisson:
            return {std::exp(-p), p * std::exp(-p), 1.0 - (1.0 + p) * std::exp(-p)};
    }
    throw std::logic_error("unreachable");
}

/// Probability that a source fires at all in one pulse.
inline double prob_emit(const SourceModel& m) {
    const auto w = emission_weights(m);
    double total = 0.0;
    for (size_t k = 1; k < w.size(); ++k)
        total += w[k];
    return total;
}

/// Detected two-photon coincidence rate of one source in Hz: the source
/// fires and both photons of the pair survive to their detectors.
inline double twofold_rate(const SourceModel& m) {
    return m.pulse_rate * prob_emit(m) * m.eta * m.eta;
}

/// Joint pair counts for one pulse across all sources, with its weight.
struct EmissionPattern {
    std::vector<int> pairs;
    double weight;
};

/// Closed enumeration of the per-pulse joint emission distribution of
/// num_sources independent sources. Weights sum to one.
inline std::vector<EmissionPattern> emission_distribution(const SourceModel& m,
                                                          int num_sources) {
    const auto w = emission_weights(m);
    const int base = static_cast<int>(w.size());
    std::vector<EmissionPattern> out;
    std::vector<int> counts(static_cast<size_t>(num_sources), 0);
    while (true) {
        double weight = 1.0;
        for (int c : counts)
            weight *= w[static_cast<size_t>(c)];
        out.push_back({counts, weight});
        int i = 0;
        for (; i < num_sources; ++i) {
            if (++counts[static_cast<size_t>(i)] < base)
                break;
            counts[static_cast<size_t>(i)] = 0;
        }
        if (i == num_sources)
            break;
    }
    return out;
}

} // namespace aprsim
