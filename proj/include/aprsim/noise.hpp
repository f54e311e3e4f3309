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
 * @file noise.hpp
 * Imperfection model: photon survival, interference contrast and source
 * white noise.
 *
 * Every photon carries an end-to-end survival probability eta. Every
 * two-photon overlap point (the fusion PBS and each station) carries an
 * interference contrast v; the distinguishable fraction 1-v of pair events
 * loses the coherence that the overlap is meant to create. Every source
 * carries a white-noise weight lambda mixing its pair toward the
 * maximally mixed state: rho = (1-lambda) |Phi+><Phi+| + lambda I/4.
 *
 * A default-constructed NoiseModel is ideal. Per-photon and per-element
 * overrides refine the scalar defaults.
 */
#pragma once

#include <map>
#include <string>

#include "aprsim/sources.hpp"
#include "aprsim/types.hpp"

namespace aprsim {

struct NoiseModel {
    double default_eta = 1.0;
    double default_visibility = 1.0;
    double default_lambda = 0.0;
    std::map<int, double> eta;                ///< per photon id
    std::map<std::string, double> visibility; ///< per overlap-point id
    std::map<std::string, double> lambda;     ///< per source id

    double eta_for(int photon) const {
        auto it = eta.find(photon);
        return it == eta.end() ? default_eta : it->second;
    }
    double visibility_for(const std::string& id) const {
        auto it = visibility.find(id);
        return it == visibility.end() ? default_visibility : it->second;
    }
    double lambda_for(const std::string& source_id) const {
        auto it = lambda.find(source_id);
        return it == lambda.end() ? default_lambda : it->second;
    }

    void validate() const {
        auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in01(default_eta) || !(default_eta > 0.0))
            throw config_error("default eta must lie in (0, 1]");
        if (!in01(default_visibility))
            throw config_error("default visibility must lie in [0, 1]");
        if (!in01(default_lambda))
            throw config_error("default lambda must lie in [0, 1]");
        for (const auto& [ph, e] : eta)
            if (ph <= 0 || !in01(e) || !(e > 0.0))
                throw config_error("per-photon eta override out of range");
        for (const auto& [id, v] : visibility)
            if (!in01(v))
                throw config_error("visibility override out of range for " + id);
        for (const auto& [id, lm] : lambda)
            if (!in01(lm))
                throw config_error("lambda override out of range for " + id);
    }

    /// Detection model of the experimental bench: the scalar source
    /// efficiency applied to every photon, full contrast, no white noise.
    static NoiseModel experimental(const SourceModel& src) {
        NoiseModel n;
        n.default_eta = src.eta;
        return n;
    }
};

} // namespace aprsim
