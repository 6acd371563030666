#pragma once

#include <cstddef>

#include "bplab/bayes_net.hpp"
#include "bplab/beliefs.hpp"
#include "bplab/rng.hpp"

namespace bplab {

struct WeightedEstimate {
    Beliefs beliefs;
    std::size_t n_samples = 0;
    double sum_weights = 0.0;
    /// (sum w)^2 / sum w^2
    double ess = 0.0;
};

/// Likelihood weighting: observed nodes are clamped, the rest sampled
/// ancestrally, and each sample is weighted by the probability of the observed
/// states given their sampled parents. Throws ZeroEvidenceError if every
/// weight is zero.
WeightedEstimate likelihood_weighting(const BayesNet& net, const Evidence& ev, std::size_t n_samples, Rng& rng);

}  // namespace bplab
