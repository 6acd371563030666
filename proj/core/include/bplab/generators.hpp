#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "bplab/bayes_net.hpp"
#include "bplab/rng.hpp"

namespace bplab {

/// Uniform CPT entries, each row normalized.
struct RandomTables {};

/// Roots are on with probability root_prior_on; every other node is a noisy-OR
/// whose parents each fail with probability `inhibition` and whose leak fails
/// with probability `leak_inhibition`.
struct NoisyOrTyped {
    double root_prior_on = 0.9;
    double inhibition = 0.1;
    double leak_inhibition = 0.9;
};

using PyramidParams = std::variant<RandomTables, NoisyOrTyped>;

/// Layered network with local connections; the bottom layer is observed.
struct PyramidConfig {
    std::vector<int> layer_widths{4, 8, 16};
    int parent_window = 2;
    PyramidParams params = RandomTables{};
    /// Pick each node's parents at random among the parent_window + 2 nearest
    /// upper nodes instead of the parent_window nearest.
    bool jitter_parents = false;

    void check() const;
};

/// Bipartite disease/finding network with noisy-OR findings.
struct ToyQmrConfig {
    int n_diseases = 10;
    int n_findings = 20;
    double edge_prob = 0.5;
    double weight_lo = 0.0, weight_hi = 1.0;
    double leak_lo = 0.0, leak_hi = 0.01;
    /// Disease priors P(on) are drawn from [0, prior_upper].
    double prior_upper = 1.0;

    void check() const;
};

/// Node ids are assigned layer by layer, top first, left to right.
BayesNet gen_pyramid(const PyramidConfig& cfg, Rng& rng);

/// Ids of the bottom-layer nodes of a pyramid built from `cfg`.
std::vector<NodeId> pyramid_bottom_layer(const PyramidConfig& cfg);

/// Diseases take ids [0, n_diseases), findings follow.
BayesNet gen_toyqmr(const ToyQmrConfig& cfg, Rng& rng);

std::vector<NodeId> toyqmr_findings(const ToyQmrConfig& cfg);

/// Random singly connected network: uniform labelled tree skeleton, random
/// edge orientations, arities in [2, max_arity], random normalized CPTs.
BayesNet gen_polytree(std::size_t n_nodes, int max_arity, Rng& rng);

/// Binary network with exactly one undirected cycle of `loop_len` nodes: two
/// directed paths from node 0 to the last node. CPT entries are drawn from
/// [0.05, 0.95] and rows normalized.
BayesNet gen_single_loop(std::size_t loop_len, Rng& rng);

/// Random DAG over ids in topological order; each earlier node becomes a
/// parent with probability edge_prob, up to max_parents.
BayesNet gen_random_dag(std::size_t n_nodes, std::size_t max_parents, double edge_prob, int max_arity, Rng& rng);

/// A normalized row of `arity` uniform draws from [lo, hi].
std::vector<double> random_row(int arity, Rng& rng, double lo = 0.0, double hi = 1.0);

}  // namespace bplab
