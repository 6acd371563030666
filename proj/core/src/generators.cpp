#include "bplab/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bplab {

namespace {

TableCpd random_table(const std::vector<NodeSpec>& nodes, const std::vector<NodeId>& parents, int arity, Rng& rng,
                      double lo = 0.0, double hi = 1.0) {
    std::size_t rows = 1;
    for (NodeId p : parents) rows *= static_cast<std::size_t>(nodes[p].arity);
    TableCpd t;
    t.rows.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) t.rows.push_back(random_row(arity, rng, lo, hi));
    return t;
}

std::vector<NodeId> nearest_upper(int upper_width, int lower_width, int j, std::size_t count, NodeId upper_first) {
    const double pos = static_cast<double>(j) * upper_width / lower_width;
    std::vector<int> idx(static_cast<std::size_t>(upper_width));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [pos](int a, int b) { return std::abs(a - pos) < std::abs(b - pos); });
    idx.resize(std::min(count, idx.size()));
    std::vector<NodeId> out;
    for (int i : idx) out.push_back(upper_first + static_cast<NodeId>(i));
    return out;
}

}  // namespace

std::vector<double> random_row(int arity, Rng& rng, double lo, double hi) {
    std::vector<double> row(static_cast<std::size_t>(arity));
    double sum = 0.0;
    do {
        sum = 0.0;
        for (double& v : row) {
            v = rng.uniform(lo, hi);
            sum += v;
        }
    } while (!(sum > 0.0));
    for (double& v : row) v /= sum;
    return row;
}

void PyramidConfig::check() const {
    if (layer_widths.size() < 2) throw ModelError("pyramid: need at least two layers");
    for (std::size_t l = 0; l < layer_widths.size(); ++l) {
        if (layer_widths[l] < 1) throw ModelError("pyramid: layer widths must be >= 1");
        if (l > 0 && layer_widths[l] <= layer_widths[l - 1])
            throw ModelError("pyramid: layer widths must strictly increase top to bottom");
    }
    if (parent_window < 1) throw ModelError("pyramid: parent window must be >= 1");
    if (const auto* typed = std::get_if<NoisyOrTyped>(&params)) {
        auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!in_unit(typed->root_prior_on)) throw ModelError("pyramid: root prior must lie in [0, 1]");
        if (!(typed->inhibition > 0.0 && typed->inhibition <= 1.0) ||
            !(typed->leak_inhibition > 0.0 && typed->leak_inhibition <= 1.0))
            throw ModelError("pyramid: inhibition probabilities must lie in (0, 1]");
    }
}

void ToyQmrConfig::check() const {
    if (n_diseases < 1 || n_findings < 1) throw ModelError("toyqmr: counts must be >= 1");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw ModelError("toyqmr: edge probability must lie in [0, 1]");
    if (!(weight_lo >= 0.0 && weight_hi >= weight_lo)) throw ModelError("toyqmr: bad weight range");
    if (!(leak_lo >= 0.0 && leak_hi >= leak_lo)) throw ModelError("toyqmr: bad leak range");
    if (!(prior_upper > 0.0 && prior_upper <= 1.0)) throw ModelError("toyqmr: prior upper bound must lie in (0, 1]");
}

BayesNet gen_pyramid(const PyramidConfig& cfg, Rng& rng) {
    cfg.check();
    std::vector<NodeSpec> nodes;
    NodeId upper_first = 0;
    for (std::size_t l = 0; l < cfg.layer_widths.size(); ++l) {
        const NodeId layer_first = nodes.size();
        for (int j = 0; j < cfg.layer_widths[l]; ++j) {
            NodeSpec n;
            n.id = nodes.size();
            n.name = "L" + std::to_string(l) + "_" + std::to_string(j);
            n.arity = 2;
            if (l > 0) {
                const int upper = cfg.layer_widths[l - 1];
                const int lower = cfg.layer_widths[l];
                const auto window = static_cast<std::size_t>(cfg.parent_window);
                if (cfg.jitter_parents) {
                    std::vector<NodeId> pool = nearest_upper(upper, lower, j, window + 2, upper_first);
                    // Partial Fisher-Yates picks `window` of the candidates.
                    for (std::size_t k = 0; k < std::min(window, pool.size()); ++k)
                        std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
                    pool.resize(std::min(window, pool.size()));
                    n.parents = std::move(pool);
                } else {
                    n.parents = nearest_upper(upper, lower, j, window, upper_first);
                }
                std::sort(n.parents.begin(), n.parents.end());
            }
            if (std::holds_alternative<RandomTables>(cfg.params)) {
                n.cpd = random_table(nodes, n.parents, n.arity, rng);
            } else {
                const auto& typed = std::get<NoisyOrTyped>(cfg.params);
                if (l == 0) {
                    n.cpd = TableCpd{{{1.0 - typed.root_prior_on, typed.root_prior_on}}};
                } else {
                    n.cpd = NoisyOrCpd{-std::log(typed.leak_inhibition),
                                       std::vector<double>(n.parents.size(), -std::log(typed.inhibition))};
                }
            }
            nodes.push_back(std::move(n));
        }
        upper_first = layer_first;
    }
    return BayesNet(std::move(nodes));
}

std::vector<NodeId> pyramid_bottom_layer(const PyramidConfig& cfg) {
    cfg.check();
    NodeId first = 0;
    for (std::size_t l = 0; l + 1 < cfg.layer_widths.size(); ++l) first += static_cast<NodeId>(cfg.layer_widths[l]);
    std::vector<NodeId> out(static_cast<std::size_t>(cfg.layer_widths.back()));
    std::iota(out.begin(), out.end(), first);
    return out;
}

BayesNet gen_toyqmr(const ToyQmrConfig& cfg, Rng& rng) {
    cfg.check();
    std::vector<NodeSpec> nodes;
    for (int d = 0; d < cfg.n_diseases; ++d) {
        const double on = rng.uniform(0.0, cfg.prior_upper);
        nodes.push_back({nodes.size(), "d" + std::to_string(d), 2, {}, TableCpd{{{1.0 - on, on}}}});
    }
    for (int f = 0; f < cfg.n_findings; ++f) {
        NodeSpec n{nodes.size(), "f" + std::to_string(f), 2, {}, {}};
        NoisyOrCpd cpd;
        for (int d = 0; d < cfg.n_diseases; ++d)
            if (rng.bernoulli(cfg.edge_prob)) n.parents.push_back(static_cast<NodeId>(d));
        for (std::size_t k = 0; k < n.parents.size(); ++k) cpd.thetas.push_back(rng.uniform(cfg.weight_lo, cfg.weight_hi));
        cpd.theta0 = rng.uniform(cfg.leak_lo, cfg.leak_hi);
        n.cpd = std::move(cpd);
        nodes.push_back(std::move(n));
    }
    return BayesNet(std::move(nodes));
}

std::vector<NodeId> toyqmr_findings(const ToyQmrConfig& cfg) {
    std::vector<NodeId> out(static_cast<std::size_t>(cfg.n_findings));
    std::iota(out.begin(), out.end(), static_cast<NodeId>(cfg.n_diseases));
    return out;
}

BayesNet gen_polytree(std::size_t n_nodes, int max_arity, Rng& rng) {
    if (n_nodes < 1) throw ModelError("gen_polytree: need at least one node");
    if (max_arity < 2) throw ModelError("gen_polytree: max_arity must be >= 2");

    // Decode a uniform Pruefer sequence into the tree's undirected edges.
    std::vector<std::pair<NodeId, NodeId>> edges;
    if (n_nodes == 2) {
        edges.emplace_back(0, 1);
    } else if (n_nodes > 2) {
        std::vector<NodeId> code(n_nodes - 2);
        for (auto& c : code) c = rng.below(n_nodes);
        std::vector<std::size_t> degree(n_nodes, 1);
        for (NodeId c : code) ++degree[c];
        for (NodeId c : code) {
            NodeId leaf = 0;
            while (degree[leaf] != 1) ++leaf;
            edges.emplace_back(leaf, c);
            --degree[leaf];
            --degree[c];
        }
        NodeId u = n_nodes, v = n_nodes;
        for (NodeId i = 0; i < n_nodes; ++i) {
            if (degree[i] != 1) continue;
            (u == n_nodes ? u : v) = i;
        }
        edges.emplace_back(u, v);
    }

    std::vector<std::vector<NodeId>> parents(n_nodes);
    for (auto [a, b] : edges) {
        if (rng.bernoulli(0.5)) std::swap(a, b);
        parents[b].push_back(a);
    }
    std::vector<NodeSpec> nodes(n_nodes);
    for (NodeId i = 0; i < n_nodes; ++i) {
        nodes[i].id = i;
        nodes[i].name = "n" + std::to_string(i);
        nodes[i].arity = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(max_arity - 1)));
        std::sort(parents[i].begin(), parents[i].end());
        nodes[i].parents = parents[i];
    }
    for (NodeId i = 0; i < n_nodes; ++i) nodes[i].cpd = random_table(nodes, nodes[i].parents, nodes[i].arity, rng);
    return BayesNet(std::move(nodes));
}

BayesNet gen_single_loop(std::size_t loop_len, Rng& rng) {
    if (loop_len < 4) throw ModelError("gen_single_loop: loop length must be >= 4");
    const std::size_t inner = loop_len - 2;
    const std::size_t first_path = (inner + 1) / 2;
    const NodeId sink = loop_len - 1;

    std::vector<NodeSpec> nodes(loop_len);
    for (NodeId i = 0; i < loop_len; ++i) {
        nodes[i].id = i;
        nodes[i].name = "n" + std::to_string(i);
        nodes[i].arity = 2;
    }
    // Path one: 0 -> 1 -> ... -> first_path; path two: 0 -> first_path+1 -> ... -> inner.
    for (NodeId i = 1; i <= inner; ++i) nodes[i].parents = {(i == 1 || i == first_path + 1) ? 0 : i - 1};
    nodes[sink].parents = {first_path, inner};
    for (NodeSpec& n : nodes) n.cpd = random_table(nodes, n.parents, 2, rng, 0.05, 0.95);
    return BayesNet(std::move(nodes));
}

BayesNet gen_random_dag(std::size_t n_nodes, std::size_t max_parents, double edge_prob, int max_arity, Rng& rng) {
    if (n_nodes < 1) throw ModelError("gen_random_dag: need at least one node");
    if (max_arity < 2) throw ModelError("gen_random_dag: max_arity must be >= 2");
    std::vector<NodeSpec> nodes(n_nodes);
    for (NodeId i = 0; i < n_nodes; ++i) {
        nodes[i].id = i;
        nodes[i].name = "n" + std::to_string(i);
        nodes[i].arity = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(max_arity - 1)));
        for (NodeId p = 0; p < i && nodes[i].parents.size() < max_parents; ++p)
            if (rng.bernoulli(edge_prob)) nodes[i].parents.push_back(p);
        nodes[i].cpd = random_table(nodes, nodes[i].parents, nodes[i].arity, rng);
    }
    return BayesNet(std::move(nodes));
}

}  // namespace bplab
