#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bplab/bayes_net.hpp"
#include "bplab/beliefs.hpp"
#include "bplab/generators.hpp"
#include "bplab/rng.hpp"

namespace bplab::support {

inline BayesNet single_node(double p0, double p1) {
    return BayesNet({NodeSpec{0, "A", 2, {}, TableCpd{{{p0, p1}}}}});
}

// A -> B, A -> C, B -> D, C -> D with fixed tables.
inline BayesNet diamond() {
    std::vector<NodeSpec> n;
    n.push_back({0, "A", 2, {}, TableCpd{{{0.6, 0.4}}}});
    n.push_back({1, "B", 2, {0}, TableCpd{{{0.7, 0.3}, {0.2, 0.8}}}});
    n.push_back({2, "C", 2, {0}, TableCpd{{{0.9, 0.1}, {0.35, 0.65}}}});
    n.push_back({3, "D", 2, {1, 2}, TableCpd{{{0.95, 0.05}, {0.4, 0.6}, {0.3, 0.7}, {0.1, 0.9}}}});
    return BayesNet(std::move(n));
}

// Same shape as diamond() with random tables and arities.
inline BayesNet random_diamond(Rng& rng, int max_arity = 3) {
    auto ar = [&] { return 2 + static_cast<int>(rng.below(static_cast<std::size_t>(max_arity - 1))); };
    const int a = ar(), b = ar(), c = ar(), d = ar();
    auto table = [&](std::size_t rows, int arity) {
        TableCpd t;
        for (std::size_t r = 0; r < rows; ++r) t.rows.push_back(random_row(arity, rng));
        return t;
    };
    std::vector<NodeSpec> n;
    n.push_back({0, "A", a, {}, table(1, a)});
    n.push_back({1, "B", b, {0}, table(static_cast<std::size_t>(a), b)});
    n.push_back({2, "C", c, {0}, table(static_cast<std::size_t>(a), c)});
    n.push_back({3, "D", d, {1, 2}, table(static_cast<std::size_t>(b * c), d)});
    return BayesNet(std::move(n));
}

// P(node = s | parents) read straight off the CPD, without BayesNet helpers.
// `states` is a full assignment.
inline double cpd_value(const BayesNet& net, NodeId id, const std::vector<int>& states, int s) {
    const NodeSpec& spec = net.nodes()[id];
    if (const auto* nor = std::get_if<NoisyOrCpd>(&spec.cpd)) {
        double e = nor->theta0;
        for (std::size_t k = 0; k < spec.parents.size(); ++k) e += nor->thetas[k] * states[spec.parents[k]];
        const double off = std::exp(-e);
        return s == 0 ? off : 1.0 - off;
    }
    std::size_t row = 0;
    for (NodeId p : spec.parents)
        row = row * static_cast<std::size_t>(net.nodes()[p].arity) + static_cast<std::size_t>(states[p]);
    return std::get<TableCpd>(spec.cpd).rows[row][static_cast<std::size_t>(s)];
}

// Posterior marginals by summing the product of CPD entries over every
// assignment consistent with the evidence.
inline Beliefs oracle_marginals(const BayesNet& net, const Evidence& ev) {
    const std::size_t n = net.size();
    Beliefs out;
    for (NodeId i = 0; i < n; ++i) out.marginals.emplace_back(static_cast<std::size_t>(net.nodes()[i].arity), 0.0);
    std::vector<int> st(n, 0);
    for (const auto& [node, state] : ev.items()) st[node] = state;
    double total = 0.0;
    while (true) {
        double p = 1.0;
        for (NodeId i = 0; i < n; ++i) p *= cpd_value(net, i, st, st[i]);
        total += p;
        for (NodeId i = 0; i < n; ++i) out.marginals[i][static_cast<std::size_t>(st[i])] += p;
        std::size_t k = n;
        while (k-- > 0) {
            if (ev.observed(k)) continue;
            if (++st[k] < net.nodes()[k].arity) break;
            st[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    for (auto& m : out.marginals)
        for (double& v : m) v /= total;
    return out;
}

inline Evidence random_evidence(const BayesNet& net, Rng& rng, double observe_prob) {
    Evidence ev;
    const Assignment a = ancestral_sample(net, rng);
    for (NodeId i = 0; i < net.size(); ++i)
        if (rng.bernoulli(observe_prob)) ev.observe(i, a.states[i]);
    return ev;
}

inline double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace bplab::support
