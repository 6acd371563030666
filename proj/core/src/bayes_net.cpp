#include "bplab/bayes_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace bplab {

namespace {

constexpr double kRowTolerance = 1e-9;

std::string node_label(const NodeSpec& n) {
    std::ostringstream os;
    os << "node " << n.id;
    if (!n.name.empty()) os << " (" << n.name << ")";
    return os.str();
}

double noisy_or_off(const NoisyOrCpd& cpd, const std::vector<int>& parent_states) {
    double exponent = cpd.theta0;
    for (std::size_t i = 0; i < cpd.thetas.size(); ++i)
        if (parent_states[i] != 0) exponent += cpd.thetas[i];
    return std::exp(-exponent);
}

}  // namespace

BayesNet::BayesNet(std::vector<NodeSpec> nodes) : nodes_(std::move(nodes)) {
    const std::size_t n = nodes_.size();
    children_.resize(n);
    edge_offset_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].id != i) {
            throw ModelError("node ids must be consecutive from 0; position " + std::to_string(i) +
                             " holds id " + std::to_string(nodes_[i].id));
        }
        edge_offset_[i] = num_edges_;
        num_edges_ += nodes_[i].parents.size();
        for (std::size_t slot = 0; slot < nodes_[i].parents.size(); ++slot) {
            const NodeId p = nodes_[i].parents[slot];
            if (p < n) children_[p].push_back({i, slot});
        }
    }
}

std::size_t BayesNet::num_parent_configs(NodeId id) const {
    std::size_t count = 1;
    for (NodeId p : nodes_[id].parents) count *= static_cast<std::size_t>(nodes_[p].arity);
    return count;
}

std::size_t BayesNet::row_index(NodeId id, const std::vector<int>& parent_states) const {
    std::size_t row = 0;
    const auto& ps = nodes_[id].parents;
    for (std::size_t k = 0; k < ps.size(); ++k)
        row = row * static_cast<std::size_t>(nodes_[ps[k]].arity) + static_cast<std::size_t>(parent_states[k]);
    return row;
}

double BayesNet::conditional(NodeId id, int state, const std::vector<int>& parent_states) const {
    const NodeSpec& n = nodes_[id];
    if (const auto* table = std::get_if<TableCpd>(&n.cpd))
        return table->rows[row_index(id, parent_states)][static_cast<std::size_t>(state)];
    const double off = noisy_or_off(std::get<NoisyOrCpd>(n.cpd), parent_states);
    return state == 0 ? off : 1.0 - off;
}

ValidationReport validate(const BayesNet& net) {
    ValidationReport report;
    auto fail = [&](std::string msg) { report.failures.push_back(std::move(msg)); };
    const std::size_t n = net.size();
    if (n == 0) {
        fail("network has no nodes");
        return report;
    }

    bool refs_ok = true;
    for (const NodeSpec& node : net.nodes()) {
        const std::string label = node_label(node);
        if (node.arity < 2) fail(label + ": arity " + std::to_string(node.arity) + " < 2");
        std::set<NodeId> seen;
        for (NodeId p : node.parents) {
            if (p >= n) {
                fail(label + ": bad parent reference " + std::to_string(p));
                refs_ok = false;
            } else if (p == node.id) {
                fail(label + ": cycle (node is its own parent)");
            }
            if (!seen.insert(p).second) {
                fail(label + ": duplicate parent " + std::to_string(p));
                refs_ok = false;
            }
        }
        if (!refs_ok) continue;

        if (const auto* table = std::get_if<TableCpd>(&node.cpd)) {
            std::size_t expected_rows = 1;
            bool arities_ok = true;
            for (NodeId p : node.parents) {
                if (net.arity(p) < 2) arities_ok = false;
                expected_rows *= static_cast<std::size_t>(std::max(net.arity(p), 1));
            }
            if (!arities_ok) continue;
            if (table->rows.size() != expected_rows) {
                fail(label + ": table has " + std::to_string(table->rows.size()) + " rows, expected " +
                     std::to_string(expected_rows));
                continue;
            }
            for (std::size_t r = 0; r < table->rows.size(); ++r) {
                const auto& row = table->rows[r];
                if (row.size() != static_cast<std::size_t>(node.arity)) {
                    fail(label + ": row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                         " entries, expected arity " + std::to_string(node.arity));
                    continue;
                }
                double sum = 0.0;
                bool in_range = true;
                for (double v : row) {
                    if (!(v >= 0.0 && v <= 1.0)) in_range = false;
                    sum += v;
                }
                if (!in_range) fail(label + ": row " + std::to_string(r) + " has entries outside [0,1]");
                if (!(std::abs(sum - 1.0) <= kRowTolerance))
                    fail(label + ": row " + std::to_string(r) + " not normalized (sum " + std::to_string(sum) + ")");
            }
        } else {
            const auto& cpd = std::get<NoisyOrCpd>(node.cpd);
            if (node.arity != 2) fail(label + ": noisy-OR on non-binary node");
            for (NodeId p : node.parents)
                if (net.arity(p) != 2) fail(label + ": noisy-OR with non-binary parent " + std::to_string(p));
            if (cpd.thetas.size() != node.parents.size())
                fail(label + ": noisy-OR has " + std::to_string(cpd.thetas.size()) + " weights for " +
                     std::to_string(node.parents.size()) + " parents");
            auto weight_ok = [](double t) { return std::isfinite(t) && t >= 0.0; };
            if (!weight_ok(cpd.theta0)) fail(label + ": noisy-OR leak weight must be finite and >= 0");
            for (double t : cpd.thetas)
                if (!weight_ok(t)) {
                    fail(label + ": noisy-OR weights must be finite and >= 0");
                    break;
                }
        }
    }

    if (refs_ok) {
        // Kahn's algorithm; leftovers sit on a cycle.
        std::vector<std::size_t> indegree(n);
        for (const NodeSpec& node : net.nodes()) indegree[node.id] = node.parents.size();
        std::vector<NodeId> ready;
        for (NodeId i = 0; i < n; ++i)
            if (indegree[i] == 0) ready.push_back(i);
        std::size_t visited = 0;
        while (!ready.empty()) {
            const NodeId u = ready.back();
            ready.pop_back();
            ++visited;
            for (const ParentLink& link : net.children(u))
                if (--indegree[link.child] == 0) ready.push_back(link.child);
        }
        if (visited != n) {
            std::string on_cycle;
            for (NodeId i = 0; i < n; ++i)
                if (indegree[i] > 0) on_cycle += (on_cycle.empty() ? "" : ", ") + std::to_string(i);
            fail("cycle among nodes {" + on_cycle + "}");
        }
    }
    return report;
}

void require_valid(const BayesNet& net) {
    const ValidationReport report = validate(net);
    if (report.ok()) return;
    std::string msg = "invalid network:";
    for (const auto& f : report.failures) msg += "\n  " + f;
    throw ModelError(msg);
}

std::vector<NodeId> topological_order(const BayesNet& net) {
    const std::size_t n = net.size();
    std::vector<std::size_t> indegree(n);
    for (const NodeSpec& node : net.nodes()) {
        for (NodeId p : node.parents)
            if (p >= n) throw ModelError("topological_order: bad parent reference");
        indegree[node.id] = node.parents.size();
    }
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<NodeId> order;
    order.reserve(n);
    while (!ready.empty()) {
        const NodeId u = ready.top();
        ready.pop();
        order.push_back(u);
        for (const ParentLink& link : net.children(u))
            if (--indegree[link.child] == 0) ready.push(link.child);
    }
    if (order.size() != n) throw ModelError("topological_order: cycle detected");
    return order;
}

void Evidence::observe(NodeId node, int state) {
    if (!states_.emplace(node, state).second)
        throw ModelError("node " + std::to_string(node) + " observed twice");
}

void Evidence::check_against(const BayesNet& net) const {
    for (const auto& [node, state] : states_) {
        if (node >= net.size()) throw ModelError("evidence on unknown node " + std::to_string(node));
        if (state < 0 || state >= net.arity(node))
            throw ModelError("evidence state " + std::to_string(state) + " out of range for node " +
                             std::to_string(node));
    }
}

double joint_log_prob(const BayesNet& net, const Assignment& a) {
    if (a.states.size() != net.size())
        throw ModelError("joint_log_prob: assignment covers " + std::to_string(a.states.size()) + " of " +
                         std::to_string(net.size()) + " nodes");
    double total = 0.0;
    std::vector<int> ps;
    for (const NodeSpec& node : net.nodes()) {
        const int s = a.states[node.id];
        if (s < 0 || s >= node.arity) throw ModelError("joint_log_prob: state out of range");
        ps.clear();
        for (NodeId p : node.parents) ps.push_back(a.states[p]);
        const double pr = net.conditional(node.id, s, ps);
        if (pr <= 0.0) return -std::numeric_limits<double>::infinity();
        total += std::log(pr);
    }
    return total;
}

TableCpd expand_noisy_or_to_table(const NoisyOrCpd& cpd, std::size_t n_parents) {
    if (cpd.thetas.size() != n_parents)
        throw ModelError("expand_noisy_or_to_table: weight count does not match parent count");
    if (n_parents > kMaxTabulatedParents)
        throw ModelError("expand_noisy_or_to_table: " + std::to_string(n_parents) + " parents exceeds limit of " +
                         std::to_string(kMaxTabulatedParents));
    TableCpd table;
    const std::size_t rows = std::size_t{1} << n_parents;
    table.rows.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double exponent = cpd.theta0;
        // First parent is the most significant bit.
        for (std::size_t i = 0; i < n_parents; ++i)
            if ((r >> (n_parents - 1 - i)) & 1U) exponent += cpd.thetas[i];
        const double off = std::exp(-exponent);
        table.rows.push_back({off, 1.0 - off});
    }
    return table;
}

BayesNet with_tabulated_cpds(const BayesNet& net) {
    std::vector<NodeSpec> nodes = net.nodes();
    for (NodeSpec& node : nodes)
        if (const auto* nor = std::get_if<NoisyOrCpd>(&node.cpd))
            node.cpd = expand_noisy_or_to_table(*nor, node.parents.size());
    return BayesNet(std::move(nodes));
}

Assignment ancestral_sample(const BayesNet& net, Rng& rng) {
    Assignment a;
    a.states.assign(net.size(), 0);
    std::vector<int> ps;
    std::vector<double> dist;
    for (NodeId id : topological_order(net)) {
        const NodeSpec& node = net.node(id);
        ps.clear();
        for (NodeId p : node.parents) ps.push_back(a.states[p]);
        dist.resize(static_cast<std::size_t>(node.arity));
        for (int s = 0; s < node.arity; ++s) dist[static_cast<std::size_t>(s)] = net.conditional(id, s, ps);
        a.states[id] = static_cast<int>(rng.categorical(dist));
    }
    return a;
}

std::vector<NodeId> leaves(const BayesNet& net) {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < net.size(); ++i)
        if (net.children(i).empty()) out.push_back(i);
    return out;
}

}  // namespace bplab
