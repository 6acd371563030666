#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bplab/rng.hpp"

namespace bplab {

using NodeId = std::size_t;

/// Raised when an operation is handed a network or argument that breaks its
/// preconditions (cycles, bad ids, incomplete assignments, ...).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conditional probability table. Rows are indexed by parent configuration in
/// lexicographic order with the first listed parent most significant; each row
/// holds one probability per child state.
struct TableCpd {
    std::vector<std::vector<double>> rows;
};

/// Noisy-OR over binary parents: P(child = 0 | d) = exp(-theta0 - sum_i thetas[i] * d_i).
struct NoisyOrCpd {
    double theta0 = 0.0;
    std::vector<double> thetas;
};

using Cpd = std::variant<TableCpd, NoisyOrCpd>;

struct NodeSpec {
    NodeId id = 0;
    std::string name;
    int arity = 2;
    std::vector<NodeId> parents;
    Cpd cpd;
};

/// Directed edge parent -> child, identified by the parent's slot in the
/// child's parent list.
struct ParentLink {
    NodeId child;
    std::size_t slot;
};

/// Discrete Bayesian network. Immutable after construction.
///
/// Construction only checks what is needed to index the nodes (ids equal to
/// positions); everything else is reported by validate(). Operations that
/// require a well-formed network call require_valid() first.
class BayesNet {
public:
    BayesNet() = default;
    explicit BayesNet(std::vector<NodeSpec> nodes);

    std::size_t size() const { return nodes_.size(); }
    const NodeSpec& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }
    int arity(NodeId id) const { return nodes_[id].arity; }
    const std::vector<NodeId>& parents(NodeId id) const { return nodes_[id].parents; }

    /// Outgoing links of `parent`, in (child id, slot) order.
    const std::vector<ParentLink>& children(NodeId parent) const { return children_[parent]; }

    /// Edges are numbered child by child, slot by slot.
    std::size_t num_edges() const { return num_edges_; }
    std::size_t edge_id(NodeId child, std::size_t slot) const { return edge_offset_[child] + slot; }

    /// Number of parent configurations of a node (rows of its table form).
    std::size_t num_parent_configs(NodeId id) const;

    /// P(node = state | parents = parent_states), parent_states in slot order.
    double conditional(NodeId id, int state, const std::vector<int>& parent_states) const;

    /// Row index of a parent configuration under the lexicographic convention.
    std::size_t row_index(NodeId id, const std::vector<int>& parent_states) const;

private:
    std::vector<NodeSpec> nodes_;
    std::vector<std::vector<ParentLink>> children_;
    std::vector<std::size_t> edge_offset_;
    std::size_t num_edges_ = 0;
};

struct ValidationReport {
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

ValidationReport validate(const BayesNet& net);

/// Throws ModelError listing every failure when the network does not validate.
void require_valid(const BayesNet& net);

/// Parents before children; among ready nodes the smallest id goes first.
std::vector<NodeId> topological_order(const BayesNet& net);

/// Observed node -> state.
class Evidence {
public:
    Evidence() = default;

    /// Throws ModelError if `node` is already observed.
    void observe(NodeId node, int state);

    bool observed(NodeId node) const { return states_.contains(node); }
    int state(NodeId node) const { return states_.at(node); }
    std::size_t size() const { return states_.size(); }
    bool empty() const { return states_.empty(); }
    const std::map<NodeId, int>& items() const { return states_; }

    /// Throws ModelError on unknown nodes or out-of-arity states.
    void check_against(const BayesNet& net) const;

private:
    std::map<NodeId, int> states_;
};

/// Full assignment, one state per node.
struct Assignment {
    std::vector<int> states;
};

/// Sum over nodes of log P(node | parents); -infinity when a factor is zero.
double joint_log_prob(const BayesNet& net, const Assignment& a);

inline constexpr std::size_t kMaxTabulatedParents = 20;

/// Tabulates a noisy-OR over `n_parents` binary parents.
TableCpd expand_noisy_or_to_table(const NoisyOrCpd& cpd, std::size_t n_parents);

/// Copy of the network with every noisy-OR replaced by its table.
BayesNet with_tabulated_cpds(const BayesNet& net);

Assignment ancestral_sample(const BayesNet& net, Rng& rng);

/// Nodes with no children.
std::vector<NodeId> leaves(const BayesNet& net);

}  // namespace bplab
