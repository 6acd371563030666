#pragma once

#include <cstddef>
#include <vector>

#include "bplab/bayes_net.hpp"
#include "bplab/beliefs.hpp"

namespace bplab {

/// Nonnegative table over the joint states of an ordered scope. The first
/// scope variable is the most significant index, matching TableCpd rows.
class Factor {
public:
    Factor() = default;
    Factor(std::vector<NodeId> scope, std::vector<int> cards, std::vector<double> values);

    /// Factor P(node | parents) with scope (parents..., node).
    static Factor from_cpd(const BayesNet& net, NodeId node);

    const std::vector<NodeId>& scope() const { return scope_; }
    const std::vector<int>& cards() const { return cards_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    /// Drops `var` by fixing it to `state`. No-op if `var` is not in scope.
    Factor reduce(NodeId var, int state) const;

    /// Sums `var` out.
    Factor sum_out(NodeId var) const;

    /// Pointwise product over the union scope (ordered by ascending node id).
    /// Throws InferenceError if the result would exceed `max_entries`.
    Factor product(const Factor& other, std::size_t max_entries) const;

private:
    std::vector<NodeId> scope_;
    std::vector<int> cards_;
    std::vector<double> values_;
};

inline constexpr std::size_t kMaxEnumerationStates = std::size_t{1} << 24;
inline constexpr std::size_t kMaxFactorEntries = std::size_t{1} << 24;

/// Brute-force posterior marginals: sums the joint over every assignment
/// consistent with the evidence. Throws InferenceError when the unobserved
/// state space exceeds kMaxEnumerationStates and ZeroEvidenceError when
/// P(evidence) = 0.
Beliefs enumerate_marginals(const BayesNet& net, const Evidence& ev);

/// Sum-product variable elimination, one elimination per unobserved node,
/// greedy min-degree order with ties broken by node id.
Beliefs eliminate_marginals(const BayesNet& net, const Evidence& ev);

enum class ExactEngine { Enumeration, Elimination };

Beliefs exact_marginals(const BayesNet& net, const Evidence& ev, ExactEngine engine);

}  // namespace bplab
