#include "bplab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace bplab {

namespace {

std::vector<std::size_t> strides_of(const std::vector<int>& cards) {
    std::vector<std::size_t> strides(cards.size());
    std::size_t s = 1;
    for (std::size_t i = cards.size(); i-- > 0;) {
        strides[i] = s;
        s *= static_cast<std::size_t>(cards[i]);
    }
    return strides;
}

std::size_t position(const std::vector<NodeId>& scope, NodeId var) {
    return static_cast<std::size_t>(std::find(scope.begin(), scope.end(), var) - scope.begin());
}

// Collapses `var` out of the factor: keeps entries with var == state, or sums
// over all states of var when state < 0.
Factor collapse(const std::vector<NodeId>& scope, const std::vector<int>& cards, const std::vector<double>& values,
                std::size_t pos, int state) {
    const auto strides = strides_of(cards);
    const std::size_t card = static_cast<std::size_t>(cards[pos]);
    const std::size_t inner = strides[pos];
    const std::size_t outer = values.size() / (card * inner);

    std::vector<NodeId> new_scope = scope;
    std::vector<int> new_cards = cards;
    new_scope.erase(new_scope.begin() + static_cast<std::ptrdiff_t>(pos));
    new_cards.erase(new_cards.begin() + static_cast<std::ptrdiff_t>(pos));
    std::vector<double> out(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * card * inner + i;
            double v = 0.0;
            if (state >= 0) {
                v = values[base + static_cast<std::size_t>(state) * inner];
            } else {
                for (std::size_t s = 0; s < card; ++s) v += values[base + s * inner];
            }
            out[o * inner + i] = v;
        }
    }
    return Factor(std::move(new_scope), std::move(new_cards), std::move(out));
}

std::vector<int> unobserved_states_product_guard(const BayesNet& net, const Evidence& ev) {
    std::vector<int> radices;
    double total = 1.0;
    for (NodeId i = 0; i < net.size(); ++i) {
        if (ev.observed(i)) continue;
        radices.push_back(net.arity(i));
        total *= net.arity(i);
    }
    if (total > static_cast<double>(kMaxEnumerationStates))
        throw InferenceError("enumerate_marginals: state space of " + std::to_string(total) +
                             " assignments exceeds the enumeration limit");
    return radices;
}

}  // namespace

Factor::Factor(std::vector<NodeId> scope, std::vector<int> cards, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
    if (scope_.size() != cards_.size()) throw ModelError("Factor: scope and cardinalities differ in length");
    std::size_t expected = 1;
    for (int c : cards_) expected *= static_cast<std::size_t>(c);
    if (values_.size() != expected) throw ModelError("Factor: value count does not match cardinalities");
}

Factor Factor::from_cpd(const BayesNet& net, NodeId node) {
    const NodeSpec& spec = net.node(node);
    std::vector<NodeId> scope = spec.parents;
    scope.push_back(node);
    std::vector<int> cards;
    for (NodeId v : scope) cards.push_back(net.arity(v));

    TableCpd expanded;
    const TableCpd* table = std::get_if<TableCpd>(&spec.cpd);
    if (table == nullptr) {
        expanded = expand_noisy_or_to_table(std::get<NoisyOrCpd>(spec.cpd), spec.parents.size());
        table = &expanded;
    }
    std::vector<double> values;
    values.reserve(table->rows.size() * static_cast<std::size_t>(spec.arity));
    for (const auto& row : table->rows) values.insert(values.end(), row.begin(), row.end());
    return Factor(std::move(scope), std::move(cards), std::move(values));
}

Factor Factor::reduce(NodeId var, int state) const {
    const std::size_t pos = position(scope_, var);
    if (pos == scope_.size()) return *this;
    return collapse(scope_, cards_, values_, pos, state);
}

Factor Factor::sum_out(NodeId var) const {
    const std::size_t pos = position(scope_, var);
    if (pos == scope_.size()) return *this;
    return collapse(scope_, cards_, values_, pos, -1);
}

Factor Factor::product(const Factor& other, std::size_t max_entries) const {
    std::vector<NodeId> scope;
    std::vector<int> cards;
    {
        std::set<NodeId> vars(scope_.begin(), scope_.end());
        vars.insert(other.scope_.begin(), other.scope_.end());
        scope.assign(vars.begin(), vars.end());
    }
    double total = 1.0;
    for (NodeId v : scope) {
        const std::size_t pa = position(scope_, v);
        const int c = pa < scope_.size() ? cards_[pa] : other.cards_[position(other.scope_, v)];
        cards.push_back(c);
        total *= c;
    }
    if (total > static_cast<double>(max_entries))
        throw InferenceError("variable elimination: intermediate factor of " + std::to_string(total) +
                             " entries exceeds the size guard");

    const auto sa = strides_of(cards_);
    const auto sb = strides_of(other.cards_);
    std::vector<std::size_t> stride_a(scope.size(), 0), stride_b(scope.size(), 0);
    for (std::size_t k = 0; k < scope.size(); ++k) {
        const std::size_t pa = position(scope_, scope[k]);
        if (pa < scope_.size()) stride_a[k] = sa[pa];
        const std::size_t pb = position(other.scope_, scope[k]);
        if (pb < other.scope_.size()) stride_b[k] = sb[pb];
    }

    const auto n = static_cast<std::size_t>(total);
    std::vector<double> values(n);
    std::vector<int> digit(scope.size(), 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t idx = 0; idx < n; ++idx) {
        values[idx] = values_[ia] * other.values_[ib];
        // Odometer increment, last variable fastest.
        for (std::size_t k = scope.size(); k-- > 0;) {
            if (++digit[k] < cards[k]) {
                ia += stride_a[k];
                ib += stride_b[k];
                break;
            }
            ia -= stride_a[k] * static_cast<std::size_t>(cards[k] - 1);
            ib -= stride_b[k] * static_cast<std::size_t>(cards[k] - 1);
            digit[k] = 0;
        }
    }
    return Factor(std::move(scope), std::move(cards), std::move(values));
}

Beliefs enumerate_marginals(const BayesNet& net, const Evidence& ev) {
    require_valid(net);
    ev.check_against(net);
    const std::vector<int> radices = unobserved_states_product_guard(net, ev);

    std::vector<NodeId> free_nodes;
    Assignment a;
    a.states.assign(net.size(), 0);
    for (NodeId i = 0; i < net.size(); ++i) {
        if (ev.observed(i))
            a.states[i] = ev.state(i);
        else
            free_nodes.push_back(i);
    }

    // Accumulators hold sums of exp(logp - scale); scale tracks the running max.
    Beliefs acc;
    for (NodeId i = 0; i < net.size(); ++i) acc.marginals.emplace_back(static_cast<std::size_t>(net.arity(i)), 0.0);
    double total = 0.0;
    double scale = -std::numeric_limits<double>::infinity();

    while (true) {
        const double lp = joint_log_prob(net, a);
        if (lp > -std::numeric_limits<double>::infinity()) {
            if (lp > scale) {
                const double shrink = std::exp(scale - lp);
                for (auto& m : acc.marginals)
                    for (double& x : m) x *= shrink;
                total *= shrink;
                scale = lp;
            }
            const double w = std::exp(lp - scale);
            total += w;
            for (NodeId i = 0; i < net.size(); ++i) acc[i][static_cast<std::size_t>(a.states[i])] += w;
        }
        std::size_t k = free_nodes.size();
        while (k-- > 0) {
            const NodeId v = free_nodes[k];
            if (++a.states[v] < net.arity(v)) break;
            a.states[v] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }

    if (!(total > 0.0)) throw ZeroEvidenceError("enumerate_marginals: evidence has probability zero");
    for (auto& m : acc.marginals)
        for (double& x : m) x /= total;
    for (const auto& [node, state] : ev.items()) acc[node] = indicator(net.arity(node), state);
    return acc;
}

Beliefs eliminate_marginals(const BayesNet& net, const Evidence& ev) {
    require_valid(net);
    ev.check_against(net);

    std::vector<Factor> base;
    base.reserve(net.size());
    for (NodeId i = 0; i < net.size(); ++i) {
        Factor f = Factor::from_cpd(net, i);
        for (const auto& [node, state] : ev.items()) f = f.reduce(node, state);
        base.push_back(std::move(f));
    }

    std::vector<NodeId> hidden;
    for (NodeId i = 0; i < net.size(); ++i)
        if (!ev.observed(i)) hidden.push_back(i);

    auto eliminate_all_but = [&](const std::vector<NodeId>& keep) {
        std::vector<Factor> factors = base;
        std::set<NodeId> remaining;
        for (NodeId v : hidden)
            if (std::find(keep.begin(), keep.end(), v) == keep.end()) remaining.insert(v);

        while (!remaining.empty()) {
            NodeId best = 0;
            std::size_t best_degree = std::numeric_limits<std::size_t>::max();
            for (NodeId v : remaining) {
                std::set<NodeId> neighbours;
                for (const Factor& f : factors)
                    if (std::find(f.scope().begin(), f.scope().end(), v) != f.scope().end())
                        neighbours.insert(f.scope().begin(), f.scope().end());
                neighbours.erase(v);
                if (neighbours.size() < best_degree) {
                    best_degree = neighbours.size();
                    best = v;
                }
            }
            remaining.erase(best);

            Factor merged({}, {}, {1.0});
            std::vector<Factor> rest;
            for (Factor& f : factors) {
                if (std::find(f.scope().begin(), f.scope().end(), best) != f.scope().end())
                    merged = merged.product(f, kMaxFactorEntries);
                else
                    rest.push_back(std::move(f));
            }
            rest.push_back(merged.sum_out(best));
            factors = std::move(rest);
        }

        Factor result({}, {}, {1.0});
        for (const Factor& f : factors) result = result.product(f, kMaxFactorEntries);
        return result;
    };

    Beliefs out;
    out.marginals.resize(net.size());
    for (const auto& [node, state] : ev.items()) out[node] = indicator(net.arity(node), state);

    if (hidden.empty()) {
        const Factor z = eliminate_all_but({});
        if (!(z.values()[0] > 0.0)) throw ZeroEvidenceError("eliminate_marginals: evidence has probability zero");
        return out;
    }
    for (NodeId q : hidden) {
        const Factor f = eliminate_all_but({q});
        std::vector<double> m = f.values();
        if (!normalize_in_place(m)) throw ZeroEvidenceError("eliminate_marginals: evidence has probability zero");
        out[q] = std::move(m);
    }
    return out;
}

Beliefs exact_marginals(const BayesNet& net, const Evidence& ev, ExactEngine engine) {
    return engine == ExactEngine::Enumeration ? enumerate_marginals(net, ev) : eliminate_marginals(net, ev);
}

}  // namespace bplab
