#include "bplab/bp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bplab {

namespace {

std::vector<double> uniform_vector(int arity) {
    return std::vector<double>(static_cast<std::size_t>(arity), 1.0 / arity);
}

void normalize_or_throw(std::vector<double>& v, const BayesNet& net, NodeId node, const char* what) {
    if (!normalize_in_place(v)) {
        const std::string& name = net.node(node).name;
        throw NumericalZeroError(std::string(what) + " at node " + std::to_string(node) +
                                 (name.empty() ? "" : " (" + name + ")") +
                                 " is identically zero; the evidence contradicts the model");
    }
}

// Outgoing quantities of one node that depend on its parent side.
struct ParentSide {
    std::vector<double> causal;                  // pi(x), unnormalized
    std::vector<std::vector<double>> to_parents;  // lambda messages, normalized
};

ParentSide tabular_parent_side(const BayesNet& net, const MessageState& state, NodeId x,
                               const std::vector<double>& lam, bool want_lambdas) {
    const NodeSpec& spec = net.node(x);
    const auto& table = std::get<TableCpd>(spec.cpd);
    const std::size_t n = spec.parents.size();
    const auto arity = static_cast<std::size_t>(spec.arity);

    ParentSide out;
    out.causal.assign(arity, 0.0);
    if (want_lambdas) {
        for (NodeId p : spec.parents) out.to_parents.emplace_back(static_cast<std::size_t>(net.arity(p)), 0.0);
    }

    std::vector<const std::vector<double>*> incoming(n);
    for (std::size_t k = 0; k < n; ++k) incoming[k] = &state.pi_msgs[net.edge_id(x, k)];

    std::vector<int> digit(n, 0);
    std::vector<double> w(n), prefix(n + 1), suffix(n + 1);
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < n; ++k) w[k] = (*incoming[k])[static_cast<std::size_t>(digit[k])];
        prefix[0] = 1.0;
        for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] * w[k];
        suffix[n] = 1.0;
        for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] * w[k];

        const double weight = prefix[n];
        double s = 0.0;
        for (std::size_t xs = 0; xs < arity; ++xs) {
            out.causal[xs] += row[xs] * weight;
            s += lam[xs] * row[xs];
        }
        if (want_lambdas) {
            for (std::size_t i = 0; i < n; ++i)
                out.to_parents[i][static_cast<std::size_t>(digit[i])] += s * prefix[i] * suffix[i + 1];
        }
        for (std::size_t k = n; k-- > 0;) {
            if (++digit[k] < net.arity(spec.parents[k])) break;
            digit[k] = 0;
        }
    }
    if (want_lambdas) {
        for (std::size_t i = 0; i < n; ++i) normalize_or_throw(out.to_parents[i], net, x, "lambda message");
    }
    return out;
}

ParentSide noisy_or_parent_side(const BayesNet& net, const MessageState& state, NodeId x,
                                const std::vector<double>& lam) {
    const NodeSpec& spec = net.node(x);
    std::vector<double> on(spec.parents.size());
    for (std::size_t k = 0; k < on.size(); ++k) on[k] = state.pi_msgs[net.edge_id(x, k)][1];
    NoisyOrMessages m = noisy_or_messages(std::get<NoisyOrCpd>(spec.cpd), on, lam);
    for (auto& v : m.lambdas) normalize_or_throw(v, net, x, "lambda message");
    return {std::move(m.pi), std::move(m.lambdas)};
}

ParentSide parent_side(const BayesNet& net, const MessageState& state, NodeId x, const std::vector<double>& lam,
                       bool want_lambdas) {
    if (std::holds_alternative<NoisyOrCpd>(net.node(x).cpd)) return noisy_or_parent_side(net, state, x, lam);
    return tabular_parent_side(net, state, x, lam, want_lambdas);
}

// pi messages from x to each of its children, in children(x) order.
std::vector<std::vector<double>> child_messages(const BayesNet& net, const MessageState& state, NodeId x,
                                                const std::vector<double>& causal) {
    const auto& links = net.children(x);
    const std::size_t m = links.size();
    const auto arity = static_cast<std::size_t>(net.arity(x));
    std::vector<std::vector<double>> out(m, std::vector<double>(arity));
    if (m == 0) return out;

    // Prefix/suffix products over children exclude the recipient without division.
    std::vector<std::vector<double>> prefix(m + 1, std::vector<double>(arity, 1.0));
    std::vector<std::vector<double>> suffix(m + 1, std::vector<double>(arity, 1.0));
    for (std::size_t j = 0; j < m; ++j) {
        const auto& lm = state.lambda_msgs[net.edge_id(links[j].child, links[j].slot)];
        for (std::size_t s = 0; s < arity; ++s) prefix[j + 1][s] = prefix[j][s] * lm[s];
    }
    for (std::size_t j = m; j-- > 0;) {
        const auto& lm = state.lambda_msgs[net.edge_id(links[j].child, links[j].slot)];
        for (std::size_t s = 0; s < arity; ++s) suffix[j][s] = suffix[j + 1][s] * lm[s];
    }
    const auto& self = state.self_lambda[x];
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t s = 0; s < arity; ++s) out[j][s] = causal[s] * self[s] * prefix[j][s] * suffix[j + 1][s];
        normalize_or_throw(out[j], net, x, "pi message");
    }
    return out;
}

void blend(std::vector<double>& fresh, const std::vector<double>& old, double mu) {
    if (mu == 0.0) return;
    for (std::size_t s = 0; s < fresh.size(); ++s) fresh[s] = (1.0 - mu) * fresh[s] + mu * old[s];
    normalize_in_place(fresh);
}

// Relative amplitude loss across the window above which an oscillation is
// treated as decaying rather than as a limit cycle.
constexpr double kCycleDecayTol = 1e-3;

bool snapshots_match(const Beliefs& a, const Beliefs& b, double tol) { return max_abs_diff(a, b) < tol; }

}  // namespace

void BpOptions::check() const {
    if (!(threshold > 0.0)) throw ModelError("BpOptions: threshold must be > 0");
    if (!(momentum >= 0.0 && momentum <= 1.0)) throw ModelError("BpOptions: momentum must lie in [0, 1]");
    if (max_iters < 1) throw ModelError("BpOptions: max_iters must be >= 1");
    if (cycle_window < 3) throw ModelError("BpOptions: cycle_window must be >= 3");
    if (!(cycle_tol > 0.0)) throw ModelError("BpOptions: cycle_tol must be > 0");
}

int RunResult::period() const {
    if (const auto* c = std::get_if<status::LimitCycle>(&status)) return c->period;
    return 0;
}

MessageState init_messages(const BayesNet& net, const Evidence& ev) {
    require_valid(net);
    ev.check_against(net);
    MessageState st;
    st.pi_msgs.resize(net.num_edges());
    st.lambda_msgs.resize(net.num_edges());
    for (NodeId x = 0; x < net.size(); ++x) {
        for (std::size_t k = 0; k < net.parents(x).size(); ++k) {
            const int pa = net.arity(net.parents(x)[k]);
            st.pi_msgs[net.edge_id(x, k)] = uniform_vector(pa);
            st.lambda_msgs[net.edge_id(x, k)] = uniform_vector(pa);
        }
        st.self_lambda.push_back(ev.observed(x) ? indicator(net.arity(x), ev.state(x)) : uniform_vector(net.arity(x)));
    }
    return st;
}

MessageState init_random_messages(const BayesNet& net, const Evidence& ev, Rng& rng) {
    MessageState st = init_messages(net, ev);
    auto randomize = [&rng](std::vector<double>& v) {
        for (double& x : v) x = rng.uniform(0.05, 1.0);
        normalize_in_place(v);
    };
    for (auto& v : st.pi_msgs) randomize(v);
    for (auto& v : st.lambda_msgs) randomize(v);
    return st;
}

std::vector<double> combined_lambda(const BayesNet& net, const MessageState& state, NodeId node) {
    std::vector<double> lam = state.self_lambda[node];
    for (const ParentLink& link : net.children(node)) {
        const auto& m = state.lambda_msgs[net.edge_id(link.child, link.slot)];
        for (std::size_t s = 0; s < lam.size(); ++s) lam[s] *= m[s];
    }
    return lam;
}

std::vector<double> causal_support(const BayesNet& net, const MessageState& state, NodeId node) {
    const std::vector<double> unused(static_cast<std::size_t>(net.arity(node)), 1.0);
    if (std::holds_alternative<NoisyOrCpd>(net.node(node).cpd))
        return noisy_or_parent_side(net, state, node, unused).causal;
    return tabular_parent_side(net, state, node, unused, false).causal;
}

std::vector<double> compute_belief(const BayesNet& net, const MessageState& state, NodeId node) {
    std::vector<double> bel = combined_lambda(net, state, node);
    const std::vector<double> pi = causal_support(net, state, node);
    for (std::size_t s = 0; s < bel.size(); ++s) bel[s] *= pi[s];
    normalize_or_throw(bel, net, node, "belief");
    return bel;
}

Beliefs compute_beliefs(const BayesNet& net, const MessageState& state) {
    Beliefs b;
    b.marginals.reserve(net.size());
    for (NodeId x = 0; x < net.size(); ++x) b.marginals.push_back(compute_belief(net, state, x));
    return b;
}

std::vector<double> lambda_message(const BayesNet& net, const MessageState& state, NodeId child, std::size_t slot) {
    if (slot >= net.parents(child).size()) throw ModelError("lambda_message: slot out of range");
    const std::vector<double> lam = combined_lambda(net, state, child);
    return std::move(parent_side(net, state, child, lam, true).to_parents[slot]);
}

std::vector<double> pi_message(const BayesNet& net, const MessageState& state, NodeId parent, NodeId child) {
    const auto& links = net.children(parent);
    const auto it = std::find_if(links.begin(), links.end(), [child](const ParentLink& l) { return l.child == child; });
    if (it == links.end()) throw ModelError("pi_message: no edge " + std::to_string(parent) + " -> " + std::to_string(child));
    const std::vector<double> causal = causal_support(net, state, parent);
    return std::move(child_messages(net, state, parent, causal)[static_cast<std::size_t>(it - links.begin())]);
}

NoisyOrMessages noisy_or_messages(const NoisyOrCpd& cpd, std::span<const double> parent_on,
                                  std::span<const double> child_lambda) {
    const std::size_t n = cpd.thetas.size();
    if (parent_on.size() != n) throw ModelError("noisy_or_messages: one incoming message per parent required");
    if (child_lambda.size() != 2) throw ModelError("noisy_or_messages: child must be binary");

    const double q0 = std::exp(-cpd.theta0);
    std::vector<double> q(n), factor(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = std::exp(-cpd.thetas[i]);
        // E[q_i^{U_i}] under the incoming message.
        factor[i] = 1.0 - parent_on[i] * (1.0 - q[i]);
    }
    std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * factor[i];
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * factor[i];

    NoisyOrMessages out;
    const double z = q0 * prefix[n];
    out.pi = {z, 1.0 - z};
    const double l0 = child_lambda[0];
    const double l1 = child_lambda[1];
    out.lambdas.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z_rest = q0 * prefix[i] * suffix[i + 1];
        const double off_if_on = q[i] * z_rest;
        out.lambdas.push_back({l0 * z_rest + l1 * (1.0 - z_rest), l0 * off_if_on + l1 * (1.0 - off_if_on)});
        normalize_in_place(out.lambdas.back());
    }
    return out;
}

MessageState step(const BayesNet& net, const MessageState& state, const BpOptions& opts) {
    MessageState next;
    next.pi_msgs.resize(state.pi_msgs.size());
    next.lambda_msgs.resize(state.lambda_msgs.size());
    next.self_lambda = state.self_lambda;
    next.iteration = state.iteration + 1;
    const double mu = opts.momentum;

    if (opts.schedule == Schedule::Synchronous) {
        for (NodeId x = 0; x < net.size(); ++x) {
            const std::vector<double> lam = combined_lambda(net, state, x);
            ParentSide ps = parent_side(net, state, x, lam, true);
            for (std::size_t k = 0; k < ps.to_parents.size(); ++k)
                next.lambda_msgs[net.edge_id(x, k)] = std::move(ps.to_parents[k]);

            auto to_children = child_messages(net, state, x, ps.causal);
            const auto& links = net.children(x);
            for (std::size_t j = 0; j < links.size(); ++j)
                next.pi_msgs[net.edge_id(links[j].child, links[j].slot)] = std::move(to_children[j]);
        }
        for (std::size_t e = 0; e < next.pi_msgs.size(); ++e) {
            blend(next.pi_msgs[e], state.pi_msgs[e], mu);
            blend(next.lambda_msgs[e], state.lambda_msgs[e], mu);
        }
        return next;
    }

    // Two-phase: every pi message from the iteration-t state, then every
    // lambda message from the fresh pi messages and the iteration-t lambdas.
    for (NodeId x = 0; x < net.size(); ++x) {
        const auto& links = net.children(x);
        if (links.empty()) continue;
        const std::vector<double> causal = causal_support(net, state, x);
        auto to_children = child_messages(net, state, x, causal);
        for (std::size_t j = 0; j < links.size(); ++j) {
            const std::size_t e = net.edge_id(links[j].child, links[j].slot);
            next.pi_msgs[e] = std::move(to_children[j]);
            blend(next.pi_msgs[e], state.pi_msgs[e], mu);
        }
    }
    MessageState mid;
    mid.pi_msgs = next.pi_msgs;
    mid.lambda_msgs = state.lambda_msgs;
    mid.self_lambda = state.self_lambda;
    for (NodeId x = 0; x < net.size(); ++x) {
        if (net.parents(x).empty()) continue;
        const std::vector<double> lam = combined_lambda(net, mid, x);
        ParentSide ps = parent_side(net, mid, x, lam, true);
        for (std::size_t k = 0; k < ps.to_parents.size(); ++k) {
            const std::size_t e = net.edge_id(x, k);
            next.lambda_msgs[e] = std::move(ps.to_parents[k]);
            blend(next.lambda_msgs[e], state.lambda_msgs[e], mu);
        }
    }
    return next;
}

std::optional<int> detect_limit_cycle(std::span<const Beliefs> history, double cycle_tol) {
    const std::size_t n = history.size();
    if (n < 3) return std::nullopt;
    const Beliefs& last = history[n - 1];
    if (snapshots_match(last, history[n - 2], cycle_tol)) return std::nullopt;
    for (std::size_t p = 2; p < n; ++p)
        if (snapshots_match(last, history[n - 1 - p], cycle_tol)) return static_cast<int>(p);
    return std::nullopt;
}

RunResult run(const BayesNet& net, const Evidence& ev, const BpOptions& opts) {
    return run_from(net, init_messages(net, ev), opts);
}

RunResult run_from(const BayesNet& net, MessageState start, const BpOptions& opts) {
    opts.check();
    require_valid(net);

    RunResult result;
    result.messages = std::move(start);
    result.beliefs = compute_beliefs(net, result.messages);
    result.history_tail.push_back(result.beliefs);

    for (int it = 1; it <= opts.max_iters; ++it) {
        result.messages = step(net, result.messages, opts);
        Beliefs next = compute_beliefs(net, result.messages);
        const double delta = max_abs_diff(next, result.beliefs);
        result.per_iteration_delta.push_back(delta);
        result.beliefs = std::move(next);
        result.history_tail.push_back(result.beliefs);
        if (result.history_tail.size() > opts.cycle_window) result.history_tail.pop_front();
        result.iterations = it;

        if (delta < opts.threshold) {
            result.status = status::Converged{it};
            return result;
        }
        if (result.history_tail.size() < opts.cycle_window) continue;

        const std::vector<Beliefs> window(result.history_tail.begin(), result.history_tail.end());
        const std::optional<int> period = detect_limit_cycle(window, opts.cycle_tol);
        if (!period) continue;
        // Only a cycle seen twice over and holding across the whole window
        // counts; a damped oscillation can match one snapshot pair transiently.
        const auto p = static_cast<std::size_t>(*period);
        if (2 * p > window.size()) continue;
        bool persistent = true;
        for (std::size_t k = p; k < window.size() && persistent; ++k)
            persistent = snapshots_match(window[k], window[k - p], opts.cycle_tol);
        if (!persistent) continue;
        // The orbit must also hold its amplitude; a slowly decaying
        // oscillation matches within cycle_tol but still converges.
        const auto& d = result.per_iteration_delta;
        const std::size_t span = window.size() - 1;
        const double newest = *std::max_element(d.end() - static_cast<std::ptrdiff_t>(p), d.end());
        const double oldest = *std::max_element(d.end() - static_cast<std::ptrdiff_t>(span),
                                                d.end() - static_cast<std::ptrdiff_t>(span - p));
        if (newest < oldest * (1.0 - kCycleDecayTol)) continue;

        status::LimitCycle cycle{*period, {}};
        cycle.endpoint_beliefs.assign(window.end() - static_cast<std::ptrdiff_t>(p), window.end());
        result.status = std::move(cycle);
        return result;
    }
    result.status = status::Exhausted{opts.max_iters};
    return result;
}

Beliefs cycle_average(const RunResult& result) {
    const auto* cycle = std::get_if<status::LimitCycle>(&result.status);
    if (cycle == nullptr) throw ModelError("cycle_average: run did not end in a limit cycle");
    if (cycle->endpoint_beliefs.empty()) throw ModelError("cycle_average: no endpoint beliefs recorded");
    Beliefs avg = cycle->endpoint_beliefs.front();
    for (std::size_t k = 1; k < cycle->endpoint_beliefs.size(); ++k) {
        const Beliefs& b = cycle->endpoint_beliefs[k];
        for (std::size_t i = 0; i < avg.size(); ++i)
            for (std::size_t s = 0; s < avg[i].size(); ++s) avg[i][s] += b[i][s];
    }
    for (auto& m : avg.marginals) normalize_in_place(m);
    return avg;
}

}  // namespace bplab
