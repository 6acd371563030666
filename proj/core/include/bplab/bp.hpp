#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bplab/bayes_net.hpp"
#include "bplab/beliefs.hpp"
#include "bplab/rng.hpp"

namespace bplab {

/// All messages of one iteration of Pearl's polytree algorithm
/// run on a (possibly loopy) network.
///
/// For an edge e = (U -> X), pi_msgs[e] is the causal message pi_X(u) that U
/// sends to X and lambda_msgs[e] is the diagnostic message lambda_X(u) that X
/// sends back to U; both are vectors over U's states. self_lambda[X] encodes
/// X's own observation. Every vector is kept normalized.
struct MessageState {
    std::vector<std::vector<double>> pi_msgs;
    std::vector<std::vector<double>> lambda_msgs;
    std::vector<std::vector<double>> self_lambda;
    int iteration = 0;
};

/// Message update order within one iteration.
///
/// Synchronous: every message at t+1 is computed from the iteration-t
/// messages only. On a bipartite graph this splits the messages into two
/// independent parity chains, so a round-trip oscillation shows up with period
/// four and consecutive belief snapshots can agree while the system cycles.
///
/// TwoPhase: all pi messages are computed in parallel from the iteration-t
/// state, then all lambda messages in parallel from those fresh pi messages.
/// Each phase is still order-independent; one iteration carries information
/// down and back up, and round-trip oscillations have period two.
enum class Schedule { TwoPhase, Synchronous };

struct BpOptions {
    double threshold = 1e-4;
    int max_iters = 200;
    double momentum = 0.0;
    std::size_t cycle_window = 10;
    double cycle_tol = 1e-4;
    Schedule schedule = Schedule::TwoPhase;

    /// Throws ModelError on out-of-range values.
    void check() const;
};

/// A belief or message vector came out identically zero: the evidence
/// contradicts the model along some path.
class NumericalZeroError : public InferenceError {
public:
    using InferenceError::InferenceError;
};

namespace status {
struct Converged {
    int iterations;
};
struct LimitCycle {
    int period;
    /// The last `period` belief snapshots, oldest first.
    std::vector<Beliefs> endpoint_beliefs;
};
struct Exhausted {
    int iterations;
};
}  // namespace status

using RunStatus = std::variant<status::Converged, status::LimitCycle, status::Exhausted>;

struct RunResult {
    RunStatus status;
    /// Steps taken before termination.
    int iterations = 0;
    Beliefs beliefs;
    /// Last cycle_window belief snapshots, oldest first.
    std::deque<Beliefs> history_tail;
    /// per_iteration_delta[t - 1] is max |BEL_t - BEL_{t-1}|.
    std::vector<double> per_iteration_delta;
    MessageState messages;

    bool converged() const { return std::holds_alternative<status::Converged>(status); }
    bool limit_cycle() const { return std::holds_alternative<status::LimitCycle>(status); }
    int period() const;
};

/// Uniform edge messages; self-messages are indicators for observed nodes and
/// uniform otherwise.
MessageState init_messages(const BayesNet& net, const Evidence& ev);

/// Same self-messages as init_messages but random normalized edge messages.
MessageState init_random_messages(const BayesNet& net, const Evidence& ev, Rng& rng);

/// lambda(x): self-message times every child's lambda message, unnormalized.
std::vector<double> combined_lambda(const BayesNet& net, const MessageState& state, NodeId node);

/// pi(x) = sum_u P(x | u) prod_k pi_X(u_k), unnormalized.
std::vector<double> causal_support(const BayesNet& net, const MessageState& state, NodeId node);

/// BEL(x) proportional to lambda(x) pi(x).
std::vector<double> compute_belief(const BayesNet& net, const MessageState& state, NodeId node);

Beliefs compute_beliefs(const BayesNet& net, const MessageState& state);

/// Normalized message from `child` to the parent in `slot` of its parent list,
/// computed from `state`.
std::vector<double> lambda_message(const BayesNet& net, const MessageState& state, NodeId child, std::size_t slot);

/// Normalized message from `parent` to `child`.
std::vector<double> pi_message(const BayesNet& net, const MessageState& state, NodeId parent, NodeId child);

struct NoisyOrMessages {
    /// pi(x) of the noisy-OR child, (P(off), P(on)).
    std::vector<double> pi;
    /// Normalized lambda messages to each parent, in slot order.
    std::vector<std::vector<double>> lambdas;
};

/// Closed-form noisy-OR messages. `parent_on[i]` is pi_X(U_i = 1) from the
/// normalized incoming message and `child_lambda` is lambda(x) of the child.
NoisyOrMessages noisy_or_messages(const NoisyOrCpd& cpd, std::span<const double> parent_on,
                                  std::span<const double> child_lambda);

/// One update under opts.schedule. With momentum mu > 0 each new message is
/// blended (1 - mu) new + mu old, then renormalized; in the two-phase schedule
/// the lambda phase reads the blended pi messages.
MessageState step(const BayesNet& net, const MessageState& state, const BpOptions& opts);

/// Smallest period p in [2, history.size()) such that the newest snapshot
/// matches the one p steps back within `cycle_tol` but not the one 1 step back.
std::optional<int> detect_limit_cycle(std::span<const Beliefs> history, double cycle_tol);

/// Iterates step() until the beliefs settle, a limit cycle persists over the
/// whole history window without losing amplitude, or max_iters is hit.
RunResult run(const BayesNet& net, const Evidence& ev, const BpOptions& opts = {});

/// As run(), starting from the given messages.
RunResult run_from(const BayesNet& net, MessageState start, const BpOptions& opts = {});

/// Mean of the limit cycle's endpoint beliefs, renormalized per node.
Beliefs cycle_average(const RunResult& result);

}  // namespace bplab
