#include "bplab/sampling.hpp"

#include <algorithm>

namespace bplab {

WeightedEstimate likelihood_weighting(const BayesNet& net, const Evidence& ev, std::size_t n_samples, Rng& rng) {
    if (n_samples < 1) throw ModelError("likelihood_weighting: need at least one sample");
    require_valid(net);
    ev.check_against(net);
    const std::vector<NodeId> order = topological_order(net);

    WeightedEstimate est;
    est.n_samples = n_samples;
    for (NodeId i = 0; i < net.size(); ++i)
        est.beliefs.marginals.emplace_back(static_cast<std::size_t>(net.arity(i)), 0.0);

    std::vector<int> states(net.size(), 0);
    std::vector<int> ps;
    std::vector<double> dist;
    double sum_sq = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        double w = 1.0;
        for (NodeId id : order) {
            const NodeSpec& node = net.node(id);
            ps.clear();
            for (NodeId p : node.parents) ps.push_back(states[p]);
            if (ev.observed(id)) {
                states[id] = ev.state(id);
                w *= net.conditional(id, states[id], ps);
                continue;
            }
            dist.resize(static_cast<std::size_t>(node.arity));
            for (int s = 0; s < node.arity; ++s) dist[static_cast<std::size_t>(s)] = net.conditional(id, s, ps);
            states[id] = static_cast<int>(rng.categorical(dist));
        }
        est.sum_weights += w;
        sum_sq += w * w;
        for (NodeId i = 0; i < net.size(); ++i) est.beliefs[i][static_cast<std::size_t>(states[i])] += w;
    }

    if (!(est.sum_weights > 0.0))
        throw ZeroEvidenceError("likelihood_weighting: all " + std::to_string(n_samples) +
                                " sample weights are zero");
    for (auto& m : est.beliefs.marginals)
        for (double& x : m) x /= est.sum_weights;
    est.ess = std::min(est.sum_weights * est.sum_weights / sum_sq, static_cast<double>(n_samples));
    return est;
}

}  // namespace bplab
