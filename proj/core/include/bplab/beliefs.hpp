#pragma once

#include <vector>

#include "bplab/bayes_net.hpp"

namespace bplab {

/// Inference could not produce beliefs (impossible evidence, size guards).
class InferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The evidence has probability zero under the model.
class ZeroEvidenceError : public InferenceError {
public:
    using InferenceError::InferenceError;
};

/// Per-node posterior distributions, indexed by node id.
struct Beliefs {
    std::vector<std::vector<double>> marginals;

    std::size_t size() const { return marginals.size(); }
    const std::vector<double>& operator[](NodeId id) const { return marginals[id]; }
    std::vector<double>& operator[](NodeId id) { return marginals[id]; }
};

/// Max over nodes and states of |a - b|. Both must have the same shape.
double max_abs_diff(const Beliefs& a, const Beliefs& b);

/// Scales `v` to sum to one; returns false (leaving `v` untouched) when the sum
/// is not positive and finite.
bool normalize_in_place(std::vector<double>& v);

/// One-hot vector of length `arity` at `state`.
std::vector<double> indicator(int arity, int state);

}  // namespace bplab
