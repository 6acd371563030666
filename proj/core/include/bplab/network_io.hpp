#pragma once

#include <filesystem>
#include <string>

#include "bplab/bayes_net.hpp"

namespace bplab {

/// Format version written by save_network and accepted by load_network.
inline constexpr int kNetworkFormatVersion = 1;

/// Raised for malformed documents and I/O failures.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Network documents:
//   {"version": 1, "nodes": [{"id", "name", "arity", "parents": [...],
//     "cpd": {"type": "table", "rows": [[...], ...]}
//          | {"type": "noisy_or", "theta0": t, "thetas": [...]}}]}
// Evidence documents:
//   {"observations": [{"node": id, "state": s}, ...]}
//
// Parsing checks document shape only; callers run validate() on the result.

BayesNet parse_network(const std::string& text);
std::string format_network(const BayesNet& net);
BayesNet load_network(const std::filesystem::path& path);
void save_network(const BayesNet& net, const std::filesystem::path& path);

Evidence parse_evidence(const std::string& text);
std::string format_evidence(const Evidence& ev);
Evidence load_evidence(const std::filesystem::path& path);
void save_evidence(const Evidence& ev, const std::filesystem::path& path);

}  // namespace bplab
