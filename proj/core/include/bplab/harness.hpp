#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bplab/bayes_net.hpp"
#include "bplab/beliefs.hpp"
#include "bplab/bp.hpp"
#include "bplab/exact.hpp"
#include "bplab/generators.hpp"

namespace bplab {

struct CorrelationStats {
    /// Empty when either side has zero variance.
    std::optional<double> pearson_r;
    double mae = 0.0;
    double max_abs_err = 0.0;
    std::size_t n_points = 0;
};

/// Compares beliefs over the query nodes. Binary nodes contribute their
/// state-1 entry once; larger nodes contribute every state.
CorrelationStats correlation_stats(const Beliefs& exact, const Beliefs& approx, std::span<const NodeId> query);

std::vector<NodeId> unobserved_nodes(const BayesNet& net, const Evidence& ev);

/// "converged", "limit_cycle" or "exhausted".
std::string status_label(const RunStatus& status);

struct RunRecord {
    std::size_t run_id = 0;
    std::uint64_t seed = 0;
    std::string network_kind;
    std::size_t n_nodes = 0;
    std::string engine = "loopy";
    std::string status;
    int iterations = 0;
    std::optional<double> pearson_r;
    std::optional<double> mae;
    std::optional<double> max_abs_err;
    std::optional<double> lw_mae;
    std::optional<double> wall_time;
    /// Seeds that regenerate this run's network and evidence.
    std::uint64_t net_seed = 0;
    std::uint64_t evidence_seed = 0;
    /// Free-form experiment arm, e.g. "mu=0.1" or "U=0.05".
    std::string variant;
    int period = 0;
    std::optional<double> cycle_avg_mae;
    /// Max belief difference against the experiment's baseline arm.
    std::optional<double> baseline_diff;
};

struct SweepRecord {
    double prior_upper = 0.0;
    std::size_t runs = 0;
    std::size_t converged_count = 0;
    double convergence_fraction = 0.0;
    /// Mean over converged runs; empty when none converged.
    std::optional<double> mean_iterations;
};

struct SweepResult {
    std::vector<SweepRecord> summary;
    std::vector<RunRecord> runs;
};

struct ExperimentOptions {
    BpOptions bp;
    std::size_t lw_samples = 200;
    ExactEngine exact = ExactEngine::Elimination;
    /// Wall time is left blank unless requested so reruns stay byte-identical.
    bool record_timing = false;
    /// When set, each run's network and evidence are written here as
    /// run_<id>.net.json / run_<id>.evidence.json.
    std::optional<std::filesystem::path> dump_dir;
};

using NetworkFamily = std::variant<PyramidConfig, ToyQmrConfig>;

std::string family_name(const NetworkFamily& family);

struct Instance {
    BayesNet net;
    Evidence evidence;
    std::uint64_t net_seed = 0;
    std::uint64_t evidence_seed = 0;
};

/// Network and evidence for run `run` of the joint-sampling protocol: a fresh
/// network, one ancestral sample, and the observation layer clamped to it
/// (pyramid: bottom layer, toyQMR: all findings).
Instance joint_sample_instance(const NetworkFamily& family, std::uint64_t master_seed, std::size_t run);

/// Runs the joint-sampling protocol: exact, loopy and likelihood weighting on
/// each instance.
std::vector<RunRecord> protocol_joint_sample(const NetworkFamily& family, std::size_t n_runs,
                                             const ExperimentOptions& opts, std::uint64_t master_seed);

/// Fixed network, evidence sampled from the joint with every leaf clamped.
std::vector<RunRecord> protocol_clamp_leaves(const BayesNet& net, std::size_t n_runs, const ExperimentOptions& opts,
                                             std::uint64_t master_seed);

/// Each finding independently positive with probability positive_prob.
Evidence independent_findings(const ToyQmrConfig& cfg, double positive_prob, Rng& rng);

/// toyQMR convergence as a function of the disease prior bound U. Findings are
/// set independently, not sampled from the joint.
SweepResult prior_sweep(std::span<const double> u_grid, std::size_t runs_per_u, const ToyQmrConfig& base,
                        double positive_prob, const ExperimentOptions& opts, std::uint64_t master_seed);

/// Reparameterized pyramid with leaves set iid from leaf_dist = (P(0), P(1)).
/// The evidence of run k depends only on (master_seed, k), so calls that
/// differ only in threshold see the same cases.
std::vector<RunRecord> untypical_evidence_experiment(std::size_t n_runs, std::pair<double, double> leaf_dist,
                                                     double threshold, const PyramidConfig& cfg,
                                                     const ExperimentOptions& opts, std::uint64_t master_seed);

enum class EvidenceMode { JointSample, IndependentFindings };

/// Paired toyQMR runs across momentum values; baseline_diff compares each
/// converged arm with the first grid value when that converged too.
std::vector<RunRecord> momentum_experiment(std::size_t n_runs, std::span<const double> mu_grid,
                                           const ToyQmrConfig& cfg, EvidenceMode mode, double positive_prob,
                                           const ExperimentOptions& opts, std::uint64_t master_seed);

struct ProtocolSummary {
    std::size_t runs = 0;
    std::size_t converged = 0;
    double convergence_fraction = 0.0;
    std::optional<double> mean_iterations;
    /// Fraction of converged runs where loopy MAE < likelihood-weighting MAE.
    std::optional<double> loopy_beats_lw_fraction;
};

ProtocolSummary summarize(std::span<const RunRecord> records);

/// RFC 4180 CSV with a fixed header.
std::string format_run_csv(std::span<const RunRecord> records);
std::string format_sweep_csv(std::span<const SweepRecord> records);
void write_csv(std::span<const RunRecord> records, const std::filesystem::path& path);
void write_csv(std::span<const SweepRecord> records, const std::filesystem::path& path);

extern const std::vector<std::string> kRunCsvColumns;
extern const std::vector<std::string> kSweepCsvColumns;

}  // namespace bplab
