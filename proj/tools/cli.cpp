#include "cli.hpp"

#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "bplab/bp.hpp"
#include "bplab/exact.hpp"
#include "bplab/generators.hpp"
#include "bplab/harness.hpp"
#include "bplab/network_io.hpp"
#include "bplab/sampling.hpp"

namespace bplab::cli {

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("bplab", sink);
    logger->set_pattern("[%l] %v");
    const char* level = std::getenv("BPLAB_LOG");
    const std::string lv = level ? level : "error";
    if (lv == "debug")
        logger->set_level(spdlog::level::debug);
    else if (lv == "info")
        logger->set_level(spdlog::level::info);
    else
        logger->set_level(spdlog::level::err);
    return logger;
}

// Flags shared by every command that runs loopy propagation.
struct BpFlags {
    double threshold = 1e-4;
    int max_iters = 200;
    double momentum = 0.0;
    std::size_t cycle_window = 10;
    std::optional<double> cycle_tol;
    std::string schedule = "two-phase";

    void attach(CLI::App* app) {
        app->add_option("--threshold", threshold, "Convergence threshold on beliefs")->check(CLI::PositiveNumber);
        app->add_option("--max-iters", max_iters, "Iteration cap")->check(CLI::PositiveNumber);
        app->add_option("--momentum", momentum, "Message momentum in [0, 1]")->check(CLI::Range(0.0, 1.0));
        app->add_option("--cycle-window", cycle_window, "Belief history length for limit-cycle detection")
            ->check(CLI::Range(3, 100000));
        app->add_option("--cycle-tol", cycle_tol, "Snapshot match tolerance (defaults to --threshold)");
        app->add_option("--schedule", schedule, "Message update schedule")
            ->check(CLI::IsMember({"two-phase", "synchronous"}));
    }

    BpOptions options() const {
        BpOptions o;
        o.threshold = threshold;
        o.max_iters = max_iters;
        o.momentum = momentum;
        o.cycle_window = cycle_window;
        o.cycle_tol = cycle_tol.value_or(threshold);
        o.schedule = schedule == "synchronous" ? Schedule::Synchronous : Schedule::TwoPhase;
        return o;
    }
};

struct FamilyFlags {
    std::string layers = "4,8,16";
    int window = 2;
    bool typed = false;
    bool fresh_structure = false;
    int diseases = 10;
    int findings = 20;
    double edge_prob = 0.5;
    double prior_upper = 1.0;

    void attach_pyramid(CLI::App* app) {
        app->add_option("--layers", layers, "Pyramid layer widths, top to bottom");
        app->add_option("--window", window, "Upper-layer parents per pyramid node");
        app->add_flag("--typed", typed, "Noisy-OR parameterization (root prior 0.9, inhibition 0.1, leak 0.9)");
        app->add_flag("--fresh-structure", fresh_structure, "Redraw pyramid parent sets per network");
    }
    void attach_toyqmr(CLI::App* app) {
        app->add_option("--diseases", diseases, "toyQMR disease count");
        app->add_option("--findings", findings, "toyQMR finding count");
        app->add_option("--edge-prob", edge_prob, "toyQMR disease-finding link probability");
        app->add_option("--prior-upper", prior_upper, "Disease priors drawn from [0, U]");
    }

    PyramidConfig pyramid() const {
        PyramidConfig cfg;
        cfg.layer_widths.clear();
        std::stringstream ss(layers);
        for (std::string tok; std::getline(ss, tok, ',');) cfg.layer_widths.push_back(std::stoi(tok));
        cfg.parent_window = window;
        if (typed) cfg.params = NoisyOrTyped{};
        cfg.jitter_parents = fresh_structure;
        return cfg;
    }
    ToyQmrConfig toyqmr() const {
        ToyQmrConfig cfg;
        cfg.n_diseases = diseases;
        cfg.n_findings = findings;
        cfg.edge_prob = edge_prob;
        cfg.prior_upper = prior_upper;
        return cfg;
    }
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(std::stod(tok));
    return out;
}

void print_beliefs(std::ostream& out, const BayesNet& net, const Beliefs& b) {
    out << std::setprecision(10);
    for (NodeId i = 0; i < net.size(); ++i) {
        out << i << '\t' << net.node(i).name << '\t';
        for (std::size_t s = 0; s < b[i].size(); ++s) out << (s ? " " : "") << b[i][s];
        out << '\n';
    }
}

void print_summary(std::ostream& out, const std::string& title, std::span<const RunRecord> records) {
    const ProtocolSummary s = summarize(records);
    out << title << ": runs=" << s.runs << " converged=" << s.converged
        << " fraction=" << s.convergence_fraction;
    if (s.mean_iterations) out << " mean_iterations=" << *s.mean_iterations;
    if (s.loopy_beats_lw_fraction) out << " loopy_beats_lw=" << *s.loopy_beats_lw_fraction;
    out << '\n';
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto log = make_logger(err);

    CLI::App app{"Loopy belief propagation laboratory for discrete Bayesian networks", "bplab"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a random network file");
    std::string gen_kind;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::size_t gen_nodes = 12;
    int gen_max_arity = 3;
    std::size_t gen_loop_len = 4;
    FamilyFlags gen_family;
    gen->add_option("--kind", gen_kind, "Network family")
        ->required()
        ->check(CLI::IsMember({"pyramid", "toyqmr", "polytree", "single-loop"}));
    gen->add_option("--seed", gen_seed, "Generator seed")->required();
    gen->add_option("-o,--out", gen_out, "Output network file")->required();
    gen->add_option("--nodes", gen_nodes, "Polytree node count");
    gen->add_option("--max-arity", gen_max_arity, "Polytree maximum arity");
    gen->add_option("--loop-len", gen_loop_len, "Single-loop cycle length");
    gen_family.attach_pyramid(gen);
    gen_family.attach_toyqmr(gen);

    // infer
    auto* inf = app.add_subcommand("infer", "Compute posterior marginals for a network file");
    std::string inf_net, inf_evidence, inf_method = "loopy", inf_engine = "ve";
    std::size_t inf_samples = 200;
    std::uint64_t inf_seed = 0;
    BpFlags inf_bp;
    inf->add_option("--net", inf_net, "Network file")->required()->check(CLI::ExistingFile);
    inf->add_option("--evidence", inf_evidence, "Evidence file")->check(CLI::ExistingFile);
    inf->add_option("--method", inf_method, "Inference method")->check(CLI::IsMember({"loopy", "exact", "lw"}));
    inf->add_option("--exact-engine", inf_engine, "Exact engine")->check(CLI::IsMember({"enum", "ve"}));
    inf->add_option("--samples", inf_samples, "Likelihood-weighting samples")->check(CLI::PositiveNumber);
    inf->add_option("--seed", inf_seed, "Sampler seed");
    inf_bp.attach(inf);

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run an experiment protocol and write per-run CSV");
    std::string exp_kind, exp_out, exp_net, exp_dump, exp_mu_grid = "0,0.1", exp_evidence_mode;
    std::string exp_leaf_dist, exp_thresholds = "1e-4,1e-3", exp_engine = "ve";
    std::size_t exp_runs = 100, exp_samples = 200;
    std::uint64_t exp_seed = 0;
    double exp_positive = 0.5;
    bool exp_timing = false;
    FamilyFlags exp_family;
    BpFlags exp_bp;
    exp->add_option("kind", exp_kind, "Protocol")
        ->required()
        ->check(CLI::IsMember({"pyramid", "toyqmr", "untypical", "momentum", "leaves"}));
    exp->add_option("--runs", exp_runs, "Number of runs");
    exp->add_option("--seed", exp_seed, "Master seed")->required();
    exp->add_option("--out", exp_out, "Output CSV")->required();
    exp->add_option("--net", exp_net, "Network file (leaves protocol)")->check(CLI::ExistingFile);
    exp->add_option("--samples", exp_samples, "Likelihood-weighting samples")->check(CLI::PositiveNumber);
    exp->add_option("--exact-engine", exp_engine, "Exact engine")->check(CLI::IsMember({"enum", "ve"}));
    exp->add_option("--dump-dir", exp_dump, "Write each run's network and evidence here");
    exp->add_flag("--record-timing", exp_timing, "Fill the wall_time column");
    exp->add_option("--mu-grid", exp_mu_grid, "Momentum values (momentum protocol)");
    exp->add_option("--evidence-mode", exp_evidence_mode, "joint or independent (momentum protocol)")
        ->check(CLI::IsMember({"joint", "independent"}));
    exp->add_option("--positive-prob", exp_positive, "Probability a finding is set positive")
        ->check(CLI::Range(0.0, 1.0));
    exp->add_option("--leaf-dist", exp_leaf_dist, "Leaf evidence distribution P(0),P(1) (untypical protocol)");
    exp->add_option("--thresholds", exp_thresholds, "Convergence thresholds (untypical protocol)");
    exp_family.attach_pyramid(exp);
    exp_family.attach_toyqmr(exp);
    exp_bp.attach(exp);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "toyQMR convergence versus the disease prior bound");
    std::string sweep_grid = "0.01,0.05,0.1,0.25,0.5,1.0", sweep_out, sweep_runs_out, sweep_engine = "ve";
    std::size_t sweep_runs = 100;
    std::uint64_t sweep_seed = 0;
    double sweep_positive = 0.5;
    FamilyFlags sweep_family;
    BpFlags sweep_bp;
    sweep->add_option("--u-grid", sweep_grid, "Prior upper bounds");
    sweep->add_option("--runs-per-u", sweep_runs, "Runs per grid value");
    sweep->add_option("--seed", sweep_seed, "Master seed")->required();
    sweep->add_option("--out", sweep_out, "Summary CSV")->required();
    sweep->add_option("--runs-out", sweep_runs_out, "Per-run CSV");
    sweep->add_option("--positive-prob", sweep_positive, "Probability a finding is set positive")
        ->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--exact-engine", sweep_engine, "Exact engine")->check(CLI::IsMember({"enum", "ve"}));
    sweep_family.attach_toyqmr(sweep);
    sweep_bp.attach(sweep);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    auto engine_of = [](const std::string& s) { return s == "enum" ? ExactEngine::Enumeration : ExactEngine::Elimination; };

    try {
        if (*gen) {
            Rng rng(gen_seed);
            BayesNet net;
            if (gen_kind == "pyramid")
                net = gen_pyramid(gen_family.pyramid(), rng);
            else if (gen_kind == "toyqmr")
                net = gen_toyqmr(gen_family.toyqmr(), rng);
            else if (gen_kind == "polytree")
                net = gen_polytree(gen_nodes, gen_max_arity, rng);
            else
                net = gen_single_loop(gen_loop_len, rng);
            save_network(net, gen_out);
            log->info("wrote {} ({} nodes)", gen_out, net.size());
            return 0;
        }

        if (*inf) {
            const BayesNet net = load_network(inf_net);
            require_valid(net);
            const Evidence ev = inf_evidence.empty() ? Evidence{} : load_evidence(inf_evidence);
            ev.check_against(net);
            if (inf_method == "exact") {
                out << "method exact\n";
                print_beliefs(out, net, exact_marginals(net, ev, engine_of(inf_engine)));
            } else if (inf_method == "lw") {
                Rng rng(inf_seed);
                const WeightedEstimate est = likelihood_weighting(net, ev, inf_samples, rng);
                out << "method lw samples " << est.n_samples << " ess " << est.ess << '\n';
                print_beliefs(out, net, est.beliefs);
            } else {
                const RunResult res = run(net, ev, inf_bp.options());
                out << "method loopy status " << status_label(res.status) << " iterations " << res.iterations;
                if (res.limit_cycle()) out << " period " << res.period();
                out << '\n';
                print_beliefs(out, net, res.beliefs);
            }
            return 0;
        }

        if (*exp) {
            ExperimentOptions opts;
            opts.bp = exp_bp.options();
            opts.lw_samples = exp_samples;
            opts.exact = engine_of(exp_engine);
            opts.record_timing = exp_timing;
            if (!exp_dump.empty()) opts.dump_dir = exp_dump;

            std::vector<RunRecord> records;
            if (exp_kind == "pyramid" || exp_kind == "toyqmr") {
                const NetworkFamily family = exp_kind == "pyramid" ? NetworkFamily{exp_family.pyramid()}
                                                                   : NetworkFamily{exp_family.toyqmr()};
                records = protocol_joint_sample(family, exp_runs, opts, exp_seed);
                print_summary(out, exp_kind, records);
            } else if (exp_kind == "leaves") {
                if (exp_net.empty()) throw std::runtime_error("experiment leaves requires --net");
                const BayesNet net = load_network(exp_net);
                records = protocol_clamp_leaves(net, exp_runs, opts, exp_seed);
                print_summary(out, "leaves", records);
            } else if (exp_kind == "untypical") {
                PyramidConfig cfg = exp_family.pyramid();
                cfg.params = NoisyOrTyped{};
                std::vector<std::pair<double, double>> dists = {{0.5, 0.5}, {0.9, 0.1}};
                if (!exp_leaf_dist.empty()) {
                    const auto d = parse_list(exp_leaf_dist);
                    if (d.size() != 2) throw std::runtime_error("--leaf-dist takes two values");
                    dists = {{d[0], d[1]}};
                }
                for (const auto& dist : dists) {
                    for (double thr : parse_list(exp_thresholds)) {
                        auto part = untypical_evidence_experiment(exp_runs, dist, thr, cfg, opts, exp_seed);
                        print_summary(out, part.empty() ? "untypical" : part.front().variant, part);
                        records.insert(records.end(), part.begin(), part.end());
                    }
                }
            } else {
                const auto grid = parse_list(exp_mu_grid);
                const ToyQmrConfig cfg = exp_family.toyqmr();
                EvidenceMode mode = cfg.prior_upper < 1.0 ? EvidenceMode::IndependentFindings : EvidenceMode::JointSample;
                if (exp_evidence_mode == "joint") mode = EvidenceMode::JointSample;
                if (exp_evidence_mode == "independent") mode = EvidenceMode::IndependentFindings;
                records = momentum_experiment(exp_runs, grid, cfg, mode, exp_positive, opts, exp_seed);
                for (std::size_t m = 0; m < grid.size(); ++m) {
                    std::vector<RunRecord> arm;
                    for (std::size_t k = m; k < records.size(); k += grid.size()) arm.push_back(records[k]);
                    if (!arm.empty()) print_summary(out, arm.front().variant, arm);
                }
            }
            write_csv(records, exp_out);
            log->info("wrote {} records to {}", records.size(), exp_out);
            return 0;
        }

        if (*sweep) {
            ExperimentOptions opts;
            opts.bp = sweep_bp.options();
            opts.exact = engine_of(sweep_engine);
            const auto grid = parse_list(sweep_grid);
            const SweepResult res = prior_sweep(grid, sweep_runs, sweep_family.toyqmr(), sweep_positive, opts, sweep_seed);
            write_csv(res.summary, sweep_out);
            if (!sweep_runs_out.empty()) write_csv(res.runs, sweep_runs_out);
            for (const SweepRecord& s : res.summary) {
                out << "U=" << s.prior_upper << " converged " << s.converged_count << "/" << s.runs;
                if (s.mean_iterations) out << " mean_iterations=" << *s.mean_iterations;
                out << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        log->error("{}", e.what());
        err.flush();
        return 1;
    }
    return 0;
}

}  // namespace bplab::cli
