#include "bplab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "bplab/network_io.hpp"
#include "bplab/sampling.hpp"

namespace bplab {

const std::vector<std::string> kRunCsvColumns = {
    "run_id", "seed",    "network_kind", "n_nodes",       "engine",        "status",
    "iterations", "pearson_r", "mae",    "max_abs_err",   "lw_mae",        "wall_time",
    "net_seed",   "evidence_seed", "variant", "period",   "cycle_avg_mae", "baseline_diff"};

const std::vector<std::string> kSweepCsvColumns = {"prior_upper", "runs", "converged_count", "convergence_fraction",
                                                   "mean_iterations"};

namespace {

enum class Stream : std::uint64_t { Net = 0, Evidence = 1, Sampler = 2 };

std::uint64_t stream_seed(std::uint64_t master, std::size_t run, Stream s) {
    return derive_seed(master, run, static_cast<std::uint64_t>(s));
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string{}; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string join_header(const std::vector<std::string>& cols) {
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) line += (i ? "," : "") + cols[i];
    return line + "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void dump_instance(const ExperimentOptions& opts, std::size_t run_id, const BayesNet& net, const Evidence& ev) {
    if (!opts.dump_dir) return;
    std::filesystem::create_directories(*opts.dump_dir);
    const std::string stem = "run_" + std::to_string(run_id);
    save_network(net, *opts.dump_dir / (stem + ".net.json"));
    save_evidence(ev, *opts.dump_dir / (stem + ".evidence.json"));
}

// Runs loopy propagation on an instance and scores it against `exact`.
RunRecord score_loopy(const BayesNet& net, const Evidence& ev, const Beliefs& exact, const BpOptions& bp,
                      const ExperimentOptions& opts, RunResult* out_result = nullptr) {
    const auto query = unobserved_nodes(net, ev);
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result = run(net, ev, bp);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

    RunRecord rec;
    rec.n_nodes = net.size();
    rec.status = status_label(result.status);
    rec.iterations = result.iterations;
    rec.period = result.period();
    const CorrelationStats stats = correlation_stats(exact, result.beliefs, query);
    rec.pearson_r = stats.pearson_r;
    rec.mae = stats.mae;
    rec.max_abs_err = stats.max_abs_err;
    if (result.limit_cycle()) rec.cycle_avg_mae = correlation_stats(exact, cycle_average(result), query).mae;
    if (opts.record_timing) rec.wall_time = elapsed.count();
    if (out_result != nullptr) *out_result = std::move(result);
    return rec;
}

double lw_mae(const BayesNet& net, const Evidence& ev, const Beliefs& exact, const ExperimentOptions& opts,
              std::uint64_t seed) {
    Rng rng(seed);
    const WeightedEstimate est = likelihood_weighting(net, ev, opts.lw_samples, rng);
    const auto query = unobserved_nodes(net, ev);
    return correlation_stats(exact, est.beliefs, query).mae;
}

RunRecord evaluate_instance(const Instance& inst, const ExperimentOptions& opts, std::uint64_t lw_seed,
                            bool with_lw) {
    const Beliefs exact = exact_marginals(inst.net, inst.evidence, opts.exact);
    RunRecord rec = score_loopy(inst.net, inst.evidence, exact, opts.bp, opts);
    if (with_lw) rec.lw_mae = lw_mae(inst.net, inst.evidence, exact, opts, lw_seed);
    rec.net_seed = inst.net_seed;
    rec.evidence_seed = inst.evidence_seed;
    return rec;
}

}  // namespace

CorrelationStats correlation_stats(const Beliefs& exact, const Beliefs& approx, std::span<const NodeId> query) {
    std::vector<double> xs, ys;
    for (NodeId id : query) {
        const auto& e = exact[id];
        const auto& a = approx[id];
        if (e.size() != a.size()) throw ModelError("correlation_stats: arity mismatch at node " + std::to_string(id));
        if (e.size() == 2) {
            xs.push_back(e[1]);
            ys.push_back(a[1]);
        } else {
            xs.insert(xs.end(), e.begin(), e.end());
            ys.insert(ys.end(), a.begin(), a.end());
        }
    }
    CorrelationStats st;
    st.n_points = xs.size();
    if (xs.empty()) return st;

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
        const double err = std::abs(xs[i] - ys[i]);
        st.mae += err;
        st.max_abs_err = std::max(st.max_abs_err, err);
    }
    st.mae /= n;
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0.0 && syy > 0.0) st.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return st;
}

std::vector<NodeId> unobserved_nodes(const BayesNet& net, const Evidence& ev) {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < net.size(); ++i)
        if (!ev.observed(i)) out.push_back(i);
    return out;
}

std::string status_label(const RunStatus& status) {
    if (std::holds_alternative<status::Converged>(status)) return "converged";
    if (std::holds_alternative<status::LimitCycle>(status)) return "limit_cycle";
    return "exhausted";
}

std::string family_name(const NetworkFamily& family) {
    return std::holds_alternative<PyramidConfig>(family) ? "pyramid" : "toyqmr";
}

Instance joint_sample_instance(const NetworkFamily& family, std::uint64_t master_seed, std::size_t run) {
    Instance inst;
    inst.net_seed = stream_seed(master_seed, run, Stream::Net);
    inst.evidence_seed = stream_seed(master_seed, run, Stream::Evidence);
    Rng net_rng(inst.net_seed);
    std::vector<NodeId> observed;
    if (const auto* pyr = std::get_if<PyramidConfig>(&family)) {
        inst.net = gen_pyramid(*pyr, net_rng);
        observed = pyramid_bottom_layer(*pyr);
    } else {
        const auto& qmr = std::get<ToyQmrConfig>(family);
        inst.net = gen_toyqmr(qmr, net_rng);
        observed = toyqmr_findings(qmr);
    }
    Rng ev_rng(inst.evidence_seed);
    const Assignment sample = ancestral_sample(inst.net, ev_rng);
    for (NodeId id : observed) inst.evidence.observe(id, sample.states[id]);
    return inst;
}

std::vector<RunRecord> protocol_joint_sample(const NetworkFamily& family, std::size_t n_runs,
                                             const ExperimentOptions& opts, std::uint64_t master_seed) {
    std::vector<RunRecord> records;
    records.reserve(n_runs);
    for (std::size_t r = 0; r < n_runs; ++r) {
        const Instance inst = joint_sample_instance(family, master_seed, r);
        dump_instance(opts, r, inst.net, inst.evidence);
        RunRecord rec = evaluate_instance(inst, opts, stream_seed(master_seed, r, Stream::Sampler), true);
        rec.run_id = r;
        rec.seed = master_seed;
        rec.network_kind = family_name(family);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<RunRecord> protocol_clamp_leaves(const BayesNet& net, std::size_t n_runs, const ExperimentOptions& opts,
                                             std::uint64_t master_seed) {
    require_valid(net);
    const std::vector<NodeId> leaf_ids = leaves(net);
    std::vector<RunRecord> records;
    for (std::size_t r = 0; r < n_runs; ++r) {
        Instance inst{net, {}, 0, stream_seed(master_seed, r, Stream::Evidence)};
        Rng ev_rng(inst.evidence_seed);
        const Assignment sample = ancestral_sample(net, ev_rng);
        for (NodeId id : leaf_ids) inst.evidence.observe(id, sample.states[id]);
        dump_instance(opts, r, inst.net, inst.evidence);
        RunRecord rec = evaluate_instance(inst, opts, stream_seed(master_seed, r, Stream::Sampler), true);
        rec.run_id = r;
        rec.seed = master_seed;
        rec.network_kind = "leaves";
        records.push_back(std::move(rec));
    }
    return records;
}

Evidence independent_findings(const ToyQmrConfig& cfg, double positive_prob, Rng& rng) {
    if (!(positive_prob >= 0.0 && positive_prob <= 1.0))
        throw ModelError("positive finding probability must lie in [0, 1]");
    Evidence ev;
    for (NodeId f : toyqmr_findings(cfg)) ev.observe(f, rng.bernoulli(positive_prob) ? 1 : 0);
    return ev;
}

SweepResult prior_sweep(std::span<const double> u_grid, std::size_t runs_per_u, const ToyQmrConfig& base,
                        double positive_prob, const ExperimentOptions& opts, std::uint64_t master_seed) {
    SweepResult out;
    for (std::size_t ui = 0; ui < u_grid.size(); ++ui) {
        const double u = u_grid[ui];
        if (!(u > 0.0 && u <= 1.0)) throw ModelError("prior_sweep: every U must lie in (0, 1]");
        ToyQmrConfig cfg = base;
        cfg.prior_upper = u;

        SweepRecord summary;
        summary.prior_upper = u;
        summary.runs = runs_per_u;
        double iter_sum = 0.0;
        for (std::size_t r = 0; r < runs_per_u; ++r) {
            const std::size_t run_id = ui * runs_per_u + r;
            Instance inst;
            inst.net_seed = stream_seed(master_seed, run_id, Stream::Net);
            inst.evidence_seed = stream_seed(master_seed, run_id, Stream::Evidence);
            Rng net_rng(inst.net_seed);
            inst.net = gen_toyqmr(cfg, net_rng);
            Rng ev_rng(inst.evidence_seed);
            inst.evidence = independent_findings(cfg, positive_prob, ev_rng);
            dump_instance(opts, run_id, inst.net, inst.evidence);

            RunRecord rec = evaluate_instance(inst, opts, 0, false);
            rec.run_id = run_id;
            rec.seed = master_seed;
            rec.network_kind = "toyqmr";
            rec.variant = "U=" + fmt_double(u);
            if (rec.status == "converged") {
                ++summary.converged_count;
                iter_sum += rec.iterations;
            }
            out.runs.push_back(std::move(rec));
        }
        summary.convergence_fraction =
            runs_per_u == 0 ? 0.0 : static_cast<double>(summary.converged_count) / static_cast<double>(runs_per_u);
        if (summary.converged_count > 0) summary.mean_iterations = iter_sum / static_cast<double>(summary.converged_count);
        out.summary.push_back(summary);
    }
    return out;
}

std::vector<RunRecord> untypical_evidence_experiment(std::size_t n_runs, std::pair<double, double> leaf_dist,
                                                     double threshold, const PyramidConfig& cfg,
                                                     const ExperimentOptions& opts, std::uint64_t master_seed) {
    if (!(leaf_dist.first >= 0.0 && leaf_dist.second >= 0.0 && leaf_dist.first + leaf_dist.second > 0.0))
        throw ModelError("untypical evidence: leaf distribution must be nonnegative and not all zero");
    const double p_on = leaf_dist.second / (leaf_dist.first + leaf_dist.second);
    ExperimentOptions local = opts;
    local.bp.threshold = threshold;
    local.bp.cycle_tol = threshold;

    const std::vector<NodeId> bottom = pyramid_bottom_layer(cfg);
    std::vector<RunRecord> records;
    for (std::size_t r = 0; r < n_runs; ++r) {
        Instance inst;
        inst.net_seed = stream_seed(master_seed, r, Stream::Net);
        inst.evidence_seed = stream_seed(master_seed, r, Stream::Evidence);
        Rng net_rng(inst.net_seed);
        inst.net = gen_pyramid(cfg, net_rng);
        Rng ev_rng(inst.evidence_seed);
        for (NodeId id : bottom) inst.evidence.observe(id, ev_rng.bernoulli(p_on) ? 1 : 0);
        dump_instance(opts, r, inst.net, inst.evidence);

        RunRecord rec = evaluate_instance(inst, local, 0, false);
        rec.run_id = r;
        rec.seed = master_seed;
        rec.network_kind = "pyramid-typed";
        rec.variant = "leaf=" + fmt_double(leaf_dist.first) + "/" + fmt_double(leaf_dist.second) +
                      ";threshold=" + fmt_double(threshold);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<RunRecord> momentum_experiment(std::size_t n_runs, std::span<const double> mu_grid,
                                           const ToyQmrConfig& cfg, EvidenceMode mode, double positive_prob,
                                           const ExperimentOptions& opts, std::uint64_t master_seed) {
    for (double mu : mu_grid)
        if (!(mu >= 0.0 && mu < 1.0)) throw ModelError("momentum_experiment: momentum values must lie in [0, 1)");

    std::vector<RunRecord> records;
    for (std::size_t r = 0; r < n_runs; ++r) {
        Instance inst;
        if (mode == EvidenceMode::JointSample) {
            inst = joint_sample_instance(cfg, master_seed, r);
        } else {
            inst.net_seed = stream_seed(master_seed, r, Stream::Net);
            inst.evidence_seed = stream_seed(master_seed, r, Stream::Evidence);
            Rng net_rng(inst.net_seed);
            inst.net = gen_toyqmr(cfg, net_rng);
            Rng ev_rng(inst.evidence_seed);
            inst.evidence = independent_findings(cfg, positive_prob, ev_rng);
        }
        dump_instance(opts, r, inst.net, inst.evidence);
        const Beliefs exact = exact_marginals(inst.net, inst.evidence, opts.exact);

        std::optional<Beliefs> baseline;
        for (std::size_t m = 0; m < mu_grid.size(); ++m) {
            BpOptions bp = opts.bp;
            bp.momentum = mu_grid[m];
            RunResult result;
            RunRecord rec = score_loopy(inst.net, inst.evidence, exact, bp, opts, &result);
            rec.run_id = r;
            rec.seed = master_seed;
            rec.network_kind = "toyqmr";
            rec.net_seed = inst.net_seed;
            rec.evidence_seed = inst.evidence_seed;
            rec.variant = "mu=" + fmt_double(mu_grid[m]);
            if (m == 0 && result.converged()) baseline = result.beliefs;
            if (m > 0 && baseline && result.converged()) rec.baseline_diff = max_abs_diff(result.beliefs, *baseline);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

ProtocolSummary summarize(std::span<const RunRecord> records) {
    ProtocolSummary s;
    s.runs = records.size();
    double iters = 0.0;
    std::size_t with_lw = 0, beats = 0;
    for (const RunRecord& r : records) {
        if (r.status != "converged") continue;
        ++s.converged;
        iters += r.iterations;
        if (r.lw_mae && r.mae) {
            ++with_lw;
            if (*r.mae < *r.lw_mae) ++beats;
        }
    }
    if (s.runs > 0) s.convergence_fraction = static_cast<double>(s.converged) / static_cast<double>(s.runs);
    if (s.converged > 0) s.mean_iterations = iters / static_cast<double>(s.converged);
    if (with_lw > 0) s.loopy_beats_lw_fraction = static_cast<double>(beats) / static_cast<double>(with_lw);
    return s;
}

std::string format_run_csv(std::span<const RunRecord> records) {
    std::string out = join_header(kRunCsvColumns);
    for (const RunRecord& r : records) {
        const std::vector<std::string> fields = {std::to_string(r.run_id),
                                                 std::to_string(r.seed),
                                                 csv_field(r.network_kind),
                                                 std::to_string(r.n_nodes),
                                                 csv_field(r.engine),
                                                 csv_field(r.status),
                                                 std::to_string(r.iterations),
                                                 fmt_opt(r.pearson_r),
                                                 fmt_opt(r.mae),
                                                 fmt_opt(r.max_abs_err),
                                                 fmt_opt(r.lw_mae),
                                                 fmt_opt(r.wall_time),
                                                 std::to_string(r.net_seed),
                                                 std::to_string(r.evidence_seed),
                                                 csv_field(r.variant),
                                                 std::to_string(r.period),
                                                 fmt_opt(r.cycle_avg_mae),
                                                 fmt_opt(r.baseline_diff)};
        out += join_header(fields);
    }
    return out;
}

std::string format_sweep_csv(std::span<const SweepRecord> records) {
    std::string out = join_header(kSweepCsvColumns);
    for (const SweepRecord& r : records) {
        out += join_header({fmt_double(r.prior_upper), std::to_string(r.runs), std::to_string(r.converged_count),
                            fmt_double(r.convergence_fraction), fmt_opt(r.mean_iterations)});
    }
    return out;
}

void write_csv(std::span<const RunRecord> records, const std::filesystem::path& path) {
    write_text(path, format_run_csv(records));
}

void write_csv(std::span<const SweepRecord> records, const std::filesystem::path& path) {
    write_text(path, format_sweep_csv(records));
}

}  // namespace bplab
