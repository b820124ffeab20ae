#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "ratelab/config.hpp"
#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/posterior.hpp"
#include "ratelab/report.hpp"
#include "ratelab/rng.hpp"
#include "ratelab/verify.hpp"
#include "ratelab/version.hpp"

namespace ratelab {

using nlohmann::json;

namespace {

std::string short_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string current_utc_rfc3339() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::string file_prefix(const std::string& verb) {
    std::string p = verb;
    std::replace(p.begin(), p.end(), '-', '_');
    return p;
}

struct EffectiveRun {
    ExperimentConfig config;
    unsigned n_ref;
    DecayMode mode;
    std::string mode_name;
    RunManifest manifest;
};

EffectiveRun resolve(const ExperimentConfig& base, const std::string& verb,
                     const RunOptions& options) {
    EffectiveRun run{base, 0, DecayMode::exact, "exact", {}};
    if (options.seed) run.config.master_seed = *options.seed;
    if (options.replications) run.config.replications = *options.replications;
    run.config.threads = options.threads;
    run.n_ref = options.n.value_or(verb == "verify-identity" ? 50u : base.horizon);
    if (run.n_ref < 1) raise(errc::usage, "--n must be >= 1");
    run.mode = options.mode.value_or(DecayMode::exact);
    run.mode_name = run.mode == DecayMode::exact ? "exact" : "monte-carlo";

    // The thread count is deliberately absent: scheduling must never change
    // a result, so a manifest pins everything except it.
    json opts;
    opts["n"] = run.n_ref;
    opts["replications"] = run.config.replications;
    if (verb == "verify-decay") opts["mode"] = run.mode_name;
    run.manifest.tool_version = version_string;
    run.manifest.subcommand = verb;
    run.manifest.config_checksum = config_checksum(run.config);
    run.manifest.master_seed = run.config.master_seed;
    run.manifest.timestamp = options.timestamp.value_or(current_utc_rfc3339());
    run.manifest.options_json = opts.dump();
    run.manifest.config_json = canonical_config_json(run.config);
    return run;
}

struct Body {
    std::ostringstream text;
    json summary;
    std::map<std::string, std::string> extra_files;  // name -> body (no manifest yet)
    bool passed = true;
};

Report assemble(const std::string& verb, EffectiveRun& run, Body&& body,
                const RunOptions& options) {
    const std::string prefix = file_prefix(verb);
    std::vector<std::string> outputs = {prefix + "_report.txt", prefix + "_summary.json"};
    for (const auto& [name, content] : body.extra_files) outputs.push_back(name);
    std::sort(outputs.begin(), outputs.end());
    run.manifest.outputs = outputs;

    Report report;
    report.manifest = run.manifest;
    report.passed = body.passed;
    report.text = "# ratelab " + verb + " report\n" + run.manifest.header_comment() +
                  body.text.str();

    json summary;
    summary["verb"] = verb;
    summary["passed"] = body.passed;
    summary["manifest"] = json::parse(run.manifest.to_json());
    summary["result"] = std::move(body.summary);
    report.summary_json = summary.dump(2) + "\n";

    report.files[prefix + "_report.txt"] = report.text;
    report.files[prefix + "_summary.json"] = report.summary_json;
    for (auto& [name, content] : body.extra_files)
        report.files[name] = run.manifest.header_comment() + content;

    if (!options.out_dir.empty()) {
        for (const auto& [name, content] : report.files)
            write_file_atomic(options.out_dir, name, content);
    }
    return report;
}

Body run_project(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const KLProjectionResult projection = kl_projection(c.truth, *c.family);
    Body body;
    body.text << "projection_index\t" << projection.index << "\n"
              << "projection_label\t" << c.family->label(projection.index) << "\n"
              << "kl_value\t" << short_double(projection.kl_value) << "\n"
              << "unique\t" << (projection.unique ? "true" : "false") << "\n"
              << "runner_up_gap\t" << short_double(projection.runner_up_gap) << "\n"
              << "\nindex\tlabel\tkl_nats\n";
    for (std::size_t i = 0; i < c.family->size(); ++i) {
        body.text << i << '\t' << c.family->label(i) << '\t'
                  << short_double(kl_divergence(c.truth, c.family->member(i))) << '\n';
    }
    body.summary["index"] = projection.index;
    body.summary["label"] = c.family->label(projection.index);
    body.summary["kl_value"] = projection.kl_value;
    body.summary["unique"] = projection.unique;
    body.summary["runner_up_gap"] = projection.runner_up_gap;
    body.passed = true;
    return body;
}

json cover_to_json(const Covering& cover, const ExperimentConfig& c) {
    json elements = json::array();
    for (const CoverElement& element : cover.elements) {
        json e;
        json gens = json::array();
        for (std::size_t g : element.generators) gens.push_back(c.family->label(g));
        e["generators"] = std::move(gens);
        e["generator_indices"] = element.generators;
        e["certified_threshold"] = element.threshold;
        e["achieved_sup_log_affinity"] = element.certificate.min_neg_log;
        e["optimality_gap"] = element.certificate.gap;
        e["iterations"] = element.certificate.iterations;
        elements.push_back(std::move(e));
    }
    json j;
    j["elements"] = std::move(elements);
    j["count"] = cover.count();
    j["alpha"] = cover.alpha;
    j["threshold"] = cover.threshold;
    return j;
}

void cover_text(const Covering& cover, const ExperimentConfig& c, std::ostringstream& os) {
    os << "element\tgenerators\tcertified_threshold\tachieved_sup_log_affinity\tgap\titerations\n";
    for (std::size_t e = 0; e < cover.elements.size(); ++e) {
        const CoverElement& element = cover.elements[e];
        os << e << '\t';
        for (std::size_t g = 0; g < element.generators.size(); ++g)
            os << (g ? "," : "") << c.family->label(element.generators[g]);
        os << '\t' << short_double(element.threshold) << '\t'
           << short_double(element.certificate.min_neg_log) << '\t'
           << short_double(element.certificate.gap) << '\t' << element.certificate.iterations
           << '\n';
    }
}

struct CoverSetup {
    double eps_n;
    double m_n;
    double radius;
    double threshold;
    std::vector<std::size_t> target;
};

CoverSetup cover_setup(const EffectiveRun& run, std::size_t pstar) {
    CoverSetup s;
    s.eps_n = run.config.eps.at(run.n_ref);
    s.m_n = run.config.m.at(run.n_ref);
    s.radius = s.m_n * s.eps_n;
    s.threshold = s.radius * s.radius / 4.0;
    s.target = build_target_set(*run.config.family, pstar, run.config.truth, s.radius);
    return s;
}

Body run_cover(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const std::size_t pstar = resolve_pstar(c);
    const CoverSetup setup = cover_setup(run, pstar);

    Body body;
    body.text << "n_ref\t" << run.n_ref << "\neps_n\t" << short_double(setup.eps_n) << "\nradius\t"
              << short_double(setup.radius) << "\nthreshold\t" << short_double(setup.threshold)
              << "\nalpha\t" << short_double(c.alpha) << "\ntarget_size\t" << setup.target.size()
              << "\n";
    body.summary["n_ref"] = run.n_ref;
    body.summary["eps_n"] = setup.eps_n;
    body.summary["radius"] = setup.radius;
    body.summary["threshold"] = setup.threshold;
    body.summary["target_size"] = setup.target.size();

    try {
        const Covering cover = build_cover(setup.target, *c.family, c.truth,
                                           c.family->member(pstar), c.alpha, setup.threshold);
        body.text << "cover_count\t" << cover.count() << "\n\n";
        cover_text(cover, c, body.text);
        body.summary["cover"] = cover_to_json(cover, c);
        body.passed = true;
    } catch (const Error& e) {
        if (e.code() != errc::uncoverable) throw;
        body.text << "uncoverable\t" << e.what() << "\n";
        body.summary["uncoverable"] = e.what();
        body.passed = false;
    }
    return body;
}

Body run_simulate(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const RateReport rate = run_contraction(c);

    Body body;
    body.text << "pstar_index\t" << rate.pstar_index << "\nreplications\t" << rate.replications
              << "\nmaster_seed\t" << rate.master_seed << "\nslope\t"
              << (rate.fit.defined ? short_double(rate.fit.slope) : "undefined")
              << "\ndiagnostic\t" << (rate.fit.diagnostic.empty() ? "ok" : rate.fit.diagnostic)
              << "\n\nn\teps_n\tradius\ttarget_size\tmean_mass\thalf_width\n";
    std::ostringstream series;
    series << "n\teps_n\tradius\ttarget_size\tmean_mass\thalf_width\tlo\thi\n";
    for (std::size_t g = 0; g < rate.checkpoints.size(); ++g) {
        body.text << rate.checkpoints[g] << '\t' << short_double(rate.eps_values[g]) << '\t'
                  << short_double(rate.radii[g]) << '\t' << rate.target_sizes[g] << '\t'
                  << short_double(rate.mean_mass[g]) << '\t' << short_double(rate.half_width[g])
                  << '\n';
        const double lo = std::max(0.0, rate.mean_mass[g] - rate.half_width[g]);
        const double hi = std::min(1.0, rate.mean_mass[g] + rate.half_width[g]);
        series << rate.checkpoints[g] << '\t' << format_double(rate.eps_values[g]) << '\t'
               << format_double(rate.radii[g]) << '\t' << rate.target_sizes[g] << '\t'
               << format_double(rate.mean_mass[g]) << '\t' << format_double(rate.half_width[g])
               << '\t' << format_double(lo) << '\t' << format_double(hi) << '\n';
    }
    body.extra_files["rate_series.tsv"] = series.str();

    // Snapshot of replication 0 at the horizon, for the posterior-state
    // export surface.
    {
        Rng rng(derive_seed(c.master_seed, 0));
        PosteriorState state = PosteriorState::init(c.family, c.prior, rate.pstar_index);
        for (unsigned step = 1; step <= c.horizon; ++step)
            state = state.updated(rng.sample(c.truth.probs()));
        body.extra_files["posterior_snapshot.tsv"] = state.snapshot_tsv();
    }

    body.summary["pstar_index"] = rate.pstar_index;
    body.summary["replications"] = rate.replications;
    body.summary["slope_defined"] = rate.fit.defined;
    if (rate.fit.defined) body.summary["slope"] = rate.fit.slope;
    body.summary["diagnostic"] = rate.fit.diagnostic;
    body.summary["final_mean_mass"] = rate.mean_mass.back();
    body.summary["checkpoints"] = rate.checkpoints;
    body.summary["mean_mass"] = rate.mean_mass;
    body.summary["half_width"] = rate.half_width;
    body.passed = rate.fit.defined && rate.fit.slope < 0.0;
    return body;
}

Body run_verify_identity(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const std::size_t pstar = resolve_pstar(c);
    const std::vector<std::size_t> all = all_indices(*c.family);

    struct Row {
        std::string name;
        std::size_t size;
        IdentityReport report;
    };
    std::vector<Row> rows;
    rows.push_back({"all", all.size(),
                    check_key_identity(c.family, c.prior, pstar, c.truth, all, run.n_ref, c.alpha,
                                       c.master_seed)});
    const CoverSetup setup = cover_setup(run, pstar);
    if (!setup.target.empty() && c.prior->mass(setup.target) > 0.0) {
        rows.push_back({"target", setup.target.size(),
                        check_key_identity(c.family, c.prior, pstar, c.truth, setup.target,
                                           run.n_ref, c.alpha, c.master_seed + 1)});
    }

    Body body;
    body.text << "n\t" << run.n_ref << "\nalpha\t" << short_double(c.alpha)
              << "\ntolerance\t1e-10\n\nset\tsize\tchecks\tmax_relative_error\tworst_case\n";
    json sets = json::array();
    body.passed = true;
    for (const Row& row : rows) {
        body.text << row.name << '\t' << row.size << '\t' << row.report.instances_checked << '\t'
                  << short_double(row.report.max_relative_error) << '\t'
                  << (row.report.worst_case.empty() ? "-" : row.report.worst_case) << '\n';
        json s;
        s["set"] = row.name;
        s["size"] = row.size;
        s["checks"] = row.report.instances_checked;
        s["max_relative_error"] = row.report.max_relative_error;
        s["worst_case"] = row.report.worst_case;
        sets.push_back(std::move(s));
        body.passed = body.passed && row.report.max_relative_error <= 1e-10 &&
                      row.report.instances_checked > 0;
    }
    body.summary["sets"] = std::move(sets);
    body.summary["tolerance"] = 1e-10;
    return body;
}

Body run_verify_decay(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const std::size_t pstar = resolve_pstar(c);
    const CoverSetup setup = cover_setup(run, pstar);
    const Covering cover = build_cover(setup.target, *c.family, c.truth, c.family->member(pstar),
                                       c.alpha, setup.threshold);

    unsigned n_max;
    if (run.mode == DecayMode::exact) {
        n_max = 1;
        double paths = static_cast<double>(c.family->alphabet_size());
        while (n_max < 8 && paths * static_cast<double>(c.family->alphabet_size()) <= 1e7) {
            paths *= static_cast<double>(c.family->alphabet_size());
            ++n_max;
        }
    } else {
        n_max = 100;
    }

    Body body;
    body.text << "mode\t" << run.mode_name << "\nn_max\t" << n_max << "\nalpha\t"
              << short_double(c.alpha) << "\nthreshold\t" << short_double(setup.threshold)
              << "\nelements\t" << cover.count() << "\n\n";
    body.text << "element\tgenerators\tn\tlhs\trhs\thalf_width\n";
    std::ostringstream series;
    series << "element\tn\tlhs\trhs\thalf_width\n";
    json elements = json::array();
    body.passed = true;
    for (std::size_t e = 0; e < cover.elements.size(); ++e) {
        const CoverElement& element = cover.elements[e];
        const DecayReport decay = check_supermartingale_decay(
            c.family, c.prior, pstar, c.truth, element, c.alpha, n_max, run.mode,
            c.replications, derive_seed(c.master_seed, 1000 + e), c.threads);
        for (std::size_t g = 0; g < decay.ns.size(); ++g) {
            body.text << e << '\t' << element.generators.size() << '\t' << decay.ns[g] << '\t'
                      << short_double(decay.lhs[g]) << '\t' << short_double(decay.rhs[g]) << '\t'
                      << short_double(decay.half_width[g]) << '\n';
            series << e << '\t' << decay.ns[g] << '\t' << format_double(decay.lhs[g]) << '\t'
                   << format_double(decay.rhs[g]) << '\t' << format_double(decay.half_width[g])
                   << '\n';
        }
        json ej;
        ej["element"] = e;
        ej["generator_indices"] = element.generators;
        ej["certified_rate"] = decay.certified_rate;
        ej["pointwise_ok"] = decay.pointwise_ok;
        ej["one_step_ok"] = decay.one_step_ok;
        ej["replications"] = decay.replications;
        elements.push_back(std::move(ej));
        body.passed = body.passed && decay.pointwise_ok &&
                      (run.mode != DecayMode::exact || decay.one_step_ok);
    }
    body.extra_files["decay_series.tsv"] = series.str();
    body.summary["mode"] = run.mode_name;
    body.summary["n_max"] = n_max;
    body.summary["elements"] = std::move(elements);
    return body;
}

Body run_conditions(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const std::size_t pstar = resolve_pstar(c);
    const double eps_n = c.eps.at(run.n_ref);
    const double m_n = c.m.at(run.n_ref);

    const ConditionsReport cond = check_rate_conditions(
        *c.family, *c.prior, c.truth, pstar, run.n_ref, eps_n, m_n, c.alpha, c.condition_k,
        c.condition_l);
    const PriorRatioReport ratio = check_prior_ratio_condition(*c.family, *c.prior, c.truth,
                                                               pstar, run.n_ref, eps_n,
                                                               c.shell_j_max);
    const std::vector<unsigned> grid = checkpoint_grid(c.horizon);
    const EvidenceEventReport event =
        check_evidence_event(c.family, c.prior, pstar, c.truth, eps_n, c.condition_c,
                             c.replications, grid, c.master_seed, c.threads);

    Body body;
    body.text << "n_ref\t" << run.n_ref << "\neps_n\t" << short_double(eps_n) << "\nM\t"
              << short_double(m_n) << "\nK\t" << short_double(c.condition_k) << "\nL\t"
              << short_double(c.condition_l) << "\nC\t" << short_double(c.condition_c) << "\n\n";
    body.text << "condition\tholds\tlhs_log\tbound_log\tslack\n";
    body.text << "cover_growth\t" << (cond.cover_growth_ok ? "true" : "false") << '\t'
              << short_double(cond.cover_sum_log) << '\t' << short_double(cond.cover_bound_log)
              << '\t' << short_double(cond.cover_slack) << '\n';
    body.text << "prior_mass\t" << (cond.prior_mass_ok ? "true" : "false") << '\t'
              << short_double(cond.log_neighborhood_mass) << '\t'
              << short_double(cond.mass_bound_log) << '\t' << short_double(cond.mass_slack)
              << '\n';
    body.text << "# " << cond.note << "\n\nJ\tshell_mass\tratio\tbound\tholds\n";
    for (const PriorRatioRow& row : ratio.rows) {
        body.text << row.J << '\t' << short_double(row.shell_mass) << '\t'
                  << short_double(row.ratio) << '\t' << short_double(row.bound) << '\t'
                  << (row.holds ? "true" : "false") << '\n';
    }
    body.text << "\nn\tevidence_frequency\thalf_width\n";
    for (std::size_t g = 0; g < event.n_grid.size(); ++g) {
        body.text << event.n_grid[g] << '\t' << short_double(event.frequency[g]) << '\t'
                  << short_double(event.half_width[g]) << '\n';
    }

    const double final_n_eps_sq =
        static_cast<double>(event.n_grid.back()) * eps_n * eps_n;
    const bool event_gated = final_n_eps_sq >= 50.0;
    const bool event_ok = !event_gated || event.frequency.back() >= 0.95;

    body.summary["cover_growth_ok"] = cond.cover_growth_ok;
    body.summary["cover_sum_log"] = cond.cover_sum_log;
    body.summary["cover_slack"] = cond.cover_slack;
    body.summary["cover_elements"] = cond.cover_elements;
    body.summary["prior_mass_ok"] = cond.prior_mass_ok;
    body.summary["log_neighborhood_mass"] = cond.log_neighborhood_mass;
    body.summary["mass_slack"] = cond.mass_slack;
    body.summary["note"] = cond.note;
    body.summary["prior_ratio_all_hold"] = ratio.all_hold;
    body.summary["evidence_final_frequency"] = event.frequency.back();
    body.summary["evidence_gated"] = event_gated;
    body.passed = cond.cover_growth_ok && cond.prior_mass_ok && ratio.all_hold && event_ok;
    return body;
}

Body run_shells(const EffectiveRun& run) {
    const ExperimentConfig& c = run.config;
    const ShellTable table = shell_masses(c);

    Body body;
    body.text << "pstar_index\t" << table.pstar_index << "\nreplications\t" << table.replications
              << "\nj_max\t" << c.shell_j_max << "\ncover_bound_ok\t"
              << (table.cover_bound_ok ? "true" : "false")
              << "\n\nn\tJ\tinner\touter\tsize\tmean_mass\n";
    std::ostringstream series;
    series << "n\tJ\tinner\touter\tsize\tmean_mass\n";
    for (std::size_t g = 0; g < table.checkpoints.size(); ++g) {
        for (std::size_t j = 0; j < table.shells[g].size(); ++j) {
            const ShellSpec& shell = table.shells[g][j];
            body.text << table.checkpoints[g] << '\t' << shell.J << '\t'
                      << short_double(shell.inner_radius) << '\t'
                      << short_double(shell.outer_radius) << '\t' << shell.members.size() << '\t'
                      << short_double(table.mean_shell_mass[g][j]) << '\n';
            series << table.checkpoints[g] << '\t' << shell.J << '\t'
                   << format_double(shell.inner_radius) << '\t'
                   << format_double(shell.outer_radius) << '\t' << shell.members.size() << '\t'
                   << format_double(table.mean_shell_mass[g][j]) << '\n';
        }
        body.text << table.checkpoints[g] << "\ttarget\t" << short_double(table.eps_values[g])
                  << "\t-\t-\t" << short_double(table.mean_target_mass[g]) << '\n';
    }
    body.extra_files["shell_series.tsv"] = series.str();
    body.summary["checkpoints"] = table.checkpoints;
    body.summary["mean_target_mass"] = table.mean_target_mass;
    body.summary["cover_bound_ok"] = table.cover_bound_ok;
    body.passed = table.cover_bound_ok;
    return body;
}

} // namespace

std::vector<std::string> known_verbs() {
    return {"project", "cover",      "simulate", "verify-identity",
            "verify-decay", "conditions", "shells"};
}

Report run_verb(const ExperimentConfig& config, const std::string& verb,
                const RunOptions& options) {
    config.validate();
    EffectiveRun run = resolve(config, verb, options);
    Body body;
    if (verb == "project")
        body = run_project(run);
    else if (verb == "cover")
        body = run_cover(run);
    else if (verb == "simulate")
        body = run_simulate(run);
    else if (verb == "verify-identity")
        body = run_verify_identity(run);
    else if (verb == "verify-decay")
        body = run_verify_decay(run);
    else if (verb == "conditions")
        body = run_conditions(run);
    else if (verb == "shells")
        body = run_shells(run);
    else
        raise(errc::usage, "unknown subcommand '" + verb + "'");
    return assemble(verb, run, std::move(body), options);
}

} // namespace ratelab
