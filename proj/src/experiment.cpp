#include "ratelab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/parallel.hpp"
#include "ratelab/posterior.hpp"
#include "ratelab/rng.hpp"

namespace ratelab {

double EpsSchedule::at(unsigned n) const {
    const double nd = static_cast<double>(n);
    switch (kind) {
    case EpsKind::constant: return c;
    case EpsKind::inv_sqrt: return c / std::sqrt(nd);
    case EpsKind::inv_sqrt_log: return c * std::log(nd) / std::sqrt(nd);
    }
    return c;
}

std::string EpsSchedule::name() const {
    switch (kind) {
    case EpsKind::constant: return "constant";
    case EpsKind::inv_sqrt: return "inv_sqrt";
    case EpsKind::inv_sqrt_log: return "inv_sqrt_log";
    }
    return "constant";
}

double MSchedule::at(unsigned n) const {
    switch (kind) {
    case MKind::constant: return c;
    case MKind::log_growth: return c * std::log(static_cast<double>(n));
    }
    return c;
}

std::string MSchedule::name() const {
    return kind == MKind::constant ? "constant" : "log_growth";
}

void ExperimentConfig::validate() const {
    if (!family || !prior) raise(errc::validation, "config: family and prior are required");
    if (prior->size() != family->size())
        raise(errc::validation, "prior: length does not match the family");
    if (truth.alphabet_size() != family->alphabet_size())
        raise(errc::validation, "truth: alphabet size does not match the family");
    if (!(alpha > 0.0 && alpha < 1.0)) raise(errc::validation, "alpha: must lie in (0,1)");
    if (!(eps.c > 0.0)) raise(errc::validation, "eps_schedule.c: must be positive");
    if (!(m.c > 0.0)) raise(errc::validation, "m_schedule.c: must be positive");
    if (horizon < 1) raise(errc::validation, "horizon: must be >= 1");
    if (replications < 1) raise(errc::validation, "replications: must be >= 1");
    if (shell_j_max < 1) raise(errc::validation, "shell_j_max: must be >= 1");
    if (pstar_index && *pstar_index >= family->size())
        raise(errc::validation, "pstar: index out of range");
    if (!(condition_k > 0.0)) raise(errc::validation, "conditions.K: must be positive");
    if (!(condition_l > 0.0)) raise(errc::validation, "conditions.L: must be positive");
    if (!(condition_c > 0.0)) raise(errc::validation, "conditions.C: must be positive");
}

std::vector<unsigned> checkpoint_grid(unsigned horizon) {
    std::vector<unsigned> grid;
    for (unsigned n = 1; n < horizon; n *= 2) grid.push_back(n);
    grid.push_back(horizon);
    return grid;
}

std::size_t resolve_pstar(const ExperimentConfig& config) {
    if (config.pstar_index) return *config.pstar_index;
    const KLProjectionResult projection = kl_projection(config.truth, *config.family);
    if (!projection.unique) {
        std::ostringstream os;
        os << "the KL projection is not unique (members " << projection.index
           << " and a runner-up within " << KLProjectionResult::tie_tolerance
           << " nats); a unique minimizer is assumed, pin pstar explicitly to override";
        raise(errc::projection_tie, os.str());
    }
    return projection.index;
}

RateFit fit_rate(std::span<const double> masses, std::span<const double> n_eps_sq,
                 std::span<const double> half_width) {
    if (masses.size() != n_eps_sq.size())
        raise(errc::dimension_mismatch, "fit_rate: masses and abscissae misaligned");
    RateFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (masses[i] > 0.0) {
            xs.push_back(n_eps_sq[i]);
            ys.push_back(std::log(masses[i]));
        }
    }
    if (xs.size() < 3) {
        fit.diagnostic = "fit undefined: fewer than 3 positive mass points";
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) {
        fit.diagnostic = "fit undefined: degenerate abscissa";
        return fit;
    }
    fit.defined = true;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (!(fit.slope < 0.0)) fit.diagnostic = "no-contraction: fitted slope is not negative";
    // Non-monotone rises beyond the confidence bands are worth flagging.
    if (!half_width.empty() && half_width.size() == masses.size()) {
        for (std::size_t i = 0; i + 1 < masses.size(); ++i) {
            if (masses[i + 1] - masses[i] > half_width[i] + half_width[i + 1] &&
                half_width[i] + half_width[i + 1] > 0.0) {
                if (!fit.diagnostic.empty()) fit.diagnostic += "; ";
                fit.diagnostic += "non-monotone rise at checkpoint " + std::to_string(i + 1);
                break;
            }
        }
    }
    return fit;
}

namespace {

struct CheckpointSets {
    std::vector<unsigned> grid;
    std::vector<double> eps_values;
    std::vector<double> radii;
    std::vector<std::vector<std::size_t>> targets;
};

CheckpointSets make_checkpoint_targets(const ExperimentConfig& config, std::size_t pstar) {
    CheckpointSets sets;
    sets.grid = checkpoint_grid(config.horizon);
    std::map<double, std::vector<std::size_t>> cache;
    for (unsigned n : sets.grid) {
        const double eps_n = config.eps.at(n);
        const double radius = config.m.at(n) * eps_n;
        sets.eps_values.push_back(eps_n);
        sets.radii.push_back(radius);
        auto it = cache.find(radius);
        if (it == cache.end())
            it = cache.emplace(radius,
                               build_target_set(*config.family, pstar, config.truth, radius))
                     .first;
        sets.targets.push_back(it->second);
    }
    return sets;
}

// One replication's posterior masses of each checkpoint target.
template <class PerCheckpoint>
std::vector<double> replicate_masses(const ExperimentConfig& config, std::size_t pstar,
                                     std::size_t replication, const std::vector<unsigned>& grid,
                                     PerCheckpoint&& value_at) {
    Rng rng(derive_seed(config.master_seed, replication));
    PosteriorState state =
        PosteriorState::init(config.family, config.prior, pstar);
    std::vector<double> out;
    out.reserve(grid.size());
    std::size_t gi = 0;
    for (unsigned step = 1; step <= config.horizon && gi < grid.size(); ++step) {
        state = state.updated(rng.sample(config.truth.probs()));
        while (gi < grid.size() && grid[gi] == step) {
            value_at(state, gi, out);
            ++gi;
        }
    }
    return out;
}

} // namespace

RateReport run_contraction(const ExperimentConfig& config) {
    config.validate();
    const std::size_t pstar = resolve_pstar(config);
    const CheckpointSets sets = make_checkpoint_targets(config, pstar);
    const std::size_t r_total = config.replications;

    auto one_replication = [&](std::size_t r) {
        return replicate_masses(config, pstar, r, sets.grid,
                                [&](const PosteriorState& state, std::size_t gi,
                                    std::vector<double>& out) {
                                    out.push_back(state.posterior_mass(sets.targets[gi]));
                                });
    };
    const auto rows = ordered_parallel_map(r_total, config.threads, one_replication);

    RateReport report;
    report.checkpoints = sets.grid;
    report.eps_values = sets.eps_values;
    report.radii = sets.radii;
    report.pstar_index = pstar;
    report.replications = r_total;
    report.master_seed = config.master_seed;
    report.intervals_rendered = r_total >= 50;
    for (const auto& target : sets.targets) report.target_sizes.push_back(target.size());

    std::vector<double> n_eps_sq;
    for (std::size_t g = 0; g < sets.grid.size(); ++g) {
        StableSum sum, sum_sq;
        std::vector<double> column(r_total);
        for (std::size_t r = 0; r < r_total; ++r) {
            column[r] = rows[r][g];
            sum.add(column[r]);
            sum_sq.add(column[r] * column[r]);
        }
        const double mean = sum.value() / static_cast<double>(r_total);
        const double var =
            std::max(0.0, sum_sq.value() / static_cast<double>(r_total) - mean * mean);
        report.mean_mass.push_back(mean);
        report.half_width.push_back(
            report.intervals_rendered ? z99 * std::sqrt(var / static_cast<double>(r_total))
                                      : 0.0);
        report.replication_mass.push_back(std::move(column));
        n_eps_sq.push_back(static_cast<double>(sets.grid[g]) * sets.eps_values[g] *
                           sets.eps_values[g]);
    }
    report.fit = fit_rate(report.mean_mass, n_eps_sq, report.half_width);
    return report;
}

ShellTable shell_masses(const ExperimentConfig& config) {
    config.validate();
    const std::size_t pstar = resolve_pstar(config);
    std::vector<unsigned> grid = checkpoint_grid(config.horizon);
    // Schedules with log factors give a degenerate radius at n = 1; those
    // checkpoints carry no shell geometry and are dropped.
    std::erase_if(grid, [&](unsigned n) {
        return !(config.eps.at(n) > 0.0) || !(config.m.at(n) > 0.0);
    });
    if (grid.empty()) raise(errc::domain, "shell_masses: no checkpoint has a positive radius");
    const std::size_t r_total = config.replications;

    // Shells and the target A_n are rebuilt per checkpoint: their radii move
    // with the schedules.
    std::vector<std::vector<ShellSpec>> shells;
    std::vector<std::vector<std::size_t>> targets;
    std::vector<double> eps_values;
    double max_d_sq = 0.0;
    for (std::size_t i = 0; i < config.family->size(); ++i)
        max_d_sq = std::max(max_d_sq,
                            gen_hellinger_sq(config.family->member(i),
                                             config.family->member(pstar), config.truth,
                                             config.family->member(pstar)));
    std::vector<bool> covers;
    for (unsigned n : grid) {
        const double eps_n = config.eps.at(n);
        const double m_n = config.m.at(n);
        eps_values.push_back(eps_n);
        shells.push_back(
            build_shells(*config.family, pstar, config.truth, eps_n, m_n, config.shell_j_max));
        targets.push_back(build_target_set(*config.family, pstar, config.truth, m_n * eps_n));
        const double outer = 2.0 * m_n * config.shell_j_max * eps_n;
        covers.push_back(max_d_sq < outer * outer);
    }

    auto one_replication = [&](std::size_t r) {
        return replicate_masses(
            config, pstar, r, grid,
            [&](const PosteriorState& state, std::size_t gi, std::vector<double>& out) {
                for (const ShellSpec& shell : shells[gi])
                    out.push_back(state.posterior_mass(shell.members));
                out.push_back(state.posterior_mass(targets[gi]));
            });
    };
    const auto rows = ordered_parallel_map(r_total, config.threads, one_replication);

    ShellTable table;
    table.checkpoints = grid;
    table.eps_values = eps_values;
    table.shells = shells;
    table.pstar_index = pstar;
    table.replications = r_total;
    table.cover_bound_ok = true;
    const std::size_t j_count = config.shell_j_max;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> means(j_count, 0.0);
        double target_mean = 0.0;
        for (std::size_t r = 0; r < r_total; ++r) {
            const std::size_t base = g * (j_count + 1);
            for (std::size_t j = 0; j < j_count; ++j) means[j] += rows[r][base + j];
            target_mean += rows[r][base + j_count];
        }
        for (double& v : means) v /= static_cast<double>(r_total);
        target_mean /= static_cast<double>(r_total);
        table.mean_shell_mass.push_back(means);
        table.mean_target_mass.push_back(target_mean);
        table.shells_cover_target.push_back(covers[g]);
        if (covers[g]) {
            double shell_sum = 0.0;
            for (double v : means) shell_sum += v;
            if (shell_sum + 1e-9 < target_mean) table.cover_bound_ok = false;
        }
    }
    return table;
}

} // namespace ratelab
