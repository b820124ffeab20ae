#include "ratelab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"
#include "ratelab/parallel.hpp"
#include "ratelab/rng.hpp"

namespace ratelab {

namespace {

double require_positive_set_mass(const PosteriorState& state,
                                 std::span<const std::size_t> set, const char* where) {
    const double log_mass = state.restricted_log_integral(set).log_value;
    if (log_mass == neg_inf) {
        std::ostringstream os;
        os << where << ": the conditioning set has zero prior integral";
        raise(errc::null_conditioning, os.str());
    }
    return log_mass;
}

std::vector<unsigned> geometric_grid(unsigned n_max) {
    std::vector<unsigned> grid;
    for (unsigned n = 1; n < n_max; n *= 2) grid.push_back(n);
    grid.push_back(n_max);
    return grid;
}

} // namespace

IdentityReport check_key_identity(std::shared_ptr<const ModelFamily> family,
                                  std::shared_ptr<const Prior> prior, std::size_t pstar_index,
                                  const FiniteDensity& truth, std::span<const std::size_t> set,
                                  std::size_t n, double alpha, std::uint64_t seed) {
    if (family->alphabet_size() != truth.alphabet_size())
        raise(errc::dimension_mismatch, "check_key_identity: truth alphabet differs from family");
    if (!(alpha > 0.0 && alpha <= 1.0))
        raise(errc::domain, "check_key_identity: alpha must lie in (0,1]");
    PosteriorState state = PosteriorState::init(family, prior, pstar_index);
    require_positive_set_mass(state, set, "check_key_identity");

    const FiniteDensity& pstar = family->member(pstar_index);
    const std::size_t k = truth.alphabet_size();
    Rng rng(seed);

    IdentityReport report;
    auto record = [&report](double err, std::size_t step, const char* form) {
        ++report.instances_checked;
        if (err > report.max_relative_error) {
            report.max_relative_error = err;
            report.worst_case = std::string(form) + " at step " + std::to_string(step);
        }
    };

    for (std::size_t step = 0; step < n; ++step) {
        const double log_l_k = state.restricted_log_integral(set).log_value;
        const FiniteDensity predictive = state.predictive_density(set);

        // Conditional alpha-power form, next symbol enumerated exactly:
        //   sum_x p0(x) (int_A R_{k+1}^{(x)} dPi)^alpha
        //     = (int_A R_k dPi)^alpha * E0(p_kA/pstar)^alpha
        double lhs = 0.0, rhs_affinity = 0.0;
        std::vector<double> log_l_next(k, neg_inf);
        for (std::size_t x = 0; x < k; ++x) {
            if (pstar[x] == 0.0) {
                if (truth[x] > 0.0)
                    raise(errc::domain,
                          "check_key_identity: reference density is zero at a symbol the "
                          "truth can emit");
                continue;
            }
            const PosteriorState next = state.updated(x);
            log_l_next[x] = next.restricted_log_integral(set).log_value;
            if (truth[x] == 0.0) continue;
            lhs += truth[x] * std::exp(alpha * (log_l_next[x] - log_l_k));
            rhs_affinity +=
                truth[x] * std::pow(predictive[x] / pstar[x], alpha);
        }
        record(relative_error(lhs, rhs_affinity), step, "conditional");

        // One-step multiplicative form along the sampled path.
        const std::size_t x_next = rng.sample(truth.probs());
        const double log_predictive =
            predictive[x_next] > 0.0 ? std::log(predictive[x_next]) : neg_inf;
        const double expected = log_predictive - pstar.log_prob(x_next) + log_l_k;
        if (log_l_next[x_next] == neg_inf && expected == neg_inf)
            record(0.0, step, "multiplicative");  // both sides exactly zero
        else
            record(relative_error(std::exp(log_l_next[x_next] - expected), 1.0), step,
                   "multiplicative");

        state = state.updated(x_next);
    }
    return report;
}

double exact_power_expectation(const ModelFamily& family, const Prior& prior,
                               std::size_t pstar_index, const FiniteDensity& truth,
                               std::span<const std::size_t> set, double alpha, unsigned n,
                               unsigned threads) {
    if (family.alphabet_size() != truth.alphabet_size())
        raise(errc::dimension_mismatch, "exact_power_expectation: truth alphabet differs");
    if (pstar_index >= family.size())
        raise(errc::dimension_mismatch, "exact_power_expectation: pstar index out of range");
    if (!(alpha > 0.0 && alpha <= 1.0))
        raise(errc::domain, "exact_power_expectation: alpha must lie in (0,1]");
    const std::size_t k = family.alphabet_size();
    double paths = 1.0;
    for (unsigned i = 0; i < n; ++i) {
        paths *= static_cast<double>(k);
        if (paths > 1e7)
            raise(errc::size_limit,
                  "exact_power_expectation: alphabet_size^n exceeds 1e7 states; "
                  "switch to Monte Carlo mode");
    }

    for (std::size_t x = 0; x < k; ++x)
        if (truth[x] > 0.0 && family.member(pstar_index)[x] == 0.0)
            raise(errc::domain,
                  "exact_power_expectation: reference density is zero at a symbol the truth "
                  "can emit");

    const std::size_t m = set.size();
    std::vector<double> log_w(m), log_ratio_table(m * k);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = set[j];
        log_w[j] = prior.log_weight(i);
        for (std::size_t x = 0; x < k; ++x) {
            const double lp = family.member(i).log_prob(x);
            const double ls = family.member(pstar_index).log_prob(x);
            // a +inf slot can only sit under truth[x] == 0 after the guard
            // above, and those subtrees are never entered
            log_ratio_table[j * k + x] =
                lp == neg_inf ? neg_inf : (ls == neg_inf ? pos_inf : lp - ls);
        }
    }

    if (n == 0) {
        double w = 0.0;
        for (std::size_t j = 0; j < m; ++j) w += prior.weight(set[j]);
        return std::pow(w, alpha);
    }

    // Split the sequence space by a fixed-depth prefix; each chunk is summed
    // serially and chunks are combined in prefix order, so the result is
    // identical for every thread count.
    unsigned prefix_depth = 0;
    std::size_t chunk_count = 1;
    while (prefix_depth < n && chunk_count * k <= 256) {
        chunk_count *= k;
        ++prefix_depth;
    }
    const unsigned suffix_len = n - prefix_depth;

    auto chunk_sum = [&](std::size_t chunk) -> double {
        std::vector<double> lr(m, 0.0);
        double log_prob_prefix = 0.0;
        std::size_t c = chunk;
        for (unsigned d = 0; d < prefix_depth; ++d) {
            const std::size_t x = c % k;
            c /= k;
            const double px = truth[x];
            if (px == 0.0) return 0.0;  // prefix impossible under the truth
            log_prob_prefix += std::log(px);
            for (std::size_t j = 0; j < m; ++j) {
                const double t = log_ratio_table[j * k + x];
                if (lr[j] != neg_inf) lr[j] = t == neg_inf ? neg_inf : lr[j] + t;
            }
        }

        StableSum acc;
        std::vector<double> terms(m);
        std::vector<std::size_t> suffix(suffix_len, 0);
        auto leaf = [&](const std::vector<double>& ratios, double log_prob) {
            for (std::size_t j = 0; j < m; ++j)
                terms[j] = ratios[j] == neg_inf ? neg_inf : log_w[j] + ratios[j];
            const double log_integral = log_sum_exp(terms);
            if (log_integral == neg_inf) return;
            acc.add(std::exp(log_prob + alpha * log_integral));
        };

        // Depth-first over suffixes in lexicographic order.
        std::vector<std::vector<double>> lr_stack(suffix_len + 1, std::vector<double>(m));
        std::vector<double> lp_stack(suffix_len + 1, 0.0);
        lr_stack[0] = lr;
        lp_stack[0] = log_prob_prefix;
        std::size_t depth = 0;
        while (true) {
            if (depth == suffix_len) {
                leaf(lr_stack[depth], lp_stack[depth]);
                if (depth == 0) break;
                --depth;
                ++suffix[depth];
            } else if (suffix[depth] >= k) {
                suffix[depth] = 0;
                if (depth == 0) break;
                --depth;
                ++suffix[depth];
            } else {
                const std::size_t x = suffix[depth];
                const double px = truth[x];
                if (px == 0.0) {
                    ++suffix[depth];
                    continue;
                }
                lp_stack[depth + 1] = lp_stack[depth] + std::log(px);
                for (std::size_t j = 0; j < m; ++j) {
                    const double t = log_ratio_table[j * k + x];
                    lr_stack[depth + 1][j] =
                        lr_stack[depth][j] == neg_inf || t == neg_inf ? neg_inf
                                                                      : lr_stack[depth][j] + t;
                }
                ++depth;
            }
        }
        return acc.value();
    };

    const std::vector<double> partials = ordered_parallel_map(chunk_count, threads, chunk_sum);
    StableSum total;
    for (double p : partials) total.add(p);
    return total.value();
}

DecayReport check_supermartingale_decay(std::shared_ptr<const ModelFamily> family,
                                        std::shared_ptr<const Prior> prior,
                                        std::size_t pstar_index, const FiniteDensity& truth,
                                        const CoverElement& element, double alpha, unsigned n_max,
                                        DecayMode mode, std::size_t replications,
                                        std::uint64_t seed, unsigned threads) {
    // A certificate that does not hold up makes the bound meaningless.
    const AffinityCertificate& cert = element.certificate;
    if (element.generators.empty() || cert.weights.size() != element.generators.size() ||
        cert.gap > 1e-9 || cert.max_affinity > std::exp(-element.threshold) ||
        !(element.threshold > 0.0))
        raise(errc::unresolved,
              "check_supermartingale_decay: element carries no valid certificate");
    if (n_max < 1) raise(errc::domain, "check_supermartingale_decay: n_max must be >= 1");

    const double t = element.threshold;
    const std::vector<std::size_t>& set = element.generators;
    double prior_mass = 0.0;
    for (std::size_t i : set) prior_mass += prior->weight(i);
    if (prior_mass <= 0.0)
        raise(errc::null_conditioning, "check_supermartingale_decay: element has zero prior mass");

    DecayReport report;
    report.n_max = n_max;
    report.alpha = alpha;
    report.certified_rate = t;
    report.mode = mode;
    report.log_prior_mass = std::log(prior_mass);

    if (mode == DecayMode::exact) {
        report.replications = 0;
        double prev = std::pow(prior_mass, alpha);
        report.one_step_ok = true;
        report.pointwise_ok = true;
        for (unsigned n = 1; n <= n_max; ++n) {
            const double lhs =
                exact_power_expectation(*family, *prior, pstar_index, truth, set, alpha, n,
                                        threads);
            const double rhs = std::exp(-static_cast<double>(n) * t) * std::pow(prior_mass, alpha);
            report.ns.push_back(n);
            report.lhs.push_back(lhs);
            report.rhs.push_back(rhs);
            report.half_width.push_back(0.0);
            if (lhs > rhs * (1.0 + 1e-9)) report.pointwise_ok = false;
            if (lhs > prev * std::exp(-t) * (1.0 + 1e-9)) report.one_step_ok = false;
            prev = lhs;
        }
        return report;
    }

    // Monte Carlo: per-replication derived seeds, aggregated in replication
    // order, so concurrent and serial runs agree bitwise.
    if (replications < 2)
        raise(errc::domain, "check_supermartingale_decay: Monte Carlo needs >= 2 replications");
    report.replications = replications;
    const std::vector<unsigned> grid = geometric_grid(n_max);
    const std::size_t m = set.size();
    const std::size_t k = family->alphabet_size();

    std::vector<double> log_w(m), log_ratio_table(m * k);
    for (std::size_t j = 0; j < m; ++j) {
        log_w[j] = prior->log_weight(set[j]);
        for (std::size_t x = 0; x < k; ++x) {
            const double lp = family->member(set[j]).log_prob(x);
            const double ls = family->member(pstar_index).log_prob(x);
            if (truth[x] > 0.0 && ls == neg_inf)
                raise(errc::domain, "check_supermartingale_decay: reference cannot serve truth");
            log_ratio_table[j * k + x] = lp == neg_inf ? neg_inf : lp - ls;
        }
    }

    auto one_replication = [&](std::size_t r) -> std::vector<double> {
        Rng rng(derive_seed(seed, r));
        std::vector<double> lr(m, 0.0), terms(m), values;
        values.reserve(grid.size());
        std::size_t gi = 0;
        for (unsigned step = 1; step <= n_max; ++step) {
            const std::size_t x = rng.sample(truth.probs());
            for (std::size_t j = 0; j < m; ++j) {
                const double tbl = log_ratio_table[j * k + x];
                if (lr[j] != neg_inf) lr[j] = tbl == neg_inf ? neg_inf : lr[j] + tbl;
            }
            if (gi < grid.size() && step == grid[gi]) {
                for (std::size_t j = 0; j < m; ++j)
                    terms[j] = lr[j] == neg_inf ? neg_inf : log_w[j] + lr[j];
                const double log_l = log_sum_exp(terms);
                values.push_back(log_l == neg_inf ? 0.0 : std::exp(alpha * log_l));
                ++gi;
            }
        }
        return values;
    };

    const auto rows = ordered_parallel_map(replications, threads, one_replication);
    report.pointwise_ok = true;
    report.one_step_ok = true;  // one-step contraction is an exact-mode check
    for (std::size_t g = 0; g < grid.size(); ++g) {
        StableSum sum, sum_sq;
        for (const auto& row : rows) {
            sum.add(row[g]);
            sum_sq.add(row[g] * row[g]);
        }
        const double mean = sum.value() / static_cast<double>(replications);
        const double var =
            std::max(0.0, sum_sq.value() / static_cast<double>(replications) - mean * mean);
        const double half = z99 * std::sqrt(var / static_cast<double>(replications));
        const double rhs =
            std::exp(-static_cast<double>(grid[g]) * t) * std::pow(prior_mass, alpha);
        report.ns.push_back(grid[g]);
        report.lhs.push_back(mean);
        report.rhs.push_back(rhs);
        report.half_width.push_back(half);
        if (mean > rhs + half) report.pointwise_ok = false;
    }
    return report;
}

EvidenceEventReport check_evidence_event(std::shared_ptr<const ModelFamily> family,
                                         std::shared_ptr<const Prior> prior,
                                         std::size_t pstar_index, const FiniteDensity& truth,
                                         double eps, double c, std::size_t replications,
                                         std::span<const unsigned> n_grid, std::uint64_t seed,
                                         unsigned threads) {
    if (replications < 1) raise(errc::domain, "check_evidence_event: needs >= 1 replication");
    if (n_grid.empty()) raise(errc::domain, "check_evidence_event: empty n grid");
    const double mass =
        kl_neighborhood_mass(*family, *prior, truth, family->member(pstar_index), eps);
    if (mass <= 0.0)
        raise(errc::domain,
              "check_evidence_event: the KL neighborhood has zero prior mass; enlarge eps or "
              "adjust the prior");
    const double log_mass = std::log(mass);
    const unsigned n_max = *std::max_element(n_grid.begin(), n_grid.end());

    auto one_replication = [&](std::size_t r) -> std::vector<char> {
        Rng rng(derive_seed(seed, r));
        PosteriorState state = PosteriorState::init(family, prior, pstar_index);
        std::vector<char> hits;
        hits.reserve(n_grid.size());
        std::size_t gi = 0;
        std::vector<unsigned> sorted(n_grid.begin(), n_grid.end());
        for (unsigned step = 1; step <= n_max && gi < sorted.size(); ++step) {
            state = state.updated(rng.sample(truth.probs()));
            while (gi < sorted.size() && sorted[gi] == step) {
                const double bound =
                    log_mass - static_cast<double>(step) * eps * eps * (1.0 + c);
                hits.push_back(state.log_evidence() >= bound ? 1 : 0);
                ++gi;
            }
        }
        return hits;
    };

    const auto rows = ordered_parallel_map(replications, threads, one_replication);
    EvidenceEventReport report;
    report.eps = eps;
    report.c = c;
    report.log_neighborhood_mass = log_mass;
    report.replications = replications;
    report.n_grid.assign(n_grid.begin(), n_grid.end());
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        std::size_t count = 0;
        for (const auto& row : rows) count += row[g];
        const double f = static_cast<double>(count) / static_cast<double>(replications);
        report.frequency.push_back(f);
        report.half_width.push_back(
            z99 * std::sqrt(f * (1.0 - f) / static_cast<double>(replications)));
    }
    return report;
}

PriorRatioReport check_prior_ratio_condition(const ModelFamily& family, const Prior& prior,
                                             const FiniteDensity& truth, std::size_t pstar_index,
                                             unsigned n, double eps_n, unsigned j_max) {
    const double mass =
        kl_neighborhood_mass(family, prior, truth, family.member(pstar_index), eps_n);
    if (mass <= 0.0)
        raise(errc::domain,
              "check_prior_ratio_condition: the KL neighborhood has zero prior mass; enlarge "
              "eps or adjust the prior");
    PriorRatioReport report;
    report.n = n;
    report.eps_n = eps_n;
    report.log_neighborhood_mass = std::log(mass);
    report.all_hold = true;
    const auto shells = build_shells(family, pstar_index, truth, eps_n, 1.0, j_max);
    for (const ShellSpec& shell : shells) {
        PriorRatioRow row;
        row.J = shell.J;
        row.shell_mass = prior.mass(shell.members);
        row.ratio = row.shell_mass / mass;
        row.bound = std::exp(static_cast<double>(n) * eps_n * eps_n *
                             static_cast<double>(shell.J) * static_cast<double>(shell.J) / 8.0);
        row.holds = row.ratio <= row.bound;
        report.all_hold = report.all_hold && row.holds;
        report.rows.push_back(row);
    }
    return report;
}

ConditionsReport check_rate_conditions(const ModelFamily& family, const Prior& prior,
                                           const FiniteDensity& truth, std::size_t pstar_index,
                                           unsigned n, double eps_n, double m, double alpha,
                                           double k_const, double l_const) {
    ConditionsReport report;
    report.n = n;
    report.eps_n = eps_n;
    report.m = m;
    report.alpha = alpha;
    const double n_eps_sq = static_cast<double>(n) * eps_n * eps_n;

    const FiniteDensity& pstar = family.member(pstar_index);
    const double radius = m * eps_n;
    const auto target = build_target_set(family, pstar_index, truth, radius);
    const Covering cover =
        build_cover(target, family, truth, pstar, alpha, radius * radius / 4.0);
    report.cover_elements = cover.count();

    double sum = 0.0;
    for (const CoverElement& element : cover.elements) {
        double w = 0.0;
        for (std::size_t i : element.generators) w += prior.weight(i);
        sum += std::pow(w, alpha);
    }
    report.cover_sum_log = sum > 0.0 ? std::log(sum) : neg_inf;
    report.cover_bound_log = n_eps_sq * k_const;
    report.cover_slack = report.cover_bound_log - report.cover_sum_log;
    report.cover_growth_ok = report.cover_sum_log <= report.cover_bound_log;

    const double mass = kl_neighborhood_mass(family, prior, truth, pstar, eps_n);
    report.log_neighborhood_mass = mass > 0.0 ? std::log(mass) : neg_inf;
    report.mass_bound_log = -l_const * n_eps_sq;
    report.mass_slack = report.log_neighborhood_mass - report.mass_bound_log;
    report.prior_mass_ok = report.log_neighborhood_mass >= report.mass_bound_log;

    report.note =
        "covering-growth condition evaluated on the n*eps_n^2 exponent scale; "
        "K summarizes the allowed growth of sum_j Pi(A_nj)^alpha";
    return report;
}

} // namespace ratelab
