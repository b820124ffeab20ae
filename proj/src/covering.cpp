#include "ratelab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"

namespace ratelab {

namespace {

struct HullObjective {
    // F(w) = sum_x c_x * q_x(w)^alpha over supp(p0), q = sum_i w_i p_i.
    // Concave in w because u -> u^alpha is concave on u >= 0 for alpha in (0,1).
    std::vector<double> c;                       // p0(x) / pstar(x)^alpha
    std::vector<std::vector<double>> member_p;   // member_p[i][t], support symbols only
    double alpha;

    HullObjective(std::span<const std::size_t> generators, const ModelFamily& family,
                  const FiniteDensity& p0, const FiniteDensity& pstar, double a)
        : alpha(a) {
        for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
            if (p0[x] == 0.0) continue;
            if (pstar[x] == 0.0)
                raise(errc::domain,
                      "certify: reference density is zero inside the support of the truth");
            c.push_back(p0[x] / std::pow(pstar[x], a));
        }
        member_p.resize(generators.size());
        for (std::size_t i = 0; i < generators.size(); ++i) {
            const FiniteDensity& p = family.member(generators[i]);
            for (std::size_t x = 0; x < p0.alphabet_size(); ++x)
                if (p0[x] > 0.0) member_p[i].push_back(p[x]);
        }
    }

    std::size_t support_size() const { return c.size(); }
    std::size_t members() const { return member_p.size(); }

    void mixture(std::span<const double> w, std::vector<double>& q) const {
        q.assign(support_size(), 0.0);
        for (std::size_t i = 0; i < members(); ++i) {
            if (w[i] == 0.0) continue;
            for (std::size_t t = 0; t < q.size(); ++t) q[t] += w[i] * member_p[i][t];
        }
    }

    double value(std::span<const double> q) const {
        double f = 0.0;
        for (std::size_t t = 0; t < q.size(); ++t)
            if (q[t] > 0.0) f += c[t] * std::pow(q[t], alpha);
        return f;
    }

    void gradient(std::span<const double> q, std::vector<double>& grad) const {
        grad.assign(members(), 0.0);
        for (std::size_t t = 0; t < q.size(); ++t) {
            if (q[t] > 0.0) {
                const double gt = c[t] * alpha * std::pow(q[t], alpha - 1.0);
                for (std::size_t i = 0; i < members(); ++i) grad[i] += gt * member_p[i][t];
            } else {
                // q touches zero on the truth's support: any generator with
                // mass there has unbounded marginal gain.
                for (std::size_t i = 0; i < members(); ++i)
                    if (member_p[i][t] > 0.0) grad[i] = pos_inf;
            }
        }
    }

    // d/dgamma F(q + gamma * (p_s - p_a)); decreasing in gamma by concavity.
    double directional_derivative(std::span<const double> q, std::size_t s, std::size_t a,
                                  double gamma) const {
        double d = 0.0;
        for (std::size_t t = 0; t < q.size(); ++t) {
            const double dq = member_p[s][t] - member_p[a][t];
            if (dq == 0.0) continue;
            const double qt = q[t] + gamma * dq;
            if (qt <= 0.0) {
                if (dq > 0.0) return pos_inf;
                return neg_inf;
            }
            d += c[t] * alpha * std::pow(qt, alpha - 1.0) * dq;
        }
        return d;
    }
};

} // namespace

AffinityCertificate maximize_hull_affinity(std::span<const std::size_t> generators,
                                           const ModelFamily& family, const FiniteDensity& p0,
                                           const FiniteDensity& pstar, double alpha,
                                           const SimplexAscentOptions& options) {
    if (generators.empty()) raise(errc::domain, "maximize_hull_affinity: empty generator set");
    if (!(alpha > 0.0 && alpha < 1.0))
        raise(errc::domain, "maximize_hull_affinity: alpha must lie in (0,1)");
    const HullObjective obj(generators, family, p0, pstar, alpha);
    const std::size_t m = obj.members();

    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    std::vector<double> q, grad;
    AffinityCertificate cert;

    double gap = pos_inf;
    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        obj.mixture(w, q);
        obj.gradient(q, grad);

        std::size_t s = 0, a = m;
        double inner = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (grad[i] > grad[s]) s = i;
            if (w[i] > 0.0) {
                inner += w[i] * grad[i];
                if (a == m || grad[i] < grad[a]) a = i;
            }
        }
        gap = grad[s] - inner;
        if (!(gap > options.gap_tolerance) || s == a) {
            gap = std::max(gap, 0.0);
            break;
        }

        // Pairwise step: shift weight from the worst active vertex to the
        // best vertex, with exact (bisection) line search on the concave
        // one-dimensional slice.
        const double gamma_max = w[a];
        double gamma = gamma_max;
        if (obj.directional_derivative(q, s, a, gamma_max) < 0.0) {
            double lo = 0.0, hi = gamma_max;
            for (int b = 0; b < 100; ++b) {
                const double mid = 0.5 * (lo + hi);
                if (obj.directional_derivative(q, s, a, mid) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            gamma = 0.5 * (lo + hi);
        }
        w[a] -= gamma;
        w[s] += gamma;
        if (w[a] < 1e-18) w[a] = 0.0;
        double sum = 0.0;
        for (double wi : w) sum += wi;
        for (double& wi : w) wi /= sum;
    }

    obj.mixture(w, q);
    cert.max_affinity = obj.value(q);
    cert.min_neg_log = -std::log(cert.max_affinity);
    cert.weights.assign(w.begin(), w.end());
    cert.gap = gap;
    cert.iterations = iter;
    return cert;
}

CertifyOutcome certify_element(std::span<const std::size_t> generators, const ModelFamily& family,
                               const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                               double threshold, const SimplexAscentOptions& options) {
    if (generators.empty()) raise(errc::domain, "certify_element: empty generator set");
    if (!(alpha > 0.0 && alpha < 1.0))
        raise(errc::domain, "certify_element: alpha must lie in (0,1)");
    const double affinity_bound = std::exp(-threshold);

    // Vertices first: a violating generator is the cheapest witness.
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const double neg_log =
            alpha_log_affinity(p0, family.member(generators[i]), pstar, alpha);
        if (neg_log < threshold) {
            AffinityCertificate witness;
            witness.max_affinity = std::exp(-neg_log);
            witness.min_neg_log = neg_log;
            witness.weights.assign(generators.size(), 0.0);
            witness.weights[i] = 1.0;
            witness.gap = 0.0;
            witness.iterations = 0;
            return {CertifyOutcome::Status::refused_witness, std::move(witness), threshold};
        }
    }

    AffinityCertificate cert = maximize_hull_affinity(generators, family, p0, pstar, alpha, options);
    if (cert.max_affinity > affinity_bound)
        return {CertifyOutcome::Status::refused_witness, std::move(cert), threshold};
    if (cert.gap > options.gap_tolerance)
        return {CertifyOutcome::Status::refused_unresolved, std::move(cert), threshold};
    return {CertifyOutcome::Status::certified, std::move(cert), threshold};
}

std::vector<std::size_t> build_target_set(const ModelFamily& family, std::size_t pstar_index,
                                          const FiniteDensity& p0, double threshold_distance) {
    if (pstar_index >= family.size())
        raise(errc::dimension_mismatch, "build_target_set: pstar index out of range");
    if (!(threshold_distance >= 0.0))
        raise(errc::domain, "build_target_set: threshold distance must be >= 0");
    const FiniteDensity& pstar = family.member(pstar_index);
    const double threshold_sq = threshold_distance * threshold_distance;
    std::vector<std::size_t> target;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (gen_hellinger_sq(family.member(i), pstar, p0, pstar) >= threshold_sq)
            target.push_back(i);
    }
    return target;
}

Covering build_cover(std::span<const std::size_t> target, const ModelFamily& family,
                     const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                     double threshold, const SimplexAscentOptions& options) {
    Covering cover;
    cover.target.assign(target.begin(), target.end());
    cover.alpha = alpha;
    cover.threshold = threshold;
    if (target.empty()) return cover;

    // Feasibility gate: every target must stand alone, else no cover exists
    // at this threshold.
    for (std::size_t idx : target) {
        const std::size_t one[] = {idx};
        const CertifyOutcome outcome =
            certify_element(one, family, p0, pstar, alpha, threshold, options);
        if (!outcome.certified()) {
            std::ostringstream os;
            os << "build_cover: target index " << idx << " is uncoverable: -log affinity "
               << outcome.certificate.min_neg_log << " below threshold " << threshold;
            raise(errc::uncoverable, os.str());
        }
    }

    auto dist_sq_to = [&](std::size_t i, const FiniteDensity& ref) {
        return gen_hellinger_sq(family.member(i), ref, p0, pstar);
    };

    std::vector<std::size_t> pending(target.begin(), target.end());
    std::sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
        const double da = dist_sq_to(a, pstar), db = dist_sq_to(b, pstar);
        return da != db ? da < db : a < b;
    });

    while (!pending.empty()) {
        const std::size_t seed = pending.front();
        pending.erase(pending.begin());

        std::vector<std::size_t> generators = {seed};
        CertifyOutcome last = certify_element(generators, family, p0, pstar, alpha, threshold,
                                              options);

        std::vector<std::size_t> candidates = pending;
        std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
            const double da = dist_sq_to(a, family.member(seed));
            const double db = dist_sq_to(b, family.member(seed));
            return da != db ? da < db : a < b;
        });
        for (std::size_t candidate : candidates) {
            std::vector<std::size_t> grown = generators;
            grown.push_back(candidate);
            CertifyOutcome outcome =
                certify_element(grown, family, p0, pstar, alpha, threshold, options);
            if (!outcome.certified()) break;
            generators = std::move(grown);
            last = std::move(outcome);
            pending.erase(std::find(pending.begin(), pending.end(), candidate));
        }

        CoverElement element;
        element.generators = std::move(generators);
        element.alpha = alpha;
        element.threshold = threshold;
        element.certificate = std::move(last.certificate);
        cover.elements.push_back(std::move(element));
    }
    return cover;
}

std::size_t covering_number_exact(std::span<const std::size_t> target, const ModelFamily& family,
                                  const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                                  double threshold, std::size_t max_size,
                                  const SimplexAscentOptions& options) {
    const std::size_t n = target.size();
    if (n == 0) return 0;
    if (n > max_size || max_size > 20) {
        std::ostringstream os;
        os << "covering_number_exact: " << n << " targets exceed the exhaustive limit of "
           << max_size << "; use build_cover for an upper bound";
        raise(errc::size_limit, os.str());
    }

    const std::size_t full = (std::size_t{1} << n) - 1;
    // tri-state memo: -1 unknown, 0 infeasible, 1 certifiable
    std::vector<signed char> feasible(full + 1, -1);
    auto certifiable = [&](std::size_t mask) -> bool {
        signed char& memo = feasible[mask];
        if (memo >= 0) return memo == 1;
        std::vector<std::size_t> subset;
        for (std::size_t b = 0; b < n; ++b)
            if (mask & (std::size_t{1} << b)) subset.push_back(target[b]);
        const bool ok =
            certify_element(subset, family, p0, pstar, alpha, threshold, options).certified();
        memo = ok ? 1 : 0;
        return ok;
    };

    for (std::size_t b = 0; b < n; ++b) {
        if (!certifiable(std::size_t{1} << b)) {
            std::ostringstream os;
            os << "covering_number_exact: target index " << target[b]
               << " is uncoverable at threshold " << threshold;
            raise(errc::uncoverable, os.str());
        }
    }

    // Any subset of a certifiable hull is certifiable, so the minimum cover
    // may be taken as a partition: classic submask DP over the lowest bit.
    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best(full + 1, unset);
    best[0] = 0;
    for (std::size_t mask = 1; mask <= full; ++mask) {
        const std::size_t low = mask & (~mask + 1);
        for (std::size_t sub = mask; sub != 0; sub = (sub - 1) & mask) {
            if (!(sub & low)) continue;
            if (best[mask ^ sub] == unset || best[mask ^ sub] + 1 >= best[mask]) continue;
            if (certifiable(sub)) best[mask] = best[mask ^ sub] + 1;
        }
    }
    return best[full];
}

std::vector<ShellSpec> build_shells(const ModelFamily& family, std::size_t pstar_index,
                                    const FiniteDensity& p0, double eps_n, double m_n,
                                    unsigned j_max) {
    if (pstar_index >= family.size())
        raise(errc::dimension_mismatch, "build_shells: pstar index out of range");
    if (!(eps_n > 0.0) || !(m_n > 0.0))
        raise(errc::domain, "build_shells: eps_n and m_n must be positive");
    if (j_max < 1) raise(errc::domain, "build_shells: j_max must be >= 1");

    const FiniteDensity& pstar = family.member(pstar_index);
    std::vector<double> dist_sq(family.size());
    for (std::size_t i = 0; i < family.size(); ++i)
        dist_sq[i] = gen_hellinger_sq(family.member(i), pstar, p0, pstar);

    std::vector<ShellSpec> shells;
    shells.reserve(j_max);
    for (unsigned j = 1; j <= j_max; ++j) {
        ShellSpec shell;
        shell.J = j;
        shell.inner_radius = m_n * j * eps_n;
        shell.outer_radius = 2.0 * m_n * j * eps_n;
        const double lo = shell.inner_radius * shell.inner_radius;
        const double hi = shell.outer_radius * shell.outer_radius;
        for (std::size_t i = 0; i < family.size(); ++i)
            if (dist_sq[i] >= lo && dist_sq[i] < hi) shell.members.push_back(i);
        shells.push_back(std::move(shell));
    }
    return shells;
}

} // namespace ratelab
