#include "ratelab/model_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"

namespace ratelab {

namespace {

void check_same_alphabet(const FiniteDensity& a, const FiniteDensity& b, const char* where) {
    if (a.alphabet_size() != b.alphabet_size()) {
        std::ostringstream os;
        os << where << ": alphabet sizes differ (" << a.alphabet_size() << " vs "
           << b.alphabet_size() << ")";
        raise(errc::dimension_mismatch, os.str());
    }
}

// pstar must dominate p0 wherever the weight p0/pstar is consumed.
void check_reference_dominates(const FiniteDensity& p0, const FiniteDensity& pstar,
                               const char* where) {
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] > 0.0 && pstar[x] == 0.0) {
            std::ostringstream os;
            os << where << ": reference density is zero at symbol " << x
               << " inside the support of the truth";
            raise(errc::domain, os.str());
        }
    }
}

} // namespace

FiniteDensity FiniteDensity::from_probs(std::vector<double> probs) {
    if (probs.empty()) raise(errc::validation, "density: empty probability vector");
    double sum = 0.0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        const double p = probs[x];
        if (!(p >= 0.0) || !std::isfinite(p)) {
            std::ostringstream os;
            os << "density: entry " << x << " is " << p << ", expected a finite value >= 0";
            raise(errc::validation, os.str());
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > sum_tolerance) {
        std::ostringstream os;
        os << "density: entries sum to " << sum << ", expected 1 within " << sum_tolerance;
        raise(errc::validation, os.str());
    }
    return FiniteDensity(std::move(probs));
}

FiniteDensity FiniteDensity::bernoulli(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0))
        raise(errc::validation, "bernoulli: parameter outside [0,1]");
    return FiniteDensity({1.0 - theta, theta});
}

double FiniteDensity::log_prob(std::size_t x) const {
    const double p = probs_[x];
    return p > 0.0 ? std::log(p) : neg_inf;
}

ModelFamily ModelFamily::from_members(std::vector<FiniteDensity> members,
                                      std::vector<std::string> labels) {
    if (members.empty()) raise(errc::validation, "family: needs at least one member");
    const std::size_t k = members.front().alphabet_size();
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (members[i].alphabet_size() != k) {
            std::ostringstream os;
            os << "family: member " << i << " has alphabet size " << members[i].alphabet_size()
               << ", expected " << k;
            raise(errc::dimension_mismatch, os.str());
        }
    }
    if (labels.empty()) {
        labels.reserve(members.size());
        for (std::size_t i = 0; i < members.size(); ++i)
            labels.push_back("member_" + std::to_string(i));
    } else if (labels.size() != members.size()) {
        raise(errc::dimension_mismatch, "family: labels misaligned with members");
    }
    return ModelFamily(std::move(members), std::move(labels));
}

Prior Prior::uniform(std::size_t n) {
    if (n == 0) raise(errc::validation, "prior: empty support");
    return Prior(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Prior Prior::from_weights(std::vector<double> weights) {
    if (weights.empty()) raise(errc::validation, "prior: empty weight vector");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            std::ostringstream os;
            os << "prior: weight " << i << " is " << weights[i] << ", expected >= 0";
            raise(errc::validation, os.str());
        }
        sum += weights[i];
    }
    if (std::abs(sum - 1.0) > FiniteDensity::sum_tolerance) {
        std::ostringstream os;
        os << "prior: weights sum to " << sum << ", expected 1 within "
           << FiniteDensity::sum_tolerance;
        raise(errc::validation, os.str());
    }
    return Prior(std::move(weights));
}

double Prior::log_weight(std::size_t i) const {
    const double w = weights_[i];
    return w > 0.0 ? std::log(w) : neg_inf;
}

double Prior::mass(std::span<const std::size_t> indices) const {
    double s = 0.0;
    for (std::size_t i : indices) s += weights_.at(i);
    return s;
}

double kl_divergence(const FiniteDensity& p0, const FiniteDensity& p) {
    check_same_alphabet(p0, p, "kl_divergence");
    double sum = 0.0;
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] == 0.0) continue;  // 0 * log(0/q) = 0
        if (p[x] == 0.0) return pos_inf;
        sum += p0[x] * (std::log(p0[x]) - std::log(p[x]));
    }
    return std::max(sum, 0.0);
}

double alpha_log_affinity(const FiniteDensity& p0, const FiniteDensity& p,
                          const FiniteDensity& pstar, double alpha) {
    check_same_alphabet(p0, p, "alpha_log_affinity");
    check_same_alphabet(p0, pstar, "alpha_log_affinity");
    if (!(alpha > 0.0 && alpha < 1.0))
        raise(errc::domain, "alpha_log_affinity: alpha must lie in (0,1)");
    check_reference_dominates(p0, pstar, "alpha_log_affinity");
    double sum = 0.0;
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] == 0.0) continue;
        sum += p0[x] * std::pow(p[x] / pstar[x], alpha);
    }
    return sum > 0.0 ? -std::log(sum) : pos_inf;
}

SupAffinityResult sup_alpha_log_affinity(const FiniteDensity& p0, const FiniteDensity& p,
                                         const FiniteDensity& pstar) {
    check_same_alphabet(p0, p, "sup_alpha_log_affinity");
    check_same_alphabet(p0, pstar, "sup_alpha_log_affinity");
    check_reference_dominates(p0, pstar, "sup_alpha_log_affinity");

    // log E0 (p/pstar)^alpha is convex in alpha; minimize it on the open
    // interval, staying a hair inside the endpoints.
    std::vector<double> log_p0, t;
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] == 0.0) continue;
        log_p0.push_back(std::log(p0[x]));
        t.push_back(p[x] > 0.0 ? std::log(p[x]) - std::log(pstar[x]) : neg_inf);
    }
    std::vector<double> terms(log_p0.size());
    auto objective = [&](double alpha) {
        for (std::size_t i = 0; i < terms.size(); ++i)
            terms[i] = t[i] == neg_inf ? neg_inf : log_p0[i] + alpha * t[i];
        return log_sum_exp(terms);
    };
    constexpr double margin = 1e-12;
    auto [alpha_star, min_log] = golden_minimize(objective, margin, 1.0 - margin, 1e-12);
    return {alpha_star, -min_log};
}

double gen_hellinger_sq(const FiniteDensity& p1, const FiniteDensity& p2,
                        const FiniteDensity& p0, const FiniteDensity& pstar) {
    check_same_alphabet(p1, p2, "gen_hellinger_sq");
    check_same_alphabet(p1, p0, "gen_hellinger_sq");
    check_same_alphabet(p1, pstar, "gen_hellinger_sq");
    check_reference_dominates(p0, pstar, "gen_hellinger_sq");
    double sum = 0.0;
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] == 0.0) continue;  // weight vanishes, the term with it
        const double diff = std::sqrt(p1[x]) - std::sqrt(p2[x]);
        sum += diff * diff * (p0[x] / pstar[x]);
    }
    return 0.5 * sum;
}

KLProjectionResult kl_projection(const FiniteDensity& p0, const ModelFamily& family) {
    double best = pos_inf, second = pos_inf;
    std::size_t best_index = family.size();
    for (std::size_t i = 0; i < family.size(); ++i) {
        const double kl = kl_divergence(p0, family.member(i));
        if (kl < best) {
            second = best;
            best = kl;
            best_index = i;
        } else if (kl < second) {
            second = kl;
        }
    }
    if (best == pos_inf)
        raise(errc::no_projection, "kl_projection: every member at infinite divergence");
    const bool unique = !(second - best <= KLProjectionResult::tie_tolerance);
    return {best_index, best, unique, second - best};
}

LogRatioMoments log_ratio_moments(const FiniteDensity& p0, const FiniteDensity& p,
                                  const FiniteDensity& pstar) {
    check_same_alphabet(p0, p, "log_ratio_moments");
    check_same_alphabet(p0, pstar, "log_ratio_moments");
    check_reference_dominates(p0, pstar, "log_ratio_moments");
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t x = 0; x < p0.alphabet_size(); ++x) {
        if (p0[x] == 0.0) continue;
        if (p[x] == 0.0) return {neg_inf, pos_inf, false};
        const double t = std::log(p[x]) - std::log(pstar[x]);
        m1 += p0[x] * t;
        m2 += p0[x] * t * t;
    }
    return {m1, m2, true};
}

std::vector<std::size_t> kl_neighborhood_indices(const ModelFamily& family,
                                                 const FiniteDensity& p0,
                                                 const FiniteDensity& pstar, double eps) {
    if (!(eps > 0.0)) raise(errc::domain, "kl_neighborhood: eps must be positive");
    const double eps_sq = eps * eps;
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < family.size(); ++i) {
        const LogRatioMoments m = log_ratio_moments(p0, family.member(i), pstar);
        if (!m.finite) continue;
        if (-m.m1 <= eps_sq && m.m2 <= eps_sq) inside.push_back(i);
    }
    return inside;
}

double kl_neighborhood_mass(const ModelFamily& family, const Prior& prior,
                            const FiniteDensity& p0, const FiniteDensity& pstar, double eps) {
    if (prior.size() != family.size())
        raise(errc::dimension_mismatch, "kl_neighborhood_mass: prior misaligned with family");
    const auto inside = kl_neighborhood_indices(family, p0, pstar, eps);
    return prior.mass(inside);
}

HullProjection kl_projection_hull(const FiniteDensity& p0, const ModelFamily& generators,
                                  double kkt_tolerance, std::size_t max_iterations) {
    const std::size_t m = generators.size();
    const std::size_t k = generators.alphabet_size();
    if (p0.alphabet_size() != k)
        raise(errc::dimension_mismatch, "kl_projection_hull: truth alphabet differs");

    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    std::vector<double> q(k, 0.0), ratio(m, 0.0);
    std::size_t iter = 0;
    double slack = pos_inf;
    // Multiplicative update w_i <- w_i * E0(p_i/q); a fixed point satisfies
    // the first-order condition E0(p_i/q) <= 1 for all i.
    for (; iter < max_iterations; ++iter) {
        std::fill(q.begin(), q.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (w[i] == 0.0) continue;
            for (std::size_t x = 0; x < k; ++x) q[x] += w[i] * generators.member(i)[x];
        }
        slack = neg_inf;
        for (std::size_t i = 0; i < m; ++i) {
            double r = 0.0;
            for (std::size_t x = 0; x < k; ++x) {
                if (p0[x] == 0.0) continue;
                if (q[x] == 0.0) {
                    if (generators.member(i)[x] > 0.0) r = pos_inf;
                    continue;
                }
                r += p0[x] * generators.member(i)[x] / q[x];
            }
            ratio[i] = r;
            slack = std::max(slack, r - 1.0);
        }
        if (slack <= kkt_tolerance) break;
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            w[i] *= ratio[i];
            sum += w[i];
        }
        for (double& wi : w) wi /= sum;
    }
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t x = 0; x < k; ++x) q[x] += w[i] * generators.member(i)[x];
    double qsum = 0.0;
    for (double v : q) qsum += v;
    for (double& v : q) v /= qsum;
    FiniteDensity density = FiniteDensity::from_probs(q);
    const double kl = kl_divergence(p0, density);
    return {std::move(w), std::move(density), kl, slack, iter};
}

} // namespace ratelab
