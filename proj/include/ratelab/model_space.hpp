#ifndef RATELAB_MODEL_SPACE_HPP
#define RATELAB_MODEL_SPACE_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ratelab {

/// A probability mass function over the finite alphabet {0, ..., k-1}.
/// Entries are nonnegative and sum to one within 1e-12; the dominating
/// measure is counting measure throughout, so every expectation in the lab
/// is an exact finite sum.
class FiniteDensity {
public:
    /// Validates and takes ownership of the entries.
    static FiniteDensity from_probs(std::vector<double> probs);

    /// Two-point density {1-theta, theta}: symbol 1 is "success".
    static FiniteDensity bernoulli(double theta);

    std::size_t alphabet_size() const { return probs_.size(); }
    double operator[](std::size_t x) const { return probs_[x]; }
    std::span<const double> probs() const { return probs_; }

    /// log p(x); -inf at zero-probability symbols.
    double log_prob(std::size_t x) const;

    bool operator==(const FiniteDensity&) const = default;

    static constexpr double sum_tolerance = 1e-12;

private:
    explicit FiniteDensity(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<double> probs_;
};

/// An ordered finite collection of candidate densities over one alphabet.
class ModelFamily {
public:
    static ModelFamily from_members(std::vector<FiniteDensity> members,
                                    std::vector<std::string> labels = {});

    std::size_t size() const { return members_.size(); }
    std::size_t alphabet_size() const { return members_.front().alphabet_size(); }
    const FiniteDensity& member(std::size_t i) const { return members_[i]; }
    const std::string& label(std::size_t i) const { return labels_[i]; }
    const std::vector<FiniteDensity>& members() const { return members_; }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    ModelFamily(std::vector<FiniteDensity> members, std::vector<std::string> labels)
        : members_(std::move(members)), labels_(std::move(labels)) {}
    std::vector<FiniteDensity> members_;
    std::vector<std::string> labels_;
};

/// Prior weights aligned with a ModelFamily; nonnegative, summing to one
/// within 1e-12.
class Prior {
public:
    static Prior uniform(std::size_t n);
    static Prior from_weights(std::vector<double> weights);

    std::size_t size() const { return weights_.size(); }
    double weight(std::size_t i) const { return weights_[i]; }
    double log_weight(std::size_t i) const;
    std::span<const double> weights() const { return weights_; }

    /// Total weight of a set of member indices.
    double mass(std::span<const std::size_t> indices) const;

private:
    explicit Prior(std::vector<double> w) : weights_(std::move(w)) {}
    std::vector<double> weights_;
};

struct KLProjectionResult {
    std::size_t index;     // first member attaining the minimum
    double kl_value;       // nats
    bool unique;           // false iff another member is within tie_tolerance
    double runner_up_gap;  // second-best minus best; +inf for a single candidate

    static constexpr double tie_tolerance = 1e-10;
};

/// KL(p0 || p) in nats, with 0*log(0/q) = 0; +inf when p fails to dominate p0.
double kl_divergence(const FiniteDensity& p0, const FiniteDensity& p);

/// -log E0 (p/pstar)^alpha for alpha in (0,1). Requires pstar positive on
/// the support of p0. +inf when p vanishes on the entire support of p0.
double alpha_log_affinity(const FiniteDensity& p0, const FiniteDensity& p,
                          const FiniteDensity& pstar, double alpha);

struct SupAffinityResult {
    double alpha;  // maximizing exponent
    double value;  // sup over alpha in (0,1) of -log E0 (p/pstar)^alpha
};

/// Maximizes alpha -> -log E0 (p/pstar)^alpha over (0,1); the negated map is
/// convex in alpha, so a golden-section bracket converges to the optimum.
SupAffinityResult sup_alpha_log_affinity(const FiniteDensity& p0, const FiniteDensity& p,
                                         const FiniteDensity& pstar);

/// Squared generalized Hellinger distance
///   d^2(p1, p2) = 1/2 sum_x (sqrt(p1) - sqrt(p2))^2 p0/pstar,
/// which reduces to the classical squared Hellinger distance when p0 = pstar.
double gen_hellinger_sq(const FiniteDensity& p1, const FiniteDensity& p2,
                        const FiniteDensity& p0, const FiniteDensity& pstar);

/// Member of `family` minimizing KL(p0 || .). Ties within 1e-10 are surfaced
/// through `unique`, never silently broken.
KLProjectionResult kl_projection(const FiniteDensity& p0, const ModelFamily& family);

/// First and second moments under p0 of log(p/pstar); m1 is E0 log(p/pstar).
/// Both are -inf/+inf respectively when p vanishes somewhere on supp(p0).
struct LogRatioMoments {
    double m1;
    double m2;
    bool finite;
};
LogRatioMoments log_ratio_moments(const FiniteDensity& p0, const FiniteDensity& p,
                                  const FiniteDensity& pstar);

/// Indices of members inside the KL neighborhood
///   { p : -E0 log(p/pstar) <= eps^2 and E0 (log(p/pstar))^2 <= eps^2 }.
/// Members not dominating p0 are excluded (their log ratio is unbounded).
std::vector<std::size_t> kl_neighborhood_indices(const ModelFamily& family,
                                                 const FiniteDensity& p0,
                                                 const FiniteDensity& pstar, double eps);

/// Prior mass of the KL neighborhood above.
double kl_neighborhood_mass(const ModelFamily& family, const Prior& prior,
                            const FiniteDensity& p0, const FiniteDensity& pstar, double eps);

/// KL projection of p0 onto the convex hull of `generators`: minimizes
/// KL(p0 || sum_i w_i p_i) over the weight simplex by multiplicative
/// (EM-style) updates. kkt_slack is max_i E0(p_i/q) - 1 at the returned
/// mixture; at an exact minimizer it is <= 0 on the support of w and <= 0
/// for the rest, so a small positive slack bounds the distance from
/// stationarity.
struct HullProjection {
    std::vector<double> weights;
    FiniteDensity density;
    double kl_value;
    double kkt_slack;
    std::size_t iterations;
};
HullProjection kl_projection_hull(const FiniteDensity& p0, const ModelFamily& generators,
                                  double kkt_tolerance = 1e-11, std::size_t max_iterations = 200000);

} // namespace ratelab

#endif
