#ifndef RATELAB_POSTERIOR_HPP
#define RATELAB_POSTERIOR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ratelab/model_space.hpp"

namespace ratelab {

struct RestrictedIntegral {
    double log_value;                  // log of the prior integral of R_n over the set
    std::vector<std::size_t> indices;  // the set, as member indices
};

/// Exact sequential posterior over a finite family. The state stores one
/// log likelihood-ratio accumulator per member, log R_n(p_i) against the
/// reference member pstar; members annihilated by a zero-probability symbol
/// keep their slot with ratio -inf so index alignment never shifts.
///
/// States are immutable values: updated() returns a new state, so independent
/// replications may evolve copies concurrently without shared mutation.
class PosteriorState {
public:
    static PosteriorState init(std::shared_ptr<const ModelFamily> family,
                               std::shared_ptr<const Prior> prior, std::size_t pstar_index);

    /// One observation step. The symbol must be possible under the reference
    /// density (pstar(x) = 0 flags an invalid reference for this data).
    PosteriorState updated(std::size_t symbol) const;

    std::size_t n() const { return n_; }
    std::span<const double> log_ratios() const { return log_ratios_; }
    std::size_t pstar_index() const { return pstar_index_; }
    const ModelFamily& family() const { return *family_; }
    const Prior& prior() const { return *prior_; }
    std::uint64_t history_digest() const { return digest_; }

    /// Posterior mass of a set of member indices, max-shifted log-sum-exp.
    double posterior_mass(std::span<const std::size_t> indices) const;

    /// log of the prior integral of R_n over the given set; -inf is a value
    /// (empty set or all ratios annihilated), never an error.
    RestrictedIntegral restricted_log_integral(std::span<const std::size_t> indices) const;

    /// log I_n: the restricted integral over the full family.
    double log_evidence() const;

    /// Posterior weight of each member (normalized; zero where annihilated).
    std::vector<double> posterior_weights() const;

    /// Posterior weights conditioned on a set: zero off the set, the set's
    /// weights renormalized to one. Errors when the set has mass zero.
    std::vector<double> conditional_weights(std::span<const std::size_t> indices) const;

    /// Predictive density conditioned on a set: the posterior-weighted
    /// mixture of the set's members, a point of their convex hull.
    FiniteDensity predictive_density(std::span<const std::size_t> indices) const;

    /// Columnar snapshot: one row per member with label, log ratio and
    /// posterior weight.
    std::string snapshot_tsv() const;

private:
    PosteriorState() = default;
    std::shared_ptr<const ModelFamily> family_;
    std::shared_ptr<const Prior> prior_;
    std::size_t pstar_index_ = 0;
    std::size_t n_ = 0;
    std::vector<double> log_ratios_;
    std::uint64_t digest_ = 0;
};

/// All member indices of a family, 0..size-1.
std::vector<std::size_t> all_indices(const ModelFamily& family);

} // namespace ratelab

#endif
