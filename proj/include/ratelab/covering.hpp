#ifndef RATELAB_COVERING_HPP
#define RATELAB_COVERING_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ratelab/model_space.hpp"

namespace ratelab {

/// Outcome of maximizing w -> E0((sum_i w_i p_i)/pstar)^alpha over the weight
/// simplex. The map is concave in the mixture, so the pairwise Frank-Wolfe
/// ascent carries a duality-gap bound: the true supremum over the hull is at
/// most max_affinity + gap.
struct AffinityCertificate {
    double max_affinity = 0.0;       // best E0(mix/pstar)^alpha found
    double min_neg_log = 0.0;        // -log(max_affinity)
    std::vector<double> weights;     // argmax mixture weights over the generators
    double gap = 0.0;                // Frank-Wolfe duality gap at termination
    std::size_t iterations = 0;
};

struct CertifyOutcome {
    enum class Status { certified, refused_witness, refused_unresolved };
    Status status;
    AffinityCertificate certificate;  // best point found in every case
    double threshold;                 // the bound that was tested
    bool certified() const { return status == Status::certified; }
};

/// One covering element: the convex hull of the listed family members,
/// certified (over the whole hull, not just the vertices) to satisfy
///   inf_hull -log E0(p/pstar)^alpha >= threshold.
struct CoverElement {
    std::vector<std::size_t> generators;
    double alpha = 0.0;
    double threshold = 0.0;  // certified lower bound on -log affinity, in nats
    AffinityCertificate certificate;
};

struct Covering {
    std::vector<CoverElement> elements;
    std::vector<std::size_t> target;  // indices the cover was built for
    double alpha = 0.0;
    double threshold = 0.0;
    std::size_t count() const { return elements.size(); }  // upper bound on N_t
};

/// Annulus of family members at generalized Hellinger distance
/// [inner_radius, outer_radius) from pstar.
struct ShellSpec {
    unsigned J = 0;
    double inner_radius = 0.0;
    double outer_radius = 0.0;
    std::vector<std::size_t> members;
};

struct SimplexAscentOptions {
    double gap_tolerance = 1e-9;
    std::size_t max_iterations = 10000;
};

/// Indices i with d(p_i, pstar) >= threshold_distance, distances compared
/// through their squares.
std::vector<std::size_t> build_target_set(const ModelFamily& family, std::size_t pstar_index,
                                          const FiniteDensity& p0, double threshold_distance);

/// Decides whether the convex hull of `generators` satisfies
/// inf -log E0(p/pstar)^alpha >= threshold. Success returns the certificate;
/// a hull point with affinity above exp(-threshold) is returned as a refusal
/// witness; hitting the iteration cap with the gap above tolerance refuses
/// as unresolved, never passes silently.
CertifyOutcome certify_element(std::span<const std::size_t> generators, const ModelFamily& family,
                               const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                               double threshold, const SimplexAscentOptions& options = {});

/// Greedy cover of `target`: seeds at the uncovered index closest to pstar,
/// grows each element by the nearest uncovered candidates while certification
/// succeeds. Every target index must be certifiable as a singleton, or an
/// uncoverable error names the failing index and its affinity value.
Covering build_cover(std::span<const std::size_t> target, const ModelFamily& family,
                     const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                     double threshold, const SimplexAscentOptions& options = {});

/// Exact minimum number of certifiable convex elements covering `target`,
/// by subset-mask dynamic programming with certify_element as the
/// feasibility oracle. Only for |target| <= max_size (default 12).
std::size_t covering_number_exact(std::span<const std::size_t> target, const ModelFamily& family,
                                  const FiniteDensity& p0, const FiniteDensity& pstar, double alpha,
                                  double threshold, std::size_t max_size = 12,
                                  const SimplexAscentOptions& options = {});

/// Shells J = 1..j_max at radii [m_n*J*eps_n, 2*m_n*J*eps_n). Adjacent shells
/// overlap once 2J > J+1; their union over all J >= 1 covers
/// {d >= m_n*eps_n}.
std::vector<ShellSpec> build_shells(const ModelFamily& family, std::size_t pstar_index,
                                    const FiniteDensity& p0, double eps_n, double m_n,
                                    unsigned j_max);

/// Maximize E0((sum w_i p_i)/pstar)^alpha over the simplex (pairwise
/// Frank-Wolfe with exact line search). Exposed for oracles and for the
/// hull projections used in tests.
AffinityCertificate maximize_hull_affinity(std::span<const std::size_t> generators,
                                           const ModelFamily& family, const FiniteDensity& p0,
                                           const FiniteDensity& pstar, double alpha,
                                           const SimplexAscentOptions& options = {});

} // namespace ratelab

#endif
