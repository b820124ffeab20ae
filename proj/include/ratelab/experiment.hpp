#ifndef RATELAB_EXPERIMENT_HPP
#define RATELAB_EXPERIMENT_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ratelab/covering.hpp"
#include "ratelab/model_space.hpp"

namespace ratelab {

enum class EpsKind { constant, inv_sqrt, inv_sqrt_log };
enum class MKind { constant, log_growth };

/// Radius schedule eps_n: one of c, c/sqrt(n), c*log(n)/sqrt(n).
struct EpsSchedule {
    EpsKind kind = EpsKind::constant;
    double c = 0.1;
    double at(unsigned n) const;
    std::string name() const;
};

/// Multiplier schedule: constant M or the diverging M_n = c*log(n).
struct MSchedule {
    MKind kind = MKind::constant;
    double c = 1.0;
    double at(unsigned n) const;
    std::string name() const;
};

struct ExperimentConfig {
    FiniteDensity truth = FiniteDensity::bernoulli(0.5);
    std::shared_ptr<const ModelFamily> family;
    std::shared_ptr<const Prior> prior;
    double alpha = 0.5;
    EpsSchedule eps;
    MSchedule m;
    unsigned horizon = 256;
    unsigned replications = 200;
    std::uint64_t master_seed = 1;
    unsigned shell_j_max = 4;
    std::optional<std::size_t> pstar_index;  // nullopt: take the KL projection
    // constants for the `conditions` verb
    double condition_k = 1.0;
    double condition_l = 1.0;
    double condition_c = 1.0;
    unsigned threads = 0;

    void validate() const;  // throws errc::validation naming the field
};

/// Geometric checkpoint grid 1, 2, 4, ... capped at and including N.
std::vector<unsigned> checkpoint_grid(unsigned horizon);

/// Resolves the reference member: the configured index if pinned, otherwise
/// the KL projection of the truth, which must be unique.
std::size_t resolve_pstar(const ExperimentConfig& config);

struct RateFit {
    bool defined = false;
    double slope = 0.0;
    double intercept = 0.0;
    std::string diagnostic;
};

/// Least-squares slope of log(mass) against n*eps_n^2, over points with
/// positive mass. Needs at least 3 such points. Flags no-contraction and
/// non-monotonicity beyond the confidence bands.
RateFit fit_rate(std::span<const double> masses, std::span<const double> n_eps_sq,
                 std::span<const double> half_width);

struct RateReport {
    std::vector<unsigned> checkpoints;
    std::vector<double> eps_values;
    std::vector<double> radii;
    std::vector<std::size_t> target_sizes;
    std::vector<double> mean_mass;
    std::vector<double> half_width;  // rendered only when replications >= 50
    std::vector<std::vector<double>> replication_mass;  // [checkpoint][replication]
    RateFit fit;
    std::size_t pstar_index = 0;
    std::size_t replications = 0;
    std::uint64_t master_seed = 0;
    bool intervals_rendered = false;
};

/// Replicated contraction run: draws from the truth, tracks the posterior
/// mass of A_n = {d(P, P*) >= M_n eps_n} at geometric checkpoints and fits
/// the decay rate. Identical configs (including master_seed) produce
/// bitwise-identical reports regardless of the thread count.
RateReport run_contraction(const ExperimentConfig& config);

struct ShellTable {
    std::vector<unsigned> checkpoints;
    std::vector<double> eps_values;
    std::vector<std::vector<ShellSpec>> shells;        // per checkpoint
    std::vector<std::vector<double>> mean_shell_mass;  // [checkpoint][J-1]
    std::vector<double> mean_target_mass;              // mass of A_n itself
    std::vector<bool> shells_cover_target;             // union of shells reaches max distance
    std::size_t pstar_index = 0;
    std::size_t replications = 0;
    bool cover_bound_ok = false;  // sum_J shell mass >= A_n mass wherever shells cover
};

/// Shell-decomposed masses: one row per (checkpoint, J). Shells may overlap,
/// so the per-J sum is an upper bound on the target mass, not a partition.
ShellTable shell_masses(const ExperimentConfig& config);

} // namespace ratelab

#endif
