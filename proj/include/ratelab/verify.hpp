#ifndef RATELAB_VERIFY_HPP
#define RATELAB_VERIFY_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ratelab/covering.hpp"
#include "ratelab/model_space.hpp"
#include "ratelab/posterior.hpp"

namespace ratelab {

struct IdentityReport {
    double max_relative_error = 0.0;
    std::size_t instances_checked = 0;
    std::string worst_case;  // which step and which form attained the max
};

/// Checks, along one seeded observation sequence drawn from `truth`, the
/// one-step ratio identity
///   int_A R_{k+1} dPi = (p_kA(x_{k+1}) / pstar(x_{k+1})) int_A R_k dPi
/// and, by exact enumeration of the next symbol, its alpha-power
/// conditional-expectation form
///   sum_x p0(x) (int_A R_k^{+x} dPi)^alpha
///     = (int_A R_k dPi)^alpha * E0(p_kA/pstar)^alpha.
IdentityReport check_key_identity(std::shared_ptr<const ModelFamily> family,
                                  std::shared_ptr<const Prior> prior, std::size_t pstar_index,
                                  const FiniteDensity& truth, std::span<const std::size_t> set,
                                  std::size_t n, double alpha, std::uint64_t seed);

/// E0 (int_A R_n dPi)^alpha by exhaustive enumeration of all length-n
/// sequences weighted by their truth probability. The alpha-power is not
/// multiplicative across draws, so enumeration is what exactness costs.
/// Refuses instances with alphabet_size^n > 1e7 and points at Monte Carlo.
double exact_power_expectation(const ModelFamily& family, const Prior& prior,
                               std::size_t pstar_index, const FiniteDensity& truth,
                               std::span<const std::size_t> set, double alpha, unsigned n,
                               unsigned threads = 0);

enum class DecayMode { exact, monte_carlo };

struct DecayReport {
    unsigned n_max = 0;
    double alpha = 0.0;
    double certified_rate = 0.0;  // t: per-step bound exp(-t) from the certificate
    DecayMode mode = DecayMode::exact;
    double log_prior_mass = 0.0;  // log Pi(A) over the element's members
    std::vector<unsigned> ns;
    std::vector<double> lhs;         // E0 (L_n)^alpha, exact or estimated
    std::vector<double> rhs;         // exp(-n t) * Pi(A)^alpha
    std::vector<double> half_width;  // 99% bands (Monte Carlo mode only)
    std::size_t replications = 0;
    bool pointwise_ok = false;  // lhs <= rhs at every n, within the stated band
    bool one_step_ok = false;   // exact mode: lhs_{k+1} <= lhs_k * exp(-t)
};

/// Verifies supermartingale decay of the restricted integral over a
/// certified cover element. Exact mode enumerates; Monte Carlo mode reports
/// 99% bands. An element whose certificate does not hold up is refused,
/// the bound would be meaningless.
DecayReport check_supermartingale_decay(std::shared_ptr<const ModelFamily> family,
                                        std::shared_ptr<const Prior> prior,
                                        std::size_t pstar_index, const FiniteDensity& truth,
                                        const CoverElement& element, double alpha, unsigned n_max,
                                        DecayMode mode, std::size_t replications,
                                        std::uint64_t seed, unsigned threads = 0);

struct EvidenceEventReport {
    double eps = 0.0;
    double c = 0.0;
    double log_neighborhood_mass = 0.0;
    std::size_t replications = 0;
    std::vector<unsigned> n_grid;
    std::vector<double> frequency;   // empirical P(I_n >= Pi(B) exp(-n eps^2 (1+C)))
    std::vector<double> half_width;  // 99% binomial bands
};

/// Empirical frequency of the evidence lower-bound event along n_grid.
EvidenceEventReport check_evidence_event(std::shared_ptr<const ModelFamily> family,
                                         std::shared_ptr<const Prior> prior,
                                         std::size_t pstar_index, const FiniteDensity& truth,
                                         double eps, double c, std::size_t replications,
                                         std::span<const unsigned> n_grid, std::uint64_t seed,
                                         unsigned threads = 0);

struct PriorRatioRow {
    unsigned J = 0;
    double shell_mass = 0.0;
    double ratio = 0.0;  // shell mass over neighborhood mass
    double bound = 0.0;  // exp(n eps_n^2 J^2 / 8)
    bool holds = false;
};

struct PriorRatioReport {
    unsigned n = 0;
    double eps_n = 0.0;
    double log_neighborhood_mass = 0.0;
    std::vector<PriorRatioRow> rows;
    bool all_hold = false;
};

/// For J = 1..j_max checks Pi(shell at radii [J eps_n, 2 J eps_n)) over
/// Pi(B(eps_n)) against exp(n eps_n^2 J^2 / 8).
PriorRatioReport check_prior_ratio_condition(const ModelFamily& family, const Prior& prior,
                                             const FiniteDensity& truth, std::size_t pstar_index,
                                             unsigned n, double eps_n, unsigned j_max);

struct ConditionsReport {
    unsigned n = 0;
    double eps_n = 0.0;
    double m = 0.0;
    double alpha = 0.0;
    // covering-growth condition: log sum_j Pi(A_nj)^alpha <= n eps^2 K
    bool cover_growth_ok = false;
    double cover_sum_log = 0.0;
    double cover_bound_log = 0.0;
    double cover_slack = 0.0;
    std::size_t cover_elements = 0;
    // prior-mass condition: log Pi(B(eps_n)) >= -L n eps^2
    bool prior_mass_ok = false;
    double log_neighborhood_mass = 0.0;
    double mass_bound_log = 0.0;
    double mass_slack = 0.0;
    std::string note;
};

/// Evaluates the two sufficient conditions at a concrete (n, eps_n):
/// covering growth over a freshly built cover, and prior mass of the KL
/// neighborhood. Both slacks are reported in the exponent.
ConditionsReport check_rate_conditions(const ModelFamily& family, const Prior& prior,
                                           const FiniteDensity& truth, std::size_t pstar_index,
                                           unsigned n, double eps_n, double m, double alpha,
                                           double k_const, double l_const);

} // namespace ratelab

#endif
