#include "ratelab/posterior.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ratelab/errors.hpp"
#include "ratelab/math_util.hpp"

namespace ratelab {

namespace {
constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t fnv_prime = 0x100000001b3ULL;
} // namespace

std::vector<std::size_t> all_indices(const ModelFamily& family) {
    std::vector<std::size_t> idx(family.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

PosteriorState PosteriorState::init(std::shared_ptr<const ModelFamily> family,
                                    std::shared_ptr<const Prior> prior,
                                    std::size_t pstar_index) {
    if (!family || !prior) raise(errc::validation, "posterior: null family or prior");
    if (prior->size() != family->size())
        raise(errc::dimension_mismatch, "posterior: prior misaligned with family");
    if (pstar_index >= family->size())
        raise(errc::dimension_mismatch, "posterior: pstar index out of range");
    PosteriorState state;
    state.family_ = std::move(family);
    state.prior_ = std::move(prior);
    state.pstar_index_ = pstar_index;
    state.n_ = 0;
    state.log_ratios_.assign(state.family_->size(), 0.0);
    state.digest_ = fnv_offset;
    return state;
}

PosteriorState PosteriorState::updated(std::size_t symbol) const {
    const ModelFamily& fam = *family_;
    if (symbol >= fam.alphabet_size())
        raise(errc::domain, "posterior update: symbol outside the alphabet");
    const double log_pstar = fam.member(pstar_index_).log_prob(symbol);
    if (log_pstar == neg_inf)
        raise(errc::domain,
              "posterior update: observed a symbol impossible under the reference density; "
              "the chosen pstar cannot serve this data");
    PosteriorState next = *this;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        const double lp = fam.member(i).log_prob(symbol);
        next.log_ratios_[i] = lp == neg_inf ? neg_inf : next.log_ratios_[i] + (lp - log_pstar);
    }
    next.n_ = n_ + 1;
    next.digest_ = (digest_ ^ static_cast<std::uint64_t>(symbol)) * fnv_prime;
    return next;
}

RestrictedIntegral PosteriorState::restricted_log_integral(
    std::span<const std::size_t> indices) const {
    double m = neg_inf;
    for (std::size_t i : indices) {
        if (i >= log_ratios_.size())
            raise(errc::dimension_mismatch, "restricted integral: index out of range");
        const double v = prior_->log_weight(i) + log_ratios_[i];
        if (v > m) m = v;
    }
    RestrictedIntegral result{neg_inf, {indices.begin(), indices.end()}};
    if (m == neg_inf) return result;
    double s = 0.0;
    for (std::size_t i : indices) {
        const double v = prior_->log_weight(i) + log_ratios_[i];
        if (v != neg_inf) s += std::exp(v - m);
    }
    result.log_value = m + std::log(s);
    return result;
}

double PosteriorState::log_evidence() const {
    std::vector<double> terms(log_ratios_.size());
    for (std::size_t i = 0; i < log_ratios_.size(); ++i)
        terms[i] = prior_->log_weight(i) + log_ratios_[i];
    return log_sum_exp(terms);
}

double PosteriorState::posterior_mass(std::span<const std::size_t> indices) const {
    const double log_total = log_evidence();
    if (log_total == neg_inf)
        raise(errc::undefined_posterior,
              "posterior mass: total evidence is zero, every member annihilated");
    const double log_part = restricted_log_integral(indices).log_value;
    if (log_part == neg_inf) return 0.0;
    return std::min(1.0, std::exp(log_part - log_total));
}

std::vector<double> PosteriorState::posterior_weights() const {
    const double log_total = log_evidence();
    if (log_total == neg_inf)
        raise(errc::undefined_posterior,
              "posterior weights: total evidence is zero, every member annihilated");
    std::vector<double> w(log_ratios_.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double v = prior_->log_weight(i) + log_ratios_[i];
        if (v != neg_inf) w[i] = std::exp(v - log_total);
    }
    return w;
}

std::vector<double> PosteriorState::conditional_weights(
    std::span<const std::size_t> indices) const {
    const double log_set = restricted_log_integral(indices).log_value;
    if (log_set == neg_inf)
        raise(errc::null_conditioning, "conditioning on a set of posterior mass zero");
    std::vector<double> w(log_ratios_.size(), 0.0);
    for (std::size_t i : indices) {
        const double v = prior_->log_weight(i) + log_ratios_[i];
        if (v != neg_inf) w[i] = std::exp(v - log_set);
    }
    return w;
}

FiniteDensity PosteriorState::predictive_density(std::span<const std::size_t> indices) const {
    const std::vector<double> w = conditional_weights(indices);
    const ModelFamily& fam = *family_;
    std::vector<double> mix(fam.alphabet_size(), 0.0);
    for (std::size_t i : indices) {
        if (w[i] == 0.0) continue;
        for (std::size_t x = 0; x < mix.size(); ++x) mix[x] += w[i] * fam.member(i)[x];
    }
    return FiniteDensity::from_probs(std::move(mix));
}

std::string PosteriorState::snapshot_tsv() const {
    const std::vector<double> weights = posterior_weights();
    std::ostringstream os;
    os << "# n\t" << n_ << "\n";
    os << "# pstar_index\t" << pstar_index_ << "\n";
    os << "index\tlabel\tlog_ratio\tposterior_weight\n";
    char buf[64];
    for (std::size_t i = 0; i < log_ratios_.size(); ++i) {
        os << i << '\t' << family_->label(i) << '\t';
        std::snprintf(buf, sizeof buf, "%.17g", log_ratios_[i]);
        os << buf << '\t';
        std::snprintf(buf, sizeof buf, "%.17g", weights[i]);
        os << buf << '\n';
    }
    return os.str();
}

} // namespace ratelab
