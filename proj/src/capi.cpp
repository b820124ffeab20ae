#include "ratelab.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "ratelab/config.hpp"
#include "ratelab/errors.hpp"
#include "ratelab/model_space.hpp"
#include "ratelab/posterior.hpp"
#include "ratelab/report.hpp"
#include "ratelab/version.hpp"

using namespace ratelab;

namespace {

thread_local std::string g_last_error;

rl_status status_from(errc code) {
    switch (code) {
    case errc::dimension_mismatch: return RL_ERR_DIMENSION;
    case errc::domain: return RL_ERR_DOMAIN;
    case errc::validation: return RL_ERR_VALIDATION;
    case errc::io: return RL_ERR_IO;
    case errc::size_limit: return RL_ERR_SIZE_LIMIT;
    case errc::no_projection: return RL_ERR_NO_PROJECTION;
    case errc::projection_tie: return RL_ERR_PROJECTION_TIE;
    case errc::null_conditioning: return RL_ERR_NULL_CONDITIONING;
    case errc::undefined_posterior: return RL_ERR_UNDEFINED_POSTERIOR;
    case errc::uncoverable: return RL_ERR_UNCOVERABLE;
    case errc::unresolved: return RL_ERR_UNRESOLVED;
    case errc::config: return RL_ERR_CONFIG;
    case errc::usage: return RL_ERR_USAGE;
    }
    return RL_ERR_INTERNAL;
}

template <class F>
rl_status guarded(F&& fn) {
    try {
        fn();
        g_last_error.clear();
        return RL_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RL_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return RL_ERR_INTERNAL;
    }
}

rl_status null_argument(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return RL_ERR_NULL_ARGUMENT;
}

} // namespace

struct rl_density {
    FiniteDensity value;
};

struct rl_family {
    std::vector<FiniteDensity> members;
    std::vector<std::string> labels;
    std::vector<double> prior_weights;  // empty: uniform

    std::shared_ptr<const ModelFamily> family() const {
        return std::make_shared<const ModelFamily>(ModelFamily::from_members(members, labels));
    }
    std::shared_ptr<const Prior> prior() const {
        return std::make_shared<const Prior>(prior_weights.empty()
                                                 ? Prior::uniform(members.size())
                                                 : Prior::from_weights(prior_weights));
    }
};

struct rl_posterior {
    PosteriorState state;
    std::string snapshot;
};

struct rl_config {
    ExperimentConfig value;
};

struct rl_report {
    Report value;
};

extern "C" {

const char* rl_version(void) { return version_string; }

const char* rl_last_error(void) { return g_last_error.c_str(); }

const char* rl_status_name(rl_status status) {
    switch (status) {
    case RL_OK: return "ok";
    case RL_ERR_NULL_ARGUMENT: return "null_argument";
    case RL_ERR_DIMENSION: return "dimension_mismatch";
    case RL_ERR_DOMAIN: return "domain";
    case RL_ERR_VALIDATION: return "validation";
    case RL_ERR_IO: return "io";
    case RL_ERR_SIZE_LIMIT: return "size_limit";
    case RL_ERR_NO_PROJECTION: return "no_projection";
    case RL_ERR_PROJECTION_TIE: return "projection_tie";
    case RL_ERR_NULL_CONDITIONING: return "null_conditioning";
    case RL_ERR_UNDEFINED_POSTERIOR: return "undefined_posterior";
    case RL_ERR_UNCOVERABLE: return "uncoverable";
    case RL_ERR_UNRESOLVED: return "unresolved";
    case RL_ERR_CONFIG: return "config";
    case RL_ERR_USAGE: return "usage";
    case RL_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

rl_status rl_density_create(const double* probs, size_t alphabet_size, rl_density** out) {
    if (!probs || !out) return null_argument("rl_density_create");
    return guarded([&] {
        std::vector<double> v(probs, probs + alphabet_size);
        *out = new rl_density{FiniteDensity::from_probs(std::move(v))};
    });
}

void rl_density_free(rl_density* density) { delete density; }

size_t rl_density_alphabet_size(const rl_density* density) {
    return density ? density->value.alphabet_size() : 0;
}

rl_status rl_density_prob(const rl_density* density, size_t symbol, double* out) {
    if (!density || !out) return null_argument("rl_density_prob");
    return guarded([&] {
        if (symbol >= density->value.alphabet_size())
            raise(errc::domain, "symbol outside the alphabet");
        *out = density->value[symbol];
    });
}

rl_status rl_kl_divergence(const rl_density* p0, const rl_density* p, double* out) {
    if (!p0 || !p || !out) return null_argument("rl_kl_divergence");
    return guarded([&] { *out = kl_divergence(p0->value, p->value); });
}

rl_status rl_alpha_log_affinity(const rl_density* p0, const rl_density* p,
                                const rl_density* pstar, double alpha, double* out) {
    if (!p0 || !p || !pstar || !out) return null_argument("rl_alpha_log_affinity");
    return guarded([&] { *out = alpha_log_affinity(p0->value, p->value, pstar->value, alpha); });
}

rl_status rl_sup_alpha_log_affinity(const rl_density* p0, const rl_density* p,
                                    const rl_density* pstar, double* alpha_out,
                                    double* value_out) {
    if (!p0 || !p || !pstar || !alpha_out || !value_out)
        return null_argument("rl_sup_alpha_log_affinity");
    return guarded([&] {
        const SupAffinityResult r = sup_alpha_log_affinity(p0->value, p->value, pstar->value);
        *alpha_out = r.alpha;
        *value_out = r.value;
    });
}

rl_status rl_gen_hellinger_sq(const rl_density* p1, const rl_density* p2, const rl_density* p0,
                              const rl_density* pstar, double* out) {
    if (!p1 || !p2 || !p0 || !pstar || !out) return null_argument("rl_gen_hellinger_sq");
    return guarded(
        [&] { *out = gen_hellinger_sq(p1->value, p2->value, p0->value, pstar->value); });
}

rl_status rl_family_create(rl_family** out) {
    if (!out) return null_argument("rl_family_create");
    return guarded([&] { *out = new rl_family{}; });
}

rl_status rl_family_add(rl_family* family, const char* label, const double* probs,
                        size_t alphabet_size) {
    if (!family || !probs) return null_argument("rl_family_add");
    return guarded([&] {
        std::vector<double> v(probs, probs + alphabet_size);
        FiniteDensity d = FiniteDensity::from_probs(std::move(v));
        if (!family->members.empty() &&
            family->members.front().alphabet_size() != d.alphabet_size())
            raise(errc::dimension_mismatch, "family member alphabet size differs");
        family->labels.push_back(label ? label
                                       : "member_" + std::to_string(family->members.size()));
        family->members.push_back(std::move(d));
    });
}

rl_status rl_family_set_prior(rl_family* family, const double* weights, size_t count) {
    if (!family || !weights) return null_argument("rl_family_set_prior");
    return guarded([&] {
        if (count != family->members.size())
            raise(errc::dimension_mismatch, "prior length does not match the family");
        std::vector<double> w(weights, weights + count);
        Prior::from_weights(w);  // validate now, store raw
        family->prior_weights = std::move(w);
    });
}

size_t rl_family_size(const rl_family* family) { return family ? family->members.size() : 0; }

void rl_family_free(rl_family* family) { delete family; }

rl_status rl_kl_projection(const rl_family* family, const double* truth_probs,
                           size_t alphabet_size, size_t* index_out, double* kl_out,
                           int* unique_out, double* runner_up_gap_out) {
    if (!family || !truth_probs || !index_out || !kl_out || !unique_out || !runner_up_gap_out)
        return null_argument("rl_kl_projection");
    return guarded([&] {
        std::vector<double> v(truth_probs, truth_probs + alphabet_size);
        const FiniteDensity truth = FiniteDensity::from_probs(std::move(v));
        const KLProjectionResult r = kl_projection(truth, *family->family());
        *index_out = r.index;
        *kl_out = r.kl_value;
        *unique_out = r.unique ? 1 : 0;
        *runner_up_gap_out = r.runner_up_gap;
    });
}

rl_status rl_posterior_init(const rl_family* family, size_t pstar_index, rl_posterior** out) {
    if (!family || !out) return null_argument("rl_posterior_init");
    return guarded([&] {
        *out = new rl_posterior{
            PosteriorState::init(family->family(), family->prior(), pstar_index), {}};
    });
}

rl_status rl_posterior_update(rl_posterior* posterior, size_t symbol) {
    if (!posterior) return null_argument("rl_posterior_update");
    return guarded([&] { posterior->state = posterior->state.updated(symbol); });
}

rl_status rl_posterior_n(const rl_posterior* posterior, size_t* out) {
    if (!posterior || !out) return null_argument("rl_posterior_n");
    *out = posterior->state.n();
    return RL_OK;
}

rl_status rl_posterior_mass(const rl_posterior* posterior, const size_t* indices, size_t count,
                            double* out) {
    if (!posterior || !out || (count > 0 && !indices)) return null_argument("rl_posterior_mass");
    return guarded([&] {
        std::vector<std::size_t> set(indices, indices + count);
        *out = posterior->state.posterior_mass(set);
    });
}

rl_status rl_posterior_log_evidence(const rl_posterior* posterior, double* out) {
    if (!posterior || !out) return null_argument("rl_posterior_log_evidence");
    return guarded([&] { *out = posterior->state.log_evidence(); });
}

rl_status rl_posterior_log_ratio(const rl_posterior* posterior, size_t index, double* out) {
    if (!posterior || !out) return null_argument("rl_posterior_log_ratio");
    return guarded([&] {
        if (index >= posterior->state.log_ratios().size())
            raise(errc::dimension_mismatch, "member index out of range");
        *out = posterior->state.log_ratios()[index];
    });
}

rl_status rl_posterior_snapshot_tsv(const rl_posterior* posterior, const char** out) {
    if (!posterior || !out) return null_argument("rl_posterior_snapshot_tsv");
    return guarded([&] {
        auto* mutable_handle = const_cast<rl_posterior*>(posterior);
        mutable_handle->snapshot = posterior->state.snapshot_tsv();
        *out = mutable_handle->snapshot.c_str();
    });
}

void rl_posterior_free(rl_posterior* posterior) { delete posterior; }

rl_status rl_config_load(const char* path, rl_config** out) {
    if (!path || !out) return null_argument("rl_config_load");
    return guarded([&] { *out = new rl_config{load_config(path)}; });
}

rl_status rl_config_parse(const char* json_text, rl_config** out) {
    if (!json_text || !out) return null_argument("rl_config_parse");
    return guarded([&] { *out = new rl_config{load_config_text(json_text)}; });
}

rl_status rl_config_canonical_json(const rl_config* config, char** out) {
    if (!config || !out) return null_argument("rl_config_canonical_json");
    return guarded([&] {
        const std::string canon = canonical_config_json(config->value);
        char* buf = new char[canon.size() + 1];
        std::memcpy(buf, canon.c_str(), canon.size() + 1);
        *out = buf;
    });
}

void rl_config_free(rl_config* config) { delete config; }

void rl_string_free(char* text) { delete[] text; }

rl_status rl_run(const rl_config* config, const char* subcommand, const rl_run_options* options,
                 rl_report** out) {
    if (!config || !subcommand || !out) return null_argument("rl_run");
    return guarded([&] {
        RunOptions run_options;
        if (options) {
            if (options->has_seed) run_options.seed = options->seed;
            if (options->has_replications)
                run_options.replications = static_cast<unsigned>(options->replications);
            if (options->mode == 1) run_options.mode = DecayMode::exact;
            if (options->mode == 2) run_options.mode = DecayMode::monte_carlo;
            if (options->has_n) run_options.n = options->n;
            if (options->out_dir) run_options.out_dir = options->out_dir;
            if (options->timestamp) run_options.timestamp = std::string(options->timestamp);
            run_options.threads = options->threads;
        }
        *out = new rl_report{run_verb(config->value, subcommand, run_options)};
    });
}

int rl_report_passed(const rl_report* report) {
    return report && report->value.passed ? 1 : 0;
}

const char* rl_report_text(const rl_report* report) {
    return report ? report->value.text.c_str() : "";
}

const char* rl_report_summary_json(const rl_report* report) {
    return report ? report->value.summary_json.c_str() : "";
}

size_t rl_report_file_count(const rl_report* report) {
    return report ? report->value.files.size() : 0;
}

const char* rl_report_file_name(const rl_report* report, size_t i) {
    if (!report) return "";
    size_t k = 0;
    for (const auto& [name, content] : report->value.files) {
        if (k == i) return name.c_str();
        ++k;
    }
    return "";
}

void rl_report_free(rl_report* report) { delete report; }

} // extern "C"
