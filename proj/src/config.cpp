#include "ratelab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ratelab/errors.hpp"

namespace ratelab {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& msg) {
    raise(errc::config, field + ": " + msg);
}

double require_number(const json& j, const std::string& field) {
    if (!j.is_number()) config_error(field, "expected a number");
    return j.get<double>();
}

unsigned require_positive_integer(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 1)
        config_error(field, "expected a positive integer");
    return static_cast<unsigned>(j.get<long long>());
}

std::vector<double> require_prob_vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) config_error(field, "expected a non-empty array of numbers");
    std::vector<double> v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            config_error(field + "[" + std::to_string(i) + "]", "expected a number");
        v.push_back(j[i].get<double>());
    }
    return v;
}

EpsSchedule parse_eps_schedule(const json& j) {
    EpsSchedule eps;
    if (!j.is_object()) config_error("eps_schedule", "expected an object {kind, c}");
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant")
        eps.kind = EpsKind::constant;
    else if (kind == "inv_sqrt")
        eps.kind = EpsKind::inv_sqrt;
    else if (kind == "inv_sqrt_log")
        eps.kind = EpsKind::inv_sqrt_log;
    else
        config_error("eps_schedule.kind",
                     "unknown kind '" + kind + "' (constant | inv_sqrt | inv_sqrt_log)");
    if (!j.contains("c")) config_error("eps_schedule.c", "missing");
    eps.c = require_number(j.at("c"), "eps_schedule.c");
    if (!(eps.c > 0.0)) config_error("eps_schedule.c", "must be positive");
    return eps;
}

MSchedule parse_m_schedule(const json& j) {
    MSchedule m;
    if (!j.is_object()) config_error("m_schedule", "expected an object {kind, c}");
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant")
        m.kind = MKind::constant;
    else if (kind == "log_growth")
        m.kind = MKind::log_growth;
    else
        config_error("m_schedule.kind", "unknown kind '" + kind + "' (constant | log_growth)");
    if (!j.contains("c")) config_error("m_schedule.c", "missing");
    m.c = require_number(j.at("c"), "m_schedule.c");
    if (!(m.c > 0.0)) config_error("m_schedule.c", "must be positive");
    return m;
}

} // namespace

ExperimentConfig load_config_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        raise(errc::config, std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) raise(errc::config, "config: top level must be an object");

    static const char* known[] = {"alpha",       "conditions",  "eps_schedule", "family",
                                  "horizon",     "m_schedule",  "master_seed",  "prior",
                                  "pstar",       "replications", "shell_j_max", "truth"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool ok = false;
        for (const char* name : known) ok = ok || it.key() == name;
        if (!ok) config_error(it.key(), "unknown field");
    }

    ExperimentConfig config;

    if (!root.contains("truth")) config_error("truth", "missing");
    std::vector<double> truth_probs = require_prob_vector(root.at("truth"), "truth");
    try {
        config.truth = FiniteDensity::from_probs(std::move(truth_probs));
    } catch (const Error& e) {
        config_error("truth", e.what());
    }

    if (!root.contains("family") || !root.at("family").is_array() || root.at("family").empty())
        config_error("family", "expected a non-empty array of {label, probs} records");
    std::vector<FiniteDensity> members;
    std::vector<std::string> labels;
    const json& fam = root.at("family");
    for (std::size_t i = 0; i < fam.size(); ++i) {
        const std::string field = "family[" + std::to_string(i) + "]";
        const json& record = fam[i];
        if (!record.is_object() || !record.contains("probs"))
            config_error(field, "expected an object with a 'probs' array");
        std::vector<double> probs = require_prob_vector(record.at("probs"), field + ".probs");
        try {
            members.push_back(FiniteDensity::from_probs(std::move(probs)));
        } catch (const Error& e) {
            config_error(field + ".probs", e.what());
        }
        labels.push_back(record.value("label", "member_" + std::to_string(i)));
        if (members.back().alphabet_size() != config.truth.alphabet_size())
            config_error(field + ".probs", "alphabet size differs from the truth");
    }
    try {
        config.family = std::make_shared<const ModelFamily>(
            ModelFamily::from_members(std::move(members), std::move(labels)));
    } catch (const Error& e) {
        config_error("family", e.what());
    }

    if (root.contains("prior")) {
        std::vector<double> weights = require_prob_vector(root.at("prior"), "prior");
        if (weights.size() != config.family->size())
            config_error("prior", "length does not match the family");
        try {
            config.prior = std::make_shared<const Prior>(Prior::from_weights(std::move(weights)));
        } catch (const Error& e) {
            config_error("prior", e.what());
        }
    } else {
        config.prior = std::make_shared<const Prior>(Prior::uniform(config.family->size()));
    }

    if (root.contains("alpha")) {
        config.alpha = require_number(root.at("alpha"), "alpha");
        if (!(config.alpha > 0.0 && config.alpha < 1.0))
            config_error("alpha", "must lie in (0,1)");
    }
    if (root.contains("eps_schedule")) config.eps = parse_eps_schedule(root.at("eps_schedule"));
    if (root.contains("m_schedule")) config.m = parse_m_schedule(root.at("m_schedule"));
    if (root.contains("horizon"))
        config.horizon = require_positive_integer(root.at("horizon"), "horizon");
    if (root.contains("replications"))
        config.replications = require_positive_integer(root.at("replications"), "replications");
    if (root.contains("master_seed")) {
        const json& seed = root.at("master_seed");
        const bool ok = seed.is_number_unsigned() ||
                        (seed.is_number_integer() && seed.get<long long>() >= 0);
        if (!ok) config_error("master_seed", "expected a nonnegative integer");
        config.master_seed = seed.get<std::uint64_t>();
    }
    if (root.contains("shell_j_max"))
        config.shell_j_max = require_positive_integer(root.at("shell_j_max"), "shell_j_max");
    if (root.contains("pstar")) {
        const json& ps = root.at("pstar");
        if (ps.is_string()) {
            if (ps.get<std::string>() != "auto")
                config_error("pstar", "expected \"auto\" or a member index");
        } else if (ps.is_number_integer() && ps.get<long long>() >= 0) {
            config.pstar_index = static_cast<std::size_t>(ps.get<long long>());
            if (*config.pstar_index >= config.family->size())
                config_error("pstar", "index out of range");
        } else {
            config_error("pstar", "expected \"auto\" or a member index");
        }
    }
    if (root.contains("conditions")) {
        const json& cond = root.at("conditions");
        if (!cond.is_object()) config_error("conditions", "expected an object {K, L, C}");
        if (cond.contains("K")) config.condition_k = require_number(cond.at("K"), "conditions.K");
        if (cond.contains("L")) config.condition_l = require_number(cond.at("L"), "conditions.L");
        if (cond.contains("C")) config.condition_c = require_number(cond.at("C"), "conditions.C");
    }

    try {
        config.validate();
    } catch (const Error& e) {
        raise(errc::config, e.what());
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io, "config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_config_text(buffer.str());
}

std::string canonical_config_json(const ExperimentConfig& config) {
    json root;  // nlohmann objects keep keys sorted, which is the canon
    std::vector<double> truth(config.truth.probs().begin(), config.truth.probs().end());
    root["truth"] = truth;
    json fam = json::array();
    for (std::size_t i = 0; i < config.family->size(); ++i) {
        json record;
        record["label"] = config.family->label(i);
        record["probs"] = std::vector<double>(config.family->member(i).probs().begin(),
                                              config.family->member(i).probs().end());
        fam.push_back(std::move(record));
    }
    root["family"] = std::move(fam);
    root["prior"] =
        std::vector<double>(config.prior->weights().begin(), config.prior->weights().end());
    root["alpha"] = config.alpha;
    root["eps_schedule"] = {{"kind", config.eps.name()}, {"c", config.eps.c}};
    root["m_schedule"] = {{"kind", config.m.name()}, {"c", config.m.c}};
    root["horizon"] = config.horizon;
    root["replications"] = config.replications;
    root["master_seed"] = config.master_seed;
    root["shell_j_max"] = config.shell_j_max;
    if (config.pstar_index)
        root["pstar"] = *config.pstar_index;
    else
        root["pstar"] = "auto";
    root["conditions"] = {
        {"K", config.condition_k}, {"L", config.condition_l}, {"C", config.condition_c}};
    return root.dump(2) + "\n";
}

std::string config_checksum(const ExperimentConfig& config) {
    const std::string canon = canonical_config_json(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace ratelab
