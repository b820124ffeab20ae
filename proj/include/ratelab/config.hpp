#ifndef RATELAB_CONFIG_HPP
#define RATELAB_CONFIG_HPP

#include <string>

#include "ratelab/experiment.hpp"

namespace ratelab {

/// Parses a JSON config. Validation reports the first violation with its
/// field path (family members by record index). Schema documented in the
/// README; omitted fields take the documented defaults.
ExperimentConfig load_config_text(const std::string& json_text);

/// Reads and parses a config file.
ExperimentConfig load_config(const std::string& path);

/// Canonical serialization: sorted keys, two-space indent, trailing newline.
/// load(canonical(c)) == c, and canonical(load(canonical(c))) is byte-stable.
std::string canonical_config_json(const ExperimentConfig& config);

/// FNV-1a 64 checksum of the canonical form, as "fnv1a64:<hex>".
std::string config_checksum(const ExperimentConfig& config);

} // namespace ratelab

#endif
