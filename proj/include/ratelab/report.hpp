#ifndef RATELAB_REPORT_HPP
#define RATELAB_REPORT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ratelab/experiment.hpp"
#include "ratelab/verify.hpp"

namespace ratelab {

/// Everything needed to reproduce a run byte-for-byte: the canonical config,
/// its checksum, the effective options, and the output file list. Every
/// emitted report embeds this record.
struct RunManifest {
    std::string tool_version;
    std::string subcommand;
    std::string config_checksum;
    std::uint64_t master_seed = 0;
    std::string timestamp;  // RFC 3339; pin with --timestamp for byte-identical reruns
    std::string options_json;
    std::vector<std::string> outputs;
    std::string config_json;  // canonical form, embedded

    std::string to_json() const;          // compact single-line form
    std::string header_comment() const;   // "# manifest ..." line for text reports
};

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> replications;
    std::optional<DecayMode> mode;
    std::optional<unsigned> n;  // reference n for cover/conditions/decay/identity
    std::string out_dir;        // empty: no files written
    std::optional<std::string> timestamp;
    unsigned threads = 0;
};

/// A finished verb run: human-readable columnar text, a machine-readable
/// summary, a pass/fail verdict, and the files to emit.
struct Report {
    bool passed = false;
    std::string text;          // columnar report, manifest embedded in the header
    std::string summary_json;  // structured summary, manifest embedded
    std::map<std::string, std::string> files;  // name -> content
    RunManifest manifest;
};

/// Runs one subcommand (project | cover | simulate | verify-identity |
/// verify-decay | conditions | shells) against a validated config and, when
/// out_dir is set, writes every file atomically (temp file + rename).
Report run_verb(const ExperimentConfig& config, const std::string& verb,
                const RunOptions& options);

/// Known subcommand names, for usage text.
std::vector<std::string> known_verbs();

/// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& dir, const std::string& name,
                       const std::string& content);

std::string format_double(double v);  // shortest stable %.17g-based rendering

} // namespace ratelab

#endif
