#ifndef RATELAB_ERRORS_HPP
#define RATELAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ratelab {

enum class errc {
    dimension_mismatch,    // densities/vectors over different alphabets or misaligned
    domain,                // input outside the mathematical domain (zero reference on support, ...)
    validation,            // malformed density/prior/config values
    io,                    // file not found, unreadable, unwritable
    size_limit,            // exact-mode instance too large
    no_projection,         // every family member at infinite divergence
    projection_tie,        // unique minimizer required but a tie was found
    null_conditioning,     // conditioning on a set of posterior mass zero
    undefined_posterior,   // total evidence is zero, posterior undefined
    uncoverable,           // a target index cannot be certified even as a singleton
    unresolved,            // optimizer hit its iteration cap above gap tolerance
    config,                // config-file level problem
    usage,                 // bad command-line usage
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& msg) { throw Error(code, msg); }

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::domain: return "domain";
    case errc::validation: return "validation";
    case errc::io: return "io";
    case errc::size_limit: return "size_limit";
    case errc::no_projection: return "no_projection";
    case errc::projection_tie: return "projection_tie";
    case errc::null_conditioning: return "null_conditioning";
    case errc::undefined_posterior: return "undefined_posterior";
    case errc::uncoverable: return "uncoverable";
    case errc::unresolved: return "unresolved";
    case errc::config: return "config";
    case errc::usage: return "usage";
    }
    return "unknown";
}

} // namespace ratelab

#endif
