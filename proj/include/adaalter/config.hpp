#pragma once

#include <cstdint>
#include <string>

#include "adaalter/cluster.hpp"

namespace adaalter {

/// Parses flat `key=value` text ('#' starts a comment). Required keys: algo, n, T, d, eta,
/// and H for periodic local algorithms. Unknown or repeated keys are errors.
/// Throws ConfigError carrying the line number or the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text: every key in a fixed order; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& cfg);

/// FNV-1a over the canonical text with seed, threads and output_dir removed.
std::uint64_t config_hash(const RunConfig& cfg);

/// "<16 hex digits>_s<seed>"; names the run directory and trace file.
std::string run_name(const RunConfig& cfg);

}  // namespace adaalter
