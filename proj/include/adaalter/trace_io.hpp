#pragma once

#include <iosfwd>
#include <string>

#include "adaalter/cluster.hpp"

namespace adaalter {

inline constexpr const char* kTraceHeader =
    "t,loss_avg_model,grad_norm_sq_avg_model,eta_t,comm_floats_cum,sync_round_flag";

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);

/// Throws UsageError on a malformed header or row.
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::string& path);

}  // namespace adaalter
