#include "adaalter/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace adaalter {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvariantError("format_double: conversion failed");
  return std::string(buf, end);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace.rows) {
    out << r.t << ',' << format_double(r.loss_avg_model) << ','
        << format_double(r.grad_norm_sq_avg_model) << ',' << format_double(r.eta_t) << ','
        << r.comm_floats_cum << ',' << (r.sync_round ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  write_trace_csv(out, trace);
}

namespace {

template <typename T>
T parse_field(const std::string& text, std::size_t line, const char* name) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw UsageError("trace line " + std::to_string(line) + ": bad " + name + " '" + text + "'");
  }
  return value;
}

}  // namespace

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw UsageError("trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw UsageError("trace: unexpected header '" + line + "'");

  Trace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) {
      throw UsageError("trace line " + std::to_string(lineno) + ": expected 6 columns");
    }
    TraceRow r;
    r.t = parse_field<std::int64_t>(cells[0], lineno, "t");
    r.loss_avg_model = parse_field<double>(cells[1], lineno, "loss_avg_model");
    r.grad_norm_sq_avg_model = parse_field<double>(cells[2], lineno, "grad_norm_sq_avg_model");
    r.eta_t = parse_field<double>(cells[3], lineno, "eta_t");
    r.comm_floats_cum = parse_field<std::uint64_t>(cells[4], lineno, "comm_floats_cum");
    const auto flag = parse_field<int>(cells[5], lineno, "sync_round_flag");
    if (flag != 0 && flag != 1) throw UsageError("trace line " + std::to_string(lineno) + ": bad sync flag");
    r.sync_round = flag == 1;
    trace.rows.push_back(r);
  }
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

}  // namespace adaalter
