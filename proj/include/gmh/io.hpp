/*
 * Copyright 2026 The gmh Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gmh/diagnostics.hpp"
#include "gmh/error.hpp"
#include "gmh/trace.hpp"

namespace gmh::io {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("cannot parse integer '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Headered CSV: iteration, coord_0..coord_{n-1}, log_density, accepted,
/// proposals_evaluated. Iterations are numbered from 1.
inline void write_trace_csv(std::ostream& out, const ChainTrace& trace) {
  out << "iteration";
  for (Index j = 0; j < trace.dimension(); ++j) out << ",coord_" << j;
  out << ",log_density,accepted,proposals_evaluated\n";
  for (Index i = 0; i < trace.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << (i + 1);
    for (Index j = 0; j < trace.dimension(); ++j) out << ',' << format_double(trace.samples(i, j));
    out << ',' << format_double(trace.log_density[k]) << ',' << static_cast<int>(trace.accepted[k]) << ','
        << trace.proposals_evaluated[k] << '\n';
  }
}

/// Parses a trace written by write_trace_csv. Throws ContractViolation on a
/// malformed or empty file.
inline ChainTrace read_trace_csv(std::istream& in, const std::string& name = "trace") {
  std::string line;
  if (!std::getline(in, line)) throw ContractViolation(name + ": empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.size() < 5 || header.front() != "iteration" || header[header.size() - 3] != "log_density" ||
      header[header.size() - 2] != "accepted" || header.back() != "proposals_evaluated")
    throw ContractViolation(name + ": unrecognized trace header");
  const auto dim = static_cast<Index>(header.size() - 4);

  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> accepted;
  std::vector<double> log_density;
  std::vector<std::int64_t> proposals;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw ContractViolation(name + ": wrong field count on line " + std::to_string(line_no));
    try {
      std::vector<double> row(static_cast<std::size_t>(dim));
      for (Index j = 0; j < dim; ++j) row[static_cast<std::size_t>(j)] = parse_double(fields[1 + static_cast<std::size_t>(j)]);
      rows.push_back(std::move(row));
      log_density.push_back(parse_double(fields[fields.size() - 3]));
      const auto a = parse_int(fields[fields.size() - 2]);
      if (a != 0 && a != 1) throw ConfigError("accepted flag must be 0 or 1");
      accepted.push_back(static_cast<std::uint8_t>(a));
      proposals.push_back(parse_int(fields.back()));
    } catch (const ConfigError& e) {
      throw ContractViolation(name + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rows.empty()) throw ContractViolation(name + ": trace has no rows");
  ChainTrace trace(static_cast<Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < dim; ++j) trace.samples(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  trace.accepted = std::move(accepted);
  trace.log_density = std::move(log_density);
  trace.proposals_evaluated = std::move(proposals);
  trace.validate();
  return trace;
}

inline ChainTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractViolation("cannot open trace " + path.string());
  return read_trace_csv(in, path.string());
}

/// One observation per line at full round-trip precision.
inline void write_dataset_csv(std::ostream& out, const std::vector<double>& y) {
  for (double v : y) out << format_double(v) << '\n';
}

inline std::vector<double> read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  std::vector<double> y;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    y.push_back(parse_double(line));
  }
  if (y.empty()) throw ConfigError("dataset " + path.string() + " is empty");
  return y;
}

/// Writes content to path through a temporary file in the same directory and
/// an atomic rename, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw NumericalError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Per-coordinate summary of one trace.
struct SummaryRow {
  std::string trace;
  Index coordinate = 0;
  double mean = 0.0;
  double var = 0.0;
  double tau = 0.0;
  double ess = 0.0;
  double acceptance_rate = 0.0;
};

inline std::vector<SummaryRow> summarize_trace(const ChainTrace& trace, const std::string& name) {
  std::vector<SummaryRow> out;
  const auto m = static_cast<double>(trace.size());
  for (Index j = 0; j < trace.dimension(); ++j) {
    const Vector x = trace.samples.col(j);
    SummaryRow r;
    r.trace = name;
    r.coordinate = j;
    r.mean = x.mean();
    r.var = m > 1 ? (x.array() - r.mean).square().sum() / (m - 1.0) : 0.0;
    r.tau = iact_sokal(x).tau;
    r.ess = m / r.tau;
    r.acceptance_rate = trace.acceptance_rate();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "trace,coordinate,mean,var,tau,ess,acceptance_rate\n";
  for (const auto& r : rows)
    out << r.trace << ',' << r.coordinate << ',' << format_double(r.mean) << ',' << format_double(r.var) << ','
        << format_double(r.tau) << ',' << format_double(r.ess) << ',' << format_double(r.acceptance_rate) << '\n';
  return out.str();
}

inline std::string json_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

/// JSON lines, one object per row.
inline std::string summary_json(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows)
    out << "{\"trace\":\"" << json_escape(r.trace) << "\",\"coordinate\":" << r.coordinate
        << ",\"mean\":" << format_double(r.mean) << ",\"var\":" << format_double(r.var)
        << ",\"tau\":" << format_double(r.tau) << ",\"ess\":" << format_double(r.ess)
        << ",\"acceptance_rate\":" << format_double(r.acceptance_rate) << "}\n";
  return out.str();
}

inline std::string moment_report_csv(const MomentReport& report) {
  std::ostringstream out;
  out << "coordinate,mean,var,tau,ess,z_mean,z_var\n";
  for (const auto& r : report.rows)
    out << r.coordinate << ',' << format_double(r.mean) << ',' << format_double(r.var) << ','
        << format_double(r.tau) << ',' << format_double(r.ess) << ',' << format_double(r.z_mean) << ','
        << format_double(r.z_var) << '\n';
  return out.str();
}

inline std::string moment_report_json(const MomentReport& report) {
  std::ostringstream out;
  for (const auto& r : report.rows)
    out << "{\"coordinate\":" << r.coordinate << ",\"mean\":" << format_double(r.mean)
        << ",\"var\":" << format_double(r.var) << ",\"tau\":" << format_double(r.tau)
        << ",\"ess\":" << format_double(r.ess) << ",\"z_mean\":" << format_double(r.z_mean)
        << ",\"z_var\":" << format_double(r.z_var) << "}\n";
  return out.str();
}

}  // namespace gmh::io
