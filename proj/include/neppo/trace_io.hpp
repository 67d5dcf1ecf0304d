#ifndef NEPPO_TRACE_IO_HPP
#define NEPPO_TRACE_IO_HPP

#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "neppo/algorithm.hpp"

namespace neppo {

/// Shortest text that round-trips a binary64 value.
inline std::string format_double(double x) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Column names of the trace, in order:
/// iter, w_0..w_{p-1}, F_tilde_hat, F_tilde_check, F_1..F_N, dJ_1..dJ_N,
/// dPhi_1..dPhi_N, regret_max, J_1..J_N. Players are numbered from 1.
inline std::vector<std::string> trace_columns(std::size_t num_params, std::size_t num_players) {
  std::vector<std::string> cols{"iter"};
  for (std::size_t k = 0; k < num_params; ++k) cols.push_back("w_" + std::to_string(k));
  cols.emplace_back("F_tilde_hat");
  cols.emplace_back("F_tilde_check");
  for (const char* prefix : {"F_", "dJ_", "dPhi_"})
    for (std::size_t i = 1; i <= num_players; ++i) cols.push_back(prefix + std::to_string(i));
  cols.emplace_back("regret_max");
  for (std::size_t i = 1; i <= num_players; ++i) cols.push_back("J_" + std::to_string(i));
  return cols;
}

/// Values of one row in trace_columns order. w is the value after the update.
inline std::vector<double> trace_values(const IterationTrace& row) {
  std::vector<double> v{static_cast<double>(row.iteration)};
  v.insert(v.end(), row.w_after.begin(), row.w_after.end());
  v.push_back(row.f_tilde_hat);
  v.push_back(row.f_tilde_check);
  v.insert(v.end(), row.F_hat.begin(), row.F_hat.end());
  v.insert(v.end(), row.dJ.begin(), row.dJ.end());
  v.insert(v.end(), row.dPhi.begin(), row.dPhi.end());
  v.push_back(row.regret_max);
  v.insert(v.end(), row.J.begin(), row.J.end());
  return v;
}

inline std::string trace_to_csv(std::span<const IterationTrace> trace, std::size_t num_params,
                                std::size_t num_players) {
  const auto cols = trace_columns(num_params, num_players);
  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  for (const auto& row : trace) {
    const auto values = trace_values(row);
    out += std::to_string(row.iteration);
    for (std::size_t c = 1; c < values.size(); ++c) out += "," + format_double(values[c]);
    out += '\n';
  }
  return out;
}

inline std::string trace_to_jsonl(std::span<const IterationTrace> trace, std::size_t num_params,
                                  std::size_t num_players) {
  const auto cols = trace_columns(num_params, num_players);
  std::string out;
  for (const auto& row : trace) {
    const auto values = trace_values(row);
    nlohmann::ordered_json j;
    j[cols[0]] = row.iteration;
    for (std::size_t c = 1; c < cols.size(); ++c) j[cols[c]] = values[c];
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace neppo

#endif  // NEPPO_TRACE_IO_HPP
