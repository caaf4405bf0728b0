#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bmckit/counts.hpp"
#include "bmckit/model.hpp"

namespace bmckit {

// Binary trajectory stream: magic "BMCTRAJ1", then n (u32) and ell (u64),
// then ell + 1 state indices, everything little-endian u32/u64.
void write_trajectory_binary(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_binary(std::istream& is);

// Newline-delimited decimal states. n is not part of the format; readers
// take it explicitly or infer max(state) + 1.
void write_trajectory_text(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_text(std::istream& is, uint32_t n = 0);

void save_trajectory(const std::string& path, const Trajectory& traj,
                     bool text = false);
Trajectory load_trajectory(const std::string& path, uint32_t n = 0);

// {"K": int, "p": [[...]], "alpha": [...]}
std::string params_to_json(const BmcParams& params);
BmcParams params_from_json_text(const std::string& text);

// Coordinate text: header "n ell", then lines "x y count".
void write_counts_coord(std::ostream& os, const CountMatrix& counts);
CountMatrix read_counts_coord(std::istream& is);

// Newline-delimited integer labels.
std::vector<int32_t> read_labels(const std::string& path);
void write_labels(const std::string& path, const std::vector<int32_t>& labels);

}  // namespace bmckit
