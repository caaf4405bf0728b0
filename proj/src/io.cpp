#include "bmckit/io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bmckit {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotStochastic: return "NotStochastic";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::BadAlpha: return "BadAlpha";
    case ErrorKind::ClusterTooSmall: return "ClusterTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoMixing: return "NoMixing";
    case ErrorKind::DegenerateVectors: return "DegenerateVectors";
    case ErrorKind::FactorizationBreakdown: return "FactorizationBreakdown";
    case ErrorKind::EmptyEmbedding: return "EmptyEmbedding";
    case ErrorKind::NoCenters: return "NoCenters";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::NormalizeUndefined: return "NormalizeUndefined";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace {

constexpr char kMagic[8] = {'B', 'M', 'C', 'T', 'R', 'A', 'J', '1'};

template <typename T>
void write_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  for (size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (!is) throw Error(ErrorKind::Io, "truncated stream");
  T value = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void write_trajectory_binary(std::ostream& os, const Trajectory& traj) {
  os.write(kMagic, sizeof(kMagic));
  write_le<uint32_t>(os, traj.n);
  write_le<uint64_t>(os, traj.ell);
  for (uint32_t s : traj.states) write_le<uint32_t>(os, s);
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

Trajectory read_trajectory_binary(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::Io, "bad trajectory magic");
  }
  Trajectory traj;
  traj.n = read_le<uint32_t>(is);
  traj.ell = read_le<uint64_t>(is);
  traj.states.resize(static_cast<size_t>(traj.ell) + 1);
  for (auto& s : traj.states) {
    s = read_le<uint32_t>(is);
    if (s >= traj.n) throw Error(ErrorKind::Io, "state index out of range");
  }
  return traj;
}

void write_trajectory_text(std::ostream& os, const Trajectory& traj) {
  for (uint32_t s : traj.states) os << s << '\n';
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

Trajectory read_trajectory_text(std::istream& is, uint32_t n) {
  Trajectory traj;
  uint32_t s;
  uint32_t max_state = 0;
  while (is >> s) {
    traj.states.push_back(s);
    max_state = std::max(max_state, s);
  }
  if (traj.states.size() < 2) throw Error(ErrorKind::Io, "trajectory too short");
  traj.ell = traj.states.size() - 1;
  traj.n = n > 0 ? n : max_state + 1;
  if (max_state >= traj.n) throw Error(ErrorKind::Io, "state index out of range");
  return traj;
}

void save_trajectory(const std::string& path, const Trajectory& traj, bool text) {
  std::ofstream os(path, text ? std::ios::out : std::ios::out | std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  if (text) {
    write_trajectory_text(os, traj);
  } else {
    write_trajectory_binary(os, traj);
  }
}

Trajectory load_trajectory(const std::string& path, uint32_t n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (is && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0) {
    is.seekg(0);
    return read_trajectory_binary(is);
  }
  is.clear();
  is.seekg(0);
  return read_trajectory_text(is, n);
}

std::string params_to_json(const BmcParams& params) {
  nlohmann::json j;
  j["K"] = params.k;
  auto p = nlohmann::json::array();
  for (int i = 0; i < params.k; ++i) {
    auto row = nlohmann::json::array();
    for (int t = 0; t < params.k; ++t) row.push_back(params.p(i, t));
    p.push_back(row);
  }
  j["p"] = p;
  auto alpha = nlohmann::json::array();
  for (int i = 0; i < params.k; ++i) alpha.push_back(params.alpha(i));
  j["alpha"] = alpha;
  return j.dump();
}

BmcParams params_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad params JSON: ") + e.what());
  }
  BmcParams params;
  try {
    params.k = j.at("K").get<int>();
    auto p = j.at("p");
    auto alpha = j.at("alpha");
    if (static_cast<int>(p.size()) != params.k ||
        static_cast<int>(alpha.size()) != params.k) {
      throw Error(ErrorKind::Config, "params dimensions inconsistent with K");
    }
    params.p.resize(params.k, params.k);
    for (int i = 0; i < params.k; ++i) {
      if (static_cast<int>(p[i].size()) != params.k) {
        throw Error(ErrorKind::Config, "p is not square");
      }
      for (int t = 0; t < params.k; ++t) params.p(i, t) = p[i][t].get<double>();
    }
    params.alpha.resize(params.k);
    for (int i = 0; i < params.k; ++i) params.alpha(i) = alpha[i].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad params JSON: ") + e.what());
  }
  return params;
}

void write_counts_coord(std::ostream& os, const CountMatrix& counts) {
  os << counts.n << ' ' << counts.ell << '\n';
  // sorted for reproducible output
  std::vector<uint64_t> keys;
  keys.reserve(counts.entries.size());
  for (const auto& [key, v] : counts.entries) {
    if (v != 0.0) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  for (uint64_t key : keys) {
    os << key / counts.n << ' ' << key % counts.n << ' '
       << counts.entries.at(key) << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

CountMatrix read_counts_coord(std::istream& is) {
  CountMatrix counts;
  if (!(is >> counts.n >> counts.ell)) {
    throw Error(ErrorKind::Io, "bad counts header");
  }
  uint32_t x, y;
  double v;
  while (is >> x >> y >> v) {
    if (x >= counts.n || y >= counts.n) {
      throw Error(ErrorKind::Io, "count index out of range");
    }
    counts.add(x, y, v);
  }
  return counts;
}

std::vector<int32_t> read_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<int32_t> labels;
  int32_t v;
  while (is >> v) labels.push_back(v);
  if (labels.empty()) throw Error(ErrorKind::Io, "no labels in " + path);
  return labels;
}

void write_labels(const std::string& path, const std::vector<int32_t>& labels) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  for (int32_t l : labels) os << l << '\n';
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

}  // namespace bmckit
