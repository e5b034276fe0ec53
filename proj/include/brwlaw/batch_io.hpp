#pragma once

// Serialization of SampleBatch: CSV (index,value[,coupled] with a metadata
// comment line), JSON, and a binary cache. All three round-trip the values
// bit-exactly; CSV omits the depth profiles.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "brwlaw/errors.hpp"
#include "brwlaw/simulator.hpp"

namespace brwlaw {

enum class BatchFormat { csv, json, binary };

inline BatchFormat parse_batch_format(const std::string& name) {
  if (name == "csv") return BatchFormat::csv;
  if (name == "json") return BatchFormat::json;
  if (name == "bin" || name == "binary") return BatchFormat::binary;
  throw DomainError("unknown batch format '" + name + "'");
}

inline nlohmann::ordered_json params_to_json(const ModelParams& p) {
  nlohmann::ordered_json j;
  j["alpha"] = p.alpha;
  j["trunc_T"] = p.trunc_T;
  j["prune_eps"] = p.prune_eps;
  j["n_generations"] = p.n_generations;
  j["seed"] = p.seed;
  j["mode"] = std::string(to_string(p.mode));
  j["bias_budget"] = p.bias_budget;
  j["max_atoms"] = p.max_atoms;
  return j;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.alpha = j.at("alpha").get<double>();
  p.trunc_T = j.at("trunc_T").get<double>();
  p.prune_eps = j.at("prune_eps").get<double>();
  p.n_generations = j.at("n_generations").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.mode = parse_prune_mode(j.at("mode").get<std::string>());
  p.bias_budget = j.at("bias_budget").get<double>();
  p.max_atoms = j.at("max_atoms").get<std::size_t>();
  return p;
}

/// Everything except the sample arrays.
inline nlohmann::ordered_json batch_metadata(const SampleBatch& b) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(b.kind));
  j["params"] = params_to_json(b.params);
  j["n"] = b.values.size();
  j["pruned_mass_bound"] = b.pruned_mass_bound;
  j["residual_variance"] = b.residual_variance;
  j["atoms"] = b.atoms;
  j["tilt"] = b.tilt;
  j["split_s"] = b.split_s;
  j["theta"] = b.theta;
  j["t_slice"] = b.t_slice;
  j["has_coupled"] = !b.coupled.empty();
  j["has_depth_profiles"] = !b.depth_profiles.empty();
  return j;
}

namespace detail {

inline SampleBatch batch_from_metadata(const nlohmann::json& j) {
  SampleBatch b;
  b.kind = parse_sample_kind(j.at("kind").get<std::string>());
  b.params = params_from_json(j.at("params"));
  b.pruned_mass_bound = j.at("pruned_mass_bound").get<double>();
  b.residual_variance = j.at("residual_variance").get<double>();
  b.atoms = j.at("atoms").get<std::size_t>();
  b.tilt = j.at("tilt").get<double>();
  b.split_s = j.at("split_s").get<double>();
  b.theta = j.at("theta").get<double>();
  b.t_slice = j.at("t_slice").get<double>();
  return b;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr char kBinaryMagic[8] = {'B', 'R', 'W', 'L', 'B', 'A', 'T', '1'};

}  // namespace detail

/// CSV: a metadata comment line, a header row, then one row per sample.
/// `preamble`, if nonempty, is written first as its own comment line.
inline void write_batch_csv(std::ostream& out, const SampleBatch& b,
                            const std::string& preamble = {}) {
  if (!preamble.empty()) out << "# " << preamble << '\n';
  out << "# batch " << batch_metadata(b).dump() << '\n';
  const bool coupled = !b.coupled.empty();
  out << (coupled ? "index,value,coupled\n" : "index,value\n");
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    out << i << ',' << detail::format_double(b.values[i]);
    if (coupled) out << ',' << detail::format_double(b.coupled[i]);
    out << '\n';
  }
}

inline SampleBatch read_batch_csv(std::istream& in) {
  std::string line;
  nlohmann::json meta;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (line.rfind("# batch ", 0) == 0) {
      meta = nlohmann::json::parse(line.substr(8));
      have_meta = true;
      continue;
    }
    if (!line.empty() && line[0] == '#') continue;
    break;  // header row
  }
  if (!have_meta) throw DomainError("read_batch_csv: missing '# batch' metadata line");
  SampleBatch b = detail::batch_from_metadata(meta);
  const bool coupled = meta.at("has_coupled").get<bool>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    b.values.push_back(std::stod(cell));
    if (coupled) {
      std::getline(row, cell, ',');
      b.coupled.push_back(std::stod(cell));
    }
  }
  if (b.values.size() != meta.at("n").get<std::size_t>()) {
    throw DomainError("read_batch_csv: row count does not match metadata");
  }
  return b;
}

inline nlohmann::ordered_json batch_to_json(const SampleBatch& b) {
  auto j = batch_metadata(b);
  j["values"] = b.values;
  if (!b.coupled.empty()) j["coupled"] = b.coupled;
  if (!b.depth_profiles.empty()) j["depth_profiles"] = b.depth_profiles;
  return j;
}

inline SampleBatch batch_from_json(const nlohmann::json& j) {
  SampleBatch b = detail::batch_from_metadata(j);
  b.values = j.at("values").get<std::vector<double>>();
  if (j.contains("coupled")) b.coupled = j.at("coupled").get<std::vector<double>>();
  if (j.contains("depth_profiles")) {
    b.depth_profiles = j.at("depth_profiles").get<std::vector<double>>();
  }
  return b;
}

/// Binary cache: magic, metadata length (uint64), metadata JSON, then the
/// values, coupled values and depth profiles as raw native doubles.
inline void write_batch_binary(std::ostream& out, const SampleBatch& b) {
  const std::string meta = batch_metadata(b).dump();
  const std::uint64_t length = meta.size();
  out.write(detail::kBinaryMagic, sizeof detail::kBinaryMagic);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  auto dump = [&out](const std::vector<double>& v) {
    const std::uint64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  dump(b.values);
  dump(b.coupled);
  dump(b.depth_profiles);
}

inline SampleBatch read_batch_binary(std::istream& in) {
  char magic[sizeof detail::kBinaryMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, detail::kBinaryMagic, sizeof magic) != 0) {
    throw DomainError("read_batch_binary: not a batch cache");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  std::string meta(length, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(length));
  SampleBatch b = detail::batch_from_metadata(nlohmann::json::parse(meta));
  auto load = [&in](std::vector<double>& v) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  };
  load(b.values);
  load(b.coupled);
  load(b.depth_profiles);
  if (!in) throw DomainError("read_batch_binary: truncated cache");
  return b;
}

inline void write_batch(std::ostream& out, const SampleBatch& b, BatchFormat format,
                        const std::string& preamble = {}) {
  switch (format) {
    case BatchFormat::csv: write_batch_csv(out, b, preamble); break;
    case BatchFormat::json: out << batch_to_json(b).dump(2) << '\n'; break;
    case BatchFormat::binary: write_batch_binary(out, b); break;
  }
}

}  // namespace brwlaw
