#pragma once

/// @file run_config.hpp
/// Run configuration (JSON file, overridable field by field) and the manifest
/// written next to every stage output.

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgtopo/error.hpp"
#include "kgtopo/llm_gateway.hpp"
#include "kgtopo/predictor.hpp"
#include "kgtopo/prompt_templates.hpp"
#include "kgtopo/topo_paths.hpp"

namespace kgtopo {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr std::string_view kManifestSchema = "kgtopo.manifest/1";

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  std::string mock_script;
  std::string base_url = "https://api.openai.com/v1";

  bool operator==(const BackendConfig&) const = default;
};

struct RunConfig {
  std::vector<std::string> graphs;  // merged in order
  std::string test;
  std::string ontology;
  std::string cache_dir;
  std::string out;
  std::string variant = "Vanilla";
  std::vector<std::string> modes{"tail"};
  TournamentConfig tournament;
  ModelSettings model;
  BackendConfig backend;
  std::uint64_t seed = 0;
  std::size_t n_samples = 50;
  std::size_t max_in_flight = 1;
  PathLimits paths;
  std::size_t max_grounded = 16;
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
  return {
      {"graphs", c.graphs},
      {"test", c.test},
      {"ontology", c.ontology},
      {"cache_dir", c.cache_dir},
      {"out", c.out},
      {"variant", c.variant},
      {"modes", c.modes},
      {"tournament",
       {{"batch_size", c.tournament.batch_size},
        {"winners_per_batch", c.tournament.winners_per_batch},
        {"shortlist_cap", c.tournament.shortlist_cap},
        {"mode", tournament_mode_name(c.tournament.mode)}}},
      {"model",
       {{"model_id", c.model.model_id},
        {"temperature", c.model.temperature},
        {"max_output_tokens", c.model.max_output_tokens}}},
      {"backend",
       {{"kind", c.backend.kind}, {"mock_script", c.backend.mock_script}, {"base_url", c.backend.base_url}}},
      {"seed", c.seed},
      {"n_samples", c.n_samples},
      {"max_in_flight", c.max_in_flight},
      {"paths", {{"max_hops", c.paths.max_hops}, {"max_paths", c.paths.max_paths}}},
      {"max_grounded", c.max_grounded},
  };
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw Error(Errc::Config, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j[key].get<T>();
}

}  // namespace detail

/// Applies the keys present in `j` on top of `base`.
inline RunConfig apply_run_config_json(RunConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::Config, "config must be a JSON object");
  try {
    detail::reject_unknown_keys(j,
                                {"graphs", "test", "ontology", "cache_dir", "out", "variant", "modes",
                                 "tournament", "model", "backend", "seed", "n_samples",
                                 "max_in_flight", "paths", "max_grounded"},
                                "config");
    detail::read_if(j, "graphs", base.graphs);
    detail::read_if(j, "test", base.test);
    detail::read_if(j, "ontology", base.ontology);
    detail::read_if(j, "cache_dir", base.cache_dir);
    detail::read_if(j, "out", base.out);
    detail::read_if(j, "variant", base.variant);
    detail::read_if(j, "modes", base.modes);
    detail::read_if(j, "seed", base.seed);
    detail::read_if(j, "n_samples", base.n_samples);
    detail::read_if(j, "max_in_flight", base.max_in_flight);
    detail::read_if(j, "max_grounded", base.max_grounded);
    if (j.contains("tournament")) {
      const auto& t = j["tournament"];
      detail::reject_unknown_keys(t, {"batch_size", "winners_per_batch", "shortlist_cap", "mode"},
                                  "tournament");
      detail::read_if(t, "batch_size", base.tournament.batch_size);
      detail::read_if(t, "winners_per_batch", base.tournament.winners_per_batch);
      detail::read_if(t, "shortlist_cap", base.tournament.shortlist_cap);
      if (t.contains("mode")) base.tournament.mode = parse_tournament_mode(t["mode"].get<std::string>());
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      detail::reject_unknown_keys(m, {"model_id", "temperature", "max_output_tokens"}, "model");
      detail::read_if(m, "model_id", base.model.model_id);
      detail::read_if(m, "temperature", base.model.temperature);
      detail::read_if(m, "max_output_tokens", base.model.max_output_tokens);
    }
    if (j.contains("backend")) {
      const auto& b = j["backend"];
      detail::reject_unknown_keys(b, {"kind", "mock_script", "base_url"}, "backend");
      detail::read_if(b, "kind", base.backend.kind);
      detail::read_if(b, "mock_script", base.backend.mock_script);
      detail::read_if(b, "base_url", base.backend.base_url);
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      detail::reject_unknown_keys(p, {"max_hops", "max_paths"}, "paths");
      detail::read_if(p, "max_hops", base.paths.max_hops);
      detail::read_if(p, "max_paths", base.paths.max_paths);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("config: ") + e.what());
  }
  return base;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open config '" + path + "'");
  try {
    return apply_run_config_json(RunConfig{}, nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, "config '" + path + "': " + e.what());
  }
}

inline void require_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw Error(Errc::Config, std::string(what) + " path is not set");
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(Errc::Config, std::string(what) + " '" + path + "' does not exist");
  }
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Io, "SHA-256 init failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

struct Manifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
};

inline std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

/// Inputs and outputs are recorded with their SHA-256 digests.
inline nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& p : m.inputs) inputs[p] = sha256_file(p);
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& p : m.outputs) outputs[p] = sha256_file(p);
  return {{"schema", kManifestSchema},
          {"tool", "kgtopo"},
          {"tool_version", kToolVersion},
          {"prompt_version", templates::kVersion},
          {"command", m.command},
          {"config", m.config},
          {"config_digest", sha256_hex(m.config.dump())},
          {"inputs", std::move(inputs)},
          {"outputs", std::move(outputs)},
          {"seed", m.seed},
          {"backend_calls", m.backend_calls},
          {"cache_hits", m.cache_hits}};
}

inline void write_manifest(const Manifest& m, const std::string& output) {
  const auto path = manifest_path_for(output);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << manifest_to_json(m).dump(2) << "\n";
}

}  // namespace kgtopo
