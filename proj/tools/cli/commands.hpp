#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace esbmix::cli {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::filesystem::path out = ".";
  unsigned threads = 1;
  bool mc_fallback = false;
  std::optional<bool> header;
  std::optional<std::string> data;
  std::optional<std::string> inject_fault;
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

/// Each command returns the process exit status: 0 on success, 1 when a
/// verification check fails. Configuration and data problems throw
/// ConfigError / DataError before any output is written.
int cmd_prior_kn(const json& config, const RunOptions& options);
int cmd_prior_ekn(const json& config, const RunOptions& options);
int cmd_order_prob(const json& config, const RunOptions& options);
int cmd_alloc_prob(const json& config, const RunOptions& options);
int cmd_fit(const json& config, const RunOptions& options);
int cmd_verify(const json& config, const RunOptions& options);

}  // namespace esbmix::cli
