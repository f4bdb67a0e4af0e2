#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace esbmix::cli {

enum class Fault { none, ordering_sign };

struct VerifyOptions {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  Fault fault = Fault::none;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;  // compared against threshold; smaller is better
  double threshold = 0.0;
  std::string detail;
};

/// Oracle checks at reduced replicate counts. With Fault::ordering_sign the
/// ordering closed form is evaluated with its correction term's sign
/// flipped, which only the ordering check consumes.
std::vector<CheckResult> run_verification_suite(const VerifyOptions& options);

}  // namespace esbmix::cli
