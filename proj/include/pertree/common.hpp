#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pertree {

// Error categories surfaced by the library. The C API maps these one-to-one
// onto pertree_status values.
enum class ErrorCode {
  kUsage = 1,
  kConfig,
  kUnsupported,
  kParse,
  kMissingColumn,
  kDomain,
  kBounds,
  kUndefinedImpurity,
  kUndefinedEstimate,
  kMissingPropensity,
  kInfeasible,
  kEmptyMenu,
  kIo,
  kTimeout,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Stable 64-bit mixer (splitmix64 finalizer over master + golden-ratio
// multiples of stream). Used to derive independent child seeds, e.g. one per
// forest tree, so that adding streams never perturbs existing ones.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

// Seedable generator with portable output. std::mt19937_64 is fully specified
// by the standard; the standard distributions are not, so the sampling helpers
// here are written out explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, bound). bound must be positive.
  std::size_t below(std::size_t bound);
  // Standard normal via Box-Muller (no cached second draw).
  double normal();
  // `count` distinct values from [0, population) in draw order (partial
  // Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                      std::size_t count);

 private:
  std::mt19937_64 engine_;
};

// Non-fatal diagnostics go through a process-wide sink (stderr by default).
using WarningSink = void (*)(const std::string& message);
void set_warning_sink(WarningSink sink);  // nullptr restores the default
void warn(const std::string& message);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Thread count for parallel loops: `requested` if positive, else the
// PERTREE_THREADS environment variable, else hardware concurrency.
int resolve_thread_count(int requested);

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots by the caller so the outcome does not depend on
// scheduling. The exception thrown for the lowest index is rethrown.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body);

}  // namespace pertree

#include "pertree/detail/parallel.hpp"
