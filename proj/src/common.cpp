#include "pertree/common.hpp"

#include <charconv>
#include <cmath>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <numeric>
#include <thread>

namespace pertree {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kMissingColumn: return "missing-column";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kBounds: return "bounds";
    case ErrorCode::kUndefinedImpurity: return "undefined-impurity";
    case ErrorCode::kUndefinedEstimate: return "undefined-estimate";
    case ErrorCode::kMissingPropensity: return "missing-propensity";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kEmptyMenu: return "empty-menu";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kTimeout: return "timeout";
  }
  return "unknown";
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

void stderr_sink(const std::string& message) { std::cerr << "pertree: warning: " << message << "\n"; }

std::atomic<WarningSink> g_warning_sink{&stderr_sink};

}  // namespace

void set_warning_sink(WarningSink sink) { g_warning_sink.store(sink ? sink : &stderr_sink); }

void warn(const std::string& message) { g_warning_sink.load()(message); }

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t b = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % b);
}

double Rng::normal() {
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t population,
                                                         std::size_t count) {
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  count = std::min(count, population);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + below(population - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PERTREE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace pertree
