#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gerbes {

// Candidate-space scans behind the brute-force cohomology searches.
// Predicates are indexed by a flat candidate counter; the caller decodes the
// index into a cochain (mixed-radix). Both kernels return the *smallest*
// matching index, so parallel and serial runs pick the same witness.

struct ScanResult {
  bool found = false;
  std::uint64_t index = 0;
};

inline constexpr std::uint64_t kNoIndex = std::numeric_limits<std::uint64_t>::max();

template <class Pred>
ScanResult scan_first_serial(std::uint64_t count, Pred&& pred) {
  for (std::uint64_t i = 0; i < count; ++i)
    if (pred(i)) return {true, i};
  return {};
}

template <class Pred>
ScanResult scan_first_parallel(std::uint64_t count, Pred&& pred) {
#ifdef _OPENMP
  std::uint64_t best = kNoIndex;
#pragma omp parallel
  {
    std::uint64_t local = kNoIndex;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
      const auto u = static_cast<std::uint64_t>(i);
      if (u < local && pred(u)) local = u;
    }
#pragma omp critical
    if (local < best) best = local;
  }
  if (best == kNoIndex) return {};
  return {true, best};
#else
  return scan_first_serial(count, pred);
#endif
}

template <class Pred>
std::uint64_t count_matches_serial(std::uint64_t count, Pred&& pred) {
  std::uint64_t n = 0;
  for (std::uint64_t i = 0; i < count; ++i)
    if (pred(i)) ++n;
  return n;
}

template <class Pred>
std::uint64_t count_matches_parallel(std::uint64_t count, Pred&& pred) {
#ifdef _OPENMP
  std::uint64_t n = 0;
#pragma omp parallel for schedule(static) reduction(+ : n)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i)
    if (pred(static_cast<std::uint64_t>(i))) ++n;
  return n;
#else
  return count_matches_serial(count, pred);
#endif
}

/// Scan dispatch used by the library: parallel kernel by default, serial kept
/// as the reference implementation for tests and benchmarks.
enum class ScanMode { Serial, Parallel };

template <class Pred>
ScanResult scan_first(std::uint64_t count, Pred&& pred, ScanMode mode = ScanMode::Parallel) {
  return mode == ScanMode::Serial ? scan_first_serial(count, pred)
                                  : scan_first_parallel(count, pred);
}

template <class Pred>
std::uint64_t count_matches(std::uint64_t count, Pred&& pred, ScanMode mode = ScanMode::Parallel) {
  return mode == ScanMode::Serial ? count_matches_serial(count, pred)
                                  : count_matches_parallel(count, pred);
}

/// Mixed-radix decoding of a flat candidate index into digit slots.
inline void decode_mixed_radix(std::uint64_t index, const std::vector<std::uint32_t>& radices,
                               std::vector<std::uint32_t>& digits) {
  digits.resize(radices.size());
  for (std::size_t k = 0; k < radices.size(); ++k) {
    digits[k] = static_cast<std::uint32_t>(index % radices[k]);
    index /= radices[k];
  }
}

/// Total size of a mixed-radix space, saturating at kNoIndex on overflow.
inline std::uint64_t mixed_radix_size(const std::vector<std::uint32_t>& radices) {
  std::uint64_t n = 1;
  for (auto r : radices) {
    if (r == 0) return 0;
    if (n > kNoIndex / r) return kNoIndex;
    n *= r;
  }
  return n;
}

} // namespace gerbes
