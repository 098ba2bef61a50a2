#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cxlgpu {

/// Simulated time in integer nanoseconds.
using Ns = std::uint64_t;
/// Host physical address in bytes.
using Hpa = std::uint64_t;

inline constexpr std::uint32_t kRequestBytes = 64;   // CXL.mem request granularity
inline constexpr std::uint32_t kSpecUnitBytes = 256; // MemSpecRd offset unit
inline constexpr std::uint32_t kMaxSpecUnits = 4;
inline constexpr std::uint64_t kKiB = 1024;
inline constexpr std::uint64_t kMiB = 1024 * kKiB;
inline constexpr std::uint64_t kGiB = 1024 * kMiB;

constexpr Hpa align_down(Hpa a, std::uint64_t unit) { return a - (a % unit); }

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Raised for malformed wire words or message framing violations.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Internal consistency violation detected while simulating.
class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cxlgpu
