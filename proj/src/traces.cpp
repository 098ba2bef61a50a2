#include "cxlgpu/traces.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace cxlgpu {

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::kSeq: return "seq";
    case Pattern::kAround: return "around";
    case Pattern::kRand: return "rand";
  }
  return "?";
}

Pattern parse_pattern(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "seq") return Pattern::kSeq;
  if (s == "around") return Pattern::kAround;
  if (s == "rand") return Pattern::kRand;
  throw ConfigError("unknown access pattern '" + std::string(text) + "'");
}

void WorkloadSpec::validate() const {
  if (!(compute_ratio >= 0.0 && compute_ratio <= 1.0)) throw ConfigError("compute_ratio outside [0,1]");
  if (!(load_ratio >= 0.0 && load_ratio <= 1.0)) throw ConfigError("load_ratio outside [0,1]");
  if (footprint < kRequestBytes || footprint % kRequestBytes != 0) {
    throw ConfigError("footprint must be a positive multiple of 64");
  }
  if (pattern == Pattern::kAround && walk_bytes < kRequestBytes) {
    throw ConfigError("walk_bytes must be at least 64");
  }
  if (pattern == Pattern::kAround && dwell == 0) throw ConfigError("dwell must be positive");
  if (compute_ns == 0) throw ConfigError("compute_ns must be positive");
}

namespace {

class AddressStream {
 public:
  AddressStream(const WorkloadSpec& spec, std::mt19937_64& rng)
      : spec_(spec), rng_(rng), lines_(spec.footprint / kRequestBytes) {}

  Hpa next() {
    switch (spec_.pattern) {
      case Pattern::kSeq: {
        const Hpa a = (cursor_ % lines_) * kRequestBytes;
        ++cursor_;
        return a;
      }
      case Pattern::kRand:
        return std::uniform_int_distribution<std::uint64_t>(0, lines_ - 1)(rng_) * kRequestBytes;
      case Pattern::kAround: {
        const auto reach = static_cast<std::int64_t>(spec_.walk_bytes / kRequestBytes);
        const auto last = static_cast<std::int64_t>(lines_ - 1);
        if (cursor_ % spec_.dwell == 0) {
          center_ = std::uniform_int_distribution<std::int64_t>(0, last)(rng_);
        }
        ++cursor_;
        const std::int64_t line = center_ + std::uniform_int_distribution<std::int64_t>(-reach, reach)(rng_);
        return static_cast<Hpa>(std::clamp<std::int64_t>(line, 0, last)) * kRequestBytes;
      }
    }
    return 0;
  }

 private:
  const WorkloadSpec& spec_;
  std::mt19937_64& rng_;
  std::uint64_t lines_;
  std::uint64_t cursor_ = 0;
  std::int64_t center_ = 0;
};

}  // namespace

Trace generate(const WorkloadSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AddressStream addresses(spec, rng);
  Trace trace;
  trace.reserve(spec.op_count);
  Ns tick = 0;
  for (std::uint64_t i = 0; i < spec.op_count; ++i) {
    TraceOp op;
    op.tick = tick;
    if (unit(rng) < spec.compute_ratio) {
      op.op = OpKind::kCompute;
      op.addr = 0;
      op.size = static_cast<std::uint32_t>(spec.compute_ns);
      tick += spec.compute_ns;
    } else {
      op.op = unit(rng) < spec.load_ratio ? OpKind::kLoad : OpKind::kStore;
      op.addr = addresses.next();
      op.size = kRequestBytes;
      tick += spec.issue_ns;
    }
    trace.push_back(op);
  }
  return trace;
}

namespace {

struct PresetRow {
  std::string_view name;
  Pattern pattern;
  double compute;
  double load;
};

// Per-kernel op mix; patterns follow each
// kernel's dominant access behavior.
constexpr std::array<PresetRow, 11> kPresets{{
    {"rsum", Pattern::kSeq, 0.314, 0.533},
    {"stencil", Pattern::kAround, 0.375, 0.725},
    {"sort", Pattern::kAround, 0.381, 0.987},
    {"gemm", Pattern::kSeq, 0.116, 0.999},
    {"vadd", Pattern::kSeq, 0.156, 0.691},
    {"saxpy", Pattern::kSeq, 0.162, 0.692},
    {"conv3", Pattern::kAround, 0.218, 0.786},
    {"path", Pattern::kRand, 0.270, 0.927},
    {"cfd", Pattern::kRand, 0.209, 0.426},
    {"gauss", Pattern::kAround, 0.235, 0.485},
    {"bfs", Pattern::kRand, 0.293, 0.432},
}};

struct Composite {
  std::string_view name;
  std::array<std::string_view, 3> parts;
  std::size_t count;
};
constexpr std::array<Composite, 2> kComposites{{
    {"gnn", {"bfs", "vadd", "gemm"}, 3},
    {"mri", {"sort", "conv3", ""}, 2},
}};

const Composite* find_composite(std::string_view name) {
  for (const auto& c : kComposites) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  for (const auto& c : kComposites) out.emplace_back(c.name);
  return out;
}

WorkloadSpec preset(std::string_view name) {
  if (const Composite* c = find_composite(name)) {
    WorkloadSpec spec = preset(c->parts[0]);
    spec.name = std::string(name);
    return spec;
  }
  for (const auto& p : kPresets) {
    if (p.name == name) {
      WorkloadSpec spec;
      spec.name = std::string(name);
      spec.pattern = p.pattern;
      spec.compute_ratio = p.compute;
      spec.load_ratio = p.load;
      return spec;
    }
  }
  throw ConfigError("unknown workload preset '" + std::string(name) + "'");
}

Trace generate_preset(std::string_view name, std::uint64_t footprint, std::uint64_t op_count,
                      std::uint64_t seed) {
  const Composite* c = find_composite(name);
  if (c == nullptr) {
    WorkloadSpec spec = preset(name);
    spec.footprint = footprint;
    spec.op_count = op_count;
    spec.seed = seed;
    return generate(spec);
  }
  // Segments run back to back over the same footprint.
  Trace out;
  Ns base = 0;
  for (std::size_t i = 0; i < c->count; ++i) {
    WorkloadSpec spec = preset(c->parts[i]);
    spec.footprint = footprint;
    spec.op_count = op_count / c->count + (i < op_count % c->count ? 1 : 0);
    spec.seed = seed + i;
    Trace seg = generate(spec);
    Ns last_end = base;
    for (auto op : seg) {
      op.tick += base;
      last_end = op.tick + (op.op == OpKind::kCompute ? op.size : spec.issue_ns);
      out.push_back(op);
    }
    base = last_end;
  }
  return out;
}

namespace {

template <typename T>
bool parse_number(std::string_view tok, T& out, int base = 10) {
  if (base == 16 && tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
    tok.remove_prefix(2);
  }
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out, base);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  Ns last_tick = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 4) throw TraceError(lineno, "expected 4 fields: tick_ns op addr_hex size");
    TraceOp op;
    if (!parse_number(tok[0], op.tick)) throw TraceError(lineno, "bad tick '" + tok[0] + "'");
    if (tok[1] == "L") {
      op.op = OpKind::kLoad;
    } else if (tok[1] == "S") {
      op.op = OpKind::kStore;
    } else if (tok[1] == "C") {
      op.op = OpKind::kCompute;
    } else {
      throw TraceError(lineno, "unknown op '" + tok[1] + "'");
    }
    if (!parse_number(tok[2], op.addr, 16)) throw TraceError(lineno, "bad address '" + tok[2] + "'");
    if (!parse_number(tok[3], op.size)) throw TraceError(lineno, "bad size '" + tok[3] + "'");
    if (op.op != OpKind::kCompute) {
      if (op.size == 0 || op.size > kRequestBytes ||
          op.addr / kRequestBytes != (op.addr + op.size - 1) / kRequestBytes) {
        throw TraceError(lineno, "memory access must lie within one 64B line");
      }
    }
    if (!trace.empty() && op.tick < last_tick) {
      throw TraceError(lineno, "tick " + tok[0] + " is before the previous tick");
    }
    last_tick = op.tick;
    trace.push_back(op);
  }
  return trace;
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

void dump_trace(const Trace& trace, std::ostream& out) {
  for (const auto& op : trace) {
    std::ostringstream addr;
    addr << std::hex << op.addr;
    out << op.tick << ' ' << static_cast<char>(op.op) << " 0x" << addr.str() << ' ' << op.size
        << '\n';
  }
}

double TraceStats::compute_ratio() const {
  const auto total = loads + stores + computes;
  return total == 0 ? 0.0 : static_cast<double>(computes) / static_cast<double>(total);
}

double TraceStats::load_ratio() const {
  const auto mem = loads + stores;
  return mem == 0 ? 0.0 : static_cast<double>(loads) / static_cast<double>(mem);
}

TraceStats trace_stats(const Trace& trace) {
  TraceStats s;
  for (const auto& op : trace) {
    switch (op.op) {
      case OpKind::kLoad: ++s.loads; break;
      case OpKind::kStore: ++s.stores; break;
      case OpKind::kCompute: ++s.computes; break;
    }
  }
  return s;
}

}  // namespace cxlgpu
