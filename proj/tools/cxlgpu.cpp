// Command-line front end for the GPU memory-expansion simulator.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cxlgpu/config.hpp"
#include "cxlgpu/simulator.hpp"
#include "cxlgpu/traces.hpp"

namespace {

using namespace cxlgpu;
using nlohmann::json;

constexpr const char* kConfigEnv = "CXLGPU_CONFIG";

enum Exit { kOk = 0, kUsage = 2, kConfig = 3, kTrace = 4, kIo = 5, kSim = 6 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string quote(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out;
}

int fail(const char* kind, const std::string& msg, int code) {
  std::cerr << "error: kind=" << kind << " msg=\"" << quote(msg) << "\"\n";
  return code;
}

struct Inputs {
  std::string config_path;
  std::string trace_path;
  std::string workload;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ops;
  std::optional<std::uint64_t> footprint;
};

void add_inputs(CLI::App* cmd, Inputs& in, bool need_trace = true) {
  cmd->add_option("--config", in.config_path, "Scenario config (JSON); defaults to $CXLGPU_CONFIG");
  if (need_trace) {
    cmd->add_option("--trace", in.trace_path, "Trace file: tick_ns op addr_hex size");
  }
  cmd->add_option("--workload", in.workload,
                  "Generator spec: NAME[:key=value,...] with NAME a preset or seq/around/rand");
  cmd->add_option("--seed", in.seed, "Seed override");
  cmd->add_option("--ops", in.ops, "Generated op count (default 100000)");
  cmd->add_option("--footprint", in.footprint, "Generated footprint in bytes (default 10x GPU memory)");
}

ScenarioConfig load_config(const Inputs& in) {
  std::string path = in.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') path = env;
  }
  ScenarioConfig cfg = path.empty() ? ScenarioConfig{} : load_config_file(path);
  if (in.seed) cfg.seed = *in.seed;
  cfg.validate();
  return cfg;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto n = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("workload key '" + key + "' needs an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("workload key '" + key + "' needs a number, got '" + v + "'");
  }
}

WorkloadSpec parse_workload(const std::string& text, const ScenarioConfig& cfg, const Inputs& in,
                            bool& composite) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  WorkloadSpec spec;
  composite = name == "gnn" || name == "mri";
  if (name == "seq" || name == "around" || name == "rand") {
    spec.name = name;
    spec.pattern = parse_pattern(name);
  } else {
    spec = preset(name);
  }
  spec.seed = cfg.seed;
  spec.footprint = 10 * cfg.gpu.local_bytes;
  if (in.ops) spec.op_count = *in.ops;
  if (in.footprint) spec.footprint = *in.footprint;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    for (std::string kv; std::getline(ss, kv, ',');) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("workload option '" + kv + "' is not key=value");
      const std::string k = kv.substr(0, eq);
      const std::string v = kv.substr(eq + 1);
      if (k == "compute") spec.compute_ratio = parse_double(k, v);
      else if (k == "load") spec.load_ratio = parse_double(k, v);
      else if (k == "ops") spec.op_count = parse_u64(k, v);
      else if (k == "footprint") spec.footprint = parse_u64(k, v);
      else if (k == "seed") spec.seed = parse_u64(k, v);
      else if (k == "issue_ns") spec.issue_ns = parse_u64(k, v);
      else if (k == "compute_ns") spec.compute_ns = parse_u64(k, v);
      else if (k == "walk") spec.walk_bytes = parse_u64(k, v);
      else if (k == "dwell") spec.dwell = parse_u64(k, v);
      else if (k == "pattern") spec.pattern = parse_pattern(v);
      else throw ConfigError("unknown workload key '" + k + "'");
    }
    if (composite) throw ConfigError("composite workloads take no options");
  }
  spec.validate();
  return spec;
}

Trace make_trace(const Inputs& in, const ScenarioConfig& cfg, std::string& label) {
  const bool has_trace = !in.trace_path.empty();
  const bool has_workload = !in.workload.empty();
  if (has_trace == has_workload) throw UsageError("give exactly one of --trace or --workload");
  if (has_trace) {
    label = std::filesystem::path(in.trace_path).filename().string();
    return load_trace_file(in.trace_path);
  }
  bool composite = false;
  const WorkloadSpec spec = parse_workload(in.workload, cfg, in, composite);
  label = in.workload;
  if (composite) return generate_preset(spec.name, spec.footprint, spec.op_count, spec.seed);
  return generate(spec);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json summary_row(const RunReport& r) {
  return {
      {"mode", r.mode_label},
      {"normalized_time", r.normalized_time},
      {"end_time_ns", r.end_time},
      {"hit_rate", r.hit_rate()},
      {"load_p50_ns", r.load_latency.p50()},
      {"load_p99_ns", r.load_latency.p99()},
      {"store_p50_ns", r.store_latency.p50()},
      {"store_p99_ns", r.store_latency.p99()},
      {"gc_count", r.gc_count()},
  };
}

void print_table(const std::vector<RunResult>& results, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %12s %9s %12s %12s %12s %12s\n", "mode", "norm_time", "hit_rate",
                "load_p50", "load_p99", "store_p50", "store_p99");
  out << line;
  for (const auto& res : results) {
    const auto& r = res.report;
    std::snprintf(line, sizeof line, "%-12s %12.4f %9.4f %12llu %12llu %12llu %12llu\n", r.mode_label.c_str(),
                  r.normalized_time, r.hit_rate(), static_cast<unsigned long long>(r.load_latency.p50()),
                  static_cast<unsigned long long>(r.load_latency.p99()),
                  static_cast<unsigned long long>(r.store_latency.p50()),
                  static_cast<unsigned long long>(r.store_latency.p99()));
    out << line;
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::ios_base::failure("write to '" + path.string() + "' failed");
}

int cmd_run(const Inputs& in, const std::string& mode, const std::string& out_dir) {
  ScenarioConfig cfg = load_config(in);
  std::string label;
  const Trace trace = make_trace(in, cfg, label);
  RunOptions opts;
  opts.workload_label = label;
  if (!mode.empty()) {
    const ModeSelection sel = parse_mode(mode);
    cfg.apply(sel);
    opts.mode_label = sel.label;
  }
  const RunResult res = simulate(cfg, trace, opts);
  if (out_dir.empty()) {
    std::cout << report_text(res.report);
  } else {
    write_report_files(out_dir, res.report);
    std::cout << summary_row(res.report).dump() << "\n";
  }
  return kOk;
}

int cmd_compare(const Inputs& in, const std::string& modes_arg, const std::string& out_dir) {
  const auto names = split_list(modes_arg);
  if (names.size() < 2) throw UsageError("compare needs at least two modes");
  ScenarioConfig cfg = load_config(in);
  std::vector<ModeSelection> modes;
  for (const auto& n : names) modes.push_back(parse_mode(n));
  std::string label;
  const Trace trace = make_trace(in, cfg, label);
  RunOptions opts;
  opts.workload_label = label;
  const auto results = compare(cfg, modes, trace, opts);
  print_table(results, std::cout);
  if (!out_dir.empty()) {
    json rows = json::array();
    for (const auto& r : results) {
      rows.push_back(summary_row(r.report));
      write_report_files((std::filesystem::path(out_dir) / r.report.mode_label).string(), r.report);
    }
    write_text(std::filesystem::path(out_dir) / "compare.json",
               json{{"schema_version", kReportSchemaVersion}, {"workload", label}, {"rows", rows}}.dump(2) + "\n");
  }
  return kOk;
}

int cmd_sweep(const Inputs& in, const std::string& modes_arg, const std::string& workloads_arg,
              unsigned jobs, const std::string& out_dir) {
  const auto mode_names = split_list(modes_arg);
  const auto workloads = split_list(workloads_arg);
  if (mode_names.empty() || workloads.empty()) throw UsageError("sweep needs --modes and --workloads");
  const ScenarioConfig cfg = load_config(in);
  std::vector<ModeSelection> modes;
  for (const auto& n : mode_names) modes.push_back(parse_mode(n));

  // Generate every trace up front so bad specs fail before any work starts.
  std::vector<Trace> traces;
  for (const auto& w : workloads) {
    Inputs wi = in;
    wi.workload = w;
    std::string label;
    traces.push_back(make_trace(wi, cfg, label));
  }

  std::map<std::string, json> rows;  // key order gives the merge order
  std::map<std::string, RunReport> reports;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < workloads.size();) {
      try {
        RunOptions opts;
        opts.workload_label = workloads[i];
        auto results = compare(cfg, modes, traces[i], opts);
        std::lock_guard lock(mu);
        for (auto& r : results) {
          const std::string key = workloads[i] + "/" + r.report.mode_label;
          rows[key] = summary_row(r.report);
          rows[key]["workload"] = workloads[i];
          reports[key] = std::move(r.report);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(workloads.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  json out_rows = json::array();
  for (const auto& [key, row] : rows) {
    json r = row;
    r["key"] = key;
    out_rows.push_back(r);
  }
  const std::string doc =
      json{{"schema_version", kReportSchemaVersion}, {"rows", out_rows}}.dump(2) + "\n";
  if (out_dir.empty()) {
    std::cout << doc;
  } else {
    write_text(std::filesystem::path(out_dir) / "sweep.json", doc);
    for (const auto& [key, rep] : reports) {
      write_report_files((std::filesystem::path(out_dir) / key).string(), rep);
    }
  }
  return kOk;
}

int cmd_gen_trace(const Inputs& in, const std::string& out_path) {
  const ScenarioConfig cfg = load_config(in);
  std::string label;
  Inputs wi = in;
  if (wi.workload.empty()) throw UsageError("gen-trace needs --workload");
  const Trace trace = make_trace(wi, cfg, label);
  if (out_path.empty() || out_path == "-") {
    dump_trace(trace, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::ios_base::failure("cannot write '" + out_path + "'");
    dump_trace(trace, out);
    if (!out) throw std::ios_base::failure("write to '" + out_path + "' failed");
  }
  return kOk;
}

int cmd_validate(const Inputs& in) {
  const ScenarioConfig cfg = load_config(in);
  std::cout << "ok: schema_version=" << cfg.schema_version << " mode=" << to_string(cfg.mode)
            << " endpoints=" << cfg.endpoints.size() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven simulator of CXL-attached GPU memory expansion"};
  app.require_subcommand(1);

  Inputs in;
  std::string mode;
  std::string modes;
  std::string workloads;
  std::string out;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Simulate one scenario");
  add_inputs(run, in);
  run->add_option("--mode", mode, "GPU_DRAM, UVM, GDS, CXL, CXL_SR, CXL_DS (or CXL_NAIVE/CXL_DYN/CXL_MAX)");
  run->add_option("--out", out, "Output directory for report.json and CSV series");

  auto* cmp = app.add_subcommand("compare", "Run several modes on one trace");
  add_inputs(cmp, in);
  cmp->add_option("--modes", modes, "Comma-separated modes")->required();
  cmp->add_option("--out", out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run modes x workloads in parallel");
  add_inputs(sweep, in, false);
  sweep->add_option("--modes", modes, "Comma-separated modes")->required();
  sweep->add_option("--workloads", workloads, "Comma-separated workload specs")->required();
  sweep->add_option("--jobs", jobs, "Worker threads");
  sweep->add_option("--out", out, "Output directory");

  auto* gen = app.add_subcommand("gen-trace", "Write a generated trace");
  add_inputs(gen, in, false);
  gen->add_option("--out", out, "Output file (default stdout)");

  auto* val = app.add_subcommand("validate-config", "Check a scenario config");
  val->add_option("--config", in.config_path, "Scenario config (JSON); defaults to $CXLGPU_CONFIG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    if (run->parsed()) return cmd_run(in, mode, out);
    if (cmp->parsed()) return cmd_compare(in, modes, out);
    if (sweep->parsed()) return cmd_sweep(in, modes, workloads, jobs, out);
    if (gen->parsed()) return cmd_gen_trace(in, out);
    if (val->parsed()) return cmd_validate(in);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kUsage);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kConfig);
  } catch (const TraceError& e) {
    return fail("trace", e.what(), kTrace);
  } catch (const std::ios_base::failure& e) {
    return fail("io", e.what(), kIo);
  } catch (const SimulationError& e) {
    return fail("simulation", e.what(), kSim);
  } catch (const ProtocolError& e) {
    return fail("simulation", e.what(), kSim);
  } catch (const std::exception& e) {
    return fail("simulation", e.what(), kSim);
  }
  return kUsage;
}
