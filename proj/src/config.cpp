#include "cxlgpu/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

namespace cxlgpu {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kGpuDram: return "GPU_DRAM";
    case Mode::kUvm: return "UVM";
    case Mode::kGds: return "GDS";
    case Mode::kCxl: return "CXL";
    case Mode::kCxlSr: return "CXL_SR";
    case Mode::kCxlDs: return "CXL_DS";
  }
  return "?";
}

ModeSelection parse_mode(std::string_view text) {
  std::string s;
  for (char c : text) {
    s.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  ModeSelection sel;
  sel.label = s;
  if (s == "GPU_DRAM") {
    sel.mode = Mode::kGpuDram;
  } else if (s == "UVM") {
    sel.mode = Mode::kUvm;
  } else if (s == "GDS" || s == "GPUDIRECT") {
    sel.mode = Mode::kGds;
  } else if (s == "CXL") {
    sel.mode = Mode::kCxl;
  } else if (s == "CXL_SR") {
    sel.mode = Mode::kCxlSr;
  } else if (s == "CXL_DS") {
    sel.mode = Mode::kCxlDs;
  } else if (s == "CXL_NAIVE") {
    sel.mode = Mode::kCxlSr;
    sel.policy = SrPolicy::kNaive;
  } else if (s == "CXL_DYN") {
    sel.mode = Mode::kCxlSr;
    sel.policy = SrPolicy::kDynamic;
  } else if (s == "CXL_MAX") {
    sel.mode = Mode::kCxlSr;
    sel.policy = SrPolicy::kMaxGranularity;
  } else {
    throw ConfigError("unknown mode '" + std::string(text) + "'");
  }
  return sel;
}

EndpointConfig EndpointSpec::endpoint_config() const {
  EndpointConfig c;
  c.media = MediaSpec::defaults(media);
  if (read_ns) c.media.read_ns = *read_ns;
  if (write_ns) c.media.write_ns = *write_ns;
  if (bytes_per_ns) c.media.bytes_per_ns = *bytes_per_ns;
  if (channels) c.media.channels = *channels;
  c.cache_bytes = cache_bytes;
  c.cache_hit_ns = cache_hit_ns;
  c.ingress_capacity = ingress_capacity;
  c.gc = gc;
  c.devload = devload;
  return c;
}

void ScenarioConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  if (gpu.local_bytes == 0 || gpu.local_bytes % kSpecUnitBytes != 0) {
    throw ConfigError("gpu.local_bytes must be a positive multiple of 256");
  }
  if (gpu.outstanding == 0) throw ConfigError("gpu.outstanding must be positive");
  if (gpu.read_ns == 0 || gpu.write_ns == 0) throw ConfigError("gpu latencies must be positive");
  Llc probe(gpu.llc);  // validates geometry
  if (host_window_bytes == 0 || host_window_bytes % kSpecUnitBytes != 0) {
    throw ConfigError("host_window_bytes must be a positive multiple of 256");
  }
  if (link.controller_rtt_ns < 2) throw ConfigError("link.controller_rtt_ns must be at least 2");
  if (!(link.bytes_per_ns > 0.0)) throw ConfigError("link.bytes_per_ns must be positive");
  if (endpoints.empty()) throw ConfigError("at least one endpoint is required");
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    const auto& ep = endpoints[i];
    if (ep.size == 0 || ep.size % kSpecUnitBytes != 0) {
      throw ConfigError("endpoints[" + std::to_string(i) + "].size must be a positive multiple of 256");
    }
    const EndpointConfig c = ep.endpoint_config();
    c.media.validate();
    if (c.ingress_capacity == 0) throw ConfigError("endpoint ingress_capacity must be positive");
    if (c.media.is_flash()) {
      LineCache cache(c.cache_bytes);
      GcController gc(c.gc);
    }
    const auto& d = ep.devload;
    if (!(d.optimal >= 0 && d.optimal <= d.moderate && d.moderate <= d.severe && d.severe <= 1.0)) {
      throw ConfigError("devload thresholds must be ordered within [0,1]");
    }
  }
  FabricLayout layout;
  layout.gpu_local_bytes = gpu.local_bytes;
  layout.host_window_bytes = host_window_bytes;
  for (const auto& ep : endpoints) layout.endpoints.push_back({ep.size, ep.media, ep.base});
  enumerate_endpoints(layout);
  SrQueueLogic sr_probe(sr);
  if (sr.ring_capacity == 0) throw ConfigError("sr.ring_capacity must be positive");
  DsController ds_probe(ds);
  if (ds.reserved_bytes < kRequestBytes) throw ConfigError("ds.reserved_bytes must hold one line");
  UvmConfig u;
  u.page_bytes = uvm.page_bytes;
  u.resident_bytes = gpu.local_bytes;
  u.fault_servers = uvm.fault_servers;
  u.backing = uvm.host_path;
  UvmModel uvm_probe(u);
  if (!(uvm.storage_path.bytes_per_ns > 0.0)) throw ConfigError("uvm.storage_path bandwidth must be positive");
}

void ScenarioConfig::apply(const ModeSelection& selection) {
  mode = selection.mode;
  if (selection.policy) {
    sr.policy = *selection.policy;
  } else if (mode == Mode::kCxl) {
    sr.policy = SrPolicy::kOff;
  } else if ((mode == Mode::kCxlSr || mode == Mode::kCxlDs) && sr.policy == SrPolicy::kOff) {
    sr.policy = SrPolicy::kWindowed;
  }
}

namespace {

/// Reads fields out of one JSON object and rejects keys it never asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T>) {
        const bool non_negative = it->is_number_unsigned() ||
                                  (it->is_number_integer() && it->template get<std::int64_t>() >= 0);
        if (!non_negative) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(path_ + "." + key + " has the wrong type");
    }
  }
  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }
  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string sub(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_path(const json& j, const std::string& path, BackingPath& p) {
  ObjectReader r(j, path);
  r.get("latency_ns", p.latency_ns);
  r.get("bytes_per_ns", p.bytes_per_ns);
}

json path_json(const BackingPath& p) { return {{"latency_ns", p.latency_ns}, {"bytes_per_ns", p.bytes_per_ns}}; }

EndpointSpec read_endpoint(const json& j, const std::string& path) {
  EndpointSpec ep;
  ObjectReader r(j, path);
  std::string media = std::string(to_string(ep.media));
  r.get("media", media);
  ep.media = parse_media_kind(media);
  r.get("size", ep.size);
  r.get_optional("base", ep.base);
  r.get_optional("read_ns", ep.read_ns);
  r.get_optional("write_ns", ep.write_ns);
  r.get_optional("bytes_per_ns", ep.bytes_per_ns);
  r.get_optional("channels", ep.channels);
  r.get("cache_bytes", ep.cache_bytes);
  r.get("cache_hit_ns", ep.cache_hit_ns);
  r.get("ingress_capacity", ep.ingress_capacity);
  if (const json* gc = r.child("gc")) {
    ObjectReader g(*gc, r.sub("gc"));
    g.get("duration_ns", ep.gc.duration_ns);
    g.get("trigger_fraction", ep.gc.trigger_fraction);
    g.get("region_bytes", ep.gc.region_bytes);
    g.get("notice_ns", ep.gc.notice_ns);
  }
  if (const json* d = r.child("devload")) {
    ObjectReader g(*d, r.sub("devload"));
    g.get("optimal", ep.devload.optimal);
    g.get("moderate", ep.devload.moderate);
    g.get("severe", ep.devload.severe);
  }
  return ep;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (!j.contains("schema_version")) throw ConfigError("config is missing schema_version");
  ScenarioConfig cfg;
  {
    ObjectReader r(j, "config");
    r.get("schema_version", cfg.schema_version);
    if (cfg.schema_version != kConfigSchemaVersion) {
      throw ConfigError("schema_version " + std::to_string(cfg.schema_version) +
                        " is not supported (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    r.get("name", cfg.name);
    std::string mode = std::string(to_string(cfg.mode));
    r.get("mode", mode);
    r.get("seed", cfg.seed);
    r.get("host_window_bytes", cfg.host_window_bytes);
    if (const json* g = r.child("gpu")) {
      ObjectReader gr(*g, "config.gpu");
      gr.get("local_bytes", cfg.gpu.local_bytes);
      gr.get("read_ns", cfg.gpu.read_ns);
      gr.get("write_ns", cfg.gpu.write_ns);
      gr.get("outstanding", cfg.gpu.outstanding);
      gr.get("mem_issue_ns", cfg.gpu.mem_issue_ns);
      if (const json* l = gr.child("llc")) {
        ObjectReader lr(*l, "config.gpu.llc");
        lr.get("capacity_bytes", cfg.gpu.llc.capacity_bytes);
        lr.get("ways", cfg.gpu.llc.ways);
        lr.get("hit_ns", cfg.gpu.llc.hit_ns);
      }
    }
    if (const json* l = r.child("link")) {
      ObjectReader lr(*l, "config.link");
      lr.get("controller_rtt_ns", cfg.link.controller_rtt_ns);
      lr.get("bytes_per_ns", cfg.link.bytes_per_ns);
    }
    if (const json* e = r.child("endpoints")) {
      if (!e->is_array()) throw ConfigError("config.endpoints must be an array");
      cfg.endpoints.clear();
      for (std::size_t i = 0; i < e->size(); ++i) {
        cfg.endpoints.push_back(read_endpoint((*e)[i], "config.endpoints[" + std::to_string(i) + "]"));
      }
    }
    std::string policy;
    bool policy_given = false;
    if (const json* s = r.child("sr")) {
      ObjectReader sr(*s, "config.sr");
      policy_given = s->contains("policy");
      policy = std::string(to_string(cfg.sr.policy));
      sr.get("policy", policy);
      sr.get("sr_capacity", cfg.sr.sr_capacity);
      sr.get("mem_capacity", cfg.sr.mem_capacity);
      sr.get("ring_capacity", cfg.sr.ring_capacity);
    }
    if (const json* d = r.child("ds")) {
      ObjectReader dr(*d, "config.ds");
      dr.get("slow_threshold_ns", cfg.ds.slow_threshold_ns);
      dr.get("reserved_bytes", cfg.ds.reserved_bytes);
      dr.get("flush_budget", cfg.ds.flush_budget);
      dr.get("poll_interval_ns", cfg.ds.poll_interval_ns);
    }
    if (const json* u = r.child("uvm")) {
      ObjectReader ur(*u, "config.uvm");
      ur.get("page_bytes", cfg.uvm.page_bytes);
      ur.get("intervention_ns", cfg.uvm.intervention_ns);
      ur.get("fault_servers", cfg.uvm.fault_servers);
      if (const json* p = ur.child("host_path")) read_path(*p, "config.uvm.host_path", cfg.uvm.host_path);
      if (const json* p = ur.child("storage_path")) read_path(*p, "config.uvm.storage_path", cfg.uvm.storage_path);
    }
    ModeSelection sel = parse_mode(mode);
    if (policy_given) sel.policy = parse_sr_policy(policy);
    cfg.apply(sel);
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ScenarioConfig& cfg) {
  json eps = json::array();
  for (const auto& ep : cfg.endpoints) {
    eps.push_back({
        {"media", std::string(to_string(ep.media))},
        {"size", ep.size},
        {"base", opt(ep.base)},
        {"read_ns", opt(ep.read_ns)},
        {"write_ns", opt(ep.write_ns)},
        {"bytes_per_ns", opt(ep.bytes_per_ns)},
        {"channels", opt(ep.channels)},
        {"cache_bytes", ep.cache_bytes},
        {"cache_hit_ns", ep.cache_hit_ns},
        {"ingress_capacity", ep.ingress_capacity},
        {"gc",
         {{"duration_ns", ep.gc.duration_ns},
          {"trigger_fraction", ep.gc.trigger_fraction},
          {"region_bytes", ep.gc.region_bytes},
          {"notice_ns", ep.gc.notice_ns}}},
        {"devload",
         {{"optimal", ep.devload.optimal},
          {"moderate", ep.devload.moderate},
          {"severe", ep.devload.severe}}},
    });
  }
  return {
      {"schema_version", cfg.schema_version},
      {"name", cfg.name},
      {"mode", std::string(to_string(cfg.mode))},
      {"seed", cfg.seed},
      {"host_window_bytes", cfg.host_window_bytes},
      {"gpu",
       {{"local_bytes", cfg.gpu.local_bytes},
        {"read_ns", cfg.gpu.read_ns},
        {"write_ns", cfg.gpu.write_ns},
        {"outstanding", cfg.gpu.outstanding},
        {"mem_issue_ns", cfg.gpu.mem_issue_ns},
        {"llc",
         {{"capacity_bytes", cfg.gpu.llc.capacity_bytes},
          {"ways", cfg.gpu.llc.ways},
          {"hit_ns", cfg.gpu.llc.hit_ns}}}}},
      {"link", {{"controller_rtt_ns", cfg.link.controller_rtt_ns}, {"bytes_per_ns", cfg.link.bytes_per_ns}}},
      {"endpoints", eps},
      {"sr",
       {{"policy", std::string(to_string(cfg.sr.policy))},
        {"sr_capacity", cfg.sr.sr_capacity},
        {"mem_capacity", cfg.sr.mem_capacity},
        {"ring_capacity", cfg.sr.ring_capacity}}},
      {"ds",
       {{"slow_threshold_ns", cfg.ds.slow_threshold_ns},
        {"reserved_bytes", cfg.ds.reserved_bytes},
        {"flush_budget", cfg.ds.flush_budget},
        {"poll_interval_ns", cfg.ds.poll_interval_ns}}},
      {"uvm",
       {{"page_bytes", cfg.uvm.page_bytes},
        {"intervention_ns", cfg.uvm.intervention_ns},
        {"fault_servers", cfg.uvm.fault_servers},
        {"host_path", path_json(cfg.uvm.host_path)},
        {"storage_path", path_json(cfg.uvm.storage_path)}}},
  };
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace cxlgpu
