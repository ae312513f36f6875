#include "fibdim/config.hpp"

#include "fibdim/ensemble_io.hpp"
#include "fibdim/error.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace fibdim {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

// Reads typed fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(where() + ": expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    const std::string name = qualified(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) config_error(name + ": expected true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) config_error(name + ": expected a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) config_error(name + ": expected a number");
      out = v.get<T>();
    } else {
      if (!v.is_number_integer()) config_error(name + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
        config_error(name + ": must not be negative");
      }
      out = v.get<T>();
    }
  }

  Section child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, qualified(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) config_error("unknown key '" + qualified(item.key()) + "'");
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
void require_positive(const std::string& name, T v) {
  if (!(v > T{0})) config_error(name + " must be positive");
}

std::string rule_name(CompletionRule r) { return r == CompletionRule::Rotated ? "rotated" : "standard"; }

std::uint64_t parse_u64(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') config_error(name + ": '" + text + "' is not an unsigned integer");
  return v;
}

}  // namespace

std::vector<int> ExperimentConfig::resolved_fibers() const {
  if (!fibers.empty()) return fibers;
  std::vector<int> all;
  for (int i = 1; i < ensemble.dim; ++i) all.push_back(i);
  return all;
}

void ExperimentConfig::sync() {
  spectrum.threads = threads;
  pool.threads = threads;
  density.threads = threads;
  interval.threads = threads;
  dimension.threads = threads;
  interval.neighbors = density.neighbors;
  interval.rule = density.rule;
  dimension.rule = density.rule;
  dimension.radii = geometric_radii(radius_max, radius_ratio, radius_levels);
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

ExperimentConfig config_from_json(const json& j) {
  Section root(j, "");
  int version = 0;
  if (!root.has("schema_version")) config_error("missing key 'schema_version'");
  root.read("schema_version", version);
  if (version != kConfigSchemaVersion) {
    config_error("schema_version " + std::to_string(version) + " is not supported (expected " +
                 std::to_string(kConfigSchemaVersion) + ")");
  }

  ExperimentConfig c;
  if (!root.has("ensemble")) config_error("missing key 'ensemble'");
  c.ensemble_json = j.at("ensemble");
  c.ensemble = ensemble_from_json(c.ensemble_json);

  if (!root.has("seed")) config_error("seed is mandatory; there is no clock-based default");
  root.read("seed", c.seed);
  root.read("threads", c.threads);
  require_positive("threads", c.threads);

  if (root.has("fibers")) {
    const json& f = j.at("fibers");
    if (f.is_string() && f.get<std::string>() == "all") {
      c.fibers.clear();
    } else if (f.is_array() && !f.empty()) {
      for (const auto& v : f) {
        if (!v.is_number_integer()) config_error("fibers: expected \"all\" or a list of integers");
        const int i = v.get<int>();
        if (i < 1 || i >= c.ensemble.dim) {
          config_error("fibers: " + std::to_string(i) + " is outside 1.." + std::to_string(c.ensemble.dim - 1));
        }
        c.fibers.push_back(i);
      }
    } else {
      config_error("fibers: expected \"all\" or a non-empty list of integers");
    }
  }
  if (root.has("completion")) {
    std::string rule;
    root.read("completion", rule);
    if (rule == "standard") {
      c.density.rule = CompletionRule::Standard;
    } else if (rule == "rotated") {
      c.density.rule = CompletionRule::Rotated;
    } else {
      config_error("completion: expected \"standard\" or \"rotated\"");
    }
  }

  Section out = root.child("output");
  out.read("dir", c.out_dir);
  out.read("figures", c.figures);
  out.finish();

  Section sp = root.child("spectrum");
  sp.read("steps", c.spectrum.steps);
  sp.read("burnin", c.spectrum.burnin);
  sp.read("replicas", c.spectrum.replicas);
  sp.finish();
  require_positive("spectrum.steps", c.spectrum.steps);
  require_positive("spectrum.replicas", c.spectrum.replicas);
  if (c.spectrum.burnin < 0) config_error("spectrum.burnin must not be negative");

  Section po = root.child("pool");
  po.read("size", c.pool.size);
  po.read("chains", c.pool.chains);
  po.read("burnin", c.pool.burnin);
  po.finish();
  require_positive("pool.size", c.pool.size);
  require_positive("pool.chains", c.pool.chains);
  if (c.pool.burnin < 0) config_error("pool.burnin must not be negative");

  Section en = root.child("entropy");
  en.read("neighbors", c.density.neighbors);
  en.read("bandwidth", c.density.bandwidth);
  en.read("evaluations", c.density.evaluations);
  en.read("points_per_evaluation", c.density.points_per_evaluation);
  Section iv = en.child("interval");
  iv.read("enabled", c.interval_enabled);
  iv.read("replicas", c.interval.replicas);
  iv.read("n_max", c.interval.n_max);
  iv.read("mass_floor_count", c.interval.mass_floor_count);
  iv.read("batches", c.interval.batches);
  iv.read("burnin", c.interval.burnin);
  iv.finish();
  en.finish();
  require_positive("entropy.neighbors", c.density.neighbors);
  require_positive("entropy.evaluations", c.density.evaluations);
  require_positive("entropy.points_per_evaluation", c.density.points_per_evaluation);
  if (!(c.density.bandwidth > 0.0 && c.density.bandwidth < 0.5 * kPi)) {
    config_error("entropy.bandwidth must lie in (0, pi/2)");
  }
  require_positive("entropy.interval.replicas", c.interval.replicas);
  if (c.interval.n_max < 2) config_error("entropy.interval.n_max must be at least 2");
  require_positive("entropy.interval.mass_floor_count", c.interval.mass_floor_count);
  if (c.interval.batches < 2) config_error("entropy.interval.batches must be at least 2");
  if (c.interval.burnin < 0) config_error("entropy.interval.burnin must not be negative");

  Section dm = root.child("dimension");
  dm.read("points", c.dimension.points);
  dm.read("neighbors", c.dimension.neighbors);
  dm.read("stationary_sample", c.dimension.stationary_sample);
  dm.read("radius_max", c.radius_max);
  dm.read("radius_ratio", c.radius_ratio);
  dm.read("radius_levels", c.radius_levels);
  dm.finish();
  if (c.dimension.points < 2) config_error("dimension.points must be at least 2");
  require_positive("dimension.neighbors", c.dimension.neighbors);
  require_positive("dimension.stationary_sample", c.dimension.stationary_sample);
  if (!(c.radius_max > 0.0 && c.radius_max <= kPi / 2)) config_error("dimension.radius_max must lie in (0, pi/2]");
  if (!(c.radius_ratio > 1.0)) config_error("dimension.radius_ratio must exceed 1");
  if (c.radius_levels < 8) config_error("dimension.radius_levels must be at least 8");

  Section ct = root.child("contraction");
  ct.read("n_max", c.contraction_n_max);
  ct.read("replicas", c.contraction_replicas);
  ct.finish();
  if (c.contraction_n_max < 2) config_error("contraction.n_max must be at least 2");
  if (c.contraction_replicas < 2) config_error("contraction.replicas must be at least 2");

  root.finish();

  // Samples drawn from the pool must fit inside it.
  const std::size_t need = std::max({c.density.neighbors, c.dimension.neighbors,
                                     c.ensemble.dim == 2 ? c.dimension.stationary_sample : std::size_t{0}}) + 1;
  if (c.pool.size < need) {
    config_error("pool.size " + std::to_string(c.pool.size) + " is smaller than the largest sample (" +
                 std::to_string(need) + ")");
  }
  c.sync();
  return c;
}

ExperimentConfig resolve_config(json doc, const EnvLookup& env, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) config_error("config: expected an object");
  const std::string p = kEnvPrefix;
  if (seed_override) {
    doc["seed"] = *seed_override;
  } else if (auto s = env(p + "SEED")) {
    doc["seed"] = parse_u64(p + "SEED", *s);
  }
  if (auto t = env(p + "THREADS")) doc["threads"] = static_cast<int>(parse_u64(p + "THREADS", *t));
  if (auto o = env(p + "OUT")) doc["output"]["dir"] = *o;
  if (auto f = env(p + "FIGURES")) {
    if (*f != "0" && *f != "1") config_error(p + "FIGURES: expected 0 or 1");
    doc["output"]["figures"] = (*f == "1");
  }
  return config_from_json(doc);
}

ExperimentConfig load_config(const std::string& path, const EnvLookup& env, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("'" + path + "': " + e.what());
  }
  return resolve_config(std::move(doc), env, seed_override);
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["ensemble"] = c.ensemble_json;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  if (c.fibers.empty()) {
    j["fibers"] = "all";
  } else {
    j["fibers"] = c.fibers;
  }
  j["completion"] = rule_name(c.density.rule);
  j["output"] = {{"dir", c.out_dir}, {"figures", c.figures}};
  j["spectrum"] = {{"steps", c.spectrum.steps}, {"burnin", c.spectrum.burnin}, {"replicas", c.spectrum.replicas}};
  j["pool"] = {{"size", c.pool.size}, {"chains", c.pool.chains}, {"burnin", c.pool.burnin}};
  j["entropy"] = {{"neighbors", c.density.neighbors},
                  {"bandwidth", c.density.bandwidth},
                  {"evaluations", c.density.evaluations},
                  {"points_per_evaluation", c.density.points_per_evaluation},
                  {"interval",
                   {{"enabled", c.interval_enabled},
                    {"replicas", c.interval.replicas},
                    {"n_max", c.interval.n_max},
                    {"mass_floor_count", c.interval.mass_floor_count},
                    {"batches", c.interval.batches},
                    {"burnin", c.interval.burnin}}}};
  j["dimension"] = {{"points", c.dimension.points},
                    {"neighbors", c.dimension.neighbors},
                    {"stationary_sample", c.dimension.stationary_sample},
                    {"radius_max", c.radius_max},
                    {"radius_ratio", c.radius_ratio},
                    {"radius_levels", c.radius_levels}};
  j["contraction"] = {{"n_max", c.contraction_n_max}, {"replicas", c.contraction_replicas}};
  return j;
}

json default_config_json(const std::string& benchmark, std::uint64_t seed) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["ensemble"] = {{"benchmark", benchmark}};
  j["seed"] = seed;
  j["spectrum"] = {{"steps", 100000}, {"replicas", 8}};
  j["pool"] = {{"size", 100000}};
  j["entropy"] = {{"neighbors", 2000}, {"evaluations", 200}, {"interval", {{"replicas", 200}}}};
  j["dimension"] = {{"points", 100}, {"neighbors", 2000}, {"stationary_sample", 50000}};
  return j;
}

}  // namespace fibdim
