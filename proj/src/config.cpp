#include "parity_gate/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace parity_gate {

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::optimize, "optimize"},       {Command::qsl_scan, "qsl-scan"},
    {Command::simulate, "simulate"},       {Command::budget, "budget"},
    {Command::tomography, "tomography"},   {Command::robustness, "robustness"},
    {Command::theta_sweep, "theta-sweep"}, {Command::rabi_scan, "rabi-scan"}};

// Walks one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto x = v->get<long long>();
      if (x < INT32_MIN || x > INT32_MAX) fail(key, "integer out of range");
      out = static_cast<int>(x);
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
        fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  // Converts a string through `parse`, reporting failures against the key.
  template <class T, class F>
  void get_enum(const char* key, T& out, F parse) {
    std::string s;
    if (!find(key)) return;
    get(key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }
  // Array of objects, each handed to `f` with its own reader.
  template <class F>
  void each(const char* key, F f) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of objects");
      for (std::size_t i = 0; i < v->size(); ++i) {
        Reader r((*v)[i], path_ + key + "[" + std::to_string(i) + "].");
        f(r);
        r.finish();
      }
    }
  }
  Reader section(const char* key) {
    static const json empty;
    const json* v = find(key);
    return Reader(v ? *v : empty, path_ + key + ".");
  }
  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  void finish() const {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key '" + path_ + k + "'");
  }

  [[noreturn]] void fail(const char* key, const std::string& msg) const {
    throw ConfigError("key '" + path_ + key + "': " + msg);
  }

 private:
  const json* find(const char* key) {
    if (!j_.is_object()) return nullptr;
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }
  std::string where() const { return path_.empty() ? "config: " : "section '" + path_.substr(0, path_.size() - 1) + "': "; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

bool needs_pulse(Command c) {
  return c == Command::simulate || c == Command::budget || c == Command::tomography || c == Command::robustness;
}

void require_file(const std::string& path, const char* key) {
  if (path.empty()) throw ConfigError(std::string("key '") + key + "' is required for this command");
  if (!std::filesystem::is_regular_file(path))
    throw ConfigError(std::string("key '") + key + "': file '" + path + "' does not exist");
}

}  // namespace

std::string_view to_string(Command c) {
  for (const auto& [k, name] : kCommands)
    if (k == c) return name;
  return "unknown";
}

Command command_from_string(std::string_view name) {
  for (const auto& [k, n] : kCommands)
    if (n == name) return k;
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

RabiScanConfig RunConfig::resolved_rabi_scan() const {
  RabiScanConfig rs = rabi_scan;
  rs.r_min_um.clear();
  for (double r : rabi_r_min) rs.r_min_um.push_back(r * 1e6);
  rs.optimization = optimization;
  rs.optimization.seed = seed;
  rs.motion = motion;
  return rs;
}

std::vector<double> RunConfig::resolved_theta_grid() const {
  if (!theta_grid.empty()) return theta_grid;
  std::vector<double> g(8);
  for (int i = 0; i < 8; ++i) g[i] = theta * (1.0 - i / 7.0);
  return g;
}

void RunConfig::validate() const {
  auto wrap = [](const char* what, auto&& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  if (!(r_min > 0.0) || !std::isfinite(r_min)) throw ConfigError("key 'r_min_m': must be positive");
  wrap("geometry", [&] { geometry_from_string(geometry); });
  if (!std::isfinite(theta)) throw ConfigError("key 'theta_rad': must be finite");
  if (!(duration_norm >= 0.0) || !std::isfinite(duration_norm))
    throw ConfigError("key 'duration_norm': must be >= 0");
  if (output_dir.empty()) throw ConfigError("key 'output_dir': must not be empty");
  wrap("params", [&] { params.validate(); });
  wrap("optimization", [&] { optimization.validate(); });
  wrap("motion", [&] { motion.validate(); });
  if (tomography.options.substeps < 1) throw ConfigError("key 'tomography.substeps': must be >= 1");
  for (const auto& ch : tomography.channels)
    if (!(ch.rate >= 0.0)) throw ConfigError("key 'tomography.channels': rates must be >= 0");
  for (const auto& s : robustness.scenarios) wrap("robustness.scenarios", [&] { s.validate(); });
  for (double e : robustness.epsilons)
    if (!(e >= 0.0)) throw ConfigError("key 'robustness.epsilons': values must be >= 0");
  if (robustness.n_samples < 1) throw ConfigError("key 'robustness.n_samples': must be >= 1");
  for (std::size_t i = 1; i < qsl.durations_norm.size(); ++i)
    if (!(qsl.durations_norm[i] > qsl.durations_norm[i - 1]))
      throw ConfigError("key 'qsl.durations_norm': must be ascending");
  wrap("rabi_scan", [&] {
    resolved_rabi_scan().validate();
  });

  if (needs_pulse(command)) require_file(pulse_file, "pulse_file");
  if (command == Command::theta_sweep && !pulse_file.empty()) require_file(pulse_file, "pulse_file");
  if (command == Command::tomography) {
    if (geometry != "linear-pair") throw ConfigError("key 'geometry': tomography expects the linear-pair Z_2 pulse");
    for (CircuitKind k : tomography.circuits) {
      if (k == CircuitKind::native) {
        require_file(tomography.native_pulse_file, "tomography.native_pulse_file");
        wrap("tomography.native_geometry", [&] { geometry_from_string(tomography.native_geometry); });
      }
      if (k == CircuitKind::zz_decomposition && std::abs(theta - constants::pi / 4) > 1e-12)
        require_file(tomography.z2_theta_pulse_file, "tomography.z2_theta_pulse_file");
    }
  }
  if ((command == Command::optimize || command == Command::theta_sweep) && duration_norm <= 0.0 && pulse_file.empty())
    throw ConfigError("key 'duration_norm': must be positive to optimise");
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  Reader top(j, "");
  if (!top.has("command")) throw ConfigError("key 'command' is required");
  top.get_enum("command", c.command, command_from_string);
  top.get("seed", c.seed);
  top.get("output_dir", c.output_dir);
  top.get("geometry", c.geometry);
  top.get("r_min_m", c.r_min);
  top.get("theta_rad", c.theta);
  top.get("duration_norm", c.duration_norm);
  top.get("pulse_file", c.pulse_file);

  {
    Reader r = top.section("params");
    auto& p = c.params;
    r.get("c6_ghz_um6", p.c6_ghz_um6);
    r.get("omega_max_rad_s", p.omega_max);
    r.get("gamma_d_per_s", p.gamma_d);
    r.get("lambda_laser_m", p.lambda_laser);
    r.get("mass_kg", p.mass);
    r.get("omega_par_rad_s", p.omega_par);
    r.get("omega_perp_rad_s", p.omega_perp);
    r.get("temperature_k", p.temperature);
    r.finish();
  }
  {
    Reader r = top.section("optimization");
    auto& o = c.optimization;
    r.get("eta_delta", o.eta_delta);
    r.get("eta_r", o.eta_r);
    r.get("eta_rr", o.eta_rr);
    r.get_enum("weight_units", o.weight_units, weight_units_from_string);
    r.get("noise_aware", o.noise_aware);
    r.get("n_starts", o.n_starts);
    r.get("max_iters", o.max_iters);
    r.get("grad_tolerance", o.grad_tolerance);
    r.get("rel_cost_tolerance", o.rel_cost_tolerance);
    r.get("m_steps", o.m_steps);
    r.get("steps_per_unit", o.steps_per_unit);
    r.get("substeps", o.substeps);
    r.get("optimize_rabi", o.optimize_rabi);
    r.get("antisymmetric_phase", o.antisymmetric_phase);
    Reader ramp = r.section("ramp");
    ramp.get("enabled", o.ramp.enabled);
    ramp.get("kappa", o.ramp.kappa);
    ramp.get("tau_ramp_s", o.ramp.tau_ramp);
    ramp.finish();
    r.finish();
  }
  {
    Reader r = top.section("motion");
    auto& m = c.motion;
    r.get("n_fock", m.n_fock);
    r.get("taylor_order", m.taylor_order);
    r.get_enum("axis", m.axis, trap_axis_from_string);
    r.get("include_decay", m.include_decay);
    r.get("include_recoil", m.include_recoil);
    r.get("include_vdw_gradient", m.include_vdw_gradient);
    r.get("krylov_max_dim", m.krylov.max_subspace_dim);
    r.get("krylov_substeps", m.krylov.substeps_per_pulse_step);
    r.get("krylov_tolerance", m.krylov.tolerance);
    r.get("truncation_threshold", m.truncation_threshold);
    r.finish();
  }
  {
    Reader r = top.section("simulate");
    r.get("noisy", c.simulate_noisy);
    r.finish();
  }
  {
    Reader r = top.section("budget");
    r.get("decay_gamma_grid_per_s", c.budget.decay_gamma_grid);
    r.get("recoil_omega_grid_rad_s", c.budget.recoil_omega_grid);
    r.get("force_omega_grid_rad_s", c.budget.force_omega_grid);
    r.get("extrapolation_temperature_k", c.budget.extrapolation_temperature);
    r.finish();
  }
  {
    Reader r = top.section("tomography");
    auto& t = c.tomography;
    if (r.has("circuits")) {
      std::vector<std::string> names;
      r.get("circuits", names);
      t.circuits.clear();
      for (const auto& n : names) {
        try {
          t.circuits.push_back(circuit_kind_from_string(n));
        } catch (const std::invalid_argument& e) {
          r.fail("circuits", e.what());
        }
      }
    }
    if (r.has("channels")) {
      t.channels.clear();
      r.each("channels", [&](Reader& ch) {
        NoiseChannelSpec spec;
        ch.get_enum("kind", spec.kind, channel_kind_from_string);
        ch.get("rate_per_s", spec.rate);
        t.channels.push_back(spec);
      });
    }
    r.get("substeps", t.options.substeps);
    r.get("refine_check", t.options.refine_check);
    r.get("native_pulse_file", t.native_pulse_file);
    r.get("native_geometry", t.native_geometry);
    r.get("z2_theta_pulse_file", t.z2_theta_pulse_file);
    r.finish();
  }
  {
    Reader r = top.section("robustness");
    auto& rb = c.robustness;
    if (r.has("scenarios")) {
      rb.scenarios.clear();
      r.each("scenarios", [&](Reader& s) {
        PerturbationSpec spec;
        s.get_enum("channel", spec.channel, perturbation_channel_from_string);
        s.get_enum("mode", spec.mode, perturbation_mode_from_string);
        rb.scenarios.push_back(spec);
      });
    }
    r.get("epsilons", rb.epsilons);
    r.get("n_samples", rb.n_samples);
    r.finish();
  }
  {
    Reader r = top.section("qsl");
    r.get("durations_norm", c.qsl.durations_norm);
    r.get("thresholds", c.qsl.thresholds);
    r.finish();
  }
  {
    Reader r = top.section("theta_sweep");
    r.get("thetas_rad", c.theta_grid);
    r.finish();
  }
  {
    Reader r = top.section("rabi_scan");
    auto& rs = c.rabi_scan;
    r.get("geometries", rs.geometries);
    r.get("omega_max_rad_s", rs.omega_max);
    r.get("r_min_m", c.rabi_r_min);
    r.get("durations_norm", rs.durations_norm);
    r.get("max_duration_norm", rs.max_duration_norm);
    r.get("simulate_noise", rs.simulate_noise);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

json resolved_config(const RunConfig& c) {
  json j;
  j["command"] = std::string(to_string(c.command));
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["geometry"] = c.geometry;
  j["r_min_m"] = c.r_min;
  j["theta_rad"] = c.theta;
  j["duration_norm"] = c.duration_norm;
  j["pulse_file"] = c.pulse_file;

  const auto& p = c.params;
  j["params"] = {{"c6_ghz_um6", p.c6_ghz_um6},   {"omega_max_rad_s", p.omega_max}, {"gamma_d_per_s", p.gamma_d},
                 {"lambda_laser_m", p.lambda_laser}, {"mass_kg", p.mass},             {"omega_par_rad_s", p.omega_par},
                 {"omega_perp_rad_s", p.omega_perp}, {"temperature_k", p.temperature}};
  const auto& o = c.optimization;
  j["optimization"] = {{"eta_delta", o.eta_delta},
                       {"eta_r", o.eta_r},
                       {"eta_rr", o.eta_rr},
                       {"weight_units", std::string(to_string(o.weight_units))},
                       {"noise_aware", o.noise_aware},
                       {"n_starts", o.n_starts},
                       {"max_iters", o.max_iters},
                       {"grad_tolerance", o.grad_tolerance},
                       {"rel_cost_tolerance", o.rel_cost_tolerance},
                       {"m_steps", o.m_steps},
                       {"steps_per_unit", o.steps_per_unit},
                       {"substeps", o.substeps},
                       {"optimize_rabi", o.optimize_rabi},
                       {"antisymmetric_phase", o.antisymmetric_phase},
                       {"ramp", {{"enabled", o.ramp.enabled}, {"kappa", o.ramp.kappa}, {"tau_ramp_s", o.ramp.tau_ramp}}}};
  const auto& m = c.motion;
  j["motion"] = {{"n_fock", m.n_fock},
                 {"taylor_order", m.taylor_order},
                 {"axis", std::string(to_string(m.axis))},
                 {"include_decay", m.include_decay},
                 {"include_recoil", m.include_recoil},
                 {"include_vdw_gradient", m.include_vdw_gradient},
                 {"krylov_max_dim", m.krylov.max_subspace_dim},
                 {"krylov_substeps", m.krylov.substeps_per_pulse_step},
                 {"krylov_tolerance", m.krylov.tolerance},
                 {"truncation_threshold", m.truncation_threshold}};
  j["simulate"] = {{"noisy", c.simulate_noisy}};
  j["budget"] = {{"decay_gamma_grid_per_s", c.budget.decay_gamma_grid},
                 {"recoil_omega_grid_rad_s", c.budget.recoil_omega_grid},
                 {"force_omega_grid_rad_s", c.budget.force_omega_grid},
                 {"extrapolation_temperature_k", c.budget.extrapolation_temperature}};
  json circuits = json::array(), channels = json::array();
  for (CircuitKind k : c.tomography.circuits) circuits.push_back(std::string(to_string(k)));
  for (const auto& ch : c.tomography.channels)
    channels.push_back({{"kind", std::string(to_string(ch.kind))}, {"rate_per_s", ch.rate}});
  j["tomography"] = {{"circuits", circuits},
                     {"channels", channels},
                     {"substeps", c.tomography.options.substeps},
                     {"refine_check", c.tomography.options.refine_check},
                     {"native_pulse_file", c.tomography.native_pulse_file},
                     {"native_geometry", c.tomography.native_geometry},
                     {"z2_theta_pulse_file", c.tomography.z2_theta_pulse_file}};
  json scenarios = json::array();
  for (const auto& s : c.robustness.scenarios)
    scenarios.push_back({{"channel", std::string(to_string(s.channel))}, {"mode", std::string(to_string(s.mode))}});
  j["robustness"] = {
      {"scenarios", scenarios}, {"epsilons", c.robustness.epsilons}, {"n_samples", c.robustness.n_samples}};
  j["qsl"] = {{"durations_norm", c.qsl.durations_norm}, {"thresholds", c.qsl.thresholds}};
  j["theta_sweep"] = {{"thetas_rad", c.theta_grid}};
  j["rabi_scan"] = {{"geometries", c.rabi_scan.geometries},
                    {"omega_max_rad_s", c.rabi_scan.omega_max},
                    {"r_min_m", c.rabi_r_min},
                    {"durations_norm", c.rabi_scan.durations_norm},
                    {"max_duration_norm", c.rabi_scan.max_duration_norm},
                    {"simulate_noise", c.rabi_scan.simulate_noise}};
  return j;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a64(resolved_config(config).dump())); }

}  // namespace parity_gate
