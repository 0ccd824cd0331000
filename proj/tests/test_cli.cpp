#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "parity_gate/run.hpp"

using namespace parity_gate;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("parity_gate_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

json small_optimize(const fs::path& out) {
  return {{"command", "optimize"},
          {"seed", 3},
          {"output_dir", out.string()},
          {"duration_norm", 1.8},
          {"optimization", {{"n_starts", 2}, {"max_iters", 40}, {"steps_per_unit", 20}}}};
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const RunConfig c = parse_config(json{{"command", "optimize"}});
  CHECK(c.geometry == "linear-pair");
  CHECK(c.seed == 1);
  CHECK(c.optimization.weight_units == WeightUnits::microseconds);
  CHECK(c.params.omega_max == doctest::Approx(2 * constants::pi * 10e6));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("schema violations name the key") {
  CHECK(error_of({{"command", "optimize"}, {"foo", 1}}).find("foo") != std::string::npos);
  CHECK(error_of({{"command", "optimize"}, {"optimization", {{"n_start", 3}}}}).find("optimization.n_start") !=
        std::string::npos);
  CHECK(error_of({{"command", "optimize"}, {"seed", "seven"}}).find("seed") != std::string::npos);
  CHECK(error_of({{"command", "fly"}}).find("command") != std::string::npos);
  CHECK_FALSE(error_of({{"command", "optimize"}, {"params", {{"omega_max", 1.0}}}}).empty());
  CHECK(error_of({{"command", "optimize"}, {"r_min_m", 0.0}}).find("r_min_m") != std::string::npos);
  CHECK(error_of({{"command", "budget"}, {"pulse_file", "/nonexistent/p.json"}}).find("pulse_file") !=
        std::string::npos);
  CHECK(error_of({{"command", "budget"}}).find("pulse_file") != std::string::npos);
}

TEST_CASE("syntax errors report a line") {
  const fs::path d = scratch_dir("syntax");
  std::ofstream(d / "bad.json") << "{\n  \"command\": \"optimize\",\n  \"seed\": ,\n}\n";
  try {
    read_config_file(d / "bad.json");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("resolved config round trip and hash sensitivity") {
  const RunConfig c = parse_config(json{{"command", "optimize"}, {"geometry", "right-triangle"}});
  const json r = resolved_config(c);
  const RunConfig back = parse_config(r);
  CHECK(resolved_config(back) == r);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  const std::vector<json> tweaks{{{"seed", 2}},
                                 {{"theta_rad", 0.5}},
                                 {{"duration_norm", 2.0}},
                                 {{"params", {{"gamma_d_per_s", 1e4}}}},
                                 {{"optimization", {{"eta_r", 0.02}}}},
                                 {{"motion", {{"n_fock", 5}}}},
                                 {{"robustness", {{"n_samples", 7}}}}};
  for (const auto& t : tweaks) {
    json j = {{"command", "optimize"}, {"geometry", "right-triangle"}};
    j.merge_patch(t);
    INFO(t.dump());
    CHECK(config_hash(parse_config(j)) != config_hash(c));
  }
}

TEST_CASE("pulse json round trip is exact") {
  std::mt19937_64 rng(11);
  PhysicalParams p;
  const PulseSchedule a = oracle::random_pulse(rng, 17, 1e-7, p, true, true);
  const PulseSchedule b = pulse_from_json(json::parse(pulse_to_json(a).dump()));
  CHECK(a.dt == b.dt);
  CHECK(a.phi == b.phi);
  CHECK(a.rabi == b.rabi);
  CHECK(a.detuning == b.detuning);
  json bad = pulse_to_json(a);
  bad["extra"] = 1;
  CHECK_THROWS(pulse_from_json(bad));
}

TEST_CASE("optimize runs are reproducible") {
  const fs::path d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
  std::ostringstream log;
  REQUIRE(run(parse_config(small_optimize(d1)), log) == 0);
  REQUIRE(run(parse_config(small_optimize(d2)), log) == 0);
  for (const char* f : {"pulse.json", "pulse.csv", "starts.csv", "cost_history.csv", "summary.json"}) {
    INFO(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  const json m = json::parse(slurp(d1 / "manifest.json"));
  CHECK(m["command"] == "optimize");
  CHECK(m["seed"] == 3);
  CHECK(m.contains("config_hash"));
  CHECK(m.contains("version"));
  CHECK(fs::exists(d1 / "resolved_config.json"));
  for (const auto& e : fs::directory_iterator(d1)) CHECK(e.path().extension() != ".tmp");

  SUBCASE("budget header") {
    const fs::path d3 = scratch_dir("budget");
    json b = {{"command", "budget"},
              {"output_dir", d3.string()},
              {"pulse_file", (d1 / "pulse.json").string()},
              {"motion", {{"n_fock", 3}}}};
    REQUIRE(run(parse_config(b), log) == 0);
    const std::string csv = slurp(d3 / "budget.csv");
    CHECK(csv.substr(0, csv.find('\n')) ==
          "geometry,eps_bell,eps_decay,eps_recoil,eps_force,eps_total,t_norm,t_r_norm,t_rr_norm,"
          "additivity_residual,truncation_flag");
  }
}
