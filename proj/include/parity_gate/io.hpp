#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "parity_gate/model.hpp"

namespace parity_gate {

using json = nlohmann::json;

/// {"m_steps", "dt", "phi", "rabi", "detuning"}; SI units (s, rad, rad/s).
json pulse_to_json(const PulseSchedule& pulse);
PulseSchedule pulse_from_json(const json& j);
PulseSchedule load_pulse(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_json_atomic(const std::filesystem::path& path, const json& j);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// Minimal CSV builder; fields are written verbatim, numbers round-trip.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  void end_row();
  std::string str() const { return out_; }

 private:
  std::string out_;
  bool row_open_ = false;
};

}  // namespace parity_gate
