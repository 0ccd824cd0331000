#include "parity_gate/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace parity_gate {

json pulse_to_json(const PulseSchedule& pulse) {
  json j;
  j["m_steps"] = pulse.m_steps();
  j["dt"] = pulse.dt;
  j["phi"] = pulse.phi;
  j["rabi"] = pulse.rabi;
  j["detuning"] = pulse.detuning;
  return j;
}

PulseSchedule pulse_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("pulse JSON must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "m_steps" && key != "dt" && key != "phi" && key != "rabi" && key != "detuning")
      throw std::invalid_argument("pulse JSON: unknown key '" + key + "'");
  PulseSchedule p;
  try {
    p.dt = j.at("dt").get<double>();
    p.phi = j.at("phi").get<std::vector<double>>();
    p.rabi = j.at("rabi").get<std::vector<double>>();
    p.detuning = j.at("detuning").get<std::vector<double>>();
    const int m = j.at("m_steps").get<int>();
    if (m != p.m_steps()) throw std::invalid_argument("pulse JSON: m_steps does not match the phi array");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("pulse JSON: ") + e.what());
  }
  p.validate();
  return p;
}

PulseSchedule load_pulse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pulse file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  try {
    return pulse_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (row_open_) out_ += ',';
  out_ += s;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  out_ += '\n';
  row_open_ = false;
}

}  // namespace parity_gate
