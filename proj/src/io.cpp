#include "ereem/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ereem/errors.hpp"
#include "ereem/format.hpp"
#include "ereem/units.hpp"

namespace ereem {

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e) throw IoError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void CsvTable::add_meta(const std::string& key, double value) { meta.emplace_back(key, format_shortest(value)); }

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> r;
  r.reserve(values.size());
  for (double v : values) r.push_back(format_shortest(v));
  rows.push_back(std::move(r));
}

CsvTable CsvTable::from_columns(const std::vector<std::string>& header, const std::vector<std::vector<double>>& cols) {
  if (header.size() != cols.size()) throw std::invalid_argument("csv: header/column count mismatch");
  CsvTable t;
  t.header = header;
  const std::size_t n = cols.empty() ? 0 : cols.front().size();
  for (const auto& c : cols) {
    if (c.size() != n) throw std::invalid_argument("csv: columns differ in length");
  }
  std::vector<double> row(cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) row[j] = cols[j][i];
    t.add_row(row);
  }
  return t;
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& [k, v] : meta) out += "# meta: " + k + "=" + v + "\n";
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out += (j ? "," : "") + r[j];
    out += "\n";
  }
  return out;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("csv: no column '" + name + "'");
  const auto j = static_cast<std::size_t>(it - header.begin());
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(parse_double(r.at(j)));
  return v;
}

const std::string* CsvTable::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#", 0) == 0) {
      const std::string tag = "# meta: ";
      if (line.rfind(tag, 0) == 0) {
        const std::string kv = line.substr(tag.size());
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw IoError("csv line " + std::to_string(lineno) + ": meta entry without '='");
        t.meta.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      }
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw IoError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                    " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw IoError("csv: missing header row");
  return t;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string sha256_hex(const std::string& content) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(content.data(), content.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

OutputWriter::OutputWriter(std::filesystem::path root) : root_(std::move(root)) {}

void OutputWriter::write(const std::string& relative, const std::string& content) {
  write_file_atomic(root_ / relative, content);
  entries_.push_back({relative, sha256_hex(content), content.size()});
}

std::string OutputWriter::write_manifest(const std::string& command, const std::string& extra_json) {
  nlohmann::ordered_json m;
  m["schema_version"] = 1;
  m["command"] = command;
  const auto extra = nlohmann::ordered_json::parse(extra_json);
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  auto files = nlohmann::ordered_json::array();
  for (const auto& e : entries_) files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  m["files"] = files;
  const std::string text = m.dump(2) + "\n";
  write_file_atomic(root_ / "manifest.json", text);
  return text;
}

// ---------------------------------------------------------------------------

CsvTable trace_to_csv(const RamseyTrace& trace) {
  trace.validate();
  const auto& m = trace.meta;
  CsvTable t = CsvTable::from_columns({"tau_us", "signal"}, {trace.tau_us, trace.signal});
  t.add_meta("units", "tau_us=us;signal=m_s=0 population");
  t.add_meta("species", to_string(m.constants.species));
  t.add_meta("B_G", m.field.magnitude_g);
  t.add_meta("theta_deg", units::degrees(m.field.theta_rad));
  t.add_meta("protocol", to_string(m.protocol));
  t.add_meta("source", m.source);
  t.add_meta("initial_state", m.initial_state);
  t.add_meta("D_MHz", m.constants.zero_field_mhz);
  t.add_meta("gamma_e_MHz_per_G", m.constants.gamma_e_mhz_per_g);
  t.add_meta("gamma_n_MHz_per_G", m.constants.gamma_n_mhz_per_g);
  t.add_meta("A_perp_MHz", m.constants.a_perp_mhz);
  t.add_meta("A_par_MHz", m.constants.a_par_mhz);
  t.add_meta("Q_MHz", m.constants.quadrupole_mhz);
  if (m.drive) {
    t.add_meta("rabi_MHz", m.drive->rabi_mhz);
    t.add_meta("carrier_MHz", m.drive->carrier_mhz);
    t.add_meta("carrier_offset_MHz", m.drive->carrier_offset_mhz);
    t.add_meta("pulse_phase_rad", m.drive->phase_rad);
    t.add_meta("pulse_duration_us", m.drive->pulse_duration_us);
  }
  return t;
}

RamseyTrace trace_from_csv(const CsvTable& t) {
  RamseyTrace tr;
  tr.tau_us = t.column("tau_us");
  tr.signal = t.column("signal");
  auto& m = tr.meta;
  m.source = "ingested";
  auto num = [&](const char* key, double& target) {
    if (const std::string* v = t.find_meta(key)) target = parse_double(*v);
  };
  try {
    if (const std::string* v = t.find_meta("species")) m.constants = SpeciesConstants::defaults(species_from_string(*v));
    if (const std::string* v = t.find_meta("protocol")) m.protocol = protocol_from_string(*v);
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("trace metadata: ") + e.what());
  }
  if (const std::string* v = t.find_meta("source")) m.source = *v;
  if (const std::string* v = t.find_meta("initial_state")) m.initial_state = *v;
  num("B_G", m.field.magnitude_g);
  double theta_deg = 0;
  num("theta_deg", theta_deg);
  m.field.theta_rad = units::radians(theta_deg);
  num("D_MHz", m.constants.zero_field_mhz);
  num("gamma_e_MHz_per_G", m.constants.gamma_e_mhz_per_g);
  num("gamma_n_MHz_per_G", m.constants.gamma_n_mhz_per_g);
  num("A_perp_MHz", m.constants.a_perp_mhz);
  num("A_par_MHz", m.constants.a_par_mhz);
  num("Q_MHz", m.constants.quadrupole_mhz);
  if (t.find_meta("rabi_MHz")) {
    DriveSpec d;
    num("rabi_MHz", d.rabi_mhz);
    num("carrier_MHz", d.carrier_mhz);
    num("carrier_offset_MHz", d.carrier_offset_mhz);
    num("pulse_phase_rad", d.phase_rad);
    num("pulse_duration_us", d.pulse_duration_us);
    m.drive = d;
  }
  try {
    tr.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("trace: ") + e.what());
  }
  return tr;
}

}  // namespace ereem
