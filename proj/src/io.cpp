#include "clit/io.hpp"

#include "clit/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace clit {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string dgp_to_json(const DgpConfig& cfg, bool pretty) {
  ordered_json j;
  j["n"] = cfg.n;
  j["q"] = cfg.q;
  j["kernel_x"] = to_string(cfg.kernel_x);
  j["kernel_y"] = to_string(cfg.kernel_y);
  j["beta2"] = cfg.beta2;
  if (cfg.beta1) {
    j["beta1"] = *cfg.beta1;
  } else {
    j["beta1"] = "auto";
  }
  j["rho0"] = cfg.rho0.label();
  j["seed"] = cfg.seed;
  j["y_noise"] = cfg.y_noise;
  j["h0"] = cfg.rho0.is_null();
  return pretty ? j.dump(2) : j.dump();
}

DgpConfig dgp_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DgpConfig c;
    c.n = j.at("n").get<Index>();
    c.q = j.at("q").get<Index>();
    c.kernel_x = kernel_from_string(j.at("kernel_x").get<std::string>());
    c.kernel_y = kernel_from_string(j.at("kernel_y").get<std::string>());
    c.beta2 = j.at("beta2").get<double>();
    if (j.at("beta1").is_number()) c.beta1 = j.at("beta1").get<double>();
    c.rho0 = LocalAlternative::parse(j.at("rho0").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.y_noise = j.value("y_noise", true);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("meta.json: ") + e.what());
  }
}

namespace {

void write_paths(const fs::path& file, const PathMatrix& m) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw InputError("cannot write " + file.string());
  char buf[32];
  for (Index l = 0; l < m.grid.size(); ++l) {
    std::snprintf(buf, sizeof buf, "%.17g", m.grid[l]);
    os << (l ? "," : "") << buf;
  }
  os << '\n';
  for (Index j = 0; j < m.rows(); ++j) {
    for (Index l = 0; l < m.values.cols(); ++l) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values(j, l));
      os << (l ? "," : "") << buf;
    }
    os << '\n';
  }
}

std::vector<double> parse_row(const std::string& line, const std::string& file, int lineno) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = p + line.size();
  while (p <= end) {
    const char* comma = std::find(p, end, ',');
    std::string cell(p, comma);
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(' ');
    cell = start == std::string::npos ? std::string() : cell.substr(start);
    char* stop = nullptr;
    const double v = std::strtod(cell.c_str(), &stop);
    if (cell.empty() || *stop != '\0') {
      throw ParseError(file + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'", lineno);
    }
    out.push_back(v);
    p = comma + 1;
  }
  return out;
}

std::vector<std::vector<double>> read_table(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw InputError("cannot read " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    rows.push_back(parse_row(line, file.filename().string(), lineno));
  }
  return rows;
}

PathMatrix read_paths(const fs::path& file) {
  const auto rows = read_table(file);
  if (rows.empty()) throw ParseError(file.filename().string() + ": missing header", 1);
  const TimeGrid grid = TimeGrid::from_points(rows[0]);
  Matrix m(static_cast<Index>(rows.size() - 1), grid.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (static_cast<Index>(rows[r].size()) != grid.size()) {
      throw ParseError(file.filename().string() + ": row " + std::to_string(r + 1) + " has " +
                           std::to_string(rows[r].size()) + " columns, expected " + std::to_string(grid.size()),
                       static_cast<int>(r + 1));
    }
    for (Index l = 0; l < grid.size(); ++l) m(static_cast<Index>(r - 1), l) = rows[r][static_cast<std::size_t>(l)];
  }
  return PathMatrix(grid, std::move(m));
}

}  // namespace

void write_dataset(const fs::path& dir, const Dataset& data, const std::optional<DgpConfig>& meta) {
  if (!data.record.is_survival()) throw UnsupportedError("only single-event records can be written");
  fs::create_directories(dir);
  write_paths(dir / "x.csv", data.x);
  write_paths(dir / "z.csv", data.z);
  {
    std::ofstream os(dir / "events.csv", std::ios::binary);
    if (!os) throw InputError("cannot write " + (dir / "events.csv").string());
    os << "subject,event_index,censored\n";
    for (Index j = 0; j < data.subjects(); ++j) {
      const Index e = data.record.event_index(j);
      os << j << ',' << e << ',' << (e < 0 ? 1 : 0) << '\n';
    }
  }
  std::ofstream os(dir / "meta.json", std::ios::binary);
  if (!os) throw InputError("cannot write " + (dir / "meta.json").string());
  if (meta) {
    os << dgp_to_json(*meta) << '\n';
  } else {
    ordered_json j;
    j["n"] = data.subjects();
    j["q"] = data.grid().size();
    os << j.dump(2) << '\n';
  }
}

void write_dataset(const fs::path& dir, const SimulatedDataset& sim) { write_dataset(dir, sim.data, sim.config); }

LoadedDataset read_dataset(const fs::path& dir) {
  PathMatrix x = read_paths(dir / "x.csv");
  PathMatrix z = read_paths(dir / "z.csv");
  if (!(x.grid == z.grid) || x.rows() != z.rows()) throw InputError("x.csv and z.csv disagree in shape");

  const fs::path events_file = dir / "events.csv";
  std::ifstream is(events_file);
  if (!is) throw InputError("cannot read " + events_file.string());
  std::string line;
  int lineno = 1;
  if (!std::getline(is, line) || line.rfind("subject,event_index,censored", 0) != 0) {
    throw ParseError("events.csv:1: expected header 'subject,event_index,censored'", 1);
  }
  std::vector<Index> event(static_cast<std::size_t>(x.rows()), -1);
  std::vector<bool> seen(event.size(), false);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto row = parse_row(line, "events.csv", lineno);
    if (row.size() != 3) throw ParseError("events.csv:" + std::to_string(lineno) + ": expected 3 columns", lineno);
    const auto j = static_cast<Index>(row[0]);
    if (j < 0 || j >= x.rows() || static_cast<double>(j) != row[0] || seen[static_cast<std::size_t>(j)]) {
      throw ParseError("events.csv:" + std::to_string(lineno) + ": bad or repeated subject index", lineno);
    }
    seen[static_cast<std::size_t>(j)] = true;
    event[static_cast<std::size_t>(j)] = row[2] != 0.0 ? -1 : static_cast<Index>(row[1]);
  }
  for (std::size_t j = 0; j < seen.size(); ++j) {
    if (!seen[j]) throw InputError("events.csv has no row for subject " + std::to_string(j));
  }

  std::optional<DgpConfig> meta;
  if (fs::exists(dir / "meta.json")) {
    std::ifstream ms(dir / "meta.json");
    std::stringstream buf;
    buf << ms.rdbuf();
    const auto j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw InputError("meta.json is not valid JSON");
    if (j.contains("kernel_x")) meta = dgp_from_json(buf.str());
  }
  const TimeGrid grid = x.grid;
  CountingRecord record = CountingRecord::survival(grid, event);
  return {Dataset(std::move(x), std::move(z), std::move(record)), meta};
}

}  // namespace clit
