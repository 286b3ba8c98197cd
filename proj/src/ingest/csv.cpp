#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "physio/errors.hpp"
#include "physio/ingest/ingest.hpp"

namespace physio::ingest {

namespace {

const std::vector<std::string> kColumns = {
    "t",          "pace_mps",       "cadence_spm", "vertical_oscillation_mm",
    "altitude_m", "stance_time_pct", "vertical_ratio", "step_length_mm",
    "hr_bpm"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse '" + cell + "'");
  }
  if (pos != cell.size())
    throw DataError(where + ": cannot parse '" + cell + "'");
  return v;
}

void load_sidecar(const std::string& path, RawSession& raw) {
  std::ifstream in(path);
  if (!in) throw DataError("missing session sidecar: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    raw.runner_id = j.at("runner_id").get<std::string>();
    raw.session_id = j.at("session_id").get<std::string>();
    raw.age_years = j.at("age_years").get<double>();
    raw.sex_code = j.at("sex").get<int>();
    raw.height_m = j.at("height_m").get<double>();
    raw.weight_kg = j.at("weight_kg").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (raw.sex_code != 0 && raw.sex_code != 1)
    throw DataError(path + ": sex must be 0 or 1");
  if (raw.height_m <= 0.0) throw DataError(path + ": height_m must be > 0");
}

void load_breath(const std::string& path, RawSession& raw) {
  std::ifstream in(path);
  if (!in) return;  // breath file is optional
  std::string line;
  if (!std::getline(in, line) || line != "t_s,vo2_mlmin")
    throw DataError(path + ": expected header t_s,vo2_mlmin");
  int row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + " row " + std::to_string(row);
    if (cells.size() != 2) throw DataError(where + ": expected 2 cells");
    const double t = parse_cell(cells[0], where);
    const double v = parse_cell(cells[1], where);
    if (std::isnan(t) || std::isnan(v))
      throw DataError(where + ": blank cell");
    if (!raw.breath.empty() && t <= raw.breath.back().first)
      throw DataError(where + ": breath times must be strictly increasing");
    raw.breath.emplace_back(t, v);
    ++row;
  }
}

}  // namespace

RawSession load_session(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = split_csv_line(line);

  auto expected = kColumns;
  if (header.size() == kColumns.size() + 1) expected.push_back("vo2_mlmin");
  if (header != expected) {
    std::string want;
    for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
    throw DataError(path + ": header mismatch, expected '" + want + "'");
  }
  RawSession raw;
  for (size_t c = 1; c < expected.size(); ++c)
    raw.channels[expected[c]] = {};

  int row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + " row " + std::to_string(row);
    if (cells.size() != expected.size())
      throw DataError(where + ": expected " +
                      std::to_string(expected.size()) + " cells, got " +
                      std::to_string(cells.size()));
    const double tval = parse_cell(cells[0], where);
    if (std::isnan(tval) || tval != std::floor(tval))
      throw DataError(where + ": t must be an integer second");
    const auto t = static_cast<std::int64_t>(tval);
    if (raw.t.empty()) {
      if (t != 0) throw DataError(where + ": t must start at 0");
    } else if (t <= raw.t.back()) {
      throw DataError(where + ": t must be strictly increasing");
    } else if (t != raw.t.back() + 1) {
      throw DataError(where + ": t must advance by 1 (1 Hz)");
    }
    raw.t.push_back(t);
    for (size_t c = 1; c < expected.size(); ++c)
      raw.channels[expected[c]].push_back(parse_cell(cells[c], where));
    ++row;
  }
  if (raw.t.empty()) throw DataError(path + ": no data rows");

  const std::filesystem::path p(path);
  const auto stem = (p.parent_path() / p.stem()).string();
  load_sidecar(stem + ".json", raw);
  load_breath(stem + "_breath.csv", raw);
  return raw;
}

}  // namespace physio::ingest
