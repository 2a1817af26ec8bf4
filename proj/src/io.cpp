#include "bundlesim/io.hpp"

#include "bundlesim/errors.hpp"
#include "bundlesim/fingerprint.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace bundlesim::io {

namespace {

const std::string kFingerprintTag = "# config_fingerprint=";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::uint64_t parse_hex(const std::string& s, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw IoError(fmt::format("{}: malformed fingerprint '{}'", path.string(), s));
  }
  return v;
}

double parse_double(const std::string& s, const std::filesystem::path& path, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw IoError(fmt::format("{}:{}: '{}' is not a number", path.string(), line, s));
  }
  return v;
}

}  // namespace

std::string format_double(double x) { return fmt::format("{}", x); }

std::string cell(double x) { return format_double(x); }
std::string cell(int x) { return fmt::format("{}", x); }
std::string cell(std::size_t x) { return fmt::format("{}", x); }

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw DimensionError(fmt::format("row has {} cells, header has {}", row.size(), columns.size()));
  }
  rows.push_back(std::move(row));
}

std::size_t Table::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw RangeError(fmt::format("no column '{}'", name));
  return static_cast<std::size_t>(it - columns.begin());
}

double Table::number(std::size_t row, const std::string& column) const {
  return parse_double(rows.at(row)[column_index(column)], "<table>", static_cast<int>(row));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void write_table(const std::filesystem::path& path, const Table& table, std::uint64_t fingerprint) {
  std::string text = kFingerprintTag + fingerprint_hex(fingerprint) + "\n";
  text += fmt::format("{}\n", fmt::join(table.columns, ","));
  for (const auto& row : table.rows) text += fmt::format("{}\n", fmt::join(row, ","));
  write_text(path, text);
}

LoadedTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  LoadedTable out;
  std::string line;
  if (!std::getline(in, line) || line.rfind(kFingerprintTag, 0) != 0) {
    throw IoError(fmt::format("{}: missing fingerprint line", path.string()));
  }
  out.fingerprint = parse_hex(line.substr(kFingerprintTag.size()), path);
  if (!std::getline(in, line)) throw IoError(fmt::format("{}: missing header row", path.string()));
  out.table.columns = split(line, ',');
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.table.add(split(line, ','));
  }
  return out;
}

void write_click_log(const std::filesystem::path& path, const trajectories::EnsembleRecord& ens,
                     std::uint64_t fingerprint) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "# bundlesim click log v1\n{}{}\n# n_trajectories={}\n", kFingerprintTag,
                 fingerprint_hex(fingerprint), ens.records.size());
  fmt::format_to(std::back_inserter(buf), "# t_start={}\n# t_end={}\ntrajectory_id time channel\n",
                 format_double(ens.t_start), format_double(ens.t_end));
  for (const auto& rec : ens.records) {
    for (const auto& ev : rec.events) {
      fmt::format_to(std::back_inserter(buf), "{} {:.18g} {}\n", rec.trajectory_id, ev.time,
                     trajectories::channel_tag(ev.channel));
    }
  }
  write_text(path, fmt::to_string(buf));
}

trajectories::EnsembleRecord read_click_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open click log '{}'", path.string()));
  trajectories::EnsembleRecord ens;
  std::size_t n_traj = 0;
  bool have_count = false, have_columns = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(2, eq - 2);
      const auto value = line.substr(eq + 1);
      if (key == "config_fingerprint") {
        ens.fingerprint = parse_hex(value, path);
      } else if (key == "n_trajectories") {
        n_traj = static_cast<std::size_t>(parse_double(value, path, line_no));
        have_count = true;
      } else if (key == "t_start") {
        ens.t_start = parse_double(value, path, line_no);
      } else if (key == "t_end") {
        ens.t_end = parse_double(value, path, line_no);
      }
      continue;
    }
    if (!have_columns) {
      if (line != "trajectory_id time channel") {
        throw IoError(fmt::format("{}:{}: unexpected column header '{}'", path.string(), line_no, line));
      }
      if (!have_count) throw IoError(fmt::format("{}: n_trajectories header missing", path.string()));
      ens.records.resize(n_traj);
      for (std::size_t i = 0; i < n_traj; ++i) ens.records[i].trajectory_id = i;
      have_columns = true;
      continue;
    }
    std::istringstream row(line);
    std::string id_s, time_s, tag;
    if (!(row >> id_s >> time_s >> tag)) {
      throw IoError(fmt::format("{}:{}: expected 'trajectory_id time channel'", path.string(), line_no));
    }
    const auto id = static_cast<std::size_t>(parse_double(id_s, path, line_no));
    if (id >= n_traj) throw IoError(fmt::format("{}:{}: trajectory id {} >= n_trajectories", path.string(), line_no, id));
    const auto channel = trajectories::channel_from_tag(tag);
    if (!channel) throw IoError(fmt::format("{}:{}: unknown channel '{}'", path.string(), line_no, tag));
    ens.records[id].events.push_back({parse_double(time_s, path, line_no), *channel});
  }
  if (!have_columns || ens.records.empty()) {
    throw NoDataError(fmt::format("click log '{}' holds no trajectories", path.string()));
  }
  return ens;
}

}  // namespace bundlesim::io
