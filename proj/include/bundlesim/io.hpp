#pragma once

// Text formats.
//
// Tables (CSV): one comment line "# config_fingerprint=<16 hex digits>", one
// header row, then data rows. Floating-point cells use the shortest
// representation that round-trips to the same double.
//
// Click log: columnar text
//   # bundlesim click log v1
//   # config_fingerprint=<hex>
//   # n_trajectories=<N>
//   # t_start=<t0>
//   # t_end=<t1>
//   trajectory_id time channel
//   <id> <time, 18 significant digits> <R|L|E|F>
// Rows are ordered by trajectory id, then time. Trajectories without clicks
// have no rows; n_trajectories fixes the ensemble size.

#include "bundlesim/trajectories.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bundlesim::io {

std::string format_double(double x);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}
  /// Appends a row; throws if its width differs from the header.
  void add(std::vector<std::string> row);
  std::size_t column_index(const std::string& name) const;
  double number(std::size_t row, const std::string& column) const;
};

/// Cell helpers.
std::string cell(double x);
std::string cell(int x);
std::string cell(std::size_t x);
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

void write_table(const std::filesystem::path& path, const Table& table, std::uint64_t fingerprint);
struct LoadedTable {
  std::uint64_t fingerprint = 0;
  Table table;
};
LoadedTable read_table(const std::filesystem::path& path);

void write_click_log(const std::filesystem::path& path, const trajectories::EnsembleRecord& ens,
                     std::uint64_t fingerprint);
/// Throws NoDataError for an empty file or a log without a header.
trajectories::EnsembleRecord read_click_log(const std::filesystem::path& path);

/// Writes text atomically enough for our purposes (truncate + write); throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace bundlesim::io
