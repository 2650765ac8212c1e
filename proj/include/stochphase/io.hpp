#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochphase/gedmd.hpp"
#include "stochphase/longterm.hpp"
#include "stochphase/reduction.hpp"
#include "stochphase/response.hpp"

namespace stochphase {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.4.0";

/// Shortest round-trip decimal for a double ("nan", "inf" spelled out).
std::string format_number(double v);

/// Column-oriented CSV with a header row. All columns have equal length.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string str() const;
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// "x,y,<name>..." over nodes where every listed field is finite.
CsvTable field_table(const Grid2D& grid, const std::vector<std::string>& names,
                     const std::vector<const std::vector<double>*>& columns);

/// Raw row-major float64 block (host byte order, one value per node) and its
/// JSON sidecar with bounds, shape and mask digest.
std::string raw_block(const std::vector<double>& values);
json raw_sidecar(const Grid2D& grid, const std::string& name);

/// "phi,a,D,count".
CsvTable reduced_table(const ReducedPhaseModel& model);
json reduced_metadata(const ReducedPhaseModel& model);

/// "phi,comp0,...,stderr0,...".
CsvTable response_table(const ResponseCurve& curve);

json to_json(const LongTermStats& s);
json to_json(const Region& r);
json to_json(const GedmdModel& g);

}  // namespace stochphase
