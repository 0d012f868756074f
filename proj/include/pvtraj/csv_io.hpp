#pragma once

#include "pvtraj/data_pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pvtraj {

/// Minimal comma-separated reader: header row names the columns, fields are
/// looked up by name so column order in the file does not matter.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  /// Index of a required column; throws InputError naming the file otherwise.
  std::size_t column(std::string_view name) const;
  bool next();
  std::string_view field(std::size_t index) const;
  double number(std::size_t index) const;
  long integer(std::size_t index) const;
  std::size_t line_number() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::vector<std::string> header_;
  std::vector<std::string_view> fields_;
  std::size_t line_no_ = 0;
};

/// Opens `path` for writing or throws InputError.
std::ofstream open_output(const std::filesystem::path& path);

/// Fixed-decimal formatting used in every numeric CSV column.
std::string format_fixed(double value, int decimals);
/// Round-trips a value through its `decimals`-digit text form.
double quantize(double value, int decimals);

std::map<HourStamp, GridForecastSeries> read_forecasts_csv(const std::filesystem::path& path);
void write_forecasts_csv(const std::filesystem::path& path, const std::vector<GridForecastSeries>& forecasts,
                         const std::vector<int>& cell_ids = {});

ProductionSeries read_production_csv(const std::filesystem::path& path);
void write_production_csv(const std::filesystem::path& path, const ProductionSeries& production);

CellMask read_mask_csv(const std::filesystem::path& path);
void write_mask_csv(const std::filesystem::path& path, const CellMask& mask);

/// Writes (row, col, value) triplets of a square matrix; debugging aid.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m, std::string_view row_name = "row",
                      std::string_view col_name = "col", const std::vector<int>& labels = {});

/// forecasts.csv + production.csv + mask.csv, preprocessed into cases.
struct Dataset {
  CaseMap cases;
  ProductionSeries production;
};
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace pvtraj
