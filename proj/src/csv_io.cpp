#include "pvtraj/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <tuple>

namespace pvtraj {
namespace {

void split(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
}

}  // namespace

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw InputError("cannot open " + path.string());
  if (!std::getline(in_, line_)) throw InputError(path.string() + " is empty");
  ++line_no_;
  std::vector<std::string_view> names;
  split(line_, names);
  for (auto n : names) header_.emplace_back(n);
}

std::size_t CsvReader::column(std::string_view name) const {
  auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw InputError(path_.string() + ": missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header_.begin());
}

bool CsvReader::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (line_.empty() || line_ == "\r") continue;
    split(line_, fields_);
    if (fields_.size() != header_.size())
      throw InputError(path_.string() + ":" + std::to_string(line_no_) + ": expected " +
                       std::to_string(header_.size()) + " fields");
    return true;
  }
  return false;
}

std::string_view CsvReader::field(std::size_t index) const { return fields_.at(index); }

double CsvReader::number(std::size_t index) const {
  const std::string_view f = field(index);
  if (f.empty() || f == "NA" || f == "nan" || f == "NaN") return kMissing<double>;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size())
    throw InputError(path_.string() + ":" + std::to_string(line_no_) + ": bad number '" + std::string(f) + "'");
  return v;
}

long CsvReader::integer(std::size_t index) const {
  const std::string_view f = field(index);
  long v = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size())
    throw InputError(path_.string() + ":" + std::to_string(line_no_) + ": bad integer '" + std::string(f) + "'");
  return v;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  // avoid "-0.0000"
  if (buf[0] == '-' && std::strtod(buf, nullptr) == 0.0) return std::string(buf + 1);
  return buf;
}

double quantize(double value, int decimals) {
  if (!std::isfinite(value)) return value;
  return std::strtod(format_fixed(value, decimals).c_str(), nullptr);
}

std::map<HourStamp, GridForecastSeries> read_forecasts_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_issue = csv.column("issue_time");
  const auto c_member = csv.column("member");
  const auto c_cell = csv.column("cell");
  const auto c_lead = csv.column("lead_h");
  const auto c_value = csv.column("ghi_accum");

  struct Raw {
    std::set<long> members, cells;
    std::set<int> steps;
    std::vector<std::tuple<long, long, int, double>> rows;
  };
  std::map<HourStamp, Raw> raw;
  std::string last_issue_text;
  HourStamp last_issue{};
  while (csv.next()) {
    const std::string_view issue_text = csv.field(c_issue);
    if (issue_text != last_issue_text) {
      last_issue = parse_hour_stamp(issue_text);
      last_issue_text = std::string(issue_text);
    }
    const long member = csv.integer(c_member);
    const long cell = csv.integer(c_cell);
    const long lead = csv.integer(c_lead);
    const double value = csv.number(c_value);
    if (lead < 1 || lead > kHorizon)
      throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": lead_h outside 1..72");
    if (cell < 0) throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": negative cell id");
    if (!(value >= 0.0))
      throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": ghi_accum must be >= 0");
    Raw& r = raw[last_issue];
    r.members.insert(member);
    r.cells.insert(cell);
    r.steps.insert(static_cast<int>(lead));
    r.rows.emplace_back(member, cell, static_cast<int>(lead), value);
  }

  std::map<HourStamp, GridForecastSeries> out;
  for (auto& [issue, r] : raw) {
    GridForecastSeries s;
    s.issue_time = issue;
    s.steps.assign(r.steps.begin(), r.steps.end());
    const long n_cells = *r.cells.rbegin() + 1;
    std::map<long, std::size_t> member_index;
    for (long m : r.members) member_index.emplace(m, member_index.size());
    std::map<int, Index> step_index;
    for (int st : s.steps) step_index.emplace(st, static_cast<Index>(step_index.size()));
    // Cells absent from an issue stay NaN and fail loudly downstream if in-region.
    s.members.assign(r.members.size(), MatrixXd::Constant(n_cells, static_cast<Index>(s.steps.size()),
                                                          kMissing<double>));
    for (const auto& [m, c, lead, v] : r.rows) s.members[member_index[m]](c, step_index[lead]) = v;
    out.emplace(issue, std::move(s));
  }
  return out;
}

void write_forecasts_csv(const std::filesystem::path& path, const std::vector<GridForecastSeries>& forecasts,
                         const std::vector<int>& cell_ids) {
  std::ofstream out = open_output(path);
  out << "issue_time,member,cell,lead_h,ghi_accum\n";
  for (const auto& s : forecasts) {
    const std::string issue = format_hour_stamp(s.issue_time);
    for (std::size_t m = 0; m < s.members.size(); ++m) {
      const MatrixXd& block = s.members[m];
      for (Index c = 0; c < block.rows(); ++c) {
        const int id = cell_ids.empty() ? static_cast<int>(c) : cell_ids[static_cast<std::size_t>(c)];
        for (Index k = 0; k < block.cols(); ++k)
          out << issue << ',' << m << ',' << id << ',' << s.steps[static_cast<std::size_t>(k)] << ','
              << format_fixed(block(c, k), 3) << '\n';
      }
    }
  }
  if (!out) throw InputError("failed writing " + path.string());
}

ProductionSeries read_production_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_time = csv.column("time");
  const auto c_mw = csv.column("mw");
  std::vector<std::pair<HourStamp, double>> rows;
  while (csv.next()) {
    const HourStamp t = parse_hour_stamp(csv.field(c_time));
    const double v = csv.number(c_mw);
    if (!rows.empty() && t <= rows.back().first)
      throw InputError(path.string() + ":" + std::to_string(csv.line_number()) +
                       ": timestamps must be strictly increasing");
    if (v < 0.0) throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": mw must be >= 0");
    rows.emplace_back(t, v);
  }
  ProductionSeries p;
  if (rows.empty()) return p;
  p.start = rows.front().first;
  p.values.assign(static_cast<std::size_t>((rows.back().first - p.start).count() + 1), kMissing<double>);
  for (const auto& [t, v] : rows) p.values[static_cast<std::size_t>((t - p.start).count())] = v;
  return p;
}

void write_production_csv(const std::filesystem::path& path, const ProductionSeries& production) {
  std::ofstream out = open_output(path);
  out << "time,mw\n";
  for (std::size_t i = 0; i < production.values.size(); ++i) {
    if (std::isnan(production.values[i])) continue;
    out << format_hour_stamp(production.start + std::chrono::hours(static_cast<long>(i))) << ','
        << format_fixed(production.values[i], 4) << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

CellMask read_mask_csv(const std::filesystem::path& path) {
  CsvReader csv(path);
  const auto c_cell = csv.column("cell");
  const auto c_in = csv.column("in_region");
  std::vector<std::pair<long, bool>> rows;
  long max_id = -1;
  while (csv.next()) {
    const long cell = csv.integer(c_cell);
    const long flag = csv.integer(c_in);
    if (cell < 0 || (flag != 0 && flag != 1))
      throw InputError(path.string() + ":" + std::to_string(csv.line_number()) + ": bad mask row");
    rows.emplace_back(cell, flag == 1);
    max_id = std::max(max_id, cell);
  }
  CellMask mask = CellMask::Constant(max_id + 1, false);
  for (const auto& [c, f] : rows) mask(c) = f;
  return mask;
}

void write_mask_csv(const std::filesystem::path& path, const CellMask& mask) {
  std::ofstream out = open_output(path);
  out << "cell,in_region\n";
  for (Index c = 0; c < mask.size(); ++c) out << c << ',' << (mask(c) ? 1 : 0) << '\n';
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m, std::string_view row_name,
                      std::string_view col_name, const std::vector<int>& labels) {
  std::ofstream out = open_output(path);
  out << row_name << ',' << col_name << ",value\n";
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const int ri = labels.empty() ? static_cast<int>(i) : labels[static_cast<std::size_t>(i)];
      const int cj = labels.empty() ? static_cast<int>(j) : labels[static_cast<std::size_t>(j)];
      out << ri << ',' << cj << ',' << format_fixed(m(i, j), 8) << '\n';
    }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.production = read_production_csv(dir / "production.csv");
  const CellMask mask = read_mask_csv(dir / "mask.csv");
  ds.cases = build_cases(read_forecasts_csv(dir / "forecasts.csv"), ds.production, mask);
  return ds;
}

}  // namespace pvtraj
