#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "recip/harness/metrics.hpp"

namespace recip::harness {

inline constexpr const char* kPlotDataFile = "plot_data.csv";
inline constexpr const char* kPlotSummaryFile = "plot_summary.csv";

struct PlotEmitResult {
  std::size_t files_read = 0;
  std::size_t rows_written = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string metrics_header() {
  std::ostringstream s;
  write_metrics_header(s);
  std::string h = s.str();
  h.pop_back();
  return h;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

// Converts every metrics CSV in `dir` into
//   plot_data.csv:    experiment,seed,episode,metric,value   (one row per metric)
//   plot_summary.csv: experiment,episode,metric,mean,stderr,n (across seeds)
// written to `out_dir` (default: dir). Files are read in name order; other
// CSVs and malformed files are skipped with a warning.
inline PlotEmitResult emit_plot_data(const std::filesystem::path& dir, std::filesystem::path out_dir = {}) {
  namespace fs = std::filesystem;
  if (out_dir.empty()) out_dir = dir;
  PlotEmitResult result;
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  } else {
    result.warnings.push_back("'" + dir.string() + "' is not a directory");
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(out_dir);
  std::ofstream data(out_dir / kPlotDataFile);
  data.precision(17);
  data << "experiment,seed,episode,metric,value\n";
  const std::string header = detail::metrics_header();
  // (experiment, episode, metric) -> values across seeds
  std::map<std::tuple<std::string, int, std::size_t>, std::vector<double>> groups;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    if (name == kPlotDataFile || name == kPlotSummaryFile) continue;
    std::ifstream in(f);
    std::string line;
    if (!std::getline(in, line) || line != header) {
      result.warnings.push_back("skipping " + name + ": not a metrics file");
      continue;
    }
    ++result.files_read;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != 3 + kMetricNames.size()) {
        result.warnings.push_back(name + ":" + std::to_string(lineno) + ": wrong column count, rest of file skipped");
        break;
      }
      int episode = 0;
      try {
        episode = std::stoi(cells[2]);
        for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
          const double v = std::stod(cells[3 + m]);
          data << cells[0] << ',' << cells[1] << ',' << episode << ',' << kMetricNames[m] << ',' << cells[3 + m]
               << '\n';
          groups[{cells[0], episode, m}].push_back(v);
          ++result.rows_written;
        }
      } catch (const std::exception&) {
        result.warnings.push_back(name + ":" + std::to_string(lineno) + ": unparsable number, rest of file skipped");
        break;
      }
    }
  }
  std::ofstream summary(out_dir / kPlotSummaryFile);
  summary.precision(17);
  summary << "experiment,episode,metric,mean,stderr,n\n";
  for (const auto& [key, values] : groups) {
    const auto n = values.size();
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    summary << std::get<0>(key) << ',' << std::get<1>(key) << ',' << kMetricNames[std::get<2>(key)] << ',' << mean
            << ',' << se << ',' << n << '\n';
  }
  return result;
}

}  // namespace recip::harness
