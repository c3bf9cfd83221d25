#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/analysis.hpp"

namespace evalkit::harness {

/// Splits CSV text into rows of fields (RFC 4180 quoting).
std::vector<std::vector<std::string>> ParseCsv(std::string_view text);

/// Quotes a field when it contains a comma, quote or newline.
std::string CsvField(std::string_view s);

/// Shortest-round-trip-safe decimal rendering ("%.17g").
std::string FormatDouble(double v);

extern const std::vector<std::string> kRecordColumns;

std::string RecordsToCsv(std::span<const analysis::EvaluationRecord> records);
/// Inverse of RecordsToCsv. Throws FormatError on malformed input.
std::vector<analysis::EvaluationRecord> RecordsFromCsv(std::string_view text);

nlohmann::json RecordToJson(const analysis::EvaluationRecord& r);
nlohmann::json SummaryToJson(const analysis::Summary& s);

/// Model-level table: rows are models, columns are alignment / SSIM / PSNR /
/// NIQE means with orientation arrows and a best-per-column flag.
std::string SummaryToCsv(std::span<const analysis::Summary> summaries);
std::string SummaryToMarkdown(std::span<const analysis::Summary> summaries,
                              std::string_view task);

/// Header "level,metric,mean,count".
std::string SweepToCsv(std::span<const analysis::SweepRow> rows);

struct PlaneRow {
  std::string model;
  double x = 0.0;  // raw orientation
  double y = 0.0;
};

std::string PlaneToCsv(std::string_view x_name, std::string_view y_name,
                       std::span<const PlaneRow> rows);

std::string ResourceToCsv(std::span<const analysis::ResourceRow> rows);

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool polyline = true;  // false: scatter markers
};

/// Minimal static chart; each series is scaled into its own [0,1] band on the
/// y axis when `normalize_each` is set (curves of different units).
std::string RenderSvg(std::string_view title, std::string_view x_label,
                      std::string_view y_label, std::span<const SvgSeries> series,
                      bool normalize_each);

/// Writes `content` to `path`, creating parent directories.
void WriteTextFile(const std::filesystem::path& path, std::string_view content);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace evalkit::harness
