#include "evalkit/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "evalkit/error.hpp"

namespace evalkit::harness {

using analysis::EvaluationRecord;
using analysis::Summary;

std::vector<std::vector<std::string>> ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string CsvField(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

double ParseDouble(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad ") + what + " value '" + s + "'");
  }
}

std::uint64_t ParseU64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad ") + what + " value '" + s + "'");
  }
}

std::string Join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += CsvField(fields[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string> kRecordColumns = {
    "image_id",  "model",       "blur_sigma",          "downsample_alpha",
    "noise_beta", "seed",       "status",              "psnr",
    "psnr_capped", "ssim",      "niqe",                "alignment",
    "alignment_mode", "alignment_backend", "alignment_orientation", "note"};

std::string RecordsToCsv(std::span<const EvaluationRecord> records) {
  std::string out = Join(kRecordColumns) + "\n";
  for (const auto& r : records) {
    const bool ok = r.status == analysis::RecordStatus::kOk;
    std::vector<std::string> f = {r.image_id,
                                  r.model,
                                  FormatDouble(r.spec.blur_sigma),
                                  FormatDouble(r.spec.downsample_alpha),
                                  FormatDouble(r.spec.noise_beta),
                                  std::to_string(r.spec.seed),
                                  std::string(analysis::ToString(r.status)),
                                  ok ? FormatDouble(r.psnr) : "",
                                  ok ? (r.psnr_capped ? "1" : "0") : "",
                                  ok ? FormatDouble(r.ssim) : "",
                                  ok && r.niqe ? FormatDouble(*r.niqe) : "",
                                  "", "", "", "",
                                  r.note};
    if (ok && r.alignment) {
      f[11] = FormatDouble(r.alignment->value);
      f[12] = alignment::ToString(r.alignment->mode);
      f[13] = alignment::ToString(r.alignment->backend);
      f[14] = alignment::ToString(r.alignment->orientation);
    }
    out += Join(f) + "\n";
  }
  return out;
}

std::vector<EvaluationRecord> RecordsFromCsv(std::string_view text) {
  const auto rows = ParseCsv(text);
  if (rows.empty() || rows[0] != kRecordColumns) {
    throw FormatError("records CSV header does not match the expected columns");
  }
  std::vector<EvaluationRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != kRecordColumns.size()) {
      throw FormatError("records CSV row " + std::to_string(i) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    EvaluationRecord r;
    r.image_id = f[0];
    r.model = f[1];
    r.spec.blur_sigma = ParseDouble(f[2], "blur_sigma");
    r.spec.downsample_alpha = ParseDouble(f[3], "downsample_alpha");
    r.spec.noise_beta = ParseDouble(f[4], "noise_beta");
    r.spec.seed = ParseU64(f[5], "seed");
    r.status = analysis::ParseRecordStatus(f[6]);
    r.note = f[15];
    if (r.status == analysis::RecordStatus::kOk) {
      r.psnr = ParseDouble(f[7], "psnr");
      r.psnr_capped = f[8] == "1";
      r.ssim = ParseDouble(f[9], "ssim");
      if (!f[10].empty()) r.niqe = ParseDouble(f[10], "niqe");
      if (!f[11].empty()) {
        alignment::AlignmentScore a;
        a.value = ParseDouble(f[11], "alignment");
        try {
          a.mode = alignment::ParseMode(f[12]);
          a.backend = alignment::ParseBackendKind(f[13]);
        } catch (const ParameterError& e) {
          throw FormatError(e.what());
        }
        a.orientation = f[14] == "higher-better" ? alignment::Orientation::kHigherBetter
                                                 : alignment::Orientation::kLowerBetter;
        r.alignment = a;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json RecordToJson(const EvaluationRecord& r) {
  nlohmann::json j = {{"image_id", r.image_id},
                      {"model", r.model},
                      {"spec",
                       {{"blur_sigma", r.spec.blur_sigma},
                        {"downsample_alpha", r.spec.downsample_alpha},
                        {"noise_beta", r.spec.noise_beta},
                        {"seed", r.spec.seed}}},
                      {"status", std::string(analysis::ToString(r.status))}};
  if (!r.note.empty()) j["note"] = r.note;
  if (r.status != analysis::RecordStatus::kOk) return j;
  j["psnr"] = r.psnr;
  j["psnr_capped"] = r.psnr_capped;
  j["ssim"] = r.ssim;
  if (r.niqe) j["niqe"] = *r.niqe;
  if (r.alignment) {
    j["alignment"] = {{"value", r.alignment->value},
                      {"mode", std::string(alignment::ToString(r.alignment->mode))},
                      {"backend", std::string(alignment::ToString(r.alignment->backend))},
                      {"orientation",
                       std::string(alignment::ToString(r.alignment->orientation))}};
  }
  return j;
}

nlohmann::json SummaryToJson(const Summary& s) {
  const auto metric = [](const analysis::MetricMean& m) -> nlohmann::json {
    if (!m.count) return nullptr;
    return {{"mean", m.mean}, {"count", m.count}};
  };
  nlohmann::json j = {{"model", s.model},
                      {"records", s.records},
                      {"skipped", s.skipped},
                      {"failed", s.failed},
                      {"psnr_capped", s.psnr_capped},
                      {"psnr", metric(s.psnr)},
                      {"ssim", metric(s.ssim)},
                      {"niqe", metric(s.niqe)},
                      {"alignment", metric(s.alignment)}};
  if (s.spec) {
    j["spec"] = {{"blur_sigma", s.spec->blur_sigma},
                 {"downsample_alpha", s.spec->downsample_alpha},
                 {"noise_beta", s.spec->noise_beta},
                 {"seed", s.spec->seed}};
  }
  if (s.alignment_backend) {
    j["alignment_backend"] = std::string(alignment::ToString(*s.alignment_backend));
    j["alignment_orientation"] =
        std::string(alignment::ToString(*s.alignment_orientation));
    j["alignment_modes"] = s.alignment_modes;
  }
  return j;
}

namespace {

// Column value used for the summary table; PSNR falls back to the cap when
// every record was a perfect reconstruction.
std::optional<double> PsnrCell(const Summary& s) {
  if (s.psnr.count) return s.psnr.mean;
  if (s.psnr_capped) return analysis::kPsnrCap;
  return std::nullopt;
}

std::optional<double> Cell(const analysis::MetricMean& m) {
  if (m.count) return m.mean;
  return std::nullopt;
}

struct Column {
  std::string name;
  bool higher_better;
  std::vector<std::optional<double>> values;
  std::vector<bool> best;
};

std::vector<Column> SummaryColumns(std::span<const Summary> summaries) {
  bool align_higher = false;
  std::string align_label = "alignment";
  for (const auto& s : summaries) {
    if (s.alignment_orientation) {
      align_higher = *s.alignment_orientation == alignment::Orientation::kHigherBetter;
      break;
    }
  }
  std::vector<Column> cols = {{align_label, align_higher, {}, {}},
                              {"ssim", true, {}, {}},
                              {"psnr", true, {}, {}},
                              {"niqe", false, {}, {}}};
  for (const auto& s : summaries) {
    cols[0].values.push_back(Cell(s.alignment));
    cols[1].values.push_back(Cell(s.ssim));
    cols[2].values.push_back(PsnrCell(s));
    cols[3].values.push_back(Cell(s.niqe));
  }
  for (auto& c : cols) {
    std::optional<double> best;
    for (const auto& v : c.values) {
      if (!v) continue;
      if (!best || (c.higher_better ? *v > *best : *v < *best)) best = v;
    }
    for (const auto& v : c.values) c.best.push_back(v && best && *v == *best);
  }
  return cols;
}

std::string Arrow(bool higher_better) { return higher_better ? "↑" : "↓"; }

}  // namespace

std::string SummaryToCsv(std::span<const Summary> summaries) {
  const auto cols = SummaryColumns(summaries);
  std::vector<std::string> header = {"model", "ok", "skipped", "failed", "psnr_capped",
                                     "alignment_backend", "alignment_mode"};
  for (const auto& c : cols) {
    header.push_back(c.name + Arrow(c.higher_better));
    header.push_back(c.name + "_best");
  }
  std::string out = Join(header) + "\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    std::vector<std::string> f = {
        s.model,
        std::to_string(s.records - s.skipped - s.failed),
        std::to_string(s.skipped),
        std::to_string(s.failed),
        std::to_string(s.psnr_capped),
        s.alignment_backend ? std::string(alignment::ToString(*s.alignment_backend)) : "",
        s.alignment_modes};
    for (const auto& c : cols) {
      f.push_back(c.values[i] ? FormatDouble(*c.values[i]) : "");
      f.push_back(c.best[i] ? "*" : "");
    }
    out += Join(f) + "\n";
  }
  return out;
}

std::string SummaryToMarkdown(std::span<const Summary> summaries, std::string_view task) {
  const auto cols = SummaryColumns(summaries);
  std::string backend, modes;
  for (const auto& s : summaries) {
    if (s.alignment_backend) {
      backend = alignment::ToString(*s.alignment_backend);
      modes = s.alignment_modes;
      break;
    }
  }
  std::ostringstream md;
  md << "| Task | Model | Alignment";
  if (!backend.empty()) md << " (" << backend << ", " << modes << ")";
  md << " " << Arrow(cols[0].higher_better) << " | SSIM ↑ | PSNR ↑ | NIQE ↓ | n |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    md << "| " << task << " | " << summaries[i].model;
    for (const auto& c : cols) {
      md << " | ";
      if (!c.values[i]) {
        md << "-";
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *c.values[i]);
      md << (c.best[i] ? "**" : "") << buf << (c.best[i] ? "**" : "");
    }
    md << " | " << summaries[i].records - summaries[i].skipped - summaries[i].failed
       << " |\n";
  }
  return md.str();
}

std::string SweepToCsv(std::span<const analysis::SweepRow> rows) {
  std::string out = "level,metric,mean,count\n";
  for (const auto& r : rows) {
    out += Join({FormatDouble(r.level), r.metric, FormatDouble(r.mean),
                 std::to_string(r.count)}) +
           "\n";
  }
  return out;
}

std::string PlaneToCsv(std::string_view x_name, std::string_view y_name,
                       std::span<const PlaneRow> rows) {
  std::string out = Join({"model", std::string(x_name), std::string(y_name)}) + "\n";
  for (const auto& r : rows) {
    out += Join({r.model, FormatDouble(r.x), FormatDouble(r.y)}) + "\n";
  }
  return out;
}

std::string ResourceToCsv(std::span<const analysis::ResourceRow> rows) {
  std::string out = "model,params,latency_ms,psnr,ssim,niqe,alignment\n";
  for (const auto& r : rows) {
    const auto cell = [](std::optional<double> v) { return v ? FormatDouble(*v) : ""; };
    out += Join({r.model, std::to_string(r.param_count),
                 r.latency_ms ? FormatDouble(*r.latency_ms) : "", cell(PsnrCell(r.summary)),
                 cell(Cell(r.summary.ssim)), cell(Cell(r.summary.niqe)),
                 cell(Cell(r.summary.alignment))}) +
           "\n";
  }
  return out;
}

namespace {

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string RenderSvg(std::string_view title, std::string_view x_label,
                      std::string_view y_label, std::span<const SvgSeries> series,
                      bool normalize_each) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
  constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                  "#9467bd", "#ff7f0e", "#17becf"};
  const double inf = std::numeric_limits<double>::infinity();
  double x_min = inf, x_max = -inf, y_min = inf, y_max = -inf;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!(x_min <= x_max)) x_min = 0, x_max = 1;
  if (x_min == x_max) x_min -= 0.5, x_max += 0.5;
  if (!(y_min <= y_max)) y_min = 0, y_max = 1;
  if (y_min == y_max) y_min -= 0.5, y_max += 0.5;

  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  const auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\""
      << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << XmlEscape(title) << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << XmlEscape(x_label)
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << XmlEscape(y_label) << "</text>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << Tick(x_min) << "</text>\n";
  svg << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << Tick(x_max) << "</text>\n";
  if (!normalize_each) {
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + ph
        << "\" text-anchor=\"end\" font-size=\"10\">" << Tick(y_min) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 10
        << "\" text-anchor=\"end\" font-size=\"10\">" << Tick(y_max) << "</text>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % kColors.size()];
    double lo = y_min, hi = y_max;
    if (normalize_each && !s.points.empty()) {
      lo = inf, hi = -inf;
      for (const auto& p : s.points) lo = std::min(lo, p.second), hi = std::max(hi, p.second);
      if (lo == hi) lo -= 0.5, hi += 0.5;
    }
    const auto sy = [&](double y) { return kTop + ph - (y - lo) / (hi - lo) * ph; };
    if (s.polyline) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        svg << (i ? " " : "") << Num(sx(s.points[i].first)) << ','
            << Num(sy(s.points[i].second));
      }
      svg << "\"/>\n";
    }
    for (const auto& [x, y] : s.points) {
      svg << "<circle cx=\"" << Num(sx(x)) << "\" cy=\"" << Num(sy(y)) << "\" r=\"4\" fill=\""
          << color << "\"/>\n";
    }
    std::string legend = s.name;
    if (normalize_each) legend += " [" + Tick(lo) + ", " + Tick(hi) + "]";
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    svg << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << ly - 9
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << kW - kRight + 28 << "\" y=\"" << ly
        << "\" font-size=\"11\">" << XmlEscape(legend) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void WriteTextFile(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace evalkit::harness
