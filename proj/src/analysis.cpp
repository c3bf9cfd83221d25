#include "evalkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "evalkit/distortion.hpp"
#include "evalkit/error.hpp"
#include "evalkit/parallel.hpp"

namespace evalkit::analysis {

std::string_view ToString(RecordStatus s) {
  switch (s) {
    case RecordStatus::kOk: return "ok";
    case RecordStatus::kSkipped: return "skipped";
    case RecordStatus::kFailed: return "failed";
  }
  return "?";
}

RecordStatus ParseRecordStatus(std::string_view s) {
  if (s == "ok") return RecordStatus::kOk;
  if (s == "skipped") return RecordStatus::kSkipped;
  if (s == "failed") return RecordStatus::kFailed;
  throw FormatError("unknown record status '" + std::string(s) + "'");
}

void SetPsnr(EvaluationRecord& r, double psnr_db) {
  if (std::isinf(psnr_db) && psnr_db > 0) {
    r.psnr = kPsnrCap;
    r.psnr_capped = true;
  } else {
    r.psnr = psnr_db;
    r.psnr_capped = false;
  }
}

namespace {

void Accumulate(MetricMean& m, double& sum, double v) {
  sum += v;
  ++m.count;
}

}  // namespace

std::vector<Summary> Aggregate(std::span<const EvaluationRecord> records,
                               GroupBy group_by) {
  if (records.empty()) throw ParameterError("cannot aggregate an empty record set");
  const bool by_spec = group_by == GroupBy::kModelAndSpec;

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](std::size_t i) {
    const auto& r = records[i];
    return std::tie(r.model, r.spec, r.image_id);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

  std::vector<Summary> out;
  std::size_t begin = 0;
  while (begin < order.size()) {
    const auto& first = records[order[begin]];
    std::size_t end = begin;
    while (end < order.size()) {
      const auto& r = records[order[end]];
      if (r.model != first.model || (by_spec && r.spec != first.spec)) break;
      ++end;
    }

    Summary s;
    s.model = first.model;
    if (by_spec) s.spec = first.spec;
    double psnr_sum = 0, ssim_sum = 0, niqe_sum = 0, align_sum = 0;
    std::set<std::string> modes;
    for (std::size_t k = begin; k < end; ++k) {
      const auto& r = records[order[k]];
      ++s.records;
      if (r.status == RecordStatus::kSkipped) {
        ++s.skipped;
        continue;
      }
      if (r.status == RecordStatus::kFailed) {
        ++s.failed;
        continue;
      }
      if (r.psnr_capped) {
        ++s.psnr_capped;
      } else {
        Accumulate(s.psnr, psnr_sum, r.psnr);
      }
      Accumulate(s.ssim, ssim_sum, r.ssim);
      if (r.niqe) Accumulate(s.niqe, niqe_sum, *r.niqe);
      if (r.alignment) {
        if (s.alignment_backend && *s.alignment_backend != r.alignment->backend) {
          throw ParameterError("model '" + r.model +
                               "' mixes alignment backends; means would be meaningless");
        }
        s.alignment_backend = r.alignment->backend;
        s.alignment_orientation = r.alignment->orientation;
        modes.insert(std::string(alignment::ToString(r.alignment->mode)));
        Accumulate(s.alignment, align_sum, r.alignment->value);
      }
    }
    const auto finish = [](MetricMean& m, double sum) {
      if (m.count) m.mean = sum / static_cast<double>(m.count);
    };
    finish(s.psnr, psnr_sum);
    finish(s.ssim, ssim_sum);
    finish(s.niqe, niqe_sum);
    finish(s.alignment, align_sum);
    for (const auto& m : modes) {
      if (!s.alignment_modes.empty()) s.alignment_modes += "+";
      s.alignment_modes += m;
    }
    out.push_back(std::move(s));
    begin = end;
  }
  return out;
}

std::vector<Point> ParetoFront(std::span<const Point> points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ParameterError("Pareto front needs finite coordinates");
    }
  }
  std::vector<Point> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const Point& a, const Point& b) {
    return std::tie(a.x, a.y, a.index) < std::tie(b.x, b.y, b.index);
  });
  std::vector<Point> front;
  for (const auto& p : sorted) {
    if (front.empty() || p.y < front.back().y) {
      front.push_back(p);
    } else if (p.x == front.back().x && p.y == front.back().y) {
      front.push_back(p);  // exact tie with a front point
    }
  }
  return front;
}

Restorer IdentityRestorer() {
  return [](std::size_t, const std::string&, const ImagePlane& lq) { return lq; };
}

Restorer TableRestorer(std::map<std::size_t, std::map<std::string, ImagePlane>> outputs) {
  return [table = std::move(outputs)](std::size_t level, const std::string& id,
                                      const ImagePlane&) -> ImagePlane {
    const auto lv = table.find(level);
    if (lv == table.end()) {
      throw ManifestError("no restorer outputs for sweep level " + std::to_string(level));
    }
    const auto img = lv->second.find(id);
    if (img == lv->second.end()) {
      throw ManifestError("no restorer output for '" + id + "' at sweep level " +
                          std::to_string(level));
    }
    return img->second;
  };
}

SweepResult DegradationSweep(std::span<const GtImage> corpus,
                             std::span<const SweepLevel> levels,
                             const Restorer& restorer, const SweepOptions& options) {
  if (corpus.empty() || levels.empty()) {
    throw ParameterError("sweep needs a non-empty corpus and level list");
  }
  if (options.niqe && !options.pristine) {
    throw ParameterError("NIQE sweep requires a pristine model");
  }
  for (const auto& l : levels) l.spec.Validate();
  const alignment::SemanticBackend builtin = alignment::SemanticBackend::Builtin();
  const alignment::SemanticBackend& backend = options.backend ? *options.backend : builtin;

  std::vector<std::string> metrics;
  if (options.psnr) metrics.emplace_back("psnr");
  if (options.ssim) metrics.emplace_back("ssim");
  if (options.niqe) metrics.emplace_back("niqe");
  if (options.alignment) metrics.emplace_back("alignment");

  const std::size_t n = corpus.size();
  // values[metric][level * n + image]
  std::vector<std::vector<double>> values(metrics.size(),
                                          std::vector<double>(levels.size() * n));
  ParallelFor(levels.size() * n, options.jobs, [&](std::size_t unit) {
    const std::size_t l = unit / n, i = unit % n;
    const auto& gt = corpus[i];
    const ImagePlane lq = degradation::Degrade(gt.image, levels[l].spec);
    ImagePlane restored = restorer(l, gt.id, lq);
    if (restored.width() != gt.image.width() || restored.height() != gt.image.height()) {
      restored = degradation::Resize(restored, gt.image.width(), gt.image.height());
    }
    std::size_t m = 0;
    if (options.psnr) {
      EvaluationRecord r;
      SetPsnr(r, distortion::Psnr(restored, gt.image));
      values[m++][unit] = r.psnr;
    }
    if (options.ssim) values[m++][unit] = distortion::Ssim(restored, gt.image);
    if (options.niqe) {
      values[m++][unit] = perception::NiqeScore(restored, *options.pristine);
    }
    if (options.alignment) {
      const alignment::Subject rs{&restored, gt.id};
      const alignment::Subject gs{&gt.image, gt.id};
      const alignment::Subject ls{&lq, gt.id};
      values[m++][unit] =
          alignment::AlignAuto(rs, gs, ls, levels[l].spec, backend, options.mode).value;
    }
  });

  SweepResult result;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    auto& table = result.per_image[metrics[m]];
    table.assign(levels.size(), std::vector<double>(n));
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (std::size_t i = 0; i < n; ++i) table[l][i] = values[m][l * n + i];
    }
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const auto& row = result.per_image[metrics[m]][l];
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      result.rows.push_back(
          SweepRow{levels[l].parameter, metrics[m], sum / static_cast<double>(n), n});
    }
  }
  return result;
}

std::vector<ResourceRow> ResourceReport(std::span<const Summary> summaries,
                                        std::span<const ModelMeta> metas) {
  std::map<std::string, const ModelMeta*> by_name;
  for (const auto& m : metas) {
    if (m.param_count == 0) {
      throw ManifestError("model '" + m.model + "' must have a positive parameter count");
    }
    if (m.latency_ms && !(*m.latency_ms > 0.0)) {
      throw ManifestError("model '" + m.model + "' must have a positive latency");
    }
    if (!by_name.emplace(m.model, &m).second) {
      throw ManifestError("duplicate metadata for model '" + m.model + "'");
    }
  }
  std::set<std::string> summarized;
  for (const auto& s : summaries) summarized.insert(s.model);
  for (const auto& [name, meta] : by_name) {
    if (!summarized.contains(name)) {
      throw ManifestError("metadata names unknown model '" + name + "'");
    }
  }
  std::vector<ResourceRow> rows;
  for (const auto& s : summaries) {
    const auto it = by_name.find(s.model);
    if (it == by_name.end()) {
      throw ManifestError("no metadata (parameters/latency) for model '" + s.model + "'");
    }
    rows.push_back(ResourceRow{s.model, it->second->param_count, it->second->latency_ms, s});
  }
  return rows;
}

}  // namespace evalkit::analysis
