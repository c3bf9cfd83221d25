#include "evalkit/commands.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "evalkit/analysis.hpp"
#include "evalkit/distortion.hpp"
#include "evalkit/error.hpp"
#include "evalkit/manifest.hpp"
#include "evalkit/parallel.hpp"
#include "evalkit/perception.hpp"
#include "evalkit/report.hpp"

namespace evalkit::harness {

namespace fs = std::filesystem;
using alignment::Subject;
using analysis::EvaluationRecord;
using analysis::RecordStatus;

fs::path PrefixedPath(const std::string& prefix, const std::string& suffix) {
  if (prefix.empty()) return fs::path(suffix);
  if (prefix.back() == '/' || fs::is_directory(prefix)) return fs::path(prefix) / suffix;
  return fs::path(prefix + suffix);
}

namespace {

std::string Dims(const ImagePlane& img) {
  return std::to_string(img.width()) + "x" + std::to_string(img.height());
}

// Errors that mean the inputs themselves are unusable rather than a single
// unit failing.
template <typename Fn>
int Guard(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ManifestError& e) {
    log << "manifest error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    log << "format error: " << e.what() << '\n';
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
  } catch (const ParameterError& e) {
    log << "parameter error: " << e.what() << '\n';
  } catch (const InsufficientDataError& e) {
    log << "insufficient data: " << e.what() << '\n';
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitUsage;
}

void ApplyOverrides(const AlignmentOverrides& o, AlignmentConfig& config) {
  if (o.backend) config.backend = *o.backend;
  if (o.gamma_threshold) config.selection.gamma_threshold = *o.gamma_threshold;
  if (o.force_mode) config.selection.forced = *o.force_mode;
}

alignment::SemanticBackend MakeBackend(const DatasetManifest& m) {
  switch (m.alignment.backend) {
    case alignment::BackendKind::kBuiltinDescriptor:
      return alignment::SemanticBackend::Builtin();
    case alignment::BackendKind::kSsim:
      return alignment::SemanticBackend::Ssim();
    case alignment::BackendKind::kEmbeddingManifest: {
      if (m.embeddings.empty()) {
        throw ManifestError("embeddings backend selected but the manifest lists no "
                            "embedding files");
      }
      std::map<alignment::Role, std::shared_ptr<const alignment::EmbeddingManifest>> tables;
      for (const auto& [role, path] : m.embeddings) {
        tables[role] = std::make_shared<const alignment::EmbeddingManifest>(
            alignment::EmbeddingManifest::Load(path));
      }
      return alignment::SemanticBackend::Embeddings(std::move(tables));
    }
  }
  throw ParameterError("unknown alignment backend");
}

}  // namespace

int RunDegrade(const DegradeOptions& options, std::ostream& log) {
  return Guard(log, [&] {
    DatasetManifest manifest =
        DatasetManifest::Load(options.manifest, ResolveDefaultSeed(options.seed));
    const fs::path lq_dir = options.out_dir / "lq";
    fs::create_directories(lq_dir);

    std::vector<std::string> errors(manifest.entries.size());
    ParallelFor(manifest.entries.size(), options.jobs, [&](std::size_t i) {
      auto& entry = manifest.entries[i];
      const fs::path target = lq_dir / (entry.id + ".png");
      try {
        const ImagePlane gt = LoadImage(entry.gt_path);
        const ImagePlane lq = degradation::Degrade(gt, entry.spec);
        fs::create_directories(target.parent_path());
        SaveImage(lq, target);
        entry.lq_path = fs::absolute(target);
      } catch (const Error& e) {
        errors[i] = e.what();
      } catch (const fs::filesystem_error& e) {
        errors[i] = e.what();
      }
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (errors[i].empty()) continue;
      ++failed;
      log << manifest.entries[i].id << ": " << errors[i] << '\n';
    }
    manifest.Save(options.out_dir / "manifest.json");
    log << "degraded " << manifest.entries.size() - failed << "/"
        << manifest.entries.size() << " entries into " << lq_dir.string() << '\n';
    return failed ? kExitFailures : kExitOk;
  });
}

int RunTrainNiqe(const TrainNiqeOptions& options, std::ostream& log) {
  return Guard(log, [&] {
    if (!fs::is_directory(options.corpus_dir)) {
      throw IoError("corpus directory " + options.corpus_dir.string() + " not found");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(options.corpus_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<ImagePlane> images;
    for (const auto& f : files) {
      try {
        images.push_back(LoadImage(f));
      } catch (const Error& e) {
        log << "skipping " << f.string() << ": " << e.what() << '\n';
      }
    }
    perception::FeatureOptions features;
    features.patch_size = options.patch_size;
    features.sharpness_fraction = options.sharpness_fraction;
    const perception::PristineModel model = perception::TrainPristine(
        images, options.corpus_dir.filename().string(), features, options.jobs);
    if (options.out_path.has_parent_path()) {
      fs::create_directories(options.out_path.parent_path());
    }
    model.Save(options.out_path);
    log << "trained pristine model on " << model.image_count << " images, "
        << model.patch_count << " patches -> " << options.out_path.string() << '\n';
    return kExitOk;
  });
}

namespace {

struct EntryImages {
  ImagePlane gt;
  ImagePlane lq;
  bool lq_from_file = false;
};

EvaluationRecord EvaluateOne(const ManifestEntry& entry, const EntryImages& images,
                             const std::string& model, const fs::path& path,
                             const perception::PristineModel* pristine,
                             const alignment::SemanticBackend& backend,
                             alignment::ModeSelection selection) {
  EvaluationRecord r;
  r.image_id = entry.id;
  r.model = model;
  r.spec = entry.spec;
  if (!fs::exists(path)) {
    r.status = RecordStatus::kSkipped;
    r.note = "restoration file missing";
    return r;
  }
  ImagePlane restored = LoadImage(path);
  if (restored.width() != images.gt.width() || restored.height() != images.gt.height()) {
    r.note = "resized from " + Dims(restored);
    restored = degradation::Resize(restored, images.gt.width(), images.gt.height());
  }
  if (restored.channels() == images.gt.channels()) {
    analysis::SetPsnr(r, distortion::Psnr(restored, images.gt));
  } else {
    analysis::SetPsnr(r, distortion::Psnr(ToLuminance(restored), ToLuminance(images.gt)));
  }
  r.ssim = distortion::Ssim(restored, images.gt);
  if (pristine) r.niqe = perception::NiqeScore(restored, *pristine);

  selection.quantize_redegraded = images.lq_from_file;
  const Subject rs{&restored, model + "/" + entry.id};
  const Subject gs{&images.gt, entry.id};
  const Subject ls{&images.lq, entry.id};
  r.alignment = alignment::AlignAuto(rs, gs, ls, entry.spec, backend, selection);
  return r;
}

}  // namespace

int RunEvaluate(const EvaluateOptions& options, std::ostream& log) {
  return Guard(log, [&] {
    DatasetManifest manifest =
        DatasetManifest::Load(options.manifest, ResolveDefaultSeed(options.seed));
    ApplyOverrides(options.alignment, manifest.alignment);
    const alignment::SemanticBackend backend = MakeBackend(manifest);
    std::optional<perception::PristineModel> pristine;
    if (options.pristine) pristine = perception::PristineModel::Load(*options.pristine);

    const std::vector<std::string> models = manifest.Models();
    if (models.empty()) throw ManifestError("manifest lists no restorations");
    const std::size_t per_entry = models.size();
    std::vector<EvaluationRecord> records(manifest.entries.size() * per_entry);

    ParallelFor(manifest.entries.size(), options.jobs, [&](std::size_t i) {
      const auto& entry = manifest.entries[i];
      const auto fill_all = [&](RecordStatus status, const std::string& note) {
        for (std::size_t k = 0; k < per_entry; ++k) {
          auto& r = records[i * per_entry + k];
          r = EvaluationRecord{};
          r.image_id = entry.id;
          r.model = models[k];
          r.spec = entry.spec;
          r.status = status;
          r.note = note;
        }
      };
      std::optional<EntryImages> images;
      try {
        ImagePlane gt = LoadImage(entry.gt_path);
        if (entry.lq_path) {
          ImagePlane lq = LoadImage(*entry.lq_path);
          images.emplace(EntryImages{std::move(gt), std::move(lq), true});
        } else {
          ImagePlane lq = degradation::Degrade(gt, entry.spec);
          images.emplace(EntryImages{std::move(gt), std::move(lq), false});
        }
      } catch (const Error& e) {
        fill_all(RecordStatus::kFailed, e.what());
        return;
      }
      for (std::size_t k = 0; k < per_entry; ++k) {
        auto& r = records[i * per_entry + k];
        const auto it = entry.restorations.find(models[k]);
        if (it == entry.restorations.end()) {
          r.image_id = entry.id;
          r.model = models[k];
          r.spec = entry.spec;
          r.status = RecordStatus::kSkipped;
          r.note = "no restoration listed";
          continue;
        }
        try {
          r = EvaluateOne(entry, *images, models[k], it->second,
                          pristine ? &*pristine : nullptr, backend,
                          manifest.alignment.selection);
        } catch (const Error& e) {
          r = EvaluationRecord{};
          r.image_id = entry.id;
          r.model = models[k];
          r.spec = entry.spec;
          r.status = RecordStatus::kFailed;
          r.note = e.what();
        }
      }
    });

    std::size_t failed = 0, skipped = 0;
    for (const auto& r : records) {
      if (r.status == RecordStatus::kFailed) {
        ++failed;
        log << r.image_id << " [" << r.model << "] failed: " << r.note << '\n';
      } else if (r.status == RecordStatus::kSkipped) {
        ++skipped;
        log << r.image_id << " [" << r.model << "] skipped: " << r.note << '\n';
      }
    }

    const auto summaries = analysis::Aggregate(records, analysis::GroupBy::kModel);
    const auto by_spec = analysis::Aggregate(records, analysis::GroupBy::kModelAndSpec);

    nlohmann::json j = {{"task", manifest.task_name},
                        {"records", nlohmann::json::array()},
                        {"summary", nlohmann::json::array()},
                        {"summary_by_spec", nlohmann::json::array()}};
    for (const auto& r : records) j["records"].push_back(RecordToJson(r));
    for (const auto& s : summaries) j["summary"].push_back(SummaryToJson(s));
    for (const auto& s : by_spec) j["summary_by_spec"].push_back(SummaryToJson(s));

    WriteTextFile(PrefixedPath(options.out_prefix, "records.csv"), RecordsToCsv(records));
    WriteTextFile(PrefixedPath(options.out_prefix, "records.json"), j.dump(2) + "\n");
    WriteTextFile(PrefixedPath(options.out_prefix, "summary.csv"), SummaryToCsv(summaries));
    const std::string md = SummaryToMarkdown(summaries, manifest.task_name);
    WriteTextFile(PrefixedPath(options.out_prefix, "summary.md"), md);
    log << md;
    log << records.size() << " records: " << records.size() - failed - skipped << " ok, "
        << skipped << " skipped, " << failed << " failed\n";
    return failed ? kExitFailures : kExitOk;
  });
}

int RunSweep(const SweepCommandOptions& options, std::ostream& log) {
  return Guard(log, [&] {
    const std::uint64_t seed = ResolveDefaultSeed(options.seed);
    DatasetManifest manifest = DatasetManifest::Load(options.manifest, seed);
    ApplyOverrides(options.alignment, manifest.alignment);
    if (manifest.alignment.backend == alignment::BackendKind::kEmbeddingManifest) {
      throw ParameterError("sweep synthesizes its images; use the builtin or ssim backend");
    }
    if (options.levels.empty()) throw ParameterError("no sweep levels given");

    analysis::SweepOptions sweep;
    sweep.jobs = options.jobs;
    sweep.mode = manifest.alignment.selection;
    std::optional<perception::PristineModel> pristine;
    if (options.pristine) {
      pristine = perception::PristineModel::Load(*options.pristine);
      sweep.pristine = &*pristine;
    }
    if (options.metrics.empty()) {
      sweep.niqe = pristine.has_value();
    } else {
      sweep.ssim = sweep.niqe = sweep.alignment = false;
      for (const auto& m : options.metrics) {
        if (m == "psnr") sweep.psnr = true;
        else if (m == "ssim") sweep.ssim = true;
        else if (m == "niqe") sweep.niqe = true;
        else if (m == "alignment") sweep.alignment = true;
        else throw ParameterError("unknown sweep metric '" + m + "'");
      }
      if (sweep.niqe && !pristine) {
        throw ParameterError("the niqe metric needs --pristine");
      }
    }
    const alignment::SemanticBackend backend = MakeBackend(manifest);
    sweep.backend = &backend;

    std::vector<analysis::GtImage> corpus;
    for (const auto& e : manifest.entries) corpus.push_back({e.id, LoadImage(e.gt_path)});

    std::vector<analysis::SweepLevel> levels;
    for (double sigma : options.levels) {
      degradation::DegradationSpec spec{sigma, options.downsample_alpha, options.noise_beta,
                                        seed};
      spec.Validate();
      levels.push_back({sigma, spec});
    }

    analysis::Restorer restorer = analysis::IdentityRestorer();
    if (options.outputs_dir) {
      std::map<std::size_t, std::map<std::string, ImagePlane>> table;
      for (std::size_t l = 0; l < levels.size(); ++l) {
        for (const auto& g : corpus) {
          const fs::path p = *options.outputs_dir / std::to_string(l) / (g.id + ".png");
          if (!fs::exists(p)) {
            throw ManifestError("missing restorer output " + p.string());
          }
          table[l].emplace(g.id, LoadImage(p));
        }
      }
      restorer = analysis::TableRestorer(std::move(table));
    }

    const analysis::SweepResult result =
        analysis::DegradationSweep(corpus, levels, restorer, sweep);

    std::string per_image = "level,metric,image_id,value\n";
    for (const auto& [metric, table] : result.per_image) {
      for (std::size_t l = 0; l < table.size(); ++l) {
        for (std::size_t i = 0; i < table[l].size(); ++i) {
          per_image += CsvField(FormatDouble(levels[l].parameter)) + "," + metric + "," +
                       CsvField(corpus[i].id) + "," + FormatDouble(table[l][i]) + "\n";
        }
      }
    }

    std::vector<SvgSeries> series;
    for (const auto& row : result.rows) {
      auto it = std::find_if(series.begin(), series.end(),
                             [&](const SvgSeries& s) { return s.name == row.metric; });
      if (it == series.end()) {
        series.push_back({row.metric, {}, true});
        it = series.end() - 1;
      }
      it->points.emplace_back(row.level, row.mean);
    }

    WriteTextFile(PrefixedPath(options.out_prefix, "sweep.csv"), SweepToCsv(result.rows));
    WriteTextFile(PrefixedPath(options.out_prefix, "sweep_per_image.csv"), per_image);
    WriteTextFile(PrefixedPath(options.out_prefix, "sweep.svg"),
                  RenderSvg("Metrics vs. blur level", "blur sigma",
                            "mean (each curve scaled to its own range)", series, true));
    for (const auto& row : result.rows) {
      log << "level " << row.level << "  " << row.metric << " = " << row.mean << '\n';
    }
    return kExitOk;
  });
}

namespace {

struct Plane {
  std::vector<PlaneRow> rows;
  std::vector<PlaneRow> front;
};

// x_lower_better == false flips x to 1 - x for dominance only.
Plane BuildPlane(std::vector<PlaneRow> rows, bool x_lower_better) {
  std::vector<analysis::Point> points;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x = x_lower_better ? rows[i].x : 1.0 - rows[i].x;
    points.push_back({x, rows[i].y, i});
  }
  Plane plane;
  for (const auto& p : analysis::ParetoFront(points)) plane.front.push_back(rows[p.index]);
  plane.rows = std::move(rows);
  return plane;
}

std::string PlaneSvg(const std::string& title, const std::string& x_label,
                     const Plane& plane) {
  std::vector<SvgSeries> series;
  for (const auto& r : plane.rows) series.push_back({r.model, {{r.x, r.y}}, false});
  SvgSeries front{"Pareto front", {}, true};
  for (const auto& r : plane.front) front.points.emplace_back(r.x, r.y);
  series.push_back(std::move(front));
  return RenderSvg(title, x_label, "NIQE (lower is better)", series, false);
}

}  // namespace

int RunTradeoff(const TradeoffOptions& options, std::ostream& log) {
  return Guard(log, [&] {
    const auto records = RecordsFromCsv(ReadTextFile(options.records));
    if (records.empty()) throw ParameterError(options.records.string() + " has no records");
    const auto summaries = analysis::Aggregate(records, analysis::GroupBy::kModel);

    std::vector<PlaneRow> pd_rows, ap_rows;
    bool align_lower_better = true;
    for (const auto& s : summaries) {
      if (!s.niqe.count) continue;
      if (s.ssim.count) pd_rows.push_back({s.model, s.ssim.mean, s.niqe.mean});
      if (s.alignment.count) {
        ap_rows.push_back({s.model, s.alignment.mean, s.niqe.mean});
        align_lower_better =
            s.alignment_orientation != alignment::Orientation::kHigherBetter;
      }
    }
    if (pd_rows.empty()) {
      log << "no model has both SSIM and NIQE; planes are empty (evaluate with "
             "--pristine to score NIQE)\n";
    }
    const Plane pd = BuildPlane(std::move(pd_rows), false);
    const Plane ap = BuildPlane(std::move(ap_rows), align_lower_better);

    WriteTextFile(PrefixedPath(options.out_prefix, "pd_plane.csv"),
                  PlaneToCsv("ssim", "niqe", pd.rows));
    WriteTextFile(PrefixedPath(options.out_prefix, "pd_front.csv"),
                  PlaneToCsv("ssim", "niqe", pd.front));
    WriteTextFile(PrefixedPath(options.out_prefix, "ap_plane.csv"),
                  PlaneToCsv("alignment", "niqe", ap.rows));
    WriteTextFile(PrefixedPath(options.out_prefix, "ap_front.csv"),
                  PlaneToCsv("alignment", "niqe", ap.front));
    WriteTextFile(PrefixedPath(options.out_prefix, "pd_plane.svg"),
                  PlaneSvg("Perception-distortion plane", "SSIM (higher is better)", pd));
    WriteTextFile(PrefixedPath(options.out_prefix, "ap_plane.svg"),
                  PlaneSvg("Alignment-perception plane",
                           align_lower_better ? "alignment (lower is better)"
                                              : "alignment (higher is better)",
                           ap));

    if (options.metas) {
      const auto metas = LoadModelMetas(*options.metas);
      const auto rows = analysis::ResourceReport(summaries, metas);
      WriteTextFile(PrefixedPath(options.out_prefix, "resource.csv"), ResourceToCsv(rows));
    }
    log << "perception-distortion front: " << pd.front.size() << "/" << pd.rows.size()
        << " models; alignment-perception front: " << ap.front.size() << "/"
        << ap.rows.size() << " models\n";
    return kExitOk;
  });
}

}  // namespace evalkit::harness
