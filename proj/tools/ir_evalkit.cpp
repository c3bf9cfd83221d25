#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evalkit/commands.hpp"
#include "evalkit/error.hpp"

namespace {

using evalkit::harness::AlignmentOverrides;

struct AlignmentFlags {
  std::string backend;
  std::optional<double> gamma_threshold;
  std::string force_mode;

  void Register(CLI::App* app) {
    app->add_option("--backend", backend, "Alignment backend")
        ->check(CLI::IsMember({"builtin", "embeddings", "ssim"}));
    app->add_option("--gamma-threshold", gamma_threshold,
                    "Retention rate at or above which gt-side alignment is used");
    app->add_option("--force-mode", force_mode, "Force the alignment mode")
        ->check(CLI::IsMember({"gt", "lq"}));
  }

  AlignmentOverrides Get() const {
    AlignmentOverrides o;
    if (!backend.empty()) o.backend = evalkit::alignment::ParseBackendKind(backend);
    o.gamma_threshold = gamma_threshold;
    if (!force_mode.empty()) o.force_mode = evalkit::alignment::ParseMode(force_mode);
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image restoration evaluation toolkit"};
  app.require_subcommand(1);

  evalkit::harness::DegradeOptions degrade;
  std::optional<std::uint64_t> degrade_seed;
  auto* cmd_degrade = app.add_subcommand("degrade", "Synthesize low-quality inputs");
  cmd_degrade->add_option("--manifest", degrade.manifest, "Dataset manifest")->required();
  cmd_degrade->add_option("--out", degrade.out_dir, "Output directory")->required();
  cmd_degrade->add_option("--seed", degrade_seed, "Seed for entries without one");
  cmd_degrade->add_option("--jobs", degrade.jobs, "Worker threads")->check(CLI::PositiveNumber);

  evalkit::harness::TrainNiqeOptions train;
  auto* cmd_train = app.add_subcommand("train-niqe", "Fit a pristine NIQE model");
  cmd_train->add_option("--corpus", train.corpus_dir, "Directory of pristine PNGs")
      ->required();
  cmd_train->add_option("--out", train.out_path, "Model JSON to write")->required();
  cmd_train->add_option("--patch-size", train.patch_size, "Patch size")
      ->check(CLI::PositiveNumber);
  cmd_train->add_option("--sharpness", train.sharpness_fraction,
                        "Keep patches at least this fraction of the sharpest")
      ->check(CLI::Range(0.0, 1.0));
  cmd_train->add_option("--jobs", train.jobs, "Worker threads")->check(CLI::PositiveNumber);

  evalkit::harness::EvaluateOptions evaluate;
  AlignmentFlags evaluate_align;
  std::string evaluate_pristine;
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Score restorations");
  cmd_evaluate->add_option("--manifest", evaluate.manifest, "Dataset manifest")->required();
  cmd_evaluate->add_option("--out", evaluate.out_prefix, "Output prefix")->required();
  cmd_evaluate->add_option("--pristine", evaluate_pristine, "Pristine NIQE model");
  evaluate_align.Register(cmd_evaluate);
  cmd_evaluate->add_option("--seed", evaluate.seed, "Seed for entries without one");
  cmd_evaluate->add_option("--jobs", evaluate.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);

  evalkit::harness::SweepCommandOptions sweep;
  AlignmentFlags sweep_align;
  std::string sweep_pristine, sweep_outputs;
  auto* cmd_sweep = app.add_subcommand("sweep", "Metrics over blur levels");
  cmd_sweep->add_option("--manifest", sweep.manifest, "Dataset manifest (ground truth)")
      ->required();
  cmd_sweep->add_option("--out", sweep.out_prefix, "Output prefix")->required();
  cmd_sweep->add_option("--pristine", sweep_pristine, "Pristine NIQE model");
  cmd_sweep->add_option("--levels", sweep.levels, "Blur sigmas")->delimiter(',');
  cmd_sweep->add_option("--alpha", sweep.downsample_alpha, "Downsampling factor per level");
  cmd_sweep->add_option("--beta", sweep.noise_beta, "Noise amplitude per level");
  cmd_sweep->add_option("--metrics", sweep.metrics, "psnr,ssim,niqe,alignment")
      ->delimiter(',');
  cmd_sweep->add_option("--outputs", sweep_outputs,
                        "Restorer outputs as <dir>/<level index>/<id>.png");
  sweep_align.Register(cmd_sweep);
  cmd_sweep->add_option("--seed", sweep.seed, "Noise seed");
  cmd_sweep->add_option("--jobs", sweep.jobs, "Worker threads")->check(CLI::PositiveNumber);

  evalkit::harness::TradeoffOptions tradeoff;
  std::string tradeoff_metas;
  auto* cmd_tradeoff = app.add_subcommand("tradeoff", "Tradeoff planes and Pareto fronts");
  cmd_tradeoff->add_option("--records", tradeoff.records, "records.csv from evaluate")
      ->required();
  cmd_tradeoff->add_option("--metas", tradeoff_metas, "Model parameter/latency JSON");
  cmd_tradeoff->add_option("--out", tradeoff.out_prefix, "Output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : evalkit::harness::kExitUsage;
  }

  if (*cmd_degrade) {
    degrade.seed = degrade_seed;
    return evalkit::harness::RunDegrade(degrade, std::cerr);
  }
  if (*cmd_train) return evalkit::harness::RunTrainNiqe(train, std::cerr);
  if (*cmd_evaluate) {
    if (!evaluate_pristine.empty()) evaluate.pristine = evaluate_pristine;
    evaluate.alignment = evaluate_align.Get();
    return evalkit::harness::RunEvaluate(evaluate, std::cout);
  }
  if (*cmd_sweep) {
    if (!sweep_pristine.empty()) sweep.pristine = sweep_pristine;
    if (!sweep_outputs.empty()) sweep.outputs_dir = sweep_outputs;
    sweep.alignment = sweep_align.Get();
    return evalkit::harness::RunSweep(sweep, std::cout);
  }
  if (*cmd_tradeoff) {
    if (!tradeoff_metas.empty()) tradeoff.metas = tradeoff_metas;
    return evalkit::harness::RunTradeoff(tradeoff, std::cout);
  }
  return evalkit::harness::kExitUsage;
}
