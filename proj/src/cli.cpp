#include "hamtrack/cli.hpp"

#include "hamtrack/eval.hpp"
#include "hamtrack/io_mot.hpp"
#include "hamtrack/synthgen.hpp"
#include "hamtrack/tracker.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace hamtrack {

namespace fs = std::filesystem;

namespace {

std::string read_text(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {} '{}'", what, path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path, const char* what) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {} '{}'", what, path.string()));
  return out;
}

void write_trace(std::ostream& out, const std::vector<FrameResult>& results) {
  out << "frame,tau_sa,tau_t,n_raw,n_kept,gated_pairs,candidate_pairs,appearance_evals,births,"
         "deaths\n";
  for (const auto& r : results) {
    const auto& d = r.diagnostics;
    out << fmt::format("{},{:.4f},{:.4f},{},{},{},{},{},{},{}\n", r.frame, d.tau_sa, d.tau_t,
                       d.n_raw, d.n_kept, d.gated_pairs, d.candidate_pairs, d.appearance_evals,
                       d.births, d.deaths);
  }
}

}  // namespace

TrackerConfig resolve_config(const TrackArgs& args) {
  TrackerConfig cfg;
  if (!args.config.empty()) apply_config_text(cfg, read_text(args.config, "config file"));
  for (const auto& kv : args.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(kv, fmt::format("--set expects key=value, got '{}'", kv));
    }
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.ham.empty()) apply_config_value(cfg, "ham", args.ham);
  if (!args.filter.empty()) apply_config_value(cfg, "filter", args.filter);
  if (args.include_missed) cfg.emit_missed = true;

  const auto errors = validate_config(cfg);
  if (!errors.empty()) {
    std::string joined;
    for (const auto& e : errors) joined += (joined.empty() ? "" : "; ") + e;
    throw ConfigError(errors.front().substr(0, errors.front().find(' ')), joined);
  }
  return cfg;
}

int cmd_track(const TrackArgs& args, std::ostream& /*out*/, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  TrackerConfig cfg;
  try {
    cfg = resolve_config(args);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  std::string mode = args.appearance;
  if (mode == "auto") {
    mode = !args.embeddings.empty() ? "embed" : !args.frames_dir.empty() ? "hist" : "";
  }
  if (mode != "embed" && mode != "hist" && mode != "none") {
    err << "config error: choose --embeddings, --frames-dir or --appearance none\n";
    return 2;
  }
  if (args.out.empty()) {
    err << "config error: --out is required\n";
    return 2;
  }

  try {
    std::ifstream det_in(args.det);
    if (!det_in) throw IoError(fmt::format("cannot open det file '{}'", args.det));
    const DetectionsByFrame detections = parse_det_file(det_in);

    std::unique_ptr<AppearanceSource> source;
    if (mode == "embed") {
      if (args.embeddings.empty()) {
        err << "config error: --appearance embed needs --embeddings\n";
        return 2;
      }
      std::ifstream emb_in(args.embeddings);
      if (!emb_in) throw IoError(fmt::format("cannot open embedding file '{}'", args.embeddings));
      source = std::make_unique<EmbeddingAppearance>(parse_embedding_file(emb_in));
    } else if (mode == "hist") {
      if (args.frames_dir.empty() || !fs::is_directory(args.frames_dir)) {
        throw IoError(fmt::format("frames directory '{}' not found", args.frames_dir));
      }
      source = std::make_unique<FrameHistogramAppearance>(args.frames_dir);
    } else {
      source = std::make_unique<NoAppearance>();
    }

    const std::vector<FrameResult> results = run_sequence(detections, *source, cfg);

    {
      auto res_out = open_out(args.out, "result file");
      write_result_file(res_out, to_track_boxes(results));
    }
    if (!args.trace.empty()) {
      auto trace_out = open_out(args.trace, "trace file");
      write_trace(trace_out, results);
    }

    long births = 0, deaths = 0, evals = 0, gated = 0, candidates = 0, kept = 0, raw = 0;
    for (const auto& r : results) {
      births += r.diagnostics.births;
      deaths += r.diagnostics.deaths;
      evals += static_cast<long>(r.diagnostics.appearance_evals);
      gated += static_cast<long>(r.diagnostics.gated_pairs);
      candidates += static_cast<long>(r.diagnostics.candidate_pairs);
      kept += static_cast<long>(r.diagnostics.n_kept);
      raw += static_cast<long>(r.diagnostics.n_raw);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    nlohmann::json manifest = {
        {"sequence", fs::path(args.det).parent_path().filename().string()},
        {"inputs",
         {{"det", args.det},
          {"embeddings", args.embeddings},
          {"frames_dir", args.frames_dir},
          {"config", args.config},
          {"appearance", mode}}},
        {"config", config_to_text(cfg)},
        {"outputs", {{"result", args.out}, {"trace", args.trace}}},
        {"wall_seconds", seconds},
        {"totals",
         {{"frames", results.size()},
          {"raw_detections", raw},
          {"kept_detections", kept},
          {"births", births},
          {"deaths", deaths},
          {"candidate_pairs", candidates},
          {"gated_pairs", gated},
          {"appearance_evals", evals}}}};
    const std::string manifest_path =
        args.manifest.empty() ? args.out + ".manifest.json" : args.manifest;
    auto man_out = open_out(manifest_path, "manifest");
    man_out << manifest.dump(2) << '\n';
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream gt_in(args.gt);
    if (!gt_in) throw IoError(fmt::format("cannot open gt file '{}'", args.gt));
    std::ifstream res_in(args.result);
    if (!res_in) throw IoError(fmt::format("cannot open result file '{}'", args.result));
    const auto gt = parse_track_file(gt_in);
    const auto hyp = parse_track_file(res_in);
    const EvalReport report = evaluate(gt, hyp, args.iou);
    out << summary_header() << '\n' << summary_line(report) << '\n';
    err << fmt::format("IDTP={} IDFP={} IDFN={}\n", report.idtp, report.idfp, report.idfn);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_generate(const GenerateArgs& args, std::ostream& /*out*/, std::ostream& err) {
  ScenarioSpec spec;
  try {
    spec = parse_scenario_text(read_text(args.scenario, "scenario file"));
    if (args.seed >= 0) spec.seed = static_cast<std::uint64_t>(args.seed);
    validate_scenario(spec);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    const Scenario scenario = generate(spec);
    const fs::path dir = args.out_dir;
    {
      auto gt_out = open_out(dir / "gt.txt", "gt file");
      write_result_file(gt_out, scenario.gt);
    }
    {
      auto det_out = open_out(dir / "det.txt", "det file");
      write_det_file(det_out, scenario.detections);
    }
    {
      auto emb_out = open_out(dir / "embeddings.csv", "embedding file");
      write_embedding_file(emb_out, scenario.embeddings);
    }
    if (args.frames) {
      for (int frame = 1; frame <= spec.n_frames; ++frame) {
        auto img_out = open_out(dir / "frames" / fmt::format("{:06d}.ppm", frame), "frame image");
        write_ppm(img_out, render_frame(spec, scenario, frame));
      }
    }
    const auto& s = scenario.stats;
    err << fmt::format("generated {} frames: live={} occluded={} dropped={} merged={} fp={}\n",
                       spec.n_frames, s.live, s.occluded, s.dropped, s.merged, s.false_positives);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online multi-object tracker with historical appearance matching"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* t = app.add_subcommand("track", "Track detections and write MOT results");
  t->add_option("--det", track.det, "MOTChallenge det.txt")->required();
  t->add_option("--frames-dir", track.frames_dir, "Directory of %06d.ppm frames");
  t->add_option("--embeddings", track.embeddings, "Per-detection embedding file");
  t->add_option("--appearance", track.appearance, "hist|embed|none")
      ->check(CLI::IsMember({"hist", "embed", "none", "auto"}));
  t->add_option("--config", track.config, "key = value config file");
  t->add_option("--set", track.set, "Override one config key (key=value), repeatable");
  t->add_option("--out", track.out, "Result file")->required();
  t->add_option("--trace", track.trace, "Per-frame diagnostics CSV");
  t->add_option("--manifest", track.manifest, "Run manifest (JSON)");
  t->add_option("--ham", track.ham, "on|off")->check(CLI::IsMember({"on", "off"}));
  t->add_option("--filter", track.filter, "sadf|const|none")
      ->check(CLI::IsMember({"sadf", "const", "none"}));
  t->add_flag("--include-missed", track.include_missed,
              "Also emit predicted boxes of confirmed tracks on missed frames");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score a result file against ground truth");
  e->add_option("--gt", eval.gt, "Ground-truth file")->required();
  e->add_option("--result,--res", eval.result, "Result file")->required();
  e->add_option("--iou", eval.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic scenario");
  g->add_option("--scenario", gen.scenario, "Scenario spec file")->required();
  g->add_option("--out-dir", gen.out_dir, "Output directory")->required();
  g->add_flag("--frames", gen.frames, "Also write PPM frames");
  g->add_option("--seed", gen.seed, "Override the scenario seed");

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << ex.what() << '\n';
    return 2;
  }

  if (t->parsed()) return cmd_track(track, out, err);
  if (e->parsed()) return cmd_eval(eval, out, err);
  return cmd_generate(gen, out, err);
}

}  // namespace hamtrack
