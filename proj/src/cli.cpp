// SPDX-License-Identifier: Apache-2.0
#include "cibse/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "cibse/checkpoint.hpp"
#include "cibse/dataset.hpp"
#include "cibse/error.hpp"
#include "cibse/image.hpp"
#include "cibse/metrics.hpp"
#include "cibse/model.hpp"
#include "cibse/pipeline.hpp"
#include "cibse/profile.hpp"
#include "cibse/synth.hpp"

namespace cibse::cli {
namespace fs = std::filesystem;
namespace {

const std::vector<std::string> kModelNames{"yolov8n", "yolov8n-se", "yolov8n-c2fcib", "cib-se-yolov8"};

struct ModelOptions {
  std::string model;
  std::string weights;
  std::uint64_t seed = 0;
};

struct InferenceOptions {
  int imgsz = 416;
  float conf = 0.25f;
  float iou = 0.45f;
  int max_det = 300;
  std::string pad_mode = "reflect";
};

struct EvalCliOptions {
  std::string data;
  std::string split = "test";
  std::uint64_t seed = 0;
  std::string ap_method = "interp101";
  std::optional<double> conf_eval;
  std::string out;
};

model::ModelGraph graph_for(const std::string& name) {
  const auto v = model::parse_variant(name);
  if (!v) throw ArgumentError("unknown model '" + name + "'");
  return model::build_variant(*v, kNumClasses);
}

model::Model load_model(const ModelOptions& m) {
  const model::ModelGraph g = graph_for(m.model);
  const Checkpoint ckpt = m.weights.empty() ? synth_weights(g, m.seed) : load_checkpoint(m.weights);
  return model::Model::bind(g, ckpt);
}

pipeline::DetectOptions detect_options(const InferenceOptions& o) {
  pipeline::DetectOptions d;
  d.imgsz = o.imgsz;
  d.conf = o.conf;
  d.iou = o.iou;
  d.max_det = o.max_det;
  d.pad_mode = o.pad_mode == "replicate" ? pipeline::PadMode::Replicate : pipeline::PadMode::Reflect;
  if (o.imgsz < 32 || o.imgsz % 32 != 0) throw ArgumentError("--imgsz must be a positive multiple of 32");
  return d;
}

void add_model_options(CLI::App* cmd, ModelOptions& m, bool weights_required) {
  cmd->add_option("--model", m.model, "Model variant")->required()->check(CLI::IsMember(kModelNames));
  auto* w = cmd->add_option("--weights", m.weights, "Checkpoint file");
  if (weights_required) {
    w->required();
  } else {
    w->description("Checkpoint file (synthetic weights when omitted)");
    cmd->add_option("--seed", m.seed, "Seed for synthetic weights");
  }
}

void add_inference_options(CLI::App* cmd, InferenceOptions& o) {
  cmd->add_option("--imgsz", o.imgsz, "Network input size")->capture_default_str();
  cmd->add_option("--conf", o.conf, "Confidence threshold")->capture_default_str();
  cmd->add_option("--iou-nms", o.iou, "NMS IoU threshold")->capture_default_str();
  cmd->add_option("--max-det", o.max_det, "Maximum detections per image")->capture_default_str();
  cmd->add_option("--pad-mode", o.pad_mode, "Letterbox fill")
      ->check(CLI::IsMember({"reflect", "replicate"}))
      ->capture_default_str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<Sample> select_split(const EvalCliOptions& e) {
  std::vector<Sample> samples = load_dataset(e.data);
  if (e.split == "all") return samples;
  std::set<std::string> wanted;
  const fs::path list = fs::path(e.data) / "splits" / (e.split + ".txt");
  if (fs::exists(list)) {
    for (std::string& s : read_lines(list)) wanted.insert(std::move(s));
  } else {
    std::vector<std::string> stems;
    for (const Sample& s : samples) stems.push_back(s.stem);
    const DatasetSplit split = split_dataset(stems, {0.7, 0.2, 0.1}, e.seed);
    const auto& chosen = e.split == "train" ? split.train : (e.split == "val" ? split.val : split.test);
    wanted.insert(chosen.begin(), chosen.end());
  }
  std::erase_if(samples, [&](const Sample& s) { return !wanted.contains(s.stem); });
  return samples;
}

eval::EvalReport run_evaluation(const ModelOptions& m, const InferenceOptions& inf, const EvalCliOptions& e) {
  const model::Model net = load_model(m);
  const pipeline::DetectOptions opts = detect_options(inf);
  std::vector<eval::ImageEval> images;
  for (const Sample& s : select_split(e)) {
    eval::ImageEval im;
    im.image_id = s.stem;
    im.predictions = pipeline::detect(net, read_ppm(s.image_path), opts);
    im.truths = s.truths;
    images.push_back(std::move(im));
  }
  eval::EvalOptions eo;
  eo.num_classes = kNumClasses;
  eo.method = e.ap_method == "exact" ? eval::ApMethod::Exact : eval::ApMethod::Interp101;
  eo.conf_eval = e.conf_eval;
  return eval::evaluate(images, eo);
}

void add_eval_options(CLI::App* cmd, EvalCliOptions& e, InferenceOptions& inf) {
  cmd->add_option("--data", e.data, "Dataset root (images/, labels/)")->required();
  cmd->add_option("--split", e.split, "Which split to evaluate")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  cmd->add_option("--split-seed", e.seed, "Seed used when no splits/ lists exist")->capture_default_str();
  cmd->add_option("--ap-method", e.ap_method, "AP interpolation")
      ->check(CLI::IsMember({"interp101", "exact"}))
      ->capture_default_str();
  cmd->add_option("--conf-eval", e.conf_eval, "Fixed confidence for the precision/recall operating point");
  cmd->add_option("--out", e.out, "Output file")->required();
  // evaluation keeps low-confidence detections so the PR curve is complete
  inf.conf = 0.001f;
  inf.iou = 0.7f;
}

int cmd_summary(const std::string& name, int imgsz, bool csv, const std::string& convention, std::ostream& out) {
  const model::ModelGraph g = graph_for(name);
  const auto conv = convention == "unfused" ? model::ParamConvention::Unfused : model::ParamConvention::Fused;
  const auto rows = model::summarize(g, conv);
  if (csv) {
    model::render_summary_csv(out, rows);
  } else {
    model::render_summary_text(out, rows);
  }
  const double gflops = model::estimate_flops(g, imgsz);
  char buf[128];
  out << "model: " << name << '\n';
  out << "parameters: " << model::count_parameters(g, conv) << '\n';
  std::snprintf(buf, sizeof buf, "GFLOPs: %.1f\nGFLOPs (exact): %.4f at %d\n", gflops, gflops, imgsz);
  out << buf;
  return kExitOk;
}

int cmd_detect(const ModelOptions& m, const InferenceOptions& inf, const std::string& input, const std::string& path,
               std::ostream& out) {
  const model::Model net = load_model(m);
  const pipeline::DetectOptions opts = detect_options(inf);
  std::vector<fs::path> inputs;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".ppm") inputs.push_back(e.path());
    }
    std::sort(inputs.begin(), inputs.end());
  } else {
    inputs.emplace_back(input);
  }
  std::ofstream csv = open_output(path);
  csv << "image,class,score,x1,y1,x2,y2\n";
  std::size_t total = 0;
  char buf[256];
  for (const fs::path& p : inputs) {
    const std::vector<Detection> dets = pipeline::detect(net, read_ppm(p), opts);
    total += dets.size();
    for (const Detection& d : dets) {
      std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.4f,%.4f,%.4f\n", p.stem().string().c_str(), d.class_id,
                    d.score, d.box.x1, d.box.y1, d.box.x2, d.box.y2);
      csv << buf;
    }
  }
  out << "images: " << inputs.size() << "\ndetections: " << total << '\n';
  return kExitOk;
}

int cmd_bench(const ModelOptions& m, int imgsz, int iterations, std::ostream& out) {
  if (imgsz < 32 || imgsz % 32 != 0) throw ArgumentError("--imgsz must be a positive multiple of 32");
  if (iterations < 1) throw ArgumentError("-n must be positive");
  const model::Model net = load_model(m);
  Tensor x({1, 3, imgsz, imgsz});
  std::uint64_t state = 0x5EEDull;
  for (float& v : x.data()) v = static_cast<float>(splitmix64(state) >> 40) / static_cast<float>(1 << 24);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < iterations; ++i) {
    const auto raw = net.forward(x);
    if (raw.size() != 3) throw Error("bench: unexpected head output");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[160];
  std::snprintf(buf, sizeof buf, "model: %s\nimgsz: %d\niterations: %d\nseconds: %.3f\nimages/sec: %.3f\n",
                m.model.c_str(), imgsz, iterations, secs, iterations / secs);
  out << buf;
  return kExitOk;
}

int cmd_split(const std::string& root, std::uint64_t seed, std::ostream& out) {
  std::vector<std::string> stems;
  for (const Sample& s : load_dataset(root)) stems.push_back(s.stem);
  const DatasetSplit split = split_dataset(stems, {0.7, 0.2, 0.1}, seed);
  const fs::path dir = fs::path(root) / "splits";
  fs::create_directories(dir);
  for (const auto& [name, list] : {std::pair{"train", &split.train}, std::pair{"val", &split.val},
                                   std::pair{"test", &split.test}}) {
    std::ofstream f = open_output((dir / (std::string(name) + ".txt")).string());
    for (const std::string& s : *list) f << s << '\n';
    out << name << ": " << list->size() << '\n';
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Helmet detector: model summary, inference, evaluation and tooling", "cibse"};
  app.require_subcommand(1);

  std::string summary_model;
  int summary_imgsz = 640;
  bool summary_csv = false;
  std::string summary_convention = "fused";
  auto* summary = app.add_subcommand("summary", "Print the layer table, parameter count and GFLOPs");
  summary->add_option("--model", summary_model, "Model variant")->required()->check(CLI::IsMember(kModelNames));
  summary->add_option("--imgsz", summary_imgsz, "Profiling input size")->capture_default_str();
  summary->add_flag("--csv", summary_csv, "Emit the layer table as CSV");
  summary->add_option("--convention", summary_convention, "Parameter counting convention")
      ->check(CLI::IsMember({"fused", "unfused"}))
      ->capture_default_str();

  ModelOptions detect_model;
  InferenceOptions detect_inf;
  std::string detect_input;
  std::string detect_out;
  auto* detect = app.add_subcommand("detect", "Run detection on a .ppm image or a directory of them");
  add_model_options(detect, detect_model, true);
  detect->add_option("--input", detect_input, "Image file or directory")->required();
  add_inference_options(detect, detect_inf);
  detect->add_option("--out", detect_out, "Detections CSV")->required();

  ModelOptions eval_model;
  InferenceOptions eval_inf;
  EvalCliOptions eval_opts;
  auto* evalc = app.add_subcommand("eval", "Evaluate precision, recall, mAP50 and mAP50-95");
  add_model_options(evalc, eval_model, true);
  add_eval_options(evalc, eval_opts, eval_inf);
  add_inference_options(evalc, eval_inf);

  ModelOptions pr_model;
  InferenceOptions pr_inf;
  EvalCliOptions pr_opts;
  auto* prcurve = app.add_subcommand("prcurve", "Export precision-recall curves at IoU 0.5 as CSV");
  add_model_options(prcurve, pr_model, true);
  add_eval_options(prcurve, pr_opts, pr_inf);
  add_inference_options(prcurve, pr_inf);

  ModelOptions bench_model;
  int bench_imgsz = 416;
  int bench_n = 100;
  auto* bench = app.add_subcommand("bench", "Measure forward-pass throughput");
  add_model_options(bench, bench_model, false);
  bench->add_option("--imgsz", bench_imgsz, "Input size")->capture_default_str();
  bench->add_option("-n", bench_n, "Number of inferences")->capture_default_str();

  std::string split_root;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "Write a seeded 7:2:1 train/val/test split under DATA/splits");
  split->add_option("--data", split_root, "Dataset root")->required();
  split->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();

  std::string synth_model;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write deterministic synthetic weights");
  synth->add_option("--model", synth_model, "Model variant")->required()->check(CLI::IsMember(kModelNames));
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*summary) return cmd_summary(summary_model, summary_imgsz, summary_csv, summary_convention, out);
    if (*detect) return cmd_detect(detect_model, detect_inf, detect_input, detect_out, out);
    if (*evalc) {
      const eval::EvalReport report = run_evaluation(eval_model, eval_inf, eval_opts);
      std::ofstream f = open_output(eval_opts.out);
      eval::write_report_table(f, eval_model.model, report);
      eval::write_report_table(out, eval_model.model, report);
      return kExitOk;
    }
    if (*prcurve) {
      const eval::EvalReport report = run_evaluation(pr_model, pr_inf, pr_opts);
      std::ofstream f = open_output(pr_opts.out);
      eval::write_pr_csv(f, eval::export_pr_curve(report));
      return kExitOk;
    }
    if (*bench) return cmd_bench(bench_model, bench_imgsz, bench_n, out);
    if (*split) return cmd_split(split_root, split_seed, out);
    if (*synth) {
      save_checkpoint(synth_weights(graph_for(synth_model), synth_seed), synth_out);
      out << "wrote " << synth_out << '\n';
      return kExitOk;
    }
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace cibse::cli
