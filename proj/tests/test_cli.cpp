// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cibse/cli.hpp"
#include "cibse/dataset.hpp"
#include "cibse/model.hpp"
#include "cibse/pipeline.hpp"
#include "golden_cases.hpp"
#include "temp_dir.hpp"

using namespace cibse;
using cibse::testing::TempDir;
namespace golden = cibse::testing::golden;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "cibse");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Three 64x64 images with a couple of labelled boxes each.
void make_dataset(const std::filesystem::path& root) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "labels");
  for (int i = 0; i < 3; ++i) {
    Image img(64, 64);
    for (std::size_t k = 0; k < img.rgb.size(); ++k) img.rgb[k] = static_cast<std::uint8_t>((k * (7 + i)) % 251);
    write_ppm(img, root / "images" / ("s" + std::to_string(i) + ".ppm"));
    std::ofstream(root / "labels" / ("s" + std::to_string(i) + ".txt"))
        << "0 0.5 0.5 0.5 0.5\n1 0.25 0.25 0.2 0.3\n";
  }
}

}  // namespace

TEST_CASE("summary prints the parameter counts") {
  Result r = run({"summary", "--model", "yolov8n"});
  CHECK(r.code == 0);
  CHECK(r.out.find("parameters: 3006038\n") != std::string::npos);
  CHECK(r.out.find("GFLOPs: 8.1\n") != std::string::npos);
  r = run({"summary", "--model", "cib-se-yolov8"});
  CHECK(r.out.find("parameters: 2683222\n") != std::string::npos);
  CHECK(r.out.find("GFLOPs: 7.6\n") != std::string::npos);
  r = run({"summary", "--model", "cib-se-yolov8", "--csv"});
  CHECK(r.out.rfind("index,kind,inputs,out_channels,params\n", 0) == 0);
  CHECK(run({"summary", "--model", "yolov8n", "--imgsz", "416"}).out.find("at 416") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({"summary", "--model", "yolov8n", "--bogus"}).code == cli::kExitUsage);
  CHECK(run({"summary", "--model", "yolov9"}).code == cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"summary", "--model", "yolov8n", "--imgsz", "100"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("detect on a blank image writes only the header") {
  TempDir dir;
  write_ppm(Image(120, 80), dir / "blank.ppm");
  const auto weights = (dir / "w.ckpt").string();
  REQUIRE(run({"synth", "--model", "cib-se-yolov8", "--seed", "3", "--out", weights}).code == 0);
  const auto csv = (dir / "d.csv").string();
  const Result r = run({"detect", "--model", "cib-se-yolov8", "--weights", weights, "--input",
                        (dir / "blank.ppm").string(), "--out", csv});
  CHECK(r.code == 0);
  CHECK(slurp(csv) == "image,class,score,x1,y1,x2,y2\n");
}

TEST_CASE("data errors exit 2") {
  TempDir dir;
  const auto weights = (dir / "w.ckpt").string();
  REQUIRE(run({"synth", "--model", "yolov8n", "--out", weights}).code == 0);
  const auto csv = (dir / "d.csv").string();
  CHECK(run({"detect", "--model", "yolov8n", "--weights", weights, "--input", (dir / "none.ppm").string(), "--out",
             csv})
            .code == cli::kExitData);
  // weights for another variant
  write_ppm(Image(32, 32), dir / "x.ppm");
  CHECK(run({"detect", "--model", "yolov8n-se", "--weights", weights, "--input", (dir / "x.ppm").string(), "--out",
             csv})
            .code == cli::kExitData);
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  CHECK(run({"detect", "--model", "yolov8n", "--weights", (dir / "junk.ckpt").string(), "--input",
             (dir / "x.ppm").string(), "--out", csv})
            .code == cli::kExitData);
}

TEST_CASE("synth writes the library's synthetic weights") {
  TempDir dir;
  const auto path = dir / "w.ckpt";
  REQUIRE(run({"synth", "--model", "yolov8n-c2fcib", "--seed", "9", "--out", path.string()}).code == 0);
  CHECK(load_checkpoint(path) == synth_weights(model::build_variant(model::Variant::CIBOnly, 2), 9));
}

TEST_CASE("eval and prcurve add no arithmetic") {
  TempDir dir;
  make_dataset(dir / "data");
  const auto weights = dir / "w.ckpt";
  const model::ModelGraph g = model::build_variant(model::Variant::Base, 2);
  save_checkpoint(synth_weights(g, 4), weights);

  const auto report_path = (dir / "report.txt").string();
  const Result r = run({"eval", "--model", "yolov8n", "--weights", weights.string(), "--data",
                        (dir / "data").string(), "--split", "all", "--imgsz", "64", "--out", report_path});
  REQUIRE(r.code == 0);

  const model::Model net = model::Model::bind(g, load_checkpoint(weights));
  pipeline::DetectOptions opts;
  opts.imgsz = 64;
  opts.conf = 0.001f;
  opts.iou = 0.7f;
  std::vector<eval::ImageEval> images;
  for (const Sample& s : load_dataset(dir / "data")) {
    images.push_back({s.stem, pipeline::detect(net, read_ppm(s.image_path), opts), s.truths});
  }
  CHECK(images.front().predictions.size() > 0);
  const eval::EvalReport report = eval::evaluate(images);
  std::ostringstream table;
  eval::write_report_table(table, "yolov8n", report);
  CHECK(slurp(report_path) == table.str());
  CHECK(r.out == table.str());

  const auto pr_path = (dir / "pr.csv").string();
  REQUIRE(run({"prcurve", "--model", "yolov8n", "--weights", weights.string(), "--data", (dir / "data").string(),
               "--split", "all", "--imgsz", "64", "--out", pr_path})
              .code == 0);
  std::ostringstream pr;
  eval::write_pr_csv(pr, eval::export_pr_curve(report));
  CHECK(slurp(pr_path) == pr.str());
}

TEST_CASE("split writes list files used by eval") {
  TempDir dir;
  std::filesystem::create_directories(dir / "images");
  for (int i = 0; i < 10; ++i) write_ppm(Image(32, 32), dir / "images" / ("im" + std::to_string(i) + ".ppm"));
  const Result r = run({"split", "--data", dir.path().string(), "--seed", "5"});
  CHECK(r.code == 0);
  CHECK(r.out == "train: 7\nval: 2\ntest: 1\n");
  std::vector<std::string> stems;
  for (int i = 0; i < 10; ++i) stems.push_back("im" + std::to_string(i));
  CHECK(slurp(dir / "splits/test.txt") == split_dataset(stems, {0.7, 0.2, 0.1}, 5).test.front() + "\n");
}

TEST_CASE("bench reports throughput") {
  const Result r = run({"bench", "--model", "yolov8n", "--imgsz", "64", "-n", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("images/sec: ") != std::string::npos);
  CHECK(run({"bench", "--model", "yolov8n", "-n", "0"}).code == cli::kExitUsage);
}

TEST_CASE("golden files") {
  TempDir dir;
  const std::string det = golden::detections_csv(dir.path());
  CHECK(det.rfind("image,class,score,x1,y1,x2,y2\n", 0) == 0);
  CHECK(std::count(det.begin(), det.end(), '\n') > 1);
  CHECK(golden::matches_golden("detections.csv", det));
  CHECK(golden::matches_golden("pr_curve.csv", golden::pr_csv()));
}
