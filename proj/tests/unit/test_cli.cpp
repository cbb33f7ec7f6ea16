#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "commands.hpp"
#include "spineseg/io.hpp"

namespace fs = std::filesystem;
using namespace spineseg;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "spineseg");
  std::ostringstream out, err;
  const int code = spineseg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spineseg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string s(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("synth then eval is identical across worker counts") {
  const auto dir = scratch("workers");
  REQUIRE(invoke({"synth", "--out", s(dir / "fx"), "--count", "12", "--seed", "5", "--jitter", "2",
               "--extra", "1", "--scores"})
              .code == 0);
  const auto a = invoke({"eval", "--gt", s(dir / "fx/gt"), "--pred", s(dir / "fx/pred"), "--out",
                      s(dir / "w1.csv"), "--workers", "1"});
  const auto b = invoke({"eval", "--gt", s(dir / "fx/gt"), "--pred", s(dir / "fx/pred"), "--out",
                      s(dir / "w8.csv"), "--workers", "8"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const auto csv = io::read_text(dir / "w1.csv");
  CHECK(csv == io::read_text(dir / "w8.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(a.out == b.out);
}

TEST_CASE("eval reports per-image failures with exit code 1") {
  const auto dir = scratch("failures");
  REQUIRE(invoke({"synth", "--out", s(dir / "fx"), "--count", "3", "--seed", "1"}).code == 0);
  fs::remove(dir / "fx/pred/spine_0001.json");
  io::write_atomic(dir / "fx/pred/spine_0002.json", "{broken");
  const auto r = invoke({"eval", "--gt", s(dir / "fx/gt"), "--pred", s(dir / "fx/pred"), "--out",
                      s(dir / "m.csv")});
  CHECK(r.code == 1);
  CHECK(r.err.find("spine_0001") != std::string::npos);
  CHECK(r.err.find("spine_0002") != std::string::npos);
  CHECK(r.err.find("spine_0000") == std::string::npos);
  const auto csv = io::read_text(dir / "m.csv");
  CHECK(csv.find("spine_0000,1.0000000000") != std::string::npos);
}

TEST_CASE("usage and configuration errors exit with 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"eval"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  const auto dir = scratch("config_errors");
  io::write_atomic(dir / "bad.cfg", "colour = red\n");
  const auto r = invoke({"synth", "--out", s(dir / "fx"), "--config", s(dir / "bad.cfg")});
  CHECK(r.code == 2);
  CHECK(r.err.find("colour") != std::string::npos);
  CHECK(invoke({"eval", "--gt", s(dir / "missing"), "--pred", s(dir), "--out", s(dir / "x.csv")}).code == 2);
}

TEST_CASE("flags override the configuration file") {
  const auto dir = scratch("precedence");
  REQUIRE(invoke({"synth", "--out", s(dir / "fx"), "--count", "2", "--seed", "2"}).code == 0);
  io::write_atomic(dir / "run.cfg", "# evaluation settings\nmode = per_class\nworkers = 2\n");
  REQUIRE(invoke({"eval", "--config", s(dir / "run.cfg"), "--gt", s(dir / "fx/gt"), "--pred",
               s(dir / "fx/pred"), "--out", s(dir / "cfg.csv")})
              .code == 0);
  CHECK(io::read_text(dir / "cfg.csv").find("iou_vertebra_lumbar") != std::string::npos);
  REQUIRE(invoke({"eval", "--config", s(dir / "run.cfg"), "--mode", "binary", "--gt", s(dir / "fx/gt"),
               "--pred", s(dir / "fx/pred"), "--out", s(dir / "flag.csv")})
              .code == 0);
  const auto csv = io::read_text(dir / "flag.csv");
  CHECK(csv.find("iou_foreground") != std::string::npos);
  CHECK(csv.find("iou_vertebra_lumbar") == std::string::npos);
}

TEST_CASE("pipeline: rasterize, instances, label, morph, overlay, report") {
  const auto dir = scratch("pipeline");
  // Sacrum and two lumbar bodies stacked with gaps.
  const std::string via = R"({"_via_img_metadata":{"spine.png1":{"filename":"spine.png","size":1,
    "file_attributes":{"width":120,"height":200},"regions":[
    {"shape_attributes":{"name":"polygon","all_points_x":[30,90,90,30],"all_points_y":[150,150,190,190]},"region_attributes":{"class":"vertebra_sacral"}},
    {"shape_attributes":{"name":"polygon","all_points_x":[32,88,88,32],"all_points_y":[105,105,140,140]},"region_attributes":{"class":"vertebra_lumbar"}},
    {"shape_attributes":{"name":"polygon","all_points_x":[32,88,88,32],"all_points_y":[60,60,95,95]},"region_attributes":{"class":"vertebra_lumbar"}}
    ]}}})";
  io::write_atomic(dir / "via.json", via);
  auto r = invoke({"rasterize", "--via", s(dir / "via.json"), "--out", s(dir / "masks")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "masks/spine.png"));
  CHECK(fs::exists(dir / "masks/spine.json"));

  r = invoke({"instances", "--mask", s(dir / "masks/spine.png"), "--out", s(dir / "inst.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "3 instances\n");

  r = invoke({"label", "--in", s(dir / "inst.json"), "--out", s(dir / "labeled.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out == "S1 L5 L4 \n");

  r = invoke({"morph", "--in", s(dir / "labeled.json"), "--out", s(dir / "morph"), "--mm-per-px", "0.5"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "morph/labeled.morph.json"));
  const auto csv = io::read_text(dir / "morph/morphometry.csv");
  CHECK(csv.find("labeled") != std::string::npos);

  r = invoke({"overlay", "--in", s(dir / "labeled.json"), "--out", s(dir / "overlay.png")});
  REQUIRE(r.code == 0);
  CHECK(io::png_size(dir / "overlay.png") == Size{120, 200});

  REQUIRE(invoke({"eval", "--gt", s(dir / "masks"), "--pred", s(dir / "masks"), "--out", s(dir / "self.csv"),
               "--model", "self"})
              .code == 0);
  r = invoke({"report", "--model", "A=" + s(dir / "self.csv"), "--model", "B=" + s(dir / "self.csv"), "--out",
           s(dir / "table.txt")});
  REQUIRE(r.code == 0);
  CHECK(io::read_text(dir / "table.csv") ==
        "metric,A,B\nPixel Accuracy Average,100.00,100.00\nMean IoU Average,100.00,100.00\n"
        "Mean Accuracy Average,100.00,100.00\nFrequency Weighted IoU Average,100.00,100.00\n");
}
