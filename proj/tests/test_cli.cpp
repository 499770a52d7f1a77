#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "insardet_test_cli";

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Run run(const std::string& args) {
  const auto out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" INSARDET_CLI "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

}  // namespace

TEST_CASE("cli") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);

  SUBCASE("usage errors exit 2") {
    CHECK(run("").code == 2);
    CHECK(run("synth --bogus").code == 2);
    CHECK(run("frobnicate").code == 2);
    std::ofstream(kWork / "bad.json") << R"({"n": 1, "mystery": 3})";
    const auto r = run("synth --config bad.json");
    CHECK(r.code == 2);
    CHECK(r.err.find("mystery") != std::string::npos);
  }

  SUBCASE("runtime errors are a single line and exit 1") {
    const auto r = run("interpolate --input missing.csv");
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }

  SUBCASE("synth is reproducible and records its config") {
    std::ofstream(kWork / "s.json") << R"({"n": 3, "size": 32, "seed": 7, "jobs": 1})";
    REQUIRE(run("synth --config s.json --n 2 --out-dir a").code == 0);
    const auto cfg = nlohmann::json::parse(slurp(kWork / "a" / "config.json"));
    CHECK(cfg.at("n") == 2);  // flag overrides the file
    CHECK(cfg.at("seed") == 7);
    std::size_t lines = 0;
    {
      std::istringstream in(slurp(kWork / "a" / "manifest.jsonl"));
      for (std::string l; std::getline(in, l);) ++lines;
    }
    CHECK(lines == 4);
    // Rerun from the recorded config into another directory.
    auto rec = cfg;
    rec["out_dir"] = "b";
    std::ofstream(kWork / "rec.json") << rec.dump();
    REQUIRE(run("synth --config rec.json").code == 0);
    CHECK(slurp(kWork / "a" / "manifest.jsonl") == slurp(kWork / "b" / "manifest.jsonl"));
  }

  SUBCASE("variogram and interpolate on a CSV") {
    {
      std::ofstream csv(kWork / "pts.csv");
      csv << "x_m,y_m,vel_mm_yr\n";
      for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j)
          if ((i * 7 + j * 3) % 4 == 0) csv << i * 10.0 + 5 << ',' << j * 10.0 + 5 << ',' << 0.1 * i - 0.05 * j << '\n';
    }
    const auto v = run("variogram --input pts.csv --pixel-size 10 --max-dist-km 0.3 --bins 8");
    CHECK(v.code == 0);
    CHECK(fs::exists(kWork / "variogram_variogram.csv"));
    CHECK(fs::exists(kWork / "variogram_config.json"));
    const auto i = run("interpolate --input pts.csv --pixel-size 10 --method dt --out dt.f32");
    CHECK(i.code == 0);
    CHECK(fs::exists(kWork / "dt.f32"));
    CHECK(fs::exists(kWork / "dt.f32.pgm"));
  }

  SUBCASE("report sorts by area") {
    std::ofstream(kWork / "d.json") << R"({"detections":[
      {"centroid_m":[1,2],"area_km2":0.01,"max_p":0.7,"level":0.5},
      {"centroid_m":[3,4],"area_km2":0.30,"max_p":0.95,"level":0.9},
      {"centroid_m":[5,6],"area_km2":0.05,"max_p":0.8,"level":0.75}]})";
    const auto r = run("report --detections d.json --top 2");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string header, first, second, extra;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    CHECK(header == "rank,centroid_x_m,centroid_y_m,area_km2,max_p,level");
    CHECK(first.rfind("1,3,4,0.3,", 0) == 0);
    CHECK(second.rfind("2,5,6,0.05,", 0) == 0);
    CHECK_FALSE(std::getline(in, extra));
  }
}
