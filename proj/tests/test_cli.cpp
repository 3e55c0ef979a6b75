#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ereem/cli.hpp"
#include "ereem/io.hpp"
#include "ereem/report.hpp"

using namespace ereem;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

int run_binary(const std::string& args) {
  const char* bin = std::getenv("EREEM_LAB_BIN");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ereem_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

// Every CSV: meta block with units, a header, rectangular rows. Every
// manifest entry matches the file on disk.
void validate_bundle(const fs::path& dir) {
  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["schema_version"] == 1);
  REQUIRE(manifest["files"].is_array());
  CHECK(!manifest["files"].empty());
  for (const auto& f : manifest["files"]) {
    const std::string path = f["path"];
    const std::string text = slurp(dir / path);
    CHECK(f["sha256"] == sha256_hex(text));
    CHECK(f["bytes"] == text.size());
    if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
      INFO(path);
      CHECK(text.rfind("# meta: ", 0) == 0);
      CHECK(text.find("\r") == std::string::npos);
      const CsvTable t = parse_csv(text);
      CHECK(t.find_meta("units") != nullptr);
      CHECK(!t.header.empty());
      for (const auto& row : t.rows) CHECK(row.size() == t.header.size());
    } else if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
      CHECK(Json::accept(text));
    }
  }
}

}  // namespace

TEST_CASE("constants table") {
  const Run r = run_cli({"constants", "--species", "n15"});
  CHECK(r.code == 0);
  CHECK(r.out.find("A_perp_mhz = 3.65") != std::string::npos);
  CHECK(r.out.find("A_par_mhz = 3.03") != std::string::npos);
  CHECK(r.out.find("D_mhz = 2870") != std::string::npos);
  const Run n14 = run_cli({"constants", "--species", "n14"});
  CHECK(n14.out.find("Q_mhz = -4.945") != std::string::npos);
  CHECK(run_cli({"constants", "--species", "c13"}).code == 2);
}

TEST_CASE("configuration errors map to exit code 2") {
  const fs::path dir = scratch("config_errors");
  const auto neg = write_config(dir, "neg.json", R"({"schema_version":1,"field":{"B_G":-5,"theta_deg":10}})");
  Run r = run_cli({"simulate", "--config", neg.string(), "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/field/B_G") != std::string::npos);

  const auto unknown = write_config(dir, "unknown.json",
                                    R"({"schema_version":1,"field":{"B_G":5,"theta_deg":10,"phi":3}})");
  r = run_cli({"simulate", "--config", unknown.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/field/phi") != std::string::npos);

  const auto version = write_config(dir, "version.json", R"({"schema_version":7})");
  CHECK(run_cli({"constants", "--config", version.string()}).code == 2);
  const auto wrong_cmd = write_config(dir, "cmd.json", R"({"schema_version":1,"command":"fit"})");
  CHECK(run_cli({"constants", "--config", wrong_cmd.string()}).code == 2);
  const auto broken = write_config(dir, "broken.json", "{\"schema_version\":1,");
  CHECK(run_cli({"constants", "--config", broken.string()}).code == 2);
  CHECK(run_cli({"reproduce-figure", "9z", "--out", dir.string()}).code == 2);
  CHECK(run_cli({"no-such-command"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("I/O and numerical failures") {
  const fs::path dir = scratch("failures");
  CHECK(run_cli({"simulate", "--config", (dir / "missing.json").string()}).code == 4);
  const auto fit = write_config(dir, "fit.json", R"({"schema_version":1,"trace":"/nonexistent/trace.csv"})");
  CHECK(run_cli({"fit", "--config", fit.string(), "--out", dir.string()}).code == 4);

  // a flat trace has no tone pair to fit
  std::string flat = "tau_us,signal\n";
  for (int i = 0; i < 64; ++i) flat += std::to_string(0.1 * i) + ",0.5\n";
  std::ofstream(dir / "flat.csv") << flat;
  const auto cfg = write_config(dir, "flat.json", R"({"schema_version":1,"trace":")" + (dir / "flat.csv").string() + "\"}");
  CHECK(run_cli({"fit", "--config", cfg.string(), "--out", (dir / "o").string()}).code == 3);
}

TEST_CASE("exit codes from the installed binary") {
  const fs::path dir = scratch("binary");
  CHECK(run_binary("constants --species n15") == 0);
  const auto neg = write_config(dir, "neg.json", R"({"schema_version":1,"field":{"B_G":-1,"theta_deg":0}})");
  CHECK(run_binary("simulate --config " + neg.string()) == 2);
  CHECK(run_binary("reproduce-figure 7q") == 2);
  CHECK(run_binary("simulate --config " + (dir / "nope.json").string()) == 4);
}

TEST_CASE("simulate then fit") {
  const fs::path dir = scratch("sim_fit");
  const auto sim = write_config(dir, "sim.json",
                                R"({"schema_version":1,"command":"simulate","field":{"B_G":100,"theta_deg":15},"protocol":"sq+"})");
  Run r = run_cli({"simulate", "--config", sim.string(), "--out", (dir / "sim").string()});
  REQUIRE(r.code == 0);
  validate_bundle(dir / "sim");
  const auto fit = write_config(dir, "fit.json",
                                R"({"schema_version":1,"trace":")" + (dir / "sim" / "trace.csv").string() +
                                    R"(","fit_decay":false})");
  r = run_cli({"fit", "--config", fit.string(), "--out", (dir / "fit").string()});
  REQUIRE(r.code == 0);
  const Json s = Json::parse(r.out);
  CHECK(s["chi_min"].get<double>() == doctest::Approx(0.20).epsilon(0.03));
  validate_bundle(dir / "fit");
}

TEST_CASE("outputs are identical across runs and thread counts") {
  const fs::path dir = scratch("determinism");
  const auto sim = write_config(dir, "sim.json",
                                R"({"schema_version":1,"field":{"B_G":65,"theta_deg":20},
                                    "tau":{"start_us":0,"stop_us":8,"points":64},
                                    "degrade":{"T2_star_us":5,"noise_sigma":0.01}})");
  REQUIRE(run_cli({"simulate", "--config", sim.string(), "--seed", "3", "--threads", "1", "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", sim.string(), "--seed", "3", "--threads", "3", "--out", (dir / "b").string()}).code == 0);
  REQUIRE(run_cli({"simulate", "--config", sim.string(), "--seed", "4", "--out", (dir / "c").string()}).code == 0);
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "c" / "trace.csv"));

  const auto map = write_config(dir, "map.json",
                                R"({"schema_version":1,"kind":"chi_min","protocol":"dq",
                                    "B":{"start_G":10,"stop_G":200,"points":20},
                                    "theta":{"start_deg":0,"stop_deg":40,"points":21}})");
  REQUIRE(run_cli({"map", "--config", map.string(), "--threads", "1", "--out", (dir / "m1").string()}).code == 0);
  REQUIRE(run_cli({"map", "--config", map.string(), "--threads", "3", "--out", (dir / "m2").string()}).code == 0);
  CHECK(slurp(dir / "m1" / "manifest.json") == slurp(dir / "m2" / "manifest.json"));
  validate_bundle(dir / "m1");
}

TEST_CASE("calibrate and crosscheck commands") {
  const fs::path dir = scratch("calibrate");
  const auto field = write_config(dir, "field.json",
                                  R"({"schema_version":1,"kind":"field","aligned_MHz":504.432,"misaligned_MHz":454.0,
                                      "aligned_se_MHz":0.02,"misaligned_se_MHz":0.02})");
  Run r = run_cli({"calibrate", "--config", field.string(), "--out", (dir / "f").string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["estimate"]["B_G"].get<double>() == doctest::Approx(90));
  validate_bundle(dir / "f");

  const auto scan = write_config(dir, "scan.json", R"({"schema_version":1,"kind":"scan","B_G":90})");
  r = run_cli({"calibrate", "--config", scan.string(), "--out", (dir / "s").string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["max_pct_deviation"].get<double>() < 0.15);

  const auto center = write_config(dir, "center.json",
                                   R"({"schema_version":1,"kind":"center","synthetic":{"fringe_shift_MHz":0.05}})");
  r = run_cli({"calibrate", "--config", center.string(), "--out", (dir / "c").string()});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["nu_calibrated_MHz"].get<double>() == doctest::Approx(2619.55).epsilon(1e-6));
  validate_bundle(dir / "c");

  const auto bad = write_config(dir, "bad.json", R"({"schema_version":1,"kind":"field","aligned_MHz":400,"misaligned_MHz":500})");
  CHECK(run_cli({"calibrate", "--config", bad.string()}).code == 2);

  const auto cc = write_config(dir, "cc.json",
                               R"({"schema_version":1,"field":{"B_G":90,"theta_deg":10},
                                   "tau":{"start_us":0,"stop_us":30,"points":256}})");
  r = run_cli({"crosscheck", "--config", cc.string(), "--out", (dir / "x").string()});
  REQUIRE(r.code == 0);
  CHECK(std::abs(Json::parse(r.out)["result"]["omega0_deviation_pct"].get<double>()) < 1.0);
}

TEST_CASE("figure bundle layout") {
  const fs::path dir = scratch("figures");
  Run r = run_cli({"reproduce-figure", "S1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "S1" / "manifest.json"));
  validate_bundle(dir / "S1");
  const Json s = Json::parse(r.out);
  CHECK(s["figure"] == "S1");
}
