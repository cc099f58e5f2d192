#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ipf/wav.hpp"

// End-to-end checks against the built binary.

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out_path = fs::temp_directory_path() / ("ipf_cli_out_" + std::to_string(counter));
  const fs::path err_path = fs::temp_directory_path() / ("ipf_cli_err_" + std::to_string(counter));
  ++counter;
  const std::string cmd =
      std::string(IPF_CLI_PATH) + " " + args + " > " + out_path.string() + " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.stdout_text = slurp(out_path);
  r.stderr_text = slurp(err_path);
  fs::remove(out_path);
  fs::remove(err_path);
  return r;
}

fs::path tmp_file(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("missing output path is a usage error") {
  RunResult r = run_cli("orbit --inv-alpha 1.0:2.0 --n 10");
  CHECK(r.exit_code == 2);
  CHECK(r.stderr_text.find("--out") != std::string::npos);
}

TEST_CASE("unknown subcommand is a usage error") {
  RunResult r = run_cli("frobnicate");
  CHECK(r.exit_code == 2);
}

TEST_CASE("help mentions units") {
  RunResult r = run_cli("synth --help");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("semitones") != std::string::npos);
  CHECK(r.stdout_text.find("Hz") != std::string::npos);
  RunResult env_help = run_cli("envelope --help");
  CHECK(env_help.stdout_text.find("milliseconds") != std::string::npos);
}

TEST_CASE("orbit emits the documented CSV and is byte-stable across runs") {
  const fs::path a = tmp_file("orbit_a.csv");
  const fs::path b = tmp_file("orbit_b.csv");
  const std::string flags = "orbit --inv-alpha 1.0:2.8 --n 40 --steps 800 --tail 50 -o ";
  REQUIRE(run_cli(flags + a.string()).exit_code == 0);
  REQUIRE(run_cli(flags + b.string()).exit_code == 0);
  const std::string text = slurp(a);
  CHECK(text.rfind("inv_alpha,sample_index,g\n", 0) == 0);
  CHECK(text.find("DIVERGED") != std::string::npos);
  CHECK(text == slurp(b));
  fs::remove(a);
  fs::remove(b);
}

TEST_CASE("explicit seeds reach the two-initial-value setup") {
  const fs::path out = tmp_file("orbit_seeds.csv");
  RunResult r = run_cli("orbit --beta 0.164 --seed-explicit 0.3,0 --inv-alpha 2.5:3.6 --n 30 "
                        "--steps 800 --tail 50 -o " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(out).find("DIVERGED") != std::string::npos);
  fs::remove(out);
}

TEST_CASE("regimes table labels the simple-map windows") {
  const fs::path out = tmp_file("regimes.csv");
  RunResult r = run_cli("regimes --inv-alpha 1.5:2.75:6 -o " + out.string());
  CHECK(r.exit_code == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("inv_alpha,kind,period,limit_values\n", 0) == 0);
  CHECK(text.find("fixed-point") != std::string::npos);
  CHECK(text.find("divergent") != std::string::npos);
  fs::remove(out);
}

TEST_CASE("likelihood map then centroid composition") {
  const fs::path map_csv = tmp_file("map.csv");
  RunResult r = run_cli(
      "likelihood --target-semitones 15 --beta1 0.0:0.08:3 --beta2 0.28:0.36:3 "
      "--alpha-steps 60 --seeds 12 --jobs 1 -o " + map_csv.string());
  CHECK(r.exit_code == 0);
  const std::string text = slurp(map_csv);
  CHECK(text.rfind("beta1,beta2,max_interval_semitones,reliability,derivative,likelihood\n", 0) ==
        0);

  const fs::path cen_csv = tmp_file("centroid.csv");
  RunResult c = run_cli("centroid --in " + map_csv.string() + " --target-semitones 15 -o " +
                        cen_csv.string());
  CHECK(c.exit_code == 0);
  const std::string cen = slurp(cen_csv);
  CHECK(cen.rfind("target_semitones,beta1_centroid,beta2_centroid,region_cell_count\n", 0) == 0);
  CHECK(std::count(cen.begin(), cen.end(), '\n') == 2);
  fs::remove(map_csv);
  fs::remove(cen_csv);
}

TEST_CASE("sweep writes one row per catalog interval") {
  const fs::path catalog = tmp_file("catalog.txt");
  {
    std::ofstream out(catalog);
    out << "# sample\n12\n15\n";
  }
  const fs::path out_csv = tmp_file("centroids.csv");
  RunResult r = run_cli("sweep --catalog " + catalog.string() +
                        " --beta1 0.0:0.08:3 --beta2 0.28:0.36:3 --alpha-steps 60 --seeds 8 "
                        "--jobs 1 -o " + out_csv.string());
  CHECK(r.exit_code == 0);
  const std::string text = slurp(out_csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 rows
  fs::remove(catalog);
  fs::remove(out_csv);
}

TEST_CASE("config file values override flags") {
  const fs::path cfg = tmp_file("orbit.cfg");
  {
    std::ofstream out(cfg);
    out << "# sweep overrides\nn = 7\ninv-alpha = 1.0:1.5\n";
  }
  const fs::path out_csv = tmp_file("orbit_cfg.csv");
  RunResult r = run_cli("orbit --config " + cfg.string() + " --inv-alpha 1.0:2.8 --n 50 "
                        "--steps 500 --tail 10 -o " + out_csv.string());
  CHECK(r.exit_code == 0);
  // 7 columns x 10 tail rows + header, and no divergent column below 1/alpha=e
  const std::string text = slurp(out_csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 7 * 10);
  fs::remove(cfg);
  fs::remove(out_csv);
}

TEST_CASE("synth writes wav, spectrogram, and score; invalid wave is a usage error") {
  const fs::path wav = tmp_file("synth.wav");
  const fs::path spec = tmp_file("synth_spec.csv");
  const fs::path score = tmp_file("synth_score.csv");
  RunResult r = run_cli("synth --beta1 0.02 --beta2 0.33 --alpha-target 0.4359 --steps 140 "
                        "--layers 2 -o " + wav.string() + " --spectrogram " + spec.string() +
                        " --score " + score.string());
  REQUIRE(r.exit_code == 0);
  ipf::WavData data = ipf::read_wav16(wav.string());
  CHECK(data.sample_rate == 44100);
  CHECK(data.samples.size() > 30000);
  CHECK(slurp(spec).rfind("time_s,freq_hz,magnitude\n", 0) == 0);
  CHECK(slurp(score).find("period_s_layer2") != std::string::npos);

  // an unreadable waveform period file is rejected as usage
  const fs::path junk = tmp_file("junk.wav");
  {
    std::ofstream out(junk);
    out << "not a wav";
  }
  RunResult bad = run_cli("synth --alpha-target 0.45 --steps 50 --wave " + junk.string() +
                          " -o " + wav.string());
  CHECK(bad.exit_code == 2);
  fs::remove(wav);
  fs::remove(spec);
  fs::remove(score);
  fs::remove(junk);
}

TEST_CASE("synth reports an unproducible target as a runtime diagnostic") {
  const fs::path wav = tmp_file("synth_fail.wav");
  RunResult r = run_cli("synth --beta1 0.45 --beta2 0.45 --target-semitones 15 --alpha-steps 40 "
                        "--steps 80 -o " + wav.string());
  CHECK(r.exit_code == 1);
  CHECK(r.stderr_text.find("no alpha") != std::string::npos);
}

TEST_CASE("envelope command round-trips through a rendered file") {
  const fs::path wav = tmp_file("env_src.wav");
  std::vector<double> tone(44100 / 2);
  for (std::size_t i = 0; i < tone.size(); ++i)
    tone[i] = 0.5 * std::sin(2.0 * M_PI * 220.0 * i / 44100.0);
  ipf::write_wav16(wav.string(), tone, 44100);
  const fs::path out_csv = tmp_file("env.csv");
  RunResult r = run_cli("envelope --in " + wav.string() + " --window-ms 20 -o " + out_csv.string());
  CHECK(r.exit_code == 0);
  const std::string text = slurp(out_csv);
  CHECK(text.rfind("time_s,rms\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') >= 20);
  RunResult missing = run_cli("envelope --in /nonexistent.wav -o " + out_csv.string());
  CHECK(missing.exit_code == 2);
  fs::remove(wav);
  fs::remove(out_csv);
}
