// Command-line front end: orbit diagrams, regime tables, multiphonic
// parameter maps, centroid summaries, and period-concatenation synthesis.
// Exit codes: 0 success, 1 runtime/divergence diagnostics, 2 usage errors.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ipf/core.hpp"
#include "ipf/csvio.hpp"
#include "ipf/likelihood.hpp"
#include "ipf/orbit.hpp"
#include "ipf/synth.hpp"
#include "ipf/wav.hpp"

namespace {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;  // 0: take the command's --n / default
};

Range parse_range(const std::string& text) {
  Range r;
  std::istringstream in(text);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("expected lo:hi or lo:hi:n, got '" + text + "'");
  try {
    r.lo = std::stod(parts[0]);
    r.hi = std::stod(parts[1]);
    if (parts.size() == 3) r.n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse range '" + text + "'");
  }
  return r;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.empty()) continue;
    values.push_back(std::stod(part));
  }
  return values;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  return out;
}

// `key=value` per line, '#' comments. Tokens are appended after the command
// line so config values override flags.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) continue;
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

// ---- orbit / regimes --------------------------------------------------------

struct SweepArgs {
  std::string inv_alpha = "1.0:2.8";
  int n = 600;
  std::string betas;
  double g0 = 0.5;
  std::string seed_explicit;
  int steps = ipf::kOrbitSteps;
  int tail = ipf::kOrbitTail;
  int jobs = 1;
  std::string out;
};

void add_sweep_options(CLI::App* cmd, SweepArgs& args) {
  cmd->add_option("--inv-alpha", args.inv_alpha,
                  "swept 1/alpha range, lo:hi[:n] (dimensionless)");
  cmd->add_option("--n", args.n, "number of sweep columns");
  cmd->add_option("--beta", args.betas, "reflection strengths beta1[,beta2,...]");
  cmd->add_option("--g0", args.g0, "seed system state for warm-up seeding");
  cmd->add_option("--seed-explicit", args.seed_explicit,
                  "explicit initial states g0,g-,g2-,... (overrides --g0)");
  cmd->add_option("--steps", args.steps, "recursion steps per column");
  cmd->add_option("--tail", args.tail, "tail states kept per column");
  cmd->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");
  cmd->add_option("-o,--out", args.out, "output CSV path")->required();
}

int run_sweep_cmd(const SweepArgs& args, bool regimes) {
  Range range = parse_range(args.inv_alpha);
  const int n = range.n > 0 ? range.n : args.n;
  const std::vector<double> betas = parse_list(args.betas);
  ipf::SweepProtocol proto;
  proto.n_steps = args.steps;
  proto.tail = args.tail;
  proto.g0 = args.g0;
  proto.jobs = args.jobs;
  const ipf::Seeding seeding = args.seed_explicit.empty()
                                   ? ipf::Seeding::warmup()
                                   : ipf::Seeding::explicit_states(parse_list(args.seed_explicit));
  auto out = open_output(args.out);
  if (regimes) {
    auto rows = ipf::regime_map(betas, range.lo, range.hi, n, seeding, proto);
    ipf::write_regimes_csv(rows, out);
    std::cout << "wrote " << args.out << " (" << rows.size() << " columns)\n";
  } else {
    ipf::OrbitDiagram diagram = ipf::orbit_diagram(betas, range.lo, range.hi, n, seeding, proto);
    ipf::write_orbit_csv(diagram, out);
    std::cout << "wrote " << args.out << " (" << diagram.columns.size() << " columns)\n";
  }
  return 0;
}

// ---- likelihood / sweep / centroid ------------------------------------------

struct MapArgs {
  double target_semitones = 15.0;
  int grid = 120;
  double beta_max = 0.5;
  std::string beta1_range;  // optional lo:hi:n overrides
  std::string beta2_range;
  int alpha_steps = 200;
  int steps = ipf::kOrbitSteps;
  int tail = ipf::kOrbitTail;
  int seeds = 150;
  double tol_semitones = 0.25;
  double g0 = 0.5;
  bool no_refine = false;
  int jobs = 0;
  std::string out;
};

void add_map_options(CLI::App* cmd, MapArgs& args, bool with_target) {
  if (with_target)
    cmd->add_option("--target-semitones", args.target_semitones,
                    "audible interval to match (semitones)");
  cmd->add_option("--grid", args.grid, "cells per beta axis");
  cmd->add_option("--beta-max", args.beta_max, "upper end of both beta axes");
  cmd->add_option("--beta1", args.beta1_range, "explicit beta1 axis, lo:hi:n");
  cmd->add_option("--beta2", args.beta2_range, "explicit beta2 axis, lo:hi:n");
  cmd->add_option("--alpha-steps", args.alpha_steps, "alpha scan resolution over (0,1]");
  cmd->add_option("--steps", args.steps, "recursion steps per run");
  cmd->add_option("--tail", args.tail, "tail states per run");
  cmd->add_option("--seeds", args.seeds, "initial values for the reliability estimate");
  cmd->add_option("--tol-semitones", args.tol_semitones, "target match half-width (semitones)");
  cmd->add_option("--g0", args.g0, "base seed state for alpha scans");
  cmd->add_flag("--no-refine", args.no_refine, "disable the alpha refinement stage");
  cmd->add_option("--jobs", args.jobs, "worker threads (0 = all cores)");
  cmd->add_option("-o,--out", args.out, "output CSV path")->required();
}

ipf::MapProtocol protocol_of(const MapArgs& args) {
  ipf::MapProtocol proto;
  proto.alpha_steps = args.alpha_steps;
  proto.n_steps = args.steps;
  proto.tail = args.tail;
  proto.reliability_seeds = args.seeds;
  proto.tol_semitones = args.tol_semitones;
  proto.g0 = args.g0;
  proto.refine = !args.no_refine;
  proto.jobs = args.jobs;
  return proto;
}

std::vector<double> axis_of(const std::string& range_text, int grid, double beta_max) {
  if (!range_text.empty()) {
    Range r = parse_range(range_text);
    return ipf::linspace(r.lo, r.hi, r.n > 0 ? r.n : grid);
  }
  return ipf::linspace(0.0, beta_max, grid);
}

int run_likelihood_cmd(const MapArgs& args) {
  const auto b1 = axis_of(args.beta1_range, args.grid, args.beta_max);
  const auto b2 = axis_of(args.beta2_range, args.grid, args.beta_max);
  ipf::LikelihoodMap map = ipf::likelihood_map(
      b1, b2, ipf::interval_from_semitones(args.target_semitones), protocol_of(args));
  auto out = open_output(args.out);
  ipf::write_map_csv(map, out);
  std::cout << "wrote " << args.out << " (" << map.cells.size() << " cells"
            << (map.all_zero ? ", no cell matches the target" : "") << ")\n";
  return map.all_zero ? 1 : 0;
}

int run_catalog_cmd(const MapArgs& args, const std::string& catalog_path,
                    const std::string& maps_dir) {
  std::ifstream catalog_in(catalog_path);
  if (!catalog_in) throw std::invalid_argument("cannot open catalog: " + catalog_path);
  const std::vector<double> targets = ipf::load_catalog(catalog_in);
  if (targets.empty()) throw std::invalid_argument("catalog has no interval values");

  const auto b1 = axis_of(args.beta1_range, args.grid, args.beta_max);
  const auto b2 = axis_of(args.beta2_range, args.grid, args.beta_max);
  const ipf::MapProtocol proto = protocol_of(args);

  std::vector<ipf::CatalogRow> rows;
  for (double st : targets) {
    ipf::LikelihoodMap map = ipf::likelihood_map(b1, b2, ipf::interval_from_semitones(st), proto);
    ipf::CatalogRow row;
    row.target_semitones = st;
    if (map.all_zero)
      row.empty = true;
    else
      row.centroid = ipf::centroid(map);
    if (!maps_dir.empty()) {
      std::ostringstream name;
      name << maps_dir << "/map_" << st << "st.csv";
      auto map_out = open_output(name.str());
      ipf::write_map_csv(map, map_out);
    }
    std::cout << "target " << st << " st: " << (row.empty ? "no match" : "centroid computed")
              << "\n";
    rows.push_back(std::move(row));
  }
  auto out = open_output(args.out);
  ipf::write_centroids_csv(rows, out);
  std::cout << "wrote " << args.out << " (" << rows.size() << " rows)\n";
  return 0;
}

int run_centroid_cmd(const std::string& in_path, const std::string& out_path,
                     double target_semitones) {
  std::ifstream in(in_path);
  if (!in) throw std::invalid_argument("cannot open map CSV: " + in_path);
  ipf::LikelihoodMap map = ipf::read_map_csv(in);
  if (map.all_zero) {
    std::cerr << "centroid: map has no nonzero likelihood\n";
    return 1;
  }
  ipf::CatalogRow row;
  row.target_semitones = target_semitones;
  row.centroid = ipf::centroid(map);
  auto out = open_output(out_path);
  ipf::write_centroids_csv({row}, out);
  std::cout << "wrote " << out_path << " (beta1=" << row.centroid.beta1
            << ", beta2=" << row.centroid.beta2 << ")\n";
  return 0;
}

// ---- synth / envelope -------------------------------------------------------

struct SynthArgs {
  double beta1 = 0.02;
  double beta2 = 0.33;
  double target_semitones = 15.0;
  double alpha_target = 0.0;  // 0: derive from the target interval
  double f0 = 165.0;          // Hz
  int rate = 44100;           // Hz
  int layers = 2;
  int steps = 660;
  double attack = 0.25;
  double g0 = 0.5;
  std::string env_wav;
  double env_window_ms = 10.0;
  std::string wave = "gaussian";
  int alpha_steps = 200;
  std::string out;
  std::string spectrogram_out;
  std::string score_out;
  int spec_window = 1024;
  int spec_hop = 256;
};

int run_synth_cmd(const SynthArgs& args) {
  ipf::IpfParams params;
  params.alpha = 1.0;  // replaced per step by the alpha series
  params.betas = {args.beta1, args.beta2};
  params.g0 = args.g0;
  params.validate();

  // plateau alpha: explicit, or matched to the requested interval on this cell
  double alpha_target = args.alpha_target;
  if (!(alpha_target > 0.0)) {
    ipf::MapProtocol proto;
    proto.alpha_steps = args.alpha_steps;
    proto.reliability_seeds = 1;  // only the alpha selection matters here
    proto.g0 = args.g0;
    ipf::LikelihoodMap map =
        ipf::likelihood_map({args.beta1}, {args.beta2},
                            ipf::interval_from_semitones(args.target_semitones), proto);
    const ipf::MapCell& cell = map.at(0, 0);
    if (!cell.interval || !(cell.alpha > 0.0)) {
      std::cerr << "synth: no alpha in (0,1] produces " << args.target_semitones
                << " semitones at beta1=" << args.beta1 << ", beta2=" << args.beta2 << "\n";
      return 1;
    }
    alpha_target = cell.alpha;
    std::cout << "matched alpha=" << alpha_target << " (interval " << cell.interval->semitones
              << " st)\n";
  }

  std::vector<double> envelope;
  if (!args.env_wav.empty()) {
    ipf::WavData wav = ipf::read_wav16(args.env_wav);
    std::vector<double> raw =
        ipf::extract_envelope(wav.samples, wav.sample_rate, args.env_window_ms);
    if (raw.size() < 2) throw std::invalid_argument("envelope source too short");
    envelope.resize(args.steps);
    for (int i = 0; i < args.steps; ++i) {
      const double pos = static_cast<double>(i) * (raw.size() - 1) / (args.steps - 1);
      const std::size_t i0 = static_cast<std::size_t>(pos);
      const double frac = pos - i0;
      envelope[i] = raw[i0] + frac * (raw[std::min(i0 + 1, raw.size() - 1)] - raw[i0]);
    }
  } else {
    envelope = ipf::attack_plateau_envelope(args.steps, args.attack);
  }

  ipf::AlphaSeries alphas = ipf::envelope_to_alpha(envelope, params, alpha_target);
  ipf::SynthScore score = ipf::run_score(alphas, params, args.f0, args.rate);
  if (score.diverged)
    std::cerr << "note: score truncated by divergence at step " << *score.diverged_step << "\n";

  ipf::WaveformPeriod period = args.wave == "gaussian"
                                   ? ipf::gaussian_period(args.f0, args.rate)
                                   : [&] {
                                       ipf::WavData wav = ipf::read_wav16(args.wave);
                                       return ipf::period_from_samples(wav.samples, args.f0);
                                     }();

  ipf::RenderResult rendered = ipf::render(score, period, args.layers);
  ipf::write_wav16(args.out, rendered.samples, args.rate);
  std::cout << "wrote " << args.out << " (" << rendered.samples.size() << " samples, "
            << score.steps.size() << " steps)\n";

  if (!args.spectrogram_out.empty()) {
    ipf::Spectrogram spec =
        ipf::spectrogram(rendered.samples, args.spec_window, args.spec_hop, args.rate);
    auto out = open_output(args.spectrogram_out);
    ipf::write_spectrogram_csv(spec, out);
    std::cout << "wrote " << args.spectrogram_out << " (" << spec.frames.size() << " frames)\n";
  }
  if (!args.score_out.empty()) {
    auto out = open_output(args.score_out);
    ipf::write_score_csv(score, rendered, out);
    std::cout << "wrote " << args.score_out << "\n";
  }
  return 0;
}

int run_envelope_cmd(const std::string& in_path, const std::string& out_path, double window_ms) {
  ipf::WavData wav = ipf::read_wav16(in_path);
  std::vector<double> env = ipf::extract_envelope(wav.samples, wav.sample_rate, window_ms);
  auto out = open_output(out_path);
  out << "time_s,rms\n";
  const double dt = window_ms / 1000.0;
  for (std::size_t i = 0; i < env.size(); ++i)
    out << ipf::csv_double(i * dt) << ',' << ipf::csv_double(env[i]) << '\n';
  std::cout << "wrote " << out_path << " (" << env.size() << " windows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impulse-pattern recursion toolkit: orbit diagrams, multiphonic parameter "
               "search, and period-concatenation synthesis"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value file; values override command-line flags")
      ->expected(1);

  SweepArgs orbit_args;
  CLI::App* orbit = app.add_subcommand("orbit", "orbit diagram over a 1/alpha sweep (CSV)");
  add_sweep_options(orbit, orbit_args);

  SweepArgs regime_args;
  CLI::App* regimes = app.add_subcommand("regimes", "regime classification per 1/alpha (CSV)");
  add_sweep_options(regimes, regime_args);

  MapArgs like_args;
  CLI::App* likelihood =
      app.add_subcommand("likelihood", "likelihood map for one target interval (CSV)");
  add_map_options(likelihood, like_args, true);

  MapArgs sweep_args;
  std::string catalog_path;
  std::string maps_dir;
  CLI::App* sweep = app.add_subcommand("sweep", "centroid per catalog interval (CSV)");
  sweep->add_option("--catalog", catalog_path, "file with one semitone value per line")
      ->required();
  sweep->add_option("--maps-dir", maps_dir, "also write each interval's map CSV here");
  add_map_options(sweep, sweep_args, false);

  std::string centroid_in, centroid_out;
  double centroid_target = 0.0;
  CLI::App* centroid_cmd =
      app.add_subcommand("centroid", "90%-region weighted centroid of a map CSV");
  centroid_cmd->add_option("--in", centroid_in, "map CSV produced by `likelihood`")->required();
  centroid_cmd->add_option("--target-semitones", centroid_target,
                           "interval label for the output row (semitones)");
  centroid_cmd->add_option("-o,--out", centroid_out, "output CSV path")->required();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "render a multiphonic (WAV + optional CSVs)");
  synth->add_option("--beta1", synth_args.beta1, "first reflection strength");
  synth->add_option("--beta2", synth_args.beta2, "second reflection strength");
  synth->add_option("--target-semitones", synth_args.target_semitones,
                    "interval to voice (semitones)");
  synth->add_option("--alpha-target", synth_args.alpha_target,
                    "plateau alpha; skips the interval match when set");
  synth->add_option("--f0", synth_args.f0, "fundamental frequency (Hz)");
  synth->add_option("--rate", synth_args.rate, "sample rate (Hz)");
  synth->add_option("--layers", synth_args.layers, "signal layers (1 = reference pitch only)");
  synth->add_option("--steps", synth_args.steps,
                    "recursion steps, one per period (duration ~ steps/f0 seconds)");
  synth->add_option("--attack", synth_args.attack,
                    "attack fraction of the synthetic envelope (0,0.75]");
  synth->add_option("--g0", synth_args.g0, "seed system state");
  synth->add_option("--env-wav", synth_args.env_wav,
                    "drive alpha from this recording instead of the synthetic envelope");
  synth->add_option("--env-window-ms", synth_args.env_window_ms,
                    "envelope RMS window (milliseconds)");
  synth->add_option("--wave", synth_args.wave, "'gaussian' or a WAV holding one waveform period");
  synth->add_option("--alpha-steps", synth_args.alpha_steps, "alpha match resolution");
  synth->add_option("-o,--out", synth_args.out, "output WAV path")->required();
  synth->add_option("--spectrogram", synth_args.spectrogram_out, "spectrogram CSV path");
  synth->add_option("--score", synth_args.score_out, "score dump CSV path");
  synth->add_option("--spec-window", synth_args.spec_window, "spectrogram window (samples)");
  synth->add_option("--spec-hop", synth_args.spec_hop, "spectrogram hop (samples)");

  std::string env_in, env_out;
  double env_window_ms = 10.0;
  CLI::App* envelope_cmd =
      app.add_subcommand("envelope", "RMS envelope of a recording (CSV, time_s/rms)");
  envelope_cmd->add_option("--in", env_in, "input WAV")->required();
  envelope_cmd->add_option("--window-ms", env_window_ms, "RMS window (milliseconds)");
  envelope_cmd->add_option("-o,--out", env_out, "output CSV path")->required();

  // --config may follow the subcommand name; let it reach the parent option
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  // config file support: append tokens so they take precedence (TakeLast)
  std::vector<std::string> args_vec(argv + 1, argv + argc);
  for (std::size_t i = 0; i + 1 < args_vec.size(); ++i) {
    if (args_vec[i] == "--config") {
      try {
        auto extra = config_tokens(args_vec[i + 1]);
        args_vec.insert(args_vec.end(), extra.begin(), extra.end());
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
      break;
    }
  }

  try {
    std::vector<const char*> raw;
    raw.push_back(argv[0]);
    for (const auto& s : args_vec) raw.push_back(s.c_str());
    app.parse(static_cast<int>(raw.size()), const_cast<char**>(raw.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  }

  try {
    if (orbit->parsed()) return run_sweep_cmd(orbit_args, false);
    if (regimes->parsed()) return run_sweep_cmd(regime_args, true);
    if (likelihood->parsed()) return run_likelihood_cmd(like_args);
    if (sweep->parsed()) return run_catalog_cmd(sweep_args, catalog_path, maps_dir);
    if (centroid_cmd->parsed()) return run_centroid_cmd(centroid_in, centroid_out, centroid_target);
    if (synth->parsed()) return run_synth_cmd(synth_args);
    if (envelope_cmd->parsed()) return run_envelope_cmd(env_in, env_out, env_window_ms);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
