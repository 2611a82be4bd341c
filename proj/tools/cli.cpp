#include "cli.hpp"

#include "dcg/errors.hpp"
#include "dcg/harness.hpp"
#include "dcg/io.hpp"
#include "dcg/noise.hpp"
#include "dcg/qpt.hpp"
#include "dcg/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>

namespace dcg::cli {

using nlohmann::json;

namespace {

constexpr int kSchemaMajor = 1;

// Option values collected by CLI11 before dispatch.
struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  std::optional<std::size_t> samples;
  std::string out;
  std::string config;
  std::string sequence;
  // solve
  int pieces = 5;
  std::string target = "pi/2";
  std::string phase = "0";
  double omega1 = 1.0;
  // reproduce
  std::string scenario;
  std::string axis;
  int precision = 12;
  // qpt
  int repeat = 1;
};

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open file");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
}

json load_validated(const std::string& path, const json& schema) {
  json doc = read_json_file(path);
  if (!doc.is_object()) throw ConfigError(path + "#/", "top level must be an object");
  try {
    check_schema_version(doc, kSchemaMajor);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "#" + e.path(), "schema_version not supported");
  }
  if (auto bad = validate_schema(doc, schema)) throw ConfigError(path + "#" + bad->path, bad->message);
  return doc;
}

PulseSequence sequence_from_json(const json& doc) {
  std::vector<Segment> segs;
  for (const auto& s : doc.at("segments")) {
    Segment seg{s.at("duration_us").get<double>(), s.at("amplitude_MHz").get<double>(), s.value("phase_rad", 0.0)};
    seg.validate();
    segs.push_back(seg);
  }
  return PulseSequence(std::move(segs), doc.value("label", std::string("custom")));
}

json sequence_to_json(const PulseSequence& seq) {
  json segs = json::array();
  for (const auto& s : seq.segments()) {
    segs.push_back({{"duration_us", s.duration}, {"amplitude_MHz", s.amplitude}, {"phase_rad", s.phase}});
  }
  return {{"schema_version", "1.0"}, {"label", seq.label()}, {"segments", segs}};
}

NoiseModel noise_from_json(const json& cfg) {
  NoiseModel m;
  if (!cfg.contains("noise")) return m;
  const json& n = cfg["noise"];
  double sigma = n.value("static_sigma_MHz", 0.0);
  if (n.contains("t2star_us")) sigma = std::hypot(sigma, sigma_from_t2star(n["t2star_us"].get<double>()));
  if (sigma > 0.0) m.add(StaticGaussianDetuning{sigma});
  if (n.contains("ou")) {
    m.add(OrnsteinUhlenbeckDetuning{n["ou"]["sigma_MHz"].get<double>(), n["ou"]["correlation_time_us"].get<double>()});
  }
  if (const double a = n.value("amplitude_relative_sigma", 0.0); a > 0.0) m.add(AmplitudeNoise{a});
  for (const auto& c : n.value("channels", json::array())) {
    m.add(RelaxationChannel{channel_kind_from_string(c["kind"].get<std::string>()), c["rate_MHz"].get<double>()});
  }
  return m;
}

json noise_to_json(const NoiseModel& m) {
  json channels = json::array();
  for (const auto& c : m.channels()) channels.push_back({{"kind", to_string(c.kind)}, {"rate_MHz", c.rate}});
  json ou = json::array();
  for (const auto& o : m.ou_terms()) ou.push_back({{"sigma_MHz", o.sigma}, {"correlation_time_us", o.correlation_time}});
  return {{"static_sigma_MHz", m.static_sigma()},
          {"amplitude_relative_sigma", m.amplitude_sigma()},
          {"ou", ou},
          {"channels", channels}};
}

std::uint64_t choose_seed(const Flags& f, const json& cfg) {
  if (f.seed) return *f.seed;
  if (cfg.contains("seed")) return cfg["seed"].get<std::uint64_t>();
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string output_dir(const Flags& f, const json& cfg, const std::string& fallback) {
  if (!f.out.empty()) return f.out;
  if (cfg.contains("output") && cfg["output"].contains("directory")) return cfg["output"]["directory"];
  return fallback;
}

int precision_of(const Flags& f, const json& cfg) {
  if (cfg.contains("output") && cfg["output"].contains("precision")) return cfg["output"]["precision"];
  return f.precision;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, std::uint64_t seed,
                    const json& hashed, json extra, bool passed) {
  json m = {{"command", command},
            {"provenance", {{"seed", seed}, {"config_hash", config_hash(hashed)}, {"config", hashed}}},
            {"passed", passed}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

// --- solve ---------------------------------------------------------------------

int cmd_solve(const Flags& f, std::ostream& out, std::ostream& err) {
  const double angle = parse_angle(f.target);
  const double phase = parse_angle(f.phase);
  if (f.pieces != 3 && f.pieces != 5 && f.pieces != 9) throw InvalidArgument("--pieces must be 3, 5 or 9");
  Ansatz ansatz = Ansatz::from_pieces(f.pieces, angle);
  ansatz.target_phase = phase;
  SolverOptions opts;
  opts.omega1 = f.omega1;

  json result;
  std::optional<SolveResult> res;
  std::string status = "converged";
  if (f.pieces == 9 && std::remainder(angle, kTwoPi) != 0.0) {
    if (std::abs(angle - kPi) > 1e-12) throw InvalidArgument("nine-piece ansatz is defined for a pi target only");
    NinePieceOutcome nine = solve_nine_piece(reference::kNineCoefficient, 0.2, opts);
    if (!nine.closest) throw NoSolution(nine.note, std::numeric_limits<double>::infinity());
    res = nine.closest;
    res->params.target_phase = phase;
    status = nine.resolved ? "resolved" : "unresolved";
    result["note"] = nine.note;
    result["c8_all_roots"] = nine.c8_values;
  } else {
    const std::vector<int> orders = f.pieces == 3 ? std::vector<int>{2}
                                    : f.pieces == 5 ? std::vector<int>{2, 4}
                                                    : std::vector<int>{2, 4, 6};
    res = solve_supcode(ansatz, orders, std::nullopt, opts);
    if (res->identity) status = "identity";
  }

  const SolveResult& r = *res;
  json series = json::object();
  for (int k = 2; k <= r.spectrum.max_order(); k += 2) series["c" + std::to_string(k)] = r.spectrum.coefficient(k);
  result["status"] = status;
  result["ansatz"] = ansatz.name;
  result["pieces"] = f.pieces;
  result["tau_over_tau0"] = r.params.tau;
  result["omega1_MHz"] = r.params.omega1;
  result["target_angle_rad"] = r.params.target_angle;
  result["target_phase_rad"] = r.params.target_phase;
  result["total_tau_over_tau0"] = r.total_tau;
  result["rotation_infidelity"] = r.rotation_infidelity;
  result["series_coefficients"] = series;
  result["roots"] = r.roots;
  out << result.dump(2) << "\n";

  if (!f.out.empty()) {
    const std::filesystem::path dir(f.out);
    write_atomic(dir / "params.json", result.dump(2) + "\n");
    if (!r.identity) {
      const PulseSequence seq = ansatz.build(r.params.tau, r.params.omega1);
      write_atomic(dir / "sequence.json", sequence_to_json(seq).dump(2) + "\n");
    }
  }
  (void)err;
  return kOk;
}

// --- reproduce -------------------------------------------------------------------

ScenarioConfig scenario_config(const Flags& f, const json& cfg) {
  ScenarioConfig sc;
  sc.seed = choose_seed(f, cfg);
  if (f.shots) sc.shots = f.shots;
  else if (cfg.contains("shots")) sc.shots = cfg["shots"].get<std::uint64_t>();
  if (f.samples) sc.samples = *f.samples;
  else if (cfg.contains("samples")) sc.samples = cfg["samples"].get<std::size_t>();
  if (cfg.contains("scenario_params")) {
    const json& p = cfg["scenario_params"];
    sc.t2star = p.value("t2star_us", sc.t2star);
    sc.t1rho = p.value("t1rho_us", sc.t1rho);
    sc.hahn_t2 = p.value("hahn_t2_us", sc.hahn_t2);
    sc.rabi_t2 = p.value("rabi_t2_us", sc.rabi_t2);
    sc.correlation_time = p.value("correlation_time_us", sc.correlation_time);
    sc.off_resonance = p.value("off_resonance_MHz", sc.off_resonance);
    if (p.contains("axis")) sc.axis = p["axis"].get<std::string>()[0];
    if (p.contains("amplitude_relative_sigma")) sc.amplitude_sigma = p["amplitude_relative_sigma"].get<double>();
    if (p.contains("ou_sigma_MHz")) sc.ou_sigma = p["ou_sigma_MHz"].get<double>();
    sc.static_enabled = p.value("static_enabled", sc.static_enabled);
    sc.ou_enabled = p.value("ou_enabled", sc.ou_enabled);
    sc.relaxation_enabled = p.value("relaxation_enabled", sc.relaxation_enabled);
  }
  if (!f.axis.empty()) {
    if (f.axis != "x" && f.axis != "y") throw ConfigError("--axis", "must be x or y");
    sc.axis = f.axis[0];
  }
  return sc;
}

int cmd_reproduce(const Flags& f, std::ostream& out, std::ostream& err) {
  const json cfg = f.config.empty() ? json::object() : load_validated(f.config, config_schema());
  std::string id = f.scenario;
  if (id.empty() && cfg.contains("scenario")) id = cfg["scenario"];
  const auto& ids = scenario_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    err << "reproduce: unknown scenario id '" << id << "' (expected one of:";
    for (const auto& s : ids) err << ' ' << s;
    err << ")\n";
    return kUsage;
  }
  const ScenarioConfig sc = scenario_config(f, cfg);
  const RunResult r = run_scenario(id, sc);
  const std::filesystem::path dir = output_dir(f, cfg, "out/" + id);
  write_run(r, dir, precision_of(f, cfg));
  for (const auto& c : r.checks) {
    out << (c.passed ? "PASS " : (c.informational ? "INFO " : "FAIL ")) << r.scenario.name << '.' << c.name
        << " value=" << format_number(c.value, 6) << " window=[" << format_number(c.lo, 6) << ", "
        << format_number(c.hi, 6) << "]";
    if (!c.note.empty()) out << " (" << c.note << ")";
    out << "\n";
  }
  out << "wrote " << dir.string() << "\n";
  return r.passed() ? kOk : kToleranceFailure;
}

// --- simulate --------------------------------------------------------------------

int cmd_simulate(const Flags& f, std::ostream& out, std::ostream&) {
  if (f.sequence.empty()) throw ConfigError("--sequence", "a sequence file is required");
  const json cfg = f.config.empty() ? json{{"schema_version", "1.0"}} : load_validated(f.config, config_schema());
  const json seq_doc = load_validated(f.sequence, sequence_schema());
  const PulseSequence seq = sequence_from_json(seq_doc);
  const NoiseModel model = noise_from_json(cfg);
  const std::uint64_t seed = choose_seed(f, cfg);

  PropagationOptions popt;
  BlochVector initial = BlochVector::UnitZ();
  if (cfg.contains("simulate")) {
    const json& s = cfg["simulate"];
    popt.off_resonance = s.value("off_resonance_MHz", 0.0);
    popt.amplitude_scale = s.value("amplitude_scale", 1.0);
    popt.hard_pulses = s.value("hard_pulses", false);
    if (s.value("initial_state", std::string("ground")) == "excited") initial = -BlochVector::UnitZ();
  }
  std::size_t n = f.samples ? *f.samples : cfg.value("samples", std::size_t{1000});
  if (model.is_noiseless()) n = 2;
  if (n < 2) throw ConfigError("--samples", "need at least 2 samples");

  const auto& segs = seq.segments();
  const std::size_t width = 3 * (segs.size() + 1);
  const SampleMatrix s = sample_ensemble(n, width, seed, [&](std::size_t, std::mt19937_64& rng, std::span<double> row) {
    const StaticDraw d = draw_static(model, rng);
    const std::vector<double> det = sample_segment_detunings(seq, model, d.detuning, rng);
    PropagationOptions o = popt;
    o.amplitude_scale *= d.amplitude_scale;
    BlochVector r = initial;
    row[0] = r.x();
    row[1] = r.y();
    row[2] = r.z();
    for (std::size_t k = 0; k < segs.size(); ++k) {
      r = segment_bloch_map(segment_frame(segs[k], det[k], o), segs[k].duration, model.channels()).apply(r);
      row[3 * (k + 1)] = r.x();
      row[3 * (k + 1) + 1] = r.y();
      row[3 * (k + 1) + 2] = r.z();
    }
  });
  const auto est = column_estimates(s);

  Dataset data({"segment", "time_us", "x", "y", "z", "p0", "p0_stderr"});
  double t = 0.0;
  for (std::size_t k = 0; k <= segs.size(); ++k) {
    if (k > 0) t += segs[k - 1].duration;
    const double z = est[3 * k + 2].mean;
    data.add_row({double(k), t, est[3 * k].mean, est[3 * k + 1].mean, z, 0.5 * (1 + z), 0.5 * est[3 * k + 2].std_error});
  }
  const auto& last = data.rows.back();
  const json summary = {{"label", seq.label()},
                        {"samples", n},
                        {"final", {{"x", last[2]}, {"y", last[3]}, {"z", last[4]}, {"p0", last[5]}, {"p1", 1 - last[5]}}}};

  const std::filesystem::path dir = output_dir(f, cfg, "out/simulate");
  const int prec = precision_of(f, cfg);
  write_atomic(dir / "data.csv", to_csv(data, prec));
  write_atomic(dir / "fits.json", summary.dump(2) + "\n");
  json hashed = {{"command", "simulate"}, {"config", cfg}, {"sequence", seq_doc}, {"seed", seed}, {"samples", n}};
  write_manifest(dir, "simulate", seed, hashed, {{"noise", noise_to_json(model)}, {"files", {"data.csv", "fits.json"}}},
                 true);
  out << summary.dump(2) << "\n";
  return kOk;
}

// --- qpt ---------------------------------------------------------------------------

int cmd_qpt(const Flags& f, std::ostream& out, std::ostream&) {
  const json cfg = f.config.empty() ? json{{"schema_version", "1.0"}} : load_validated(f.config, config_schema());
  const json q = cfg.value("qpt", json::object());
  const NoiseModel model = noise_from_json(cfg);
  if (model.has_ou()) throw ConfigError("/noise/ou", "qpt averages static noise by quadrature; OU noise is not supported");
  const std::uint64_t seed = choose_seed(f, cfg);

  PulseSequence seq;
  double angle = kPi / 2, phase = 0.0;
  json seq_doc = nullptr;
  if (!f.sequence.empty()) {
    seq_doc = load_validated(f.sequence, sequence_schema());
    seq = sequence_from_json(seq_doc);
    angle = q.value("target_angle_rad", parse_angle(f.target));
    phase = q.value("target_phase_rad", parse_angle(f.phase));
  } else {
    seq = build_supcode5_halfpi(five_piece_halfpi(1.0, 0.0));
  }
  int repeat = q.value("repeat", f.repeat);
  if (repeat < 0) throw ConfigError("--repeat", "must be >= 0");

  const QuadratureRule rule = model.static_sigma() > 0.0 ? gauss_hermite(31) : QuadratureRule{{0.0}, {1.0}};
  BlochMap avg;
  avg.linear.setZero();
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const BlochMap g = sequence_bloch_map(seq, model.static_sigma() * rule.nodes[i], model.channels());
    BlochMap p;
    for (int k = 0; k < repeat; ++k) p = p.followed_by(g);
    avg.linear += rule.weights[i] * p.linear;
    avg.offset += rule.weights[i] * p.offset;
  }
  Unitary2 ideal;
  for (int k = 0; k < repeat; ++k) ideal = target_rotation(angle, phase) * ideal;

  TomographyOptions topt;
  if (f.shots) topt.shots = f.shots;
  else if (cfg.contains("shots")) topt.shots = cfg["shots"].get<std::uint64_t>();
  topt.seed = seed;
  topt.contrast = q.value("contrast", 1.0);
  const auto records = run_process(bloch_map_channel(avg), topt);
  const ChiMatrix chi = reconstruct_chi(records, q.value("project_psd", false));
  const double fid = average_gate_fidelity(chi, ideal);

  Dataset data({"m", "n", "re", "im"});
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) data.add_row({double(a), double(b), chi(a, b).real(), chi(a, b).imag()});
  }
  const json summary = {{"label", seq.label()},
                        {"repeat", repeat},
                        {"shots", topt.shots ? json(*topt.shots) : json(nullptr)},
                        {"average_gate_fidelity", fid},
                        {"per_gate_fidelity", repeat > 0 && fid > 0.5 ? json(0.5 + 0.5 * std::pow(2 * fid - 1, 1.0 / repeat)) : json(nullptr)},
                        {"trace_preservation_error", chi.trace_preservation_error()},
                        {"min_eigenvalue", chi.min_eigenvalue()}};
  const std::filesystem::path dir = output_dir(f, cfg, "out/qpt");
  write_atomic(dir / "data.csv", to_csv(data, precision_of(f, cfg)));
  write_atomic(dir / "fits.json", summary.dump(2) + "\n");
  json hashed = {{"command", "qpt"}, {"config", cfg}, {"sequence", seq_doc}, {"seed", seed}, {"repeat", repeat},
                 {"shots", summary["shots"]}};
  write_manifest(dir, "qpt", seed, hashed, {{"noise", noise_to_json(model)}, {"files", {"data.csv", "fits.json"}}}, true);
  out << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace

double parse_angle(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) throw InvalidArgument("empty angle");
  double sign = 1.0;
  if (s[0] == '-') {
    sign = -1.0;
    s.erase(0, 1);
  }
  auto number = [&](const std::string& t) {
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) throw InvalidArgument("bad angle: " + text);
    return v;
  };
  const auto p = s.find("pi");
  if (p == std::string::npos) return sign * number(s);
  const double mult = p == 0 ? 1.0 : number(s.substr(0, p));
  std::string rest = s.substr(p + 2);
  double div = 1.0;
  if (!rest.empty()) {
    if (rest[0] != '/') throw InvalidArgument("bad angle: " + text);
    div = number(rest.substr(1));
    if (div == 0.0) throw InvalidArgument("bad angle: " + text);
  }
  return sign * mult * kPi / div;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dynamically corrected gate design and simulation", "dcg_forge"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", f.seed, "RNG seed (random and recorded when omitted)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--config", f.config, "JSON config file");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve SUPCODE segment timings");
  solve->add_option("--pieces", f.pieces, "3, 5 or 9")->check(CLI::IsMember({3, 5, 9}));
  solve->add_option("--target", f.target, "rotation angle, e.g. pi/2");
  solve->add_option("--phase", f.phase, "rotation axis phase");
  solve->add_option("--omega1", f.omega1, "Rabi frequency in MHz")->check(CLI::PositiveNumber);
  solve->add_option("--out", f.out, "write params.json and sequence.json here");

  CLI::App* repro = app.add_subcommand("reproduce", "regenerate a reference table or figure");
  repro->add_option("scenario", f.scenario, "table1 | fig1d | fig2b | fig3 | fig4a | fig4b | fig4c");
  common(repro);
  repro->add_option("--shots", f.shots, "finite-shot count for tomography");
  repro->add_option("--samples", f.samples, "Monte Carlo samples");
  repro->add_option("--axis", f.axis, "fig3 rotation axis: x or y");

  CLI::App* sim = app.add_subcommand("simulate", "ensemble simulation of a sequence file");
  sim->add_option("--sequence", f.sequence, "sequence JSON")->required();
  common(sim);
  sim->add_option("--samples", f.samples, "Monte Carlo samples");

  CLI::App* qpt = app.add_subcommand("qpt", "process tomography of a (repeated) sequence");
  qpt->add_option("--sequence", f.sequence, "sequence JSON (default: five-piece pi/2)");
  qpt->add_option("--target", f.target, "ideal rotation angle for a custom sequence");
  qpt->add_option("--phase", f.phase, "ideal rotation phase for a custom sequence");
  qpt->add_option("--repeat", f.repeat, "number of repetitions")->check(CLI::NonNegativeNumber);
  qpt->add_option("--shots", f.shots, "finite-shot count (exact expectations when omitted)");
  common(qpt);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(f, out, err);
    if (repro->parsed()) return cmd_reproduce(f, out, err);
    if (sim->parsed()) return cmd_simulate(f, out, err);
    if (qpt->parsed()) return cmd_qpt(f, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const NoSolution& e) {
    err << "no solution: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return kNoSolution;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  err << app.help();
  return kUsage;
}

}  // namespace dcg::cli
