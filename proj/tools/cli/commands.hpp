#pragma once

// maxsketch command-line front end. `run` parses argv, dispatches to one
// subcommand and maps library errors to exit codes:
//   0 success, 1 a verify check did not pass, 2 usage/parameter,
//   3 format/I-O, 4 grid soundness.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maxsketch/maxsketch.hpp"

namespace maxsketch::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int usage = 2;
inline constexpr int format = 3;
inline constexpr int soundness = 4;
} // namespace exit_code

class usage_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class output_format { csv, json };

struct context {
  std::optional<std::uint64_t> seed;
  output_format format = output_format::csv;
  bool quiet = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;

  /// The explicit seed, or a fresh one that is reported on stderr.
  std::uint64_t seed_or_draw() {
    if (!seed) {
      std::random_device rd;
      seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      *err << "seed: " << *seed << '\n';
    }
    return *seed;
  }

  void note(const std::string& msg) const {
    if (!quiet) *err << msg << '\n';
  }
};

// ---------------------------------------------------------------------------
// File helpers

[[nodiscard]] inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("failed reading '" + path + "'");
  return bytes;
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("failed writing '" + path + "'");
}

[[nodiscard]] inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  return out;
}

[[nodiscard]] inline bool has_sketch_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  char head[4] = {};
  in.read(head, 4);
  return in.gcount() == 4 && std::string_view(head, 4) == "MXSK";
}

/// Reads an MXSK file; errors carry the path.
[[nodiscard]] inline sketch_state load_sketch(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return deserialize(bytes);
  } catch (const format_error& e) {
    throw format_error(path + ": " + e.what());
  }
}

[[nodiscard]] inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ---------------------------------------------------------------------------
// Single-pass sketching of a stream

struct sketch_result {
  sketch_state state;
  std::size_t peak_state_bytes = 0; ///< largest state_bytes() observed after any batch
  std::size_t buffer_bytes = 0;     ///< ingestion buffer, fixed for the run
  std::size_t rows = 0;
};

/// One pass over an MXS1 or CSV stream. Memory beyond the projection set is
/// the fixed-size read batch, the ingestion buffer and the m maxima.
[[nodiscard]] inline sketch_result sketch_stream(std::istream& in, std::size_t m, std::uint64_t seed,
                                                 projection_storage storage = projection_storage::materialized,
                                                 std::size_t fallback_d = 0,
                                                 std::size_t batch = sketcher::default_batch) {
  stream_reader reader(in, fallback_d);
  const auto proj = projection_set::create(reader.d(), m, seed, storage);
  sketcher sk(proj, batch);
  std::vector<double> raw;
  raw.reserve(batch * reader.d());
  sketch_result res{sketch_state::empty_for(proj)};
  res.peak_state_bytes = res.state.state_bytes();
  res.buffer_bytes = sk.buffer_bytes();
  std::size_t got = 0;
  while ((got = reader.read_batch(raw, batch)) > 0) {
    for (std::size_t i = 0; i < got; ++i) {
      try {
        sk.add(std::span<const double>(raw.data() + i * reader.d(), reader.d()));
      } catch (const invalid_input& e) {
        throw invalid_input("row " + std::to_string(res.rows + i) + ": " + e.what());
      }
    }
    res.rows += got;
    res.peak_state_bytes = std::max(res.peak_state_bytes, sk.state().state_bytes());
    if (sk.buffer_bytes() != res.buffer_bytes) throw error("ingestion buffer grew during the pass");
  }
  res.state = std::move(sk).release();
  return res;
}

[[nodiscard]] inline sketch_result sketch_file(const std::string& path, std::size_t m, std::uint64_t seed,
                                               projection_storage storage = projection_storage::materialized,
                                               std::size_t fallback_d = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  try {
    return sketch_stream(in, m, seed, storage, fallback_d);
  } catch (const format_error& e) {
    throw format_error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output

/// A flat record: one json object, or a csv header plus one row.
inline void emit_record(const context& ctx, const nlohmann::ordered_json& rec) {
  if (ctx.format == output_format::json) {
    *ctx.out << rec.dump(2) << '\n';
    return;
  }
  std::ostringstream head, row;
  row << std::setprecision(17);
  bool first = true;
  for (const auto& [k, v] : rec.items()) {
    if (!first) {
      head << ',';
      row << ',';
    }
    first = false;
    head << k;
    if (v.is_string()) {
      row << v.get<std::string>();
    } else if (v.is_number_float()) {
      row << v.get<double>();
    } else {
      row << v.dump();
    }
  }
  *ctx.out << head.str() << '\n' << row.str() << '\n';
}

/// Several records with the same keys: a json array or a csv table.
inline void emit_table(const context& ctx, const std::vector<nlohmann::ordered_json>& rows) {
  if (ctx.format == output_format::json) {
    *ctx.out << nlohmann::ordered_json(rows).dump(2) << '\n';
    return;
  }
  if (rows.empty()) return;
  std::ostringstream text;
  text << std::setprecision(17);
  bool first = true;
  for (const auto& [k, v] : rows.front().items()) {
    text << (first ? "" : ",") << k;
    first = false;
  }
  text << '\n';
  for (const auto& rec : rows) {
    first = true;
    for (const auto& [k, v] : rec.items()) {
      text << (first ? "" : ",");
      first = false;
      if (v.is_string()) {
        text << v.get<std::string>();
      } else if (v.is_number_float()) {
        text << v.get<double>();
      } else {
        text << v.dump();
      }
    }
    text << '\n';
  }
  *ctx.out << text.str();
}

// ---------------------------------------------------------------------------
// Subcommand options

struct gen_options {
  std::uint64_t k = 8;
  std::size_t n = 1000;
  std::size_t d = 512;
  double eta = 0.0;
  double rho = 0.0;
  std::string centers = "orthonormal";
  std::string out = "stream.mxs";
};

struct sketch_options {
  std::string input;
  std::size_t m = 4096;
  std::size_t d = 0;
  bool on_the_fly = false;
  std::string out = "sketch.mxsk";
};

struct merge_options {
  std::vector<std::string> inputs;
  std::string out = "merged.mxsk";
};

struct estimate_options {
  std::string sketch;
  std::uint64_t n = 0;
  double eps = 0.5;
  double delta = 0.1;
  double rho = 0.0;
  double eta = 0.0;
  estimator_constants constants{};
  std::string grid_out;
  std::string grid_in;
};

struct calibrate_options {
  std::string dir = ".";
  std::string labels;
  std::string kind = "isotonic";
  double eps = 0.5;
  std::size_t m = 4096;
  std::string out = "readout.json";
};

struct predict_options {
  std::string readout;
  std::vector<std::string> inputs;
};

struct verify_options {
  std::string check;
  std::uint64_t k = 8;
  double rho = 0.0;
  double eta = 1e-4;
  std::size_t n = 1000;
  std::size_t d = 512;
  double eps = 0.5;
  std::size_t m = 1024;
  std::uint64_t trials = 0;
  std::string input;
};

struct experiment_options {
  experiment_config config{};
  std::string centers = "orthonormal";
  std::string out;
};

inline const std::vector<std::string>& verify_checks() {
  static const std::vector<std::string> names{"expected-max", "slepian", "perturbation", "gap", "concentration"};
  return names;
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_gen(context& ctx, const gen_options& o) {
  cluster_spec spec{.k_star = o.k, .d = o.d, .eta = o.eta, .rho = o.rho, .centers = parse_center_mode(o.centers)};
  const auto seed = ctx.seed_or_draw();
  const auto s = generate_stream(spec, o.n, seed);
  {
    auto f = open_output(o.out);
    if (ends_with(o.out, ".csv")) {
      write_csv_stream(f, s.vectors, s.d());
    } else {
      write_binary_stream(f, s.vectors, s.d());
    }
    if (!f.flush()) throw io_error("failed writing '" + o.out + "'");
  }
  {
    auto f = open_output(o.out + ".truth.csv");
    write_truth_csv(f, s);
    if (!f.flush()) throw io_error("failed writing '" + o.out + ".truth.csv'");
  }
  const auto header = truth_header(s);
  {
    auto f = open_output(o.out + ".truth.json");
    f << header.dump(2) << '\n';
    if (!f.flush()) throw io_error("failed writing '" + o.out + ".truth.json'");
  }
  if (!ctx.quiet) {
    const auto rep = validate_clusterable(s);
    emit_record(ctx, {{"path", o.out},
                      {"k_star", o.k},
                      {"n", s.n()},
                      {"d", s.d()},
                      {"centers", to_string(spec.centers)},
                      {"seed", seed},
                      {"rho_hat", rep.rho_hat},
                      {"eta_hat", rep.eta_hat},
                      {"clusterable", rep.pass}});
  }
  return exit_code::ok;
}

inline int cmd_sketch(context& ctx, const sketch_options& o) {
  const auto seed = ctx.seed_or_draw();
  const auto res = sketch_file(o.input, o.m, seed,
                               o.on_the_fly ? projection_storage::on_the_fly : projection_storage::materialized, o.d);
  write_file_bytes(o.out, serialize(res.state));
  if (!ctx.quiet) {
    emit_record(ctx, {{"path", o.out},
                      {"items", res.state.items_seen()},
                      {"m", res.state.m()},
                      {"d", res.state.d()},
                      {"seed", res.state.seed()},
                      {"state_bytes", res.state.state_bytes()}});
  }
  return exit_code::ok;
}

inline int cmd_merge(context& ctx, const merge_options& o) {
  if (o.inputs.empty()) throw usage_error("merge needs at least one input sketch");
  auto acc = load_sketch(o.inputs.front());
  for (std::size_t i = 1; i < o.inputs.size(); ++i) acc = merge(acc, load_sketch(o.inputs[i]));
  write_file_bytes(o.out, serialize(acc));
  if (!ctx.quiet) {
    emit_record(ctx, {{"path", o.out}, {"inputs", o.inputs.size()}, {"items", acc.items_seen()}, {"m", acc.m()}});
  }
  return exit_code::ok;
}

inline int cmd_estimate(context& ctx, const estimate_options& o) {
  const auto state = load_sketch(o.sketch);
  estimator_params p{.n = o.n != 0 ? o.n : std::max<std::uint64_t>(2, state.items_seen()),
                     .eps = o.eps,
                     .delta = o.delta,
                     .rho = o.rho,
                     .eta = o.eta,
                     .m = state.m()};
  p.validate();
  std::optional<threshold_grid> grid;
  if (!o.grid_in.empty()) {
    std::ifstream in(o.grid_in);
    if (!in) throw io_error("cannot open '" + o.grid_in + "' for reading");
    grid.emplace(threshold_grid::read_csv(in, p));
  } else {
    grid.emplace(build_grid(p, o.constants));
  }
  for (const auto& w : grid->warnings()) ctx.note("warning: " + w);
  const auto need = required_m(p.n, p.eps, p.delta, o.constants.c_m);
  if (state.m() < need) {
    ctx.note("warning: m=" + std::to_string(state.m()) + " is below the required " + std::to_string(need) +
             " for the stated (eps, delta)");
  }
  if (!o.grid_out.empty()) {
    auto f = open_output(o.grid_out);
    grid->write_csv(f);
    if (!f.flush()) throw io_error("failed writing '" + o.grid_out + "'");
  }
  const double s = statistic(state);
  const auto res = estimate(s, *grid);
  emit_record(ctx, {{"k_hat", res.k_hat},
                    {"fired", res.fired},
                    {"fallback", res.fallback},
                    {"S", s},
                    {"n", p.n},
                    {"m", state.m()},
                    {"required_m", need}});
  return exit_code::ok;
}

struct label_row {
  std::string file;
  std::uint64_t k = 0;
};

[[nodiscard]] inline std::vector<label_row> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  std::vector<label_row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw format_error(path + ": line " + std::to_string(lineno) + " is not 'file,k'");
    const auto file = line.substr(0, comma);
    const auto kstr = line.substr(comma + 1);
    std::uint64_t k = 0;
    const auto [ptr, ec] = std::from_chars(kstr.data(), kstr.data() + kstr.size(), k);
    if (ec != std::errc{} || ptr != kstr.data() + kstr.size() || k == 0) {
      if (lineno == 1) continue; // header
      throw format_error(path + ": line " + std::to_string(lineno) + " has an invalid count '" + kstr + "'");
    }
    rows.push_back({file, k});
  }
  if (rows.empty()) throw format_error(path + ": no labeled inputs");
  return rows;
}

inline int cmd_calibrate(context& ctx, const calibrate_options& o) {
  const auto kind = parse_readout_kind(o.kind);
  const auto labels = read_labels(o.labels);
  std::optional<std::uint64_t> seed = ctx.seed;
  std::optional<std::uint64_t> fingerprint;
  std::size_t m = 0, d = 0;
  std::vector<calibration_sample> samples;
  for (const auto& row : labels) {
    const auto path = (std::filesystem::path(o.dir) / row.file).string();
    sketch_state state = [&] {
      if (has_sketch_magic(path)) return load_sketch(path);
      if (!seed) seed = ctx.seed_or_draw();
      return sketch_file(path, o.m, *seed).state;
    }();
    if (fingerprint && state.fingerprint() != *fingerprint) {
      throw binding_error(path + ": bound to a different projection set than the other calibration inputs");
    }
    fingerprint = state.fingerprint();
    seed = state.seed();
    m = state.m();
    d = state.d();
    samples.push_back({statistic(state), row.k});
  }
  const auto fn = kind == readout_kind::isotonic ? pav_fit(samples) : learn_thresholds(samples, o.eps);
  const auto j = to_json(fn, {{"fingerprint", *fingerprint},
                              {"projection_seed", *seed},
                              {"m", m},
                              {"d", d},
                              {"samples", samples.size()}});
  // Isotonic fits carry eps only as metadata.
  auto f = open_output(o.out);
  f << j.dump(2) << '\n';
  if (!f.flush()) throw io_error("failed writing '" + o.out + "'");
  if (!ctx.quiet) {
    emit_record(ctx, {{"path", o.out},
                      {"kind", to_string(kind)},
                      {"samples", samples.size()},
                      {"breakpoints", fn.breakpoints().size()}});
  }
  return exit_code::ok;
}

inline int cmd_predict(context& ctx, const predict_options& o) {
  if (o.inputs.empty()) throw usage_error("predict needs at least one sketch");
  nlohmann::json j;
  {
    std::ifstream in(o.readout);
    if (!in) throw io_error("cannot open '" + o.readout + "' for reading");
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw format_error(o.readout + ": " + e.what());
    }
  }
  const auto fn = readout_from_json(j);
  if (!j.contains("fingerprint")) throw format_error(o.readout + ": readout has no projection fingerprint");
  const auto fingerprint = j.at("fingerprint").get<std::uint64_t>();
  std::vector<nlohmann::ordered_json> rows;
  for (const auto& path : o.inputs) {
    sketch_state state = [&] {
      if (has_sketch_magic(path)) return load_sketch(path);
      return sketch_file(path, j.at("m").get<std::size_t>(), j.at("projection_seed").get<std::uint64_t>()).state;
    }();
    if (state.fingerprint() != fingerprint) {
      throw binding_error(path + ": sketch projection fingerprint does not match the readout");
    }
    const double s = statistic(state);
    rows.push_back({{"input", path}, {"S", s}, {"k_hat", apply(fn, s)}});
  }
  emit_table(ctx, rows);
  return exit_code::ok;
}

[[nodiscard]] inline generated_stream verify_stream(const verify_options& o, std::uint64_t seed) {
  cluster_spec spec{.k_star = o.k, .d = o.d, .eta = o.eta, .rho = o.rho};
  return generate_stream(spec, o.n, derive_key(seed, 0x73747265ULL));
}

[[nodiscard]] inline std::vector<double> verify_rows(const verify_options& o, std::uint64_t seed, std::size_t& d) {
  if (!o.input.empty()) {
    std::ifstream in(o.input, std::ios::binary);
    if (!in) throw io_error("cannot open '" + o.input + "' for reading");
    auto data = read_stream(in);
    d = data.d;
    return std::move(data.rows);
  }
  auto s = verify_stream(o, seed);
  d = s.d();
  return std::move(s.vectors);
}

inline int cmd_verify(context& ctx, const verify_options& o) {
  const auto& names = verify_checks();
  if (std::find(names.begin(), names.end(), o.check) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw usage_error("unknown check '" + o.check + "'; available checks: " + list);
  }
  mc_report rep;
  if (o.check == "gap") {
    rep = check_gap(o.k, o.eps);
  } else {
    const auto seed = ctx.seed_or_draw();
    if (o.check == "slepian") {
      rep = check_slepian(o.k, o.rho, o.trials ? o.trials : 1000000, seed);
    } else if (o.check == "perturbation") {
      rep = check_perturbation(verify_stream(o, seed), o.trials ? o.trials : 100000, seed);
    } else if (o.check == "expected-max") {
      std::size_t d = 0;
      const auto rows = verify_rows(o, seed, d);
      std::optional<double> reference;
      if (o.input.empty() && o.eta == 0.0 && o.rho == 0.0) reference = expected_max_iid(o.k);
      rep = mc_expected_max(rows, d, o.trials ? o.trials : 100000, seed, reference);
    } else {
      std::size_t d = 0;
      const auto rows = verify_rows(o, seed, d);
      rep = check_concentration(rows, d, o.m, o.trials ? o.trials : 500, seed);
    }
  }
  const auto j = to_json(rep);
  if (ctx.format == output_format::json) {
    *ctx.out << j.dump(2) << '\n';
  } else {
    emit_record(ctx, {{"name", rep.name},
                      {"estimate", rep.estimate},
                      {"stderr", rep.stderr_},
                      {"bound_lo", rep.bound_lo},
                      {"bound_hi", rep.bound_hi},
                      {"margin", rep.margin()},
                      {"pass", rep.pass},
                      {"trials", rep.trials},
                      {"seed", rep.seed}});
  }
  return rep.pass ? exit_code::ok : exit_code::check_failed;
}

inline int cmd_experiment(context& ctx, experiment_options o) {
  if (o.config.trials == 0) throw usage_error("experiment needs --trials >= 1");
  o.config.centers = parse_center_mode(o.centers);
  o.config.seed = ctx.seed_or_draw();
  const auto rows = run_experiment(o.config);
  std::ostringstream text;
  if (ctx.format == output_format::json) {
    text << experiment_json(rows).dump(2) << '\n';
  } else {
    write_experiment_csv(text, rows);
  }
  if (o.out.empty()) {
    *ctx.out << text.str();
  } else {
    auto f = open_output(o.out);
    f << text.str();
    if (!f.flush()) throw io_error("failed writing '" + o.out + "'");
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------------------
// Parsing and dispatch

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"maxsketch: distinct-object counting over streams of unit embeddings"};
  app.require_subcommand(1);
  app.fallthrough();

  context ctx;
  ctx.out = &out;
  ctx.err = &err;
  std::uint64_t seed = 0;
  std::string format = "csv";
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed; drawn and printed when omitted");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--quiet,-q", ctx.quiet, "suppress summaries and warnings");

  gen_options gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a clusterable stream with ground truth");
  gen_cmd->add_option("--k", gen.k, "number of latent centers")->required();
  gen_cmd->add_option("--n", gen.n, "stream length");
  gen_cmd->add_option("--d", gen.d, "dimension");
  gen_cmd->add_option("--eta", gen.eta, "within-cluster slack");
  gen_cmd->add_option("--rho", gen.rho, "center correlation bound (rejection mode)");
  gen_cmd->add_option("--centers", gen.centers, "orthonormal or rejection")
      ->check(CLI::IsMember({"orthonormal", "rejection"}));
  gen_cmd->add_option("--out,-o", gen.out, "stream path (.csv for text)");

  sketch_options sk;
  auto* sketch_cmd = app.add_subcommand("sketch", "sketch a stream file in one pass");
  sketch_cmd->add_option("--input,-i", sk.input, "stream file (MXS1 or csv)")->required();
  sketch_cmd->add_option("--m", sk.m, "number of projections");
  sketch_cmd->add_option("--d", sk.d, "dimension for an empty input");
  sketch_cmd->add_flag("--on-the-fly", sk.on_the_fly, "regenerate projection rows instead of storing them");
  sketch_cmd->add_option("--out,-o", sk.out, "sketch path");

  merge_options mg;
  auto* merge_cmd = app.add_subcommand("merge", "merge sketches bound to the same projections");
  merge_cmd->add_option("inputs", mg.inputs, "sketch files")->required();
  merge_cmd->add_option("--out,-o", mg.out, "merged sketch path");

  estimate_options est;
  auto* est_cmd = app.add_subcommand("estimate", "estimate the distinct count from a sketch");
  est_cmd->add_option("--sketch,-s", est.sketch, "sketch file")->required();
  est_cmd->add_option("--n", est.n, "bound on the stream length (default: items seen)");
  est_cmd->add_option("--eps", est.eps);
  est_cmd->add_option("--delta", est.delta);
  est_cmd->add_option("--rho", est.rho);
  est_cmd->add_option("--eta", est.eta);
  est_cmd->add_option("--c-rho", est.constants.c_rho);
  est_cmd->add_option("--c-eta", est.constants.c_eta);
  est_cmd->add_option("--c-m", est.constants.c_m);
  est_cmd->add_option("--grid-out", est.grid_out, "write the threshold grid as csv");
  est_cmd->add_option("--grid", est.grid_in, "use a threshold grid csv instead of building one");

  calibrate_options cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "fit a monotone readout from labeled streams or sketches");
  cal_cmd->add_option("--dir", cal.dir, "directory the label paths are relative to");
  cal_cmd->add_option("--labels", cal.labels, "csv of file,k")->required();
  cal_cmd->add_option("--kind", cal.kind)->check(CLI::IsMember({"isotonic", "threshold-grid"}));
  cal_cmd->add_option("--eps", cal.eps);
  cal_cmd->add_option("--m", cal.m, "projections used for stream inputs");
  cal_cmd->add_option("--out,-o", cal.out, "readout json path");

  predict_options pred;
  auto* pred_cmd = app.add_subcommand("predict", "apply a fitted readout to sketches");
  pred_cmd->add_option("--readout,-r", pred.readout, "readout json")->required();
  pred_cmd->add_option("inputs", pred.inputs, "sketch or stream files")->required();

  verify_options ver;
  auto* ver_cmd = app.add_subcommand("verify", "Monte Carlo check of a supporting bound");
  ver_cmd->add_option("check", ver.check, "expected-max, slepian, perturbation, gap or concentration")->required();
  ver_cmd->add_option("--k", ver.k);
  ver_cmd->add_option("--rho", ver.rho);
  ver_cmd->add_option("--eta", ver.eta);
  ver_cmd->add_option("--n", ver.n);
  ver_cmd->add_option("--d", ver.d);
  ver_cmd->add_option("--eps", ver.eps);
  ver_cmd->add_option("--m", ver.m);
  ver_cmd->add_option("--trials", ver.trials, "trials, or projection redraws for concentration");
  ver_cmd->add_option("--input,-i", ver.input, "stream file instead of a generated one");

  experiment_options exp;
  auto* exp_cmd = app.add_subcommand("experiment", "end-to-end accuracy sweep over k");
  exp_cmd->add_option("--k-range", exp.config.ks, "comma-separated k values")->delimiter(',');
  exp_cmd->add_option("--trials", exp.config.trials);
  exp_cmd->add_option("--n", exp.config.n);
  exp_cmd->add_option("--d", exp.config.d);
  exp_cmd->add_option("--eta", exp.config.eta);
  exp_cmd->add_option("--rho", exp.config.rho);
  exp_cmd->add_option("--centers", exp.centers)->check(CLI::IsMember({"orthonormal", "rejection"}));
  exp_cmd->add_option("--eps", exp.config.eps);
  exp_cmd->add_option("--delta", exp.config.delta);
  exp_cmd->add_option("--m", exp.config.m);
  exp_cmd->add_option("--out,-o", exp.out, "results path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::usage;
  }
  if (*seed_opt) ctx.seed = seed;
  ctx.format = format == "json" ? output_format::json : output_format::csv;

  try {
    if (gen_cmd->parsed()) return cmd_gen(ctx, gen);
    if (sketch_cmd->parsed()) return cmd_sketch(ctx, sk);
    if (merge_cmd->parsed()) return cmd_merge(ctx, mg);
    if (est_cmd->parsed()) return cmd_estimate(ctx, est);
    if (cal_cmd->parsed()) return cmd_calibrate(ctx, cal);
    if (pred_cmd->parsed()) return cmd_predict(ctx, pred);
    if (ver_cmd->parsed()) return cmd_verify(ctx, ver);
    if (exp_cmd->parsed()) return cmd_experiment(ctx, exp);
    throw usage_error("no subcommand given");
  } catch (const usage_error& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_code::usage;
  } catch (const grid_soundness_error& e) {
    err << "grid soundness failure: " << e.what() << '\n';
    return exit_code::soundness;
  } catch (const format_error& e) {
    err << "format error: " << e.what() << '\n';
    return exit_code::format;
  } catch (const io_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return exit_code::format;
  } catch (const invalid_input& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_code::format;
  } catch (const generation_failure& e) {
    err << "generation failed: " << e.what() << " (best achievable rho " << e.achievable_rho() << ")\n";
    return exit_code::usage;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::usage;
  }
}

} // namespace maxsketch::cli
