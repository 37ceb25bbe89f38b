#include "flashpuf/commands.hpp"

#include "flashpuf/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

namespace flashpuf {

namespace {

std::string cells(std::uint32_t v) { return v == kNever ? "NEVER" : std::to_string(v); }

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string precise(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RenderedFile {
  std::string name;
  std::string bytes;
};

std::vector<RenderedFile> render_run(const ExperimentConfig& cfg, const RunArtifacts& run) {
  const RunOutputs names;
  std::vector<RenderedFile> files;
  {
    std::ostringstream s;
    write_manifest(s, cfg, names);
    files.push_back({names.manifest, s.str()});
  }
  {
    std::ostringstream s;
    run.trace.write(s);
    files.push_back({names.trace, s.str()});
  }
  {
    std::ostringstream s(std::ios::binary);
    write_signature(s, run.signature);
    files.push_back({names.signature, s.str()});
  }
  {
    std::ostringstream s(std::ios::binary);
    write_stable_map(s, run.stable);
    files.push_back({names.stable, s.str()});
  }
  {
    std::ostringstream s;
    const auto edges = default_bucket_edges(run.signature.total_cycles);
    write_heatmap_svg(s, heatmap(run.signature, edges));
    files.push_back({names.heatmap, s.str()});
  }
  return files;
}

void print_run_summary(std::ostream& out, const ExperimentConfig& cfg, const RunArtifacts& run) {
  out << "technique=" << to_string(cfg.technique) << '\n'
      << "block=" << run.signature.block << '\n'
      << "page=" << run.signature.page << '\n'
      << "total_cycles=" << run.signature.total_cycles << '\n'
      << "stable_bits=" << run.stable.stable.count() << '\n'
      << "first_flip=" << cells(run.signature.first_flip()) << '\n';
  const auto rows = run.trace.summaries();
  if (rows.empty()) return;
  out << "\naggressor  self        pred        succ\n";
  for (const auto& r : rows) {
    char line[96];
    std::snprintf(line, sizeof line, "%-10u %-11s %-11s %s\n", r.aggressor_page, cells(r.self).c_str(),
                  cells(r.pred).c_str(), cells(r.succ).c_str());
    out << line;
  }
}

}  // namespace

Signature latency_signature(std::span<const double> latencies_us, std::uint32_t block, std::uint32_t page) {
  if (latencies_us.size() != kPageBytes) throw AnalysisError("latency vector must cover one page");
  Signature sig;
  sig.block = block;
  sig.page = page;
  sig.technique = Technique::ProgramLatency;
  sig.pattern = 0x00;
  sig.total_cycles = static_cast<std::uint32_t>(kPageBytes);
  for (std::size_t byte = 0; byte < kPageBytes; ++byte) {
    const double ns = std::round(latencies_us[byte] * 1000.0);
    const auto v = static_cast<std::uint32_t>(std::clamp(ns, 0.0, static_cast<double>(kNever - 1)));
    for (std::size_t bit = 0; bit < 8; ++bit) sig.bits[byte * 8 + bit] = v;
  }
  return sig;
}

RunArtifacts execute_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ChipGeometry geometry;
  geometry.blocks_per_chip = cfg.blocks_per_chip;
  FlashChip chip(cfg.chip_seed, geometry, cfg.params);
  SimulatedDevice dev(chip);

  RunArtifacts run;
  const std::uint32_t report = cfg.resolved_report_page();
  switch (cfg.technique) {
    case Technique::SamePage: {
      if (report != cfg.target_page) throw ConfigError("same_page reports the target page only");
      auto ex = extract_same_page(dev, cfg, &run.trace);
      run.signature = std::move(ex.signature);
      break;
    }
    case Technique::AdjacentPage: {
      auto ex = extract_adjacent(dev, cfg, &run.trace);
      if (report == cfg.target_page - 1) {
        run.signature = std::move(ex.predecessor.signature);
      } else if (report == cfg.target_page + 1) {
        run.signature = std::move(ex.successor.signature);
      } else {
        throw ConfigError("adjacent_page reports target_page - 1 or target_page + 1");
      }
      break;
    }
    case Technique::MultiPageSweep: {
      SweepOptions opt;
      opt.block = cfg.block;
      opt.iterations_per_page = cfg.iterations;
      opt.pattern = cfg.pattern;
      opt.pre_program_all = cfg.pre_program_all;
      opt.first_page = cfg.first_page;
      opt.last_page = cfg.last_page;
      opt.aggregate_page = report;
      auto result = extract_multi_page_sweep(dev, opt, &run.trace);
      run.signature = std::move(*result.aggregate);
      break;
    }
    case Technique::ReadDisturb: {
      auto sigs = extract_read_disturb(dev, cfg, &run.trace);
      run.signature = std::move(sigs.at(report));
      break;
    }
    case Technique::ProgramLatency: {
      if (dev.erase_block(cfg.block) & kStatusFail) throw DeviceError("erase reported failure status");
      const auto lat = extract_program_latency(dev, cfg.block, cfg.target_page, &run.trace);
      run.signature = latency_signature(lat, cfg.block, cfg.target_page);
      break;
    }
  }
  run.stable = StableBitMap::from_signature(run.signature);
  return run;
}

void write_run_directory(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunArtifacts& run) {
  std::filesystem::create_directories(dir);
  for (const auto& file : render_run(cfg, run)) {
    std::ofstream out(dir / file.name, std::ios::binary | std::ios::trunc);
    out.write(file.bytes.data(), static_cast<std::streamsize>(file.bytes.size()));
    if (!out) throw FormatError("cannot write " + (dir / file.name).string());
  }
}

FitReport fit_trace(const TraceLog& trace) {
  const auto rows = trace.summaries();
  if (rows.size() < 2) throw AnalysisError("fit needs at least two SUMMARY records");
  std::vector<std::pair<double, double>> intra;
  std::vector<std::pair<double, double>> pair;
  for (const auto& r : rows) {
    const double page = r.aggressor_page;
    if (r.self != kNever) intra.emplace_back(page, r.self);
    const std::uint32_t partner = r.aggressor_page % 2 == 0 ? r.succ : r.pred;
    if (partner != kNever) pair.emplace_back(page, partner);
  }
  if (intra.size() < 2) throw AnalysisError("fewer than two intra-page first flips in trace");
  if (pair.size() < 2) throw AnalysisError("fewer than two pair-partner first flips in trace");
  FitReport report;
  report.intra = fit_exponential(intra);
  report.pair = fit_exponential(pair);
  report.intra_points = intra.size();
  report.pair_points = pair.size();
  return report;
}

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir, const RunOptions& options,
            std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
    if (options.chip_seed) cfg.chip_seed = *options.chip_seed;
    if (options.experiment_seed) cfg.experiment_seed = *options.experiment_seed;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  RunArtifacts run;
  try {
    run = execute_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const ProtocolViolation& e) {
    err << "protocol violation: " << e.what() << '\n';
    return exit_code::kDevice;
  } catch (const DeviceError& e) {
    err << "device error: " << e.what() << '\n';
    return exit_code::kDevice;
  }

  try {
    write_run_directory(out_dir, cfg, run);
  } catch (const std::exception& e) {
    err << "cannot write outputs: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  if (!options.quiet) print_run_summary(out, cfg, run);
  return exit_code::kOk;
}

int cmd_compare(const std::filesystem::path& a, const std::filesystem::path& b, std::ostream& out, std::ostream& err) {
  Signature sa;
  Signature sb;
  try {
    sa = load_signature(a);
    sb = load_signature(b);
  } catch (const FormatError& e) {
    err << "cannot read signature: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  if (sa.technique != sb.technique || sa.bits.size() != sb.bits.size()) {
    err << "signatures differ in shape: " << to_string(sa.technique) << " vs " << to_string(sb.technique) << '\n';
    return exit_code::kUsage;
  }

  const auto ma = StableBitMap::from_signature(sa);
  const auto mb = StableBitMap::from_signature(sb);
  std::string r;
  try {
    r = fixed(pearson(sa, sb));
  } catch (const UndefinedCorrelation&) {
    r = "undefined";
  }
  const double d = fractional_hamming(ma, mb);
  const bool match = signatures_match(ma, mb);

  out << "pearson=" << r << '\n'
      << "hamming=" << fixed(d) << '\n'
      << "stable_a=" << ma.stable.count() << '\n'
      << "stable_b=" << mb.stable.count() << '\n'
      << "verdict=" << (match ? "match" : "distinct") << '\n';
  out << "\nmetric             value\n"
      << "Pearson r          " << r << '\n'
      << "Hamming fraction   " << fixed(d) << '\n'
      << "stable bits (A)    " << ma.stable.count() << " / " << kPageBits << '\n'
      << "stable bits (B)    " << mb.stable.count() << " / " << kPageBits << '\n'
      << "verdict            " << (match ? "match" : "distinct") << " (threshold " << kMatchThreshold << ")\n";
  return exit_code::kOk;
}

int cmd_fit(const std::filesystem::path& trace_path, std::ostream& out, std::ostream& err) {
  TraceLog trace;
  try {
    std::ifstream in(trace_path);
    if (!in) {
      err << "cannot read trace " << trace_path.string() << '\n';
      return exit_code::kUsage;
    }
    trace = TraceLog::read(in);
  } catch (const TraceParseError& e) {
    err << "trace parse error: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  FitReport fit;
  try {
    fit = fit_trace(trace);
  } catch (const AnalysisError& e) {
    err << "insufficient data: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  out << "intra_scale=" << precise(fit.intra.scale) << '\n'
      << "intra_rate=" << precise(fit.intra.rate) << '\n'
      << "intra_residual=" << precise(fit.intra.residual) << '\n'
      << "intra_points=" << fit.intra_points << '\n'
      << "pair_scale=" << precise(fit.pair.scale) << '\n'
      << "pair_rate=" << precise(fit.pair.rate) << '\n'
      << "pair_residual=" << precise(fit.pair.residual) << '\n'
      << "pair_points=" << fit.pair_points << '\n';
  out << "\npage  intra_pred  pair_pred\n";
  for (std::uint32_t p = 0; p < kPagesPerBlock; ++p) {
    char line[96];
    std::snprintf(line, sizeof line, "%-5u %-11.0f %.0f\n", p, predict_first_flip(fit.intra, p),
                  predict_first_flip(fit.pair, p));
    out << line;
  }
  return exit_code::kOk;
}

int cmd_plot(const std::filesystem::path& signature, std::span<const std::filesystem::path> outputs, std::ostream& out,
             std::ostream& err) {
  if (outputs.empty()) {
    err << "plot needs at least one .svg or .csv output\n";
    return exit_code::kUsage;
  }
  for (const auto& path : outputs) {
    if (path.extension() != ".svg" && path.extension() != ".csv") {
      err << "unsupported plot format: " << path.string() << '\n';
      return exit_code::kUsage;
    }
  }
  Signature sig;
  try {
    sig = load_signature(signature);
  } catch (const FormatError& e) {
    err << "cannot read signature: " << e.what() << '\n';
    return exit_code::kUsage;
  }
  const auto edges = default_bucket_edges(sig.total_cycles);
  const auto grid = heatmap(sig, edges);
  for (const auto& path : outputs) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
      err << "cannot write " << path.string() << '\n';
      return exit_code::kUsage;
    }
    if (path.extension() == ".svg") {
      write_heatmap_svg(file, grid);
    } else {
      write_heatmap_csv(file, grid);
    }
    if (!file) {
      err << "write failed: " << path.string() << '\n';
      return exit_code::kUsage;
    }
    out << "wrote " << path.string() << '\n';
  }
  return exit_code::kOk;
}

int cmd_replay(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(run_dir / RunOutputs{}.manifest);
  } catch (const ConfigError& e) {
    err << "manifest error: " << e.what() << '\n';
    return exit_code::kUsage;
  }

  RunArtifacts run;
  try {
    run = execute_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const ProtocolViolation& e) {
    err << "protocol violation: " << e.what() << '\n';
    return exit_code::kDevice;
  } catch (const DeviceError& e) {
    err << "device error: " << e.what() << '\n';
    return exit_code::kDevice;
  }

  int status = exit_code::kOk;
  for (const auto& file : render_run(cfg, run)) {
    std::ifstream in(run_dir / file.name, std::ios::binary);
    const std::string stored{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const bool same = in.good() || in.eof() ? stored == file.bytes : false;
    out << file.name << '=' << (same ? "identical" : "differs") << '\n';
    if (!same) status = exit_code::kMismatch;
  }
  out << "replay=" << (status == exit_code::kOk ? "identical" : "mismatch") << '\n';
  return status;
}

}  // namespace flashpuf
