// Experiment harness: exact-recovery tables, phantom reconstructions and
// certificate reports. Every run writes a manifest that can be fed back in
// with --config to reproduce it.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "lpinr/experiments.hpp"

namespace fs = std::filesystem;
using namespace lpinr;

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string profile = "desk";
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "key=value config file with [section] headers")->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "output directory")->capture_default_str();
  app->add_option("--seed", o.seed, "master seed (overrides the config)");
  app->add_option("--workers", o.workers, "concurrent trials (overrides the config)")->check(CLI::PositiveNumber);
  app->add_option("--profile", o.profile, "default profile")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
}

KeyValueConfig load_config(const CommonOptions& o) {
  if (o.config.empty()) return {};
  return KeyValueConfig::load(o.config);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void manifest_header(std::ostream& os, const std::string& command, const CommonOptions& o, int argc, char** argv) {
  os << "# lpinr manifest\n# command: " << command << "\n# version: " << LPINR_VERSION << "\n# profile: " << o.profile
     << "\n# argv:";
  for (int i = 0; i < argc; ++i) os << ' ' << argv[i];
  os << "\n# Replay with: lpinr " << command << " --config <this file>\n";
}

int cmd_exact_recovery(const CommonOptions& o, int argc, char** argv) {
  RecoveryConfig cfg = RecoveryConfig::defaults(parse_profile(o.profile));
  const KeyValueConfig kv = load_config(o);
  cfg.apply(kv);
  kv.reject_unused();
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;

  fs::create_directories(o.out);
  std::cerr << "exact-recovery: " << cfg.Ks.size() * cfg.Ws.size() * static_cast<std::size_t>(cfg.trials)
            << " trials, reg=" << to_string(cfg.reg) << ", workers=" << cfg.workers << "\n";
  const auto trials = run_exact_recovery(cfg, [](const RecoveryTrial& t) {
    std::cerr << "  K=" << t.K << " W=" << t.W << " trial=" << t.trial << (t.success ? " success" : " fail")
              << " best_mse=" << std::setprecision(3) << t.best_mse << " (" << std::fixed << std::setprecision(1)
              << t.seconds << "s)" << std::defaultfloat << "\n";
  });

  {
    auto f = open_out(fs::path(o.out) / "recovery_table.csv");
    write_recovery_table_csv(f, cfg, trials);
  }
  {
    auto f = open_out(fs::path(o.out) / "trials.csv");
    write_trials_csv(f, trials);
  }
  auto m = open_out(fs::path(o.out) / "manifest.txt");
  manifest_header(m, "exact-recovery", o, argc, argv);
  cfg.write(m);
  m << std::setprecision(17);
  for (const auto& t : trials)
    m << "# outcome K=" << t.K << " W=" << t.W << " trial=" << t.trial << " seed=" << t.seed
      << " success=" << t.success << " best_mse=" << t.best_mse << " iterations=" << t.iterations << "\n";
  write_recovery_table_csv(std::cout, cfg, trials);
  return 0;
}

int cmd_phantom(const CommonOptions& o, int argc, char** argv) {
  PhantomConfig cfg = PhantomConfig::defaults(parse_profile(o.profile));
  const KeyValueConfig kv = load_config(o);
  cfg.apply(kv);
  kv.reject_unused();
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;

  fs::create_directories(o.out);
  std::cerr << "phantom: " << cfg.phantom << ", K=" << cfg.K << ", K0=" << cfg.K0 << ", width=" << cfg.width << "\n";
  const PhantomResult res = run_phantom(cfg, [](const PhantomRun& r) {
    std::cerr << "  " << to_string(r.reg) << " lambda=" << r.lambda << " mse=" << std::setprecision(4) << r.mse << " ("
              << std::fixed << std::setprecision(1) << r.seconds << "s)" << std::defaultfloat << "\n";
  });
  {
    auto f = open_out(fs::path(o.out) / "metrics.csv");
    write_phantom_metrics_csv(f, res);
  }
  render_phantom_images(cfg, res, (fs::path(o.out) / "images").string());
  auto m = open_out(fs::path(o.out) / "manifest.txt");
  manifest_header(m, "phantom", o, argc, argv);
  cfg.write(m);
  m << std::setprecision(17) << "# outcome zero_fill mse=" << res.zero_fill_mse << "\n";
  for (const auto& r : res.runs)
    m << "# outcome reg=" << to_string(r.reg) << " lambda=" << r.lambda << " mse=" << r.mse << "\n";
  write_phantom_metrics_csv(std::cout, res);
  return 0;
}

int cmd_certify(const CommonOptions& o, int argc, char** argv) {
  CertifyConfig cfg = CertifyConfig::defaults(parse_profile(o.profile));
  const KeyValueConfig kv = load_config(o);
  cfg.apply(kv);
  kv.reject_unused();
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;

  fs::create_directories(o.out);
  const auto outcomes = run_certify(cfg);
  {
    auto f = open_out(fs::path(o.out) / "certify.csv");
    write_certify_csv(f, outcomes);
  }
  auto summary = open_out(fs::path(o.out) / "summary.txt");
  for (const auto& c : outcomes) {
    summary << "teacher " << c.index << " (seed " << c.seed << ", a=" << c.amplitude << ")\n";
    c.report.write_summary(summary);
    summary << "duality_gap=" << c.gap << "\ncertified=" << (c.certified() ? "yes" : "no") << "\n";
    if (!c.note.empty()) summary << "note: " << c.note << "\n";
    summary << "\n";
    auto f = open_out(fs::path(o.out) / ("feasibility_" + std::to_string(c.index) + ".csv"));
    c.report.write_csv(f);
  }
  auto m = open_out(fs::path(o.out) / "manifest.txt");
  manifest_header(m, "certify", o, argc, argv);
  cfg.write(m);
  m << std::setprecision(17);
  for (const auto& c : outcomes)
    m << "# outcome teacher=" << c.index << " seed=" << c.seed << " max_ratio=" << c.report.max_ratio
      << " gap=" << c.gap << " certified=" << c.certified() << "\n";
  write_certify_csv(std::cout, outcomes);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates many short-lived matrices; keep them off mmap.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Experiments for shallow ReLU INRs with Fourier features"};
  app.require_subcommand(1);
  CommonOptions rec, ph, cert;
  add_common(app.add_subcommand("exact-recovery", "exact-recovery probability table"), rec);
  add_common(app.add_subcommand("phantom", "phantom reconstruction vs zero-fill"), ph);
  add_common(app.add_subcommand("certify", "width-1 dual certificate report"), cert);
  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("exact-recovery")) return cmd_exact_recovery(rec, argc, argv);
    if (app.got_subcommand("phantom")) return cmd_phantom(ph, argc, argv);
    if (app.got_subcommand("certify")) return cmd_certify(cert, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
