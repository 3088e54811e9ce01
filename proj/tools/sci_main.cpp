// Command-line entry point: solve, fci, dedup-bench, gen-bench, tables, gen-fixture.
//
// Exit codes: 0 success, 1 other failure, 2 bad usage, 3 missing input file,
// 4 infeasible memory budget. Failures print one JSON line on stderr.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sci/distdedup.hpp"
#include "sci/excitation_tables.hpp"
#include "sci/fcidump.hpp"
#include "sci/fixtures.hpp"
#include "sci/genkernel.hpp"
#include "sci/memexec.hpp"
#include "sci/oracle.hpp"
#include "sci/parallel.hpp"
#include "sci/solver.hpp"

using json = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kMissingFile = 3, kInfeasible = 4 };

struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int fail(int code, const std::string& kind, const std::string& message) {
  json j{{"error", kind}, {"code", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

sci::Fcidump load(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw MissingFile("input file not found: " + path);
  return sci::read_fcidump(path);
}

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

json balance_json(const sci::dedup::BalanceMetrics& m, bool with_throughput) {
  json j{{"per_rank_counts", m.per_rank_counts},
         {"max_min_ratio", m.degenerate ? json(nullptr) : json(m.max_min_ratio)},
         {"degenerate", m.degenerate},
         {"cv", m.cv}};
  if (with_throughput) j["throughput_items_per_sec"] = m.throughput_items_per_sec;
  return j;
}

json system_json(const sci::Fcidump& f) {
  return {{"norb", f.space.n_spatial()},
          {"nelec", f.space.n_elec},
          {"ms2", f.space.ms2},
          {"spin_orbitals", f.space.m},
          {"hilbert_dimension", sci::hilbert_dimension(f.space).str()}};
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SolveArgs {
  std::string fcidump, report, csv, spill_dir;
  std::size_t topk = 16, samples = 64;
  double eps_gen = 0.0, budget_mb = 0.0, tol = 1e-8;
  int ranks = 1, max_iters = 50;
  bool no_overlap = false;
};

int run_solve(const SolveArgs& a) {
  const sci::Fcidump f = load(a.fcidump);
  sci::RunConfig rc;
  rc.topk = a.topk;
  rc.eps_gen = a.eps_gen;
  rc.ranks = a.ranks;
  rc.samples = a.samples;
  rc.max_iters = a.max_iters;
  rc.tol = a.tol;
  rc.spill_dir = a.spill_dir;
  rc.overlap = !a.no_overlap;
  rc.threads = sci::thread_limit();
  if (a.budget_mb > 0.0) rc.budget_bytes = static_cast<std::size_t>(a.budget_mb * 1024.0 * 1024.0);

  const sci::SciResult res = sci::sci_iterate(f.integrals, f.space, rc);

  json iters = json::array();
  for (const auto& r : res.reports) {
    iters.push_back({{"iteration", r.iteration},
                     {"energy", r.energy},
                     {"stage3_energy", r.stage3_energy},
                     {"space_size", r.space_size},
                     {"unique", r.unique},
                     {"generated", r.generated},
                     {"redundancy", r.redundancy},
                     {"delta", r.delta},
                     {"added", r.added},
                     {"reserved_bytes", r.reserved_bytes},
                     {"within_budget", r.reserved_bytes + r.peak_working_bytes <= rc.budget_bytes},
                     {"dedup_balance", balance_json(r.balance, false)}});
  }
  json report{{"schema", 1},
              {"command", "solve"},
              {"system", system_json(f)},
              {"config",
               {{"topk", a.topk},
                {"eps_gen", a.eps_gen},
                {"ranks", a.ranks},
                {"samples", a.samples},
                {"budget_mb", a.budget_mb},
                {"max_iters", a.max_iters},
                {"tol", std::isinf(a.tol) ? json("inf") : json(a.tol)},
                {"overlap", !a.no_overlap}}},
              {"initial_energy", res.initial_energy},
              {"iterations", iters},
              {"verdict",
               {{"converged", res.converged},
                {"reason", sci::to_string(res.reason)},
                {"iterations", res.reports.size()},
                {"energy", res.energy},
                {"space_size", res.space.size()}}}};
  emit(report, a.report);

  if (!a.csv.empty()) {
    std::ofstream csv(a.csv, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write '" + a.csv + "'");
    csv << "iteration,energy,space_size,unique,redundancy\n";
    for (const auto& r : res.reports) {
      csv << r.iteration << ',' << fmt17(r.energy) << ',' << r.space_size << ',' << r.unique << ','
          << fmt17(r.redundancy) << '\n';
    }
  }
  return kOk;
}

int run_fci(const std::string& path) {
  const sci::Fcidump f = load(path);
  const auto r = sci::oracle::fci_energy(f.integrals, f.space);
  std::cout << json{{"schema", 1}, {"command", "fci"}, {"energy", r.energy}, {"dimension", r.basis.size()},
                    {"system", system_json(f)}}
                   .dump(2)
            << '\n';
  return kOk;
}

int run_dedup_bench(int ranks, std::size_t samples, std::size_t keys, const std::string& dist,
                    std::uint64_t seed) {
  const auto d = sci::dedup::parse_distribution(dist);
  const auto all = sci::dedup::generate_keys(d, keys, seed);
  sci::dedup::DedupOptions o;
  o.samples = samples;
  const auto r = sci::dedup::run_distributed_dedup(sci::dedup::split_among_ranks(all, ranks), o);
  std::size_t unique = 0;
  for (const auto& s : r.slices) unique += s.size();
  json j = balance_json(r.metrics, true);
  j["ranks"] = ranks;
  j["samples"] = samples;
  j["keys"] = keys;
  j["distribution"] = dist;
  j["unique"] = unique;
  j["exchanged"] = r.exchanged_items;
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int run_gen_bench(const std::string& path, std::size_t sources, double eps, std::size_t chunk,
                  std::uint64_t seed) {
  const sci::Fcidump f = load(path);
  const auto tables = sci::build_tables(f.integrals, f.space);
  const auto basis_dim = sci::hilbert_dimension(f.space);
  // Sources: the reference, then random members of its sector.
  std::vector<sci::Configuration> src{sci::reference_config(f.space)};
  std::mt19937_64 rng(seed);
  const int m = f.space.m;
  while (src.size() < sources) {
    std::vector<int> alpha, beta;
    for (int t = 0; t < m; t += 2) alpha.push_back(t);
    for (int t = 1; t < m; t += 2) beta.push_back(t);
    std::shuffle(alpha.begin(), alpha.end(), rng);
    std::shuffle(beta.begin(), beta.end(), rng);
    std::vector<int> occ(alpha.begin(), alpha.begin() + f.space.n_alpha());
    occ.insert(occ.end(), beta.begin(), beta.begin() + f.space.n_beta());
    src.push_back(sci::make_config(occ, f.space));
  }
  sci::GenOptions o;
  o.eps = eps;
  o.chunk = chunk;
  o.threads = sci::thread_limit();
  const auto t0 = std::chrono::steady_clock::now();
  const auto recs = sci::generate_coupled(src, tables, f.integrals, o);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto vs = sci::virtual_space(f.space, tables);
  std::cout << json{{"sources", src.size()},
                    {"records", recs.size()},
                    {"virtual_ids_per_source", vs.total()},
                    {"hilbert_dimension", basis_dim.str()},
                    {"seconds", sec},
                    {"records_per_sec", sec > 0 ? static_cast<double>(recs.size()) / sec : 0.0}}
                   .dump(2)
            << '\n';
  return kOk;
}

int run_tables(const std::string& path, double eps_table, const std::string& out) {
  const sci::Fcidump f = load(path);
  const auto t = sci::build_tables(f.integrals, f.space, eps_table);
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + out + "'");
    sci::write_tables(os, t);
  }
  const auto vs = sci::virtual_space(f.space, t);
  std::cout << json{{"spin_orbitals", t.m()},
                    {"max_single_size", t.max_single_size()},
                    {"max_double_size", t.max_double_size()},
                    {"footprint_bytes", sci::table_footprint(t)},
                    {"n_single", vs.n_single},
                    {"n_double", vs.n_double}}
                   .dump(2)
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selected configuration interaction with distributed de-duplication"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0: hardware concurrency)");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Run the selected-CI iteration");
  solve->add_option("--fcidump", sa.fcidump, "FCIDUMP integral file")->required();
  solve->add_option("--topk", sa.topk, "Configurations added to S per iteration")->check(CLI::PositiveNumber);
  solve->add_option("--eps-gen", sa.eps_gen, "Drop coupled elements with |H_ij| <= eps")->check(CLI::NonNegativeNumber);
  solve->add_option("--ranks", sa.ranks, "Logical ranks")->check(CLI::PositiveNumber);
  solve->add_option("--samples", sa.samples, "Regular-sampling pivots per rank")->check(CLI::PositiveNumber);
  solve->add_option("--budget-mb", sa.budget_mb, "Working-memory budget in MiB (0: unlimited)")->check(CLI::NonNegativeNumber);
  solve->add_option("--max-iters", sa.max_iters, "Iteration limit")->check(CLI::NonNegativeNumber);
  solve->add_option("--tol", sa.tol, "Stop after 3 consecutive |dE| < tol (inf: one iteration)");
  solve->add_option("--report", sa.report, "JSON report path (default: stdout)");
  solve->add_option("--csv", sa.csv, "CSV of iteration,energy,space_size,unique,redundancy");
  solve->add_option("--spill-dir", sa.spill_dir, "Directory for file-backed spill segments");
  solve->add_flag("--no-overlap", sa.no_overlap, "Run load/compute/writeback lanes sequentially");

  std::string fci_path;
  auto* fci = app.add_subcommand("fci", "Exact diagonalization (small systems)");
  fci->add_option("--fcidump", fci_path, "FCIDUMP integral file")->required();

  int d_ranks = 4;
  std::size_t d_samples = 64, d_keys = 1000000;
  std::string d_dist = "uniform";
  std::uint64_t d_seed = 1;
  auto* dbench = app.add_subcommand("dedup-bench", "Distributed de-duplication balance benchmark");
  dbench->add_option("--ranks", d_ranks, "Logical ranks")->check(CLI::PositiveNumber);
  dbench->add_option("--samples", d_samples, "Pivots per rank")->check(CLI::PositiveNumber);
  dbench->add_option("--keys", d_keys, "Total keys");
  dbench->add_option("--dist", d_dist, "uniform or zipf:THETA");
  dbench->add_option("--seed", d_seed, "Key stream seed");

  std::string g_path;
  std::size_t g_sources = 1000, g_chunk = 64;
  double g_eps = 0.0;
  std::uint64_t g_seed = 1;
  auto* gbench = app.add_subcommand("gen-bench", "Coupled-configuration generation benchmark");
  gbench->add_option("--fcidump", g_path, "FCIDUMP integral file")->required();
  gbench->add_option("--sources", g_sources, "Number of source configurations")->check(CLI::PositiveNumber);
  gbench->add_option("--eps", g_eps, "Element threshold")->check(CLI::NonNegativeNumber);
  gbench->add_option("--chunk", g_chunk, "Sources per work unit")->check(CLI::PositiveNumber);
  gbench->add_option("--seed", g_seed, "Source sampling seed");

  std::string t_path, t_out;
  double t_eps = 0.0;
  auto* tables = app.add_subcommand("tables", "Build excitation tables and report their size");
  tables->add_option("--fcidump", t_path, "FCIDUMP integral file")->required();
  tables->add_option("--eps-table", t_eps, "Screening threshold")->check(CLI::NonNegativeNumber);
  tables->add_option("--out", t_out, "Write the binary table blob here");

  std::uint64_t x_seed = 1;
  int x_m = 12, x_n = 6;
  double x_density = 0.5;
  std::string x_out;
  auto* fixture = app.add_subcommand("gen-fixture", "Write a random-integral FCIDUMP");
  fixture->add_option("--seed", x_seed, "Generator seed");
  fixture->add_option("--m", x_m, "Spin orbitals (even)")->check(CLI::PositiveNumber);
  fixture->add_option("--n", x_n, "Electrons")->check(CLI::NonNegativeNumber);
  fixture->add_option("--density", x_density, "Off-diagonal coupling density in [0,1]")->check(CLI::Range(0.0, 1.0));
  fixture->add_option("--out", x_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    sci::set_thread_limit(threads);
    if (*solve) return run_solve(sa);
    if (*fci) return run_fci(fci_path);
    if (*dbench) return run_dedup_bench(d_ranks, d_samples, d_keys, d_dist, d_seed);
    if (*gbench) return run_gen_bench(g_path, g_sources, g_eps, g_chunk, g_seed);
    if (*tables) return run_tables(t_path, t_eps, t_out);
    if (*fixture) {
      const std::string text = sci::gen_fixture(x_seed, x_m, x_n, x_density);
      if (x_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(x_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + x_out + "'");
        out << text;
      }
      return kOk;
    }
  } catch (const MissingFile& e) {
    return fail(kMissingFile, "missing_file", e.what());
  } catch (const sci::BudgetInfeasible& e) {
    return fail(kInfeasible, "budget_infeasible", e.what());
  } catch (const sci::FcidumpError& e) {
    return fail(kFailure, "fcidump", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "error", e.what());
  }
  return kOk;
}
