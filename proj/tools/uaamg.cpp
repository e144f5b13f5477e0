// uaamg: setup / solve / quality experiments on graph Laplacians.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
// 3 numerical failure (stagnation, breakdown, no convergence).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uaamg/serialize.hpp"
#include "uaamg/uaamg.hpp"

namespace {

using nlohmann::json;
using namespace uaamg;

struct Options {
  std::vector<index_t> grids{64};
  std::string bc = "dirichlet";
  std::string aniso = "1:1";
  std::string file;
  std::vector<std::string> caps{"5"};
  index_t reshape = 0;
  std::string cycle = "k";
  index_t inner_steps = 2;
  std::string smoother = "l1";
  double tol = 1e-6;
  index_t max_iters = 200;
  std::uint64_t seed = 0;
  index_t seeds = 1;
  int threads = 0;
  std::string out;
  std::string format = "json";
  index_t coarsest = 100;
  index_t max_levels = 20;
  std::string dump_agg;
  bool hierarchy_table = false;
};

struct Problem {
  std::string name;
  SparseMatrix A;
  bool singular = false;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BoundaryCondition parse_bc(const std::string& s) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "neumann") return BoundaryCondition::neumann;
  throw InvalidArgument("--bc must be dirichlet or neumann");
}

Anisotropy parse_aniso(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidArgument("--aniso expects wh:wv");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw InvalidArgument("--aniso expects wh:wv");
  }
}

std::optional<index_t> parse_cap(const std::string& s) {
  if (s == "none" || s == "inf") return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 1) throw InvalidArgument("");
    return static_cast<index_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgument("--t expects a positive integer or 'none'");
  }
}

SmootherSpec parse_smoother(const std::string& s) {
  if (s == "l1") return SmootherSpec::l1_jacobi();
  if (s == "jacobi") return SmootherSpec::jacobi();
  if (s.rfind("jacobi:", 0) == 0) {
    try {
      return SmootherSpec::jacobi(std::stod(s.substr(7)));
    } catch (const std::invalid_argument&) {
      throw InvalidArgument("--smoother jacobi:omega needs a number");
    }
  }
  throw InvalidArgument("--smoother must be l1 or jacobi:omega");
}

CycleSpec parse_cycle(const Options& o) {
  CycleSpec c;
  if (o.cycle == "k")
    c.kind = CycleSpec::Kind::kcycle;
  else if (o.cycle == "v")
    c.kind = CycleSpec::Kind::vcycle;
  else
    throw InvalidArgument("--cycle must be v or k");
  c.inner_krylov_steps = o.inner_steps;
  return c;
}

std::vector<Problem> load_problems(const Options& o) {
  std::vector<Problem> out;
  if (!o.file.empty()) {
    Problem p;
    p.name = o.file;
    const bool mtx = o.file.size() >= 4 && o.file.substr(o.file.size() - 4) == ".mtx";
    p.A = mtx ? read_matrix_market(o.file) : assemble_laplacian(read_graph(o.file));
    if (!p.A.square()) throw InvalidArgument(o.file + ": matrix is not square");
    p.singular = annihilates_constants(p.A);
    out.push_back(std::move(p));
    return out;
  }
  const auto bc = parse_bc(o.bc);
  const auto w = parse_aniso(o.aniso);
  for (index_t n : o.grids) {
    Problem p;
    p.name = "grid" + std::to_string(n) + "-" + o.bc;
    const GraphProblem g = generate_structured_grid(n, bc, w);
    p.A = assemble_laplacian(g);
    p.singular = g.singular();
    out.push_back(std::move(p));
  }
  return out;
}

HierarchyConfig hierarchy_config(const Options& o, std::optional<index_t> cap, std::uint64_t seed) {
  HierarchyConfig hc;
  hc.coarsest_size = o.coarsest;
  hc.max_levels = o.max_levels;
  hc.aggregation.size_cap = cap;
  hc.aggregation.seed = seed;
  hc.reshape_sweeps = o.reshape;
  hc.reshape.smoother = SmootherSpec::l1_jacobi();
  return hc;
}

json options_json(const Options& o) {
  return {{"bc", o.bc},           {"aniso", o.aniso},       {"t", o.caps},         {"reshape", o.reshape},
          {"cycle", o.cycle},     {"smoother", o.smoother}, {"tol", o.tol},        {"max_iters", o.max_iters},
          {"seed", o.seed},       {"seeds", o.seeds},       {"coarsest", o.coarsest}, {"max_levels", o.max_levels}};
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw IoError("cannot write " + o.out);
  f << text;
}

int cmd_setup(const Options& o) {
  const auto problems = load_problems(o);
  const auto cap = parse_cap(o.caps.front());
  json runs = json::array();
  std::ostringstream csv;
  csv << "problem,level,n,nnz,ratio\n";
  for (const auto& p : problems) {
    const auto t0 = std::chrono::steady_clock::now();
    HierarchyConfig hc = hierarchy_config(o, cap, o.seed);
    hc.singular = p.singular;
    const Hierarchy h = setup(p.A, hc);
    const double setup_s = seconds_since(t0);
    json run = hierarchy_summary(h);
    run["problem"] = p.name;
    run["timings"] = {{"setup_seconds", setup_s}};
    runs.push_back(run);
    for (index_t l = 0; l < h.levels(); ++l) {
      csv << p.name << ',' << l << ',' << h.op(l).rows() << ',' << h.op(l).nnz() << ',';
      if (l + 1 < h.levels()) csv << h.aggregation(l).coarsening_ratio();
      csv << '\n';
    }
    if (!o.dump_agg.empty() && h.levels() > 1) write_aggregation(o.dump_agg, h.aggregation(0));
  }
  if (o.format == "csv")
    emit(o, csv.str());
  else
    emit(o, json{{"command", "setup"}, {"options", options_json(o)}, {"runs", runs}}.dump(2) + "\n");
  return 0;
}

Vector make_rhs(const Problem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector b(p.A.rows());
  for (auto& v : b) v = u(rng);
  if (p.singular) remove_mean(b);
  return b;
}

int cmd_solve(const Options& o) {
  const auto problems = load_problems(o);
  const auto cap = parse_cap(o.caps.front());
  const CycleSpec cycle = parse_cycle(o);
  const SmootherSpec smoother = parse_smoother(o.smoother);
  if (!(o.tol > 0.0)) throw InvalidArgument("--tol must be positive");
  json runs = json::array();
  std::ostringstream csv;
  csv << "problem,iteration,relative_residual\n";
  bool all_converged = true;
  std::string failure;
  for (const auto& p : problems) {
    const auto t0 = std::chrono::steady_clock::now();
    HierarchyConfig hc = hierarchy_config(o, cap, o.seed);
    hc.singular = p.singular;
    const Hierarchy h = setup(p.A, hc);
    const double setup_s = seconds_since(t0);
    const Vector b = make_rhs(p, o.seed);
    Vector x(b.size());
    SolveReport rep;
    try {
      rep = npcg_solve(h, cycle, smoother, b, x, o.tol, o.max_iters);
    } catch (const SolverBreakdown& e) {
      rep = e.report();
      failure = e.what();
    }
    rep.setup_seconds = setup_s;
    all_converged = all_converged && rep.converged;
    json run = to_json(rep);
    run["problem"] = p.name;
    run["n"] = p.A.rows();
    run["levels"] = h.levels();
    run["operator_complexity"] = h.operator_complexity();
    runs.push_back(run);
    for (std::size_t k = 0; k < rep.residual_history.size(); ++k)
      csv << p.name << ',' << k << ',' << rep.residual_history[k] << '\n';
  }
  if (o.format == "csv")
    emit(o, csv.str());
  else
    emit(o, json{{"command", "solve"}, {"options", options_json(o)}, {"runs", runs}}.dump(2) + "\n");
  if (!failure.empty()) std::cerr << "uaamg: " << failure << '\n';
  if (!all_converged) {
    std::cerr << "uaamg: solver did not reach tol " << o.tol << " within " << o.max_iters << " iterations\n";
    return 3;
  }
  return 0;
}

struct Stats {
  double mean = 0.0, stddev = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(s.stddev / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

int cmd_quality(const Options& o) {
  const auto problems = load_problems(o);
  if (o.seeds < 1) throw InvalidArgument("--seeds must be >= 1");
  std::ostringstream csv;
  csv.precision(6);
  json rows = json::array();

  if (o.hierarchy_table) {
    csv << "problem,t,fine,coarse,ratio,q_energy_sq,e_norm\n";
    for (const auto& p : problems) {
      for (const auto& t : o.caps) {
        HierarchyConfig hc = hierarchy_config(o, parse_cap(t), o.seed);
        hc.singular = p.singular;
        const Hierarchy h = setup(p.A, hc);
        for (const auto& r : hierarchy_report(h)) {
          csv << p.name << ',' << t << ',' << r.fine_level << ',' << r.coarse_level << ',' << r.coarsening_ratio << ','
              << r.q_energy_sq << ',';
          if (r.e_norm) csv << *r.e_norm;
          csv << '\n';
          json j = to_json(r);
          j["problem"] = p.name;
          j["t"] = t;
          rows.push_back(j);
        }
      }
    }
  } else {
    csv << "problem,n,t,seeds,ratio_mean,ratio_std,q_energy_sq_mean,q_energy_sq_std\n";
    for (const auto& p : problems) {
      for (const auto& t : o.caps) {
        std::vector<double> ratios, qs;
        for (index_t s = 0; s < o.seeds; ++s) {
          AggregationConfig ac;
          ac.size_cap = parse_cap(t);
          ac.seed = o.seed + s;
          Aggregation agg = aggregate(p.A, ac);
          if (o.reshape > 0) {
            ReshapeOptions ro;
            ro.sweeps = o.reshape;
            agg = reshape_sweep(p.A, agg, ro);
          }
          ratios.push_back(agg.coarsening_ratio());
          qs.push_back(q_energy_norm(p.A, agg, p.singular));
        }
        const Stats r = stats(ratios), q = stats(qs);
        csv << p.name << ',' << p.A.rows() << ',' << t << ',' << o.seeds << ',' << r.mean << ',' << r.stddev << ','
            << q.mean << ',' << q.stddev << '\n';
        rows.push_back({{"problem", p.name},
                        {"n", p.A.rows()},
                        {"t", t},
                        {"seeds", o.seeds},
                        {"ratio_mean", r.mean},
                        {"ratio_std", r.stddev},
                        {"q_energy_sq_mean", q.mean},
                        {"q_energy_sq_std", q.stddev}});
      }
    }
  }
  if (o.format == "csv")
    emit(o, csv.str());
  else
    emit(o, json{{"command", "quality"}, {"options", options_json(o)}, {"rows", rows}}.dump(2) + "\n");
  return 0;
}

/// Config-file values for options not given on the command line.
void apply_config(const std::string& path, CLI::App& app, Options& o) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  json cfg;
  try {
    f >> cfg;
  } catch (const json::exception& e) {
    throw IoError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw InvalidArgument("config must be a JSON object");
  auto given = [&](const std::string& flag) {
    for (const auto* sub : app.get_subcommands()) {
      const auto* opt = sub->get_option_no_throw(flag);
      if (opt != nullptr && opt->count() > 0) return true;
    }
    const auto* opt = app.get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  try {
    for (const auto& [key, value] : cfg.items()) {
      const std::string flag = "--" + key;
      if (given(flag)) continue;
      if (key == "grid")
        o.grids = value.is_array() ? value.get<std::vector<index_t>>() : std::vector<index_t>{value.get<index_t>()};
      else if (key == "bc")
        o.bc = value.get<std::string>();
      else if (key == "aniso")
        o.aniso = value.get<std::string>();
      else if (key == "file")
        o.file = value.get<std::string>();
      else if (key == "t") {
        o.caps.clear();
        for (const auto& v : value.is_array() ? value : json::array({value}))
          o.caps.push_back(v.is_string() ? v.get<std::string>() : std::to_string(v.get<long long>()));
      } else if (key == "reshape")
        o.reshape = value.get<index_t>();
      else if (key == "cycle")
        o.cycle = value.get<std::string>();
      else if (key == "inner-steps")
        o.inner_steps = value.get<index_t>();
      else if (key == "smoother")
        o.smoother = value.get<std::string>();
      else if (key == "tol")
        o.tol = value.get<double>();
      else if (key == "max-iters")
        o.max_iters = value.get<index_t>();
      else if (key == "seed")
        o.seed = value.get<std::uint64_t>();
      else if (key == "seeds")
        o.seeds = value.get<index_t>();
      else if (key == "threads")
        o.threads = value.get<int>();
      else if (key == "coarsest")
        o.coarsest = value.get<index_t>();
      else if (key == "max-levels")
        o.max_levels = value.get<index_t>();
      else if (key == "format")
        o.format = value.get<std::string>();
      else
        throw InvalidArgument("config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("config: " + std::string(e.what()));
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsmoothed-aggregation AMG for graph Laplacians"};
  app.require_subcommand(1);
  Options o;
  std::string config;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--grid", o.grids, "structured n x n grid size(s)")->delimiter(',');
    sub->add_option("--bc", o.bc, "dirichlet | neumann");
    sub->add_option("--aniso", o.aniso, "edge weights wh:wv");
    sub->add_option("--file", o.file, "problem file (.mtx or graph format)");
    sub->add_option("--t", o.caps, "aggregate size cap(s), or 'none'")->delimiter(',');
    sub->add_option("--reshape", o.reshape, "reshaping sweeps per level");
    sub->add_option("--seed", o.seed, "aggregation seed");
    sub->add_option("--threads", o.threads, "worker threads (default: UAAMG_THREADS)");
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--coarsest", o.coarsest, "stop coarsening at this many unknowns");
    sub->add_option("--max-levels", o.max_levels, "maximum number of levels");
    sub->add_option("--config", config, "JSON config file; flags take precedence");
    sub->add_option("--cycle", o.cycle, "v | k");
    sub->add_option("--inner-steps", o.inner_steps, "inner Krylov steps of the K-cycle");
    sub->add_option("--smoother", o.smoother, "l1 | jacobi:omega");
    sub->add_option("--tol", o.tol, "relative residual tolerance");
    sub->add_option("--max-iters", o.max_iters, "outer iteration limit");
    sub->add_option("--seeds", o.seeds, "number of seeds (quality)");
  };
  auto* setup_cmd = app.add_subcommand("setup", "build a hierarchy and print its summary");
  auto* solve_cmd = app.add_subcommand("solve", "setup + NPCG solve with a random right-hand side");
  auto* quality_cmd = app.add_subcommand("quality", "coarsening ratio and ||Q||_A^2 tables");
  for (auto* sub : {setup_cmd, solve_cmd, quality_cmd}) add_common(sub);
  setup_cmd->add_option("--dump-agg", o.dump_agg, "write the finest aggregation to this path");
  quality_cmd->add_flag("--hierarchy", o.hierarchy_table, "report every level pair of the hierarchy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!config.empty()) apply_config(config, app, o);
    int threads = o.threads;
    if (threads <= 0) {
      if (const char* env = std::getenv("UAAMG_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) set_num_threads(threads);
    if (o.caps.empty()) throw InvalidArgument("--t needs at least one value");
    if (o.format != "json" && o.format != "csv") throw InvalidArgument("--format must be json or csv");
    if (o.file.empty() && o.grids.empty()) throw InvalidArgument("--grid needs at least one size");

    if (setup_cmd->parsed()) return cmd_setup(o);
    if (solve_cmd->parsed()) return cmd_solve(o);
    return cmd_quality(o);
  } catch (const InvalidArgument& e) {
    std::cerr << "uaamg: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "uaamg: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "uaamg: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "uaamg: " << e.what() << '\n';
    return 1;
  }
}
