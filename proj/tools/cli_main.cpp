// Command-line front end: wires kernel files, OU-model configs, and
// experiment parameters into CSV / text reports on disk.
//
// Exit codes: 0 success, 2 invalid input or config, 3 numerical guard trip
// (work or memory budget exceeded).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "poischaos/algebra.hpp"
#include "poischaos/bounds.hpp"
#include "poischaos/chaos.hpp"
#include "poischaos/common.hpp"
#include "poischaos/oulevy.hpp"
#include "poischaos/simulate.hpp"
#include "poischaos/space.hpp"

namespace fs = std::filesystem;
using namespace poischaos;

namespace {

// Full-precision formatting for data files; readers must be able to
// reproduce the exact doubles.
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shortened formatting for human-facing summaries.
std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string data_path(const std::string& name) {
  const char* env = std::getenv("POISCHAOS_DATA");
  return (env != nullptr ? std::string(env) : std::string("data")) + "/" +
         name;
}

std::string default_out_dir() {
  const char* env = std::getenv("POISCHAOS_OUT");
  return env != nullptr ? std::string(env) : std::string(".");
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw std::invalid_argument("--out: cannot create directory '" + dir +
                                "'");
  }
  return p;
}

// All report files are assembled in memory and written once, so partially
// written artifacts never appear and identical configs give identical
// bytes.
void write_lines(const fs::path& path, const std::vector<std::string>& lines,
                 bool announce = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::invalid_argument("cannot write output file: " +
                                path.string());
  }
  for (const std::string& line : lines) out << line << '\n';
  if (announce) std::cout << "wrote " << path.string() << '\n';
}

using KV = std::vector<std::pair<std::string, std::string>>;

std::vector<std::string> report_header(const std::string& command,
                                       const KV& config) {
  std::vector<std::string> lines;
  lines.push_back("# poischaos " + std::string(kVersion));
  lines.push_back("# command = " + command);
  for (const auto& [k, v] : config) lines.push_back("# " + k + " = " + v);
  return lines;
}

std::string join_csv(const std::vector<std::string>& cells) {
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  return row;
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += fmt17(xs[i]);
  }
  return s;
}

Kernel load_symmetric_kernel(const std::string& path) {
  Kernel k = load_kernel(path);
  if (!k.symmetric()) {
    throw std::invalid_argument(
        "kernel file " + path +
        ": values are not invariant under argument permutations");
  }
  return k;
}

oulevy::OUConfig make_ou_config(const std::vector<double>& lambdas, double T,
                                double h, double ppu, std::uint64_t seed) {
  oulevy::OUConfig cfg = oulevy::OUConfig::standard(lambdas, T, ppu);
  cfg.h = h;
  cfg.seed = seed;
  return cfg;
}

// Mark atoms arrive as value:mass tokens, e.g. --marks 3:0.5,-1:0.5.
std::vector<oulevy::MarkAtom> parse_marks(
    const std::vector<std::string>& specs) {
  std::vector<oulevy::MarkAtom> atoms;
  for (const std::string& s : specs) {
    const auto colon = s.find(':');
    double value = 0.0, mass = 0.0;
    try {
      if (colon == std::string::npos) throw std::invalid_argument("no colon");
      const std::string vs = s.substr(0, colon);
      const std::string ms = s.substr(colon + 1);
      std::size_t vlen = 0, mlen = 0;
      value = std::stod(vs, &vlen);
      mass = std::stod(ms, &mlen);
      if (vlen != vs.size() || mlen != ms.size())
        throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument(
          "--marks: expected value:mass pairs, got '" + s + "'");
    }
    atoms.push_back({value, mass});
  }
  return atoms;
}

std::string join_marks(const std::vector<oulevy::MarkAtom>& atoms) {
  std::string out;
  for (const auto& a : atoms) {
    if (!out.empty()) out += ' ';
    out += fmt17(a.value) + ":" + fmt17(a.mass);
  }
  return out;
}

KV ou_config_kv(const oulevy::OUConfig& cfg, const oulevy::OUGrid& grid) {
  double lam_min = cfg.lambdas[0];
  for (double l : cfg.lambdas) lam_min = std::min(lam_min, l);
  KV kv;
  kv.emplace_back("lambdas", join_doubles(cfg.lambdas));
  kv.emplace_back("T", fmt17(cfg.T));
  kv.emplace_back("h", fmt17(cfg.h));
  kv.emplace_back("x_min", fmt17(cfg.x_min));
  kv.emplace_back("nx", std::to_string(cfg.nx));
  kv.emplace_back("cells", std::to_string(grid.space->size()));
  kv.emplace_back("dx", fmt17(grid.dx));
  kv.emplace_back("truncated_tail_mass",
                  fmt17(std::exp(2.0 * lam_min * cfg.x_min)));
  kv.emplace_back("marks", join_marks(cfg.atoms));
  kv.emplace_back("mark_fourth_moment", fmt17(cfg.cnu2()));
  kv.emplace_back("seed", std::to_string(cfg.seed));
  return kv;
}

// ---------------------------------------------------------------- algebra

struct AlgebraOpts {
  std::string op = "contract";
  std::string f_path = data_path("sample_f.json");
  std::string g_path = data_path("sample_g.json");
  int r = 1;
  int l = 1;
  std::string out = default_out_dir();
  std::string format = "csv";
};

int run_algebra(const AlgebraOpts& o) {
  const Kernel f = load_symmetric_kernel(o.f_path);
  if (o.op == "symmetrize") {
    const Kernel raw = load_kernel(o.f_path);
    const Kernel sym = symmetrize(raw);
    const fs::path dir = prepare_out_dir(o.out);
    save_kernel(sym, (dir / "symmetrized.json").string());
    std::cout << "order " << sym.order() << ", norm before "
              << fmt6(l2_norm(raw)) << ", after " << fmt6(l2_norm(sym))
              << '\n';
    std::cout << "wrote " << (dir / "symmetrized.json").string() << '\n';
    return 0;
  }
  const Kernel g = load_symmetric_kernel(o.g_path);
  if (o.op == "contract") {
    const Kernel c = star_contract(f, g, o.r, o.l);
    if (c.order() == 0) {
      std::cout << fmt17(c.values()[0]) << '\n';
      return 0;
    }
    const fs::path dir = prepare_out_dir(o.out);
    save_kernel(c, (dir / "contract_result.json").string());
    std::cout << "order " << c.order() << ", norm " << fmt6(l2_norm(c))
              << '\n';
    std::cout << "wrote " << (dir / "contract_result.json").string() << '\n';
    return 0;
  }
  if (o.op == "product") {
    const auto parts = product_expand(f, g);
    const fs::path dir = prepare_out_dir(o.out);
    KV kv{{"f", o.f_path}, {"g", o.g_path}};
    auto lines = report_header("algebra product", kv);
    lines.push_back("k,order,l2_norm");
    for (const auto& [k, kern] : parts) {
      lines.push_back(std::to_string(k) + "," +
                      std::to_string(kern.order()) + "," +
                      fmt17(l2_norm(kern)));
      save_kernel(kern,
                  (dir / ("product_k" + std::to_string(k) + ".json"))
                      .string());
    }
    write_lines(dir / "product.csv", lines);
    for (const auto& [k, kern] : parts) {
      std::cout << "k=" << k << "  ||G_k|| = " << fmt6(l2_norm(kern))
                << '\n';
    }
    return 0;
  }
  throw std::invalid_argument("--op: unknown operation '" + o.op + "'");
}

// ------------------------------------------------------------------ bound

struct BoundOpts {
  std::vector<std::string> kernels;
  std::vector<double> target;  // row-major dim x dim; empty = chaos cov
  int level = 1;
  std::string out = default_out_dir();
  std::string format = "csv";
};

int run_bound(const BoundOpts& o) {
  if (o.kernels.empty()) {
    throw std::invalid_argument("--kernels: need at least one kernel file");
  }
  std::vector<Kernel> fs_vec;
  fs_vec.reserve(o.kernels.size());
  for (const auto& path : o.kernels) {
    fs_vec.push_back(load_symmetric_kernel(path));
  }
  const int d = static_cast<int>(fs_vec.size());
  SymMatrix C;
  if (o.target.empty()) {
    C = chaos_covariance(fs_vec);
  } else {
    if (o.target.size() != static_cast<std::size_t>(d) *
                               static_cast<std::size_t>(d)) {
      throw std::invalid_argument(
          "--target: need dim*dim entries matching the kernel count");
    }
    C = make_sym_matrix(d, o.target);
  }
  const DistanceBound db = chaos_vector_bound(fs_vec, C, o.level);

  KV kv;
  for (int i = 0; i < d; ++i) {
    kv.emplace_back("kernel_" + std::to_string(i), o.kernels[static_cast<std::size_t>(i)]);
  }
  kv.emplace_back("level", std::to_string(o.level));
  auto lines = report_header("bound", kv);
  lines.push_back("row,i,j,target,exact,contraction,nested");
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const PairTermBounds pt = pair_term_bounds(
          fs_vec[static_cast<std::size_t>(i)],
          fs_vec[static_cast<std::size_t>(j)], C.at(i, j));
      lines.push_back(join_csv({"pair", std::to_string(i),
                                std::to_string(j), fmt17(C.at(i, j)),
                                fmt17(pt.exact), fmt17(pt.contraction),
                                fmt17(pt.nested)}));
    }
  }
  lines.push_back(join_csv({"summary_gap_sum", "", "",
                            fmt17(db.pairing_gap_sum), "", "", ""}));
  lines.push_back(join_csv({"summary_cubic", "", "", fmt17(db.cubic_term),
                            "", "", ""}));
  lines.push_back(join_csv({"summary_d3", "", "", fmt17(db.d3), "", "",
                            ""}));
  lines.push_back(join_csv({"summary_d2", "", "",
                            db.d2_valid ? fmt17(db.d2) : "invalid", "", "",
                            ""}));
  const fs::path dir = prepare_out_dir(o.out);
  write_lines(dir / "bound.csv", lines);
  if (o.format == "text") {
    auto txt = report_header("bound", kv);
    txt.push_back("gap sum   = " + fmt6(db.pairing_gap_sum));
    txt.push_back("cubic     = " + fmt6(db.cubic_term));
    txt.push_back("d3        = " + fmt6(db.d3));
    txt.push_back(db.d2_valid ? "d2        = " + fmt6(db.d2)
                              : "d2        = (target not positive definite)");
    write_lines(dir / "bound.txt", txt);
  }
  std::cout << "d3 bound " << fmt6(db.d3)
            << (db.d2_valid ? ", d2 bound " + fmt6(db.d2)
                            : ", d2 needs a positive definite target")
            << '\n';
  return 0;
}

// -------------------------------------------------------------- clt-check

struct CltOpts {
  double lambda = 1.0;
  double h = 0.0;
  double ppu = 4.0;
  std::vector<double> t_grid = {25, 50, 100, 200, 400};
  std::vector<std::string> marks;
  std::string out = default_out_dir();
  std::string format = "csv";
};

int run_clt_check(const CltOpts& o) {
  oulevy::OUConfig base =
      make_ou_config({o.lambda}, o.t_grid.empty() ? 1.0 : o.t_grid.back(),
                     o.h, o.ppu, 0x5EED);
  if (!o.marks.empty()) base.atoms = parse_marks(o.marks);
  KV kv{{"lambda", fmt17(o.lambda)},
        {"h", fmt17(o.h)},
        {"points_per_unit", fmt17(o.ppu)},
        {"x_min", fmt17(base.x_min)},
        {"marks", join_marks(base.atoms)}};
  auto lines = report_header("clt-check", kv);
  lines.push_back("T,cells,part,check,r,l,value");
  std::vector<std::string> human;
  for (double t : o.t_grid) {
    oulevy::OUConfig cfg = base;
    cfg.T = t;
    cfg.nx = static_cast<std::size_t>(std::ceil(o.ppu * (t - cfg.x_min)));
    const oulevy::OUGrid grid = oulevy::build_grid(cfg);
    const auto [k1, k2] = oulevy::kernel_Qh(grid, o.lambda, t, o.h);
    const std::string cells = std::to_string(grid.space->size());
    for (const auto& [part, kern] :
         {std::pair<const char*, const Kernel*>{"mean", &k1},
          std::pair<const char*, const Kernel*>{"quad", &k2}}) {
      const CltChecks checks = clt_checks(*kern);
      for (const auto& e : checks.contraction_norms) {
        lines.push_back(join_csv({fmt17(t), cells, part, "contraction",
                                  std::to_string(e.r), std::to_string(e.l),
                                  fmt17(e.norm)}));
      }
      lines.push_back(join_csv({fmt17(t), cells, part, "fourth_moment", "",
                                "", fmt17(checks.fourth_moment)}));
    }
    const CltChecks qc = clt_checks(k2);
    std::string msg = "T=" + fmt6(t);
    for (const auto& e : qc.contraction_norms) {
      msg += "  |quad*_" + std::to_string(e.r) + "^" + std::to_string(e.l) +
             "| = " + fmt6(e.norm);
    }
    msg += "  int quad^4 = " + fmt6(qc.fourth_moment);
    human.push_back(msg);
  }
  const fs::path dir = prepare_out_dir(o.out);
  write_lines(dir / "clt_check.csv", lines);
  if (o.format == "text") {
    auto txt = report_header("clt-check", kv);
    txt.insert(txt.end(), human.begin(), human.end());
    write_lines(dir / "clt_check.txt", txt);
  }
  for (const auto& msg : human) std::cout << msg << '\n';
  return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateOpts {
  std::vector<std::string> kernels;
  std::vector<std::string> expansions;
  std::size_t reps = 10000;
  std::uint64_t seed = 0x5EED;
  std::size_t family_size = 0;  // 0 = all coordinates
  std::string out = default_out_dir();
  std::string format = "csv";
};

int run_simulate(const SimulateOpts& o) {
  if (o.kernels.empty() == o.expansions.empty()) {
    throw std::invalid_argument(
        "simulate: pass exactly one of --kernels or --expansions");
  }
  std::vector<ChaosExpansion> family;
  std::vector<std::string> names;
  if (!o.kernels.empty()) {
    for (const auto& path : o.kernels) {
      Kernel k = load_symmetric_kernel(path);
      if (k.order() < 1 || k.order() > kMaxUserExpansionOrder) {
        throw std::invalid_argument("kernel file " + path +
                                    ": order must be between 1 and " +
                                    std::to_string(kMaxUserExpansionOrder));
      }
      std::vector<Kernel> slots;
      for (int ord = 1; ord < k.order(); ++ord) {
        slots.push_back(Kernel::zero(k.space(), ord));
      }
      SpacePtr sp = k.space();
      slots.push_back(std::move(k));
      family.push_back(make_expansion(sp, 0.0, std::move(slots)));
      names.push_back(path);
    }
  } else {
    for (const auto& path : o.expansions) {
      family.push_back(load_expansion(path));
      names.push_back(path);
    }
  }
  if (o.family_size > 0 && o.family_size < family.size()) {
    family.resize(o.family_size);
    names.resize(o.family_size);
  }
  if (o.reps < 2) {
    throw std::invalid_argument("--reps: need at least 2 replications");
  }

  const auto values = simulate_expansions(family, o.reps, o.seed);
  const std::size_t d = family.size();

  KV kv;
  for (std::size_t i = 0; i < d; ++i) {
    kv.emplace_back("coordinate_" + std::to_string(i), names[i]);
  }
  kv.emplace_back("reps", std::to_string(o.reps));
  kv.emplace_back("seed", std::to_string(o.seed));
  kv.emplace_back("cells", std::to_string(family[0].space->size()));

  auto val_lines = report_header("simulate", kv);
  {
    std::vector<std::string> head{"replication"};
    for (std::size_t i = 0; i < d; ++i) head.push_back("F" + std::to_string(i + 1));
    val_lines.push_back(join_csv(head));
  }
  for (std::size_t r = 0; r < o.reps; ++r) {
    std::vector<std::string> row{std::to_string(r)};
    for (std::size_t i = 0; i < d; ++i) row.push_back(fmt17(values[i][r]));
    val_lines.push_back(join_csv(row));
  }

  auto sum_lines = report_header("simulate", kv);
  sum_lines.push_back("row,i,j,value,std_error");
  std::vector<std::string> human;
  for (std::size_t i = 0; i < d; ++i) {
    const SampleStats st = sample_stats(values[i]);
    const MeanWithError me = mc_mean(values[i]);
    sum_lines.push_back(join_csv({"mean", std::to_string(i), "",
                                  fmt17(st.mean), fmt17(me.std_error)}));
    sum_lines.push_back(join_csv({"sd", std::to_string(i), "",
                                  fmt17(st.sd), ""}));
    sum_lines.push_back(join_csv({"skewness", std::to_string(i), "",
                                  fmt17(st.skewness), ""}));
    sum_lines.push_back(join_csv({"kurtosis", std::to_string(i), "",
                                  fmt17(st.kurtosis), ""}));
    human.push_back("F" + std::to_string(i + 1) + ": mean " +
                    fmt6(st.mean) + " (se " + fmt6(me.std_error) + "), sd " +
                    fmt6(st.sd) + ", skew " + fmt6(st.skewness) + ", kurt " +
                    fmt6(st.kurtosis));
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      const MeanWithError cov = mc_product_mean(values[i], values[j]);
      sum_lines.push_back(join_csv({"covariance", std::to_string(i),
                                    std::to_string(j), fmt17(cov.value),
                                    fmt17(cov.std_error)}));
    }
  }

  const fs::path dir = prepare_out_dir(o.out);
  write_lines(dir / "values.csv", val_lines);
  write_lines(dir / "summary.csv", sum_lines);
  if (o.format == "text") {
    auto txt = report_header("simulate", kv);
    txt.insert(txt.end(), human.begin(), human.end());
    write_lines(dir / "summary.txt", txt);
  }
  for (const auto& msg : human) std::cout << msg << '\n';
  return 0;
}

// ---------------------------------------------------------------- ou-demo

struct OuDemoOpts {
  std::string which = "Q";
  std::vector<double> lambdas = {1.0};
  double T = 100.0;
  double h = 0.0;
  double ppu = 2.0;
  std::size_t reps = 0;  // 0 = reports only, no Monte Carlo
  std::uint64_t seed = 0x5EED;
  std::vector<std::string> marks;
  std::string out = default_out_dir();
  std::string format = "csv";
};

oulevy::Functional parse_which(const std::string& s) {
  if (s == "A") return oulevy::Functional::A;
  if (s == "Q") return oulevy::Functional::Q;
  if (s == "Qh") return oulevy::Functional::Qh;
  throw std::invalid_argument("--which: expected A, Q, or Qh, got '" + s +
                              "'");
}

int run_ou_demo(const OuDemoOpts& o) {
  const oulevy::Functional which = parse_which(o.which);
  oulevy::OUConfig cfg = make_ou_config(o.lambdas, o.T, o.h, o.ppu, o.seed);
  if (!o.marks.empty()) cfg.atoms = parse_marks(o.marks);
  const oulevy::DemoKit kit = oulevy::build_demo(cfg, which);
  const int d = static_cast<int>(o.lambdas.size());
  const int split_dim = kit.exact_cov.dim;

  KV kv = ou_config_kv(cfg, kit.grid);
  kv.emplace_back("which", o.which);

  // Covariance report: split-vector entries plus the per-coordinate totals.
  auto cov_lines = report_header("ou-demo covariance", kv);
  cov_lines.push_back("row,i,j,exact,limit");
  for (int i = 0; i < split_dim; ++i) {
    for (int j = 0; j < split_dim; ++j) {
      cov_lines.push_back(join_csv({"split", std::to_string(i),
                                    std::to_string(j),
                                    fmt17(kit.exact_cov.at(i, j)),
                                    fmt17(kit.limit_cov.at(i, j))}));
    }
  }
  const SymMatrix total_limit = oulevy::cov_limit(cfg, which);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      cov_lines.push_back(join_csv({"total", std::to_string(i),
                                    std::to_string(j),
                                    fmt17(oulevy::cov_exact(cfg, which, i,
                                                            j)),
                                    fmt17(total_limit.at(i, j))}));
    }
  }

  // Bound report against both covariance targets.
  auto bound_lines = report_header("ou-demo bound", kv);
  bound_lines.push_back("target,term,value");
  std::vector<std::string> human;
  double d3_exact_target = 0.0;
  for (const auto& [name, target] :
       {std::pair<const char*, const SymMatrix*>{"exact", &kit.exact_cov},
        std::pair<const char*, const SymMatrix*>{"limit",
                                                 &kit.limit_cov}}) {
    if (which == oulevy::Functional::A) {
      const FirstChaosBound fb = first_chaos_bound(kit.order1, *target);
      bound_lines.push_back(join_csv({name, "hs_gap", fmt17(fb.hs_gap)}));
      bound_lines.push_back(join_csv({name, "cubic", fmt17(fb.cubic)}));
      bound_lines.push_back(join_csv({name, "d3", fmt17(fb.d3)}));
      bound_lines.push_back(join_csv(
          {name, "d2", fb.d2_valid ? fmt17(fb.d2) : "invalid"}));
      human.push_back(std::string(name) + " target: d3 <= " + fmt6(fb.d3) +
                      (fb.d2_valid ? ", d2 <= " + fmt6(fb.d2)
                                   : " (d2 needs positive definite target)"));
      if (name == std::string("exact")) d3_exact_target = fb.d3;
    } else {
      const SingleDoubleBound sb =
          single_double_bound(kit.order1, kit.order2, *target);
      bound_lines.push_back(join_csv({name, "s1", fmt17(sb.s1)}));
      bound_lines.push_back(join_csv({name, "s2", fmt17(sb.s2)}));
      bound_lines.push_back(join_csv({name, "s3", fmt17(sb.s3)}));
      bound_lines.push_back(join_csv({name, "s4", fmt17(sb.s4)}));
      bound_lines.push_back(join_csv({name, "s5", fmt17(sb.s5)}));
      bound_lines.push_back(join_csv({name, "s6", fmt17(sb.s6)}));
      bound_lines.push_back(
          join_csv({name, "d3_contraction", fmt17(sb.d3_contraction)}));
      bound_lines.push_back(
          join_csv({name, "d3_nested", fmt17(sb.d3_nested)}));
      human.push_back(std::string(name) + " target: d3 <= " +
                      fmt6(sb.d3_contraction) + " (self-contraction route " +
                      fmt6(sb.d3_nested) + ")");
      if (name == std::string("exact")) d3_exact_target = sb.d3_contraction;
    }
  }

  const fs::path dir = prepare_out_dir(o.out);
  write_lines(dir / "covariance.csv", cov_lines);
  write_lines(dir / "bound.csv", bound_lines);
  if (o.format == "text") {
    auto txt = report_header("ou-demo", kv);
    txt.insert(txt.end(), human.begin(), human.end());
    write_lines(dir / "report.txt", txt);
  }
  for (const auto& msg : human) std::cout << msg << '\n';

  if (o.reps == 0) return 0;

  // Monte Carlo pass: simulate the split vector, compare moments and the
  // smooth-test-function discrepancy against the assembled bound.
  std::vector<ChaosExpansion> family;
  const SpacePtr sp = kit.grid.space;
  for (const Kernel& k : kit.order1) {
    family.push_back(make_expansion(sp, 0.0, {k}));
  }
  for (const Kernel& k : kit.order2) {
    family.push_back(
        make_expansion(sp, 0.0, {Kernel::zero(sp, 1), k}));
  }
  const auto values = simulate_expansions(family, o.reps, o.seed);

  auto sim_lines = report_header("ou-demo simulation", kv);
  sim_lines.push_back("row,i,j,value,std_error");
  for (int i = 0; i < split_dim; ++i) {
    for (int j = i; j < split_dim; ++j) {
      const MeanWithError cov = mc_product_mean(
          values[static_cast<std::size_t>(i)],
          values[static_cast<std::size_t>(j)]);
      sim_lines.push_back(join_csv({"emp_cov", std::to_string(i),
                                    std::to_string(j), fmt17(cov.value),
                                    fmt17(cov.std_error)}));
    }
  }
  // Totals per coordinate (the functional itself, order-1 plus order-2
  // part) standardized by the exact variance.
  for (int i = 0; i < d; ++i) {
    std::vector<double> total = values[static_cast<std::size_t>(i)];
    if (which != oulevy::Functional::A) {
      const auto& quad = values[static_cast<std::size_t>(d + i)];
      for (std::size_t r = 0; r < total.size(); ++r) total[r] += quad[r];
    }
    const double var = oulevy::cov_exact(cfg, which, i, i);
    for (double& v : total) v /= std::sqrt(var);
    const SampleStats st = sample_stats(total);
    sim_lines.push_back(join_csv({"std_total_mean", std::to_string(i), "",
                                  fmt17(st.mean), ""}));
    sim_lines.push_back(join_csv({"std_total_sd", std::to_string(i), "",
                                  fmt17(st.sd), ""}));
    sim_lines.push_back(join_csv({"std_total_skewness", std::to_string(i),
                                  "", fmt17(st.skewness), ""}));
    sim_lines.push_back(join_csv({"std_total_kurtosis", std::to_string(i),
                                  "", fmt17(st.kurtosis), ""}));
    std::cout << "coordinate " << i << " standardized: skew "
              << fmt6(st.skewness) << ", kurt " << fmt6(st.kurtosis) << '\n';
  }
  const auto tfs = make_test_functions(split_dim, 40, o.seed + 1);
  const DiscrepancyReport disc =
      smooth_discrepancy(values, tfs, kit.exact_cov.a);
  sim_lines.push_back(join_csv({"discrepancy_max", "", "",
                                fmt17(disc.max_gap),
                                fmt17(disc.max_gap_se)}));
  sim_lines.push_back(join_csv({"discrepancy_bound_d3", "", "",
                                fmt17(d3_exact_target), ""}));
  write_lines(dir / "simulation.csv", sim_lines);
  std::cout << "max smooth-test gap " << fmt6(disc.max_gap) << " (se "
            << fmt6(disc.max_gap_se) << "), d3 bound "
            << fmt6(d3_exact_target) << '\n';
  return 0;
}

// ------------------------------------------------------------------ rates

struct RatesOpts {
  double lambda = 1.0;
  double h = 0.0;
  double ppu = 4.0;
  std::vector<std::string> marks;
  std::vector<double> t_grid = {25, 50, 100, 200, 400};
  std::string out = default_out_dir();
  std::string format = "csv";
};

int run_rates(const RatesOpts& o) {
  if (o.t_grid.size() < 2) {
    throw std::invalid_argument("--T: need at least two horizons");
  }
  oulevy::OUConfig base =
      make_ou_config({o.lambda}, o.t_grid.back(), o.h, o.ppu, 0x5EED);
  if (!o.marks.empty()) base.atoms = parse_marks(o.marks);
  const oulevy::RateTable table =
      oulevy::rate_experiment(base, o.t_grid, o.ppu);

  KV kv{{"lambda", fmt17(o.lambda)},
        {"h", fmt17(o.h)},
        {"points_per_unit", fmt17(o.ppu)},
        {"x_min", fmt17(base.x_min)},
        {"marks", join_marks(base.atoms)}};
  kv.emplace_back("slope_mean_l3", fmt17(table.slope_mean_l3));
  kv.emplace_back("slope_quad_l4", fmt17(table.slope_quad_l4));
  kv.emplace_back("slope_contract21", fmt17(table.slope_contract21));
  kv.emplace_back("slope_contract11", fmt17(table.slope_contract11));
  kv.emplace_back("slope_cross11", fmt17(table.slope_cross11));
  kv.emplace_back("slope_d3", fmt17(table.slope_d3));

  auto lines = report_header("rates", kv);
  lines.push_back("T,cells,mean_l3,quad_l4,contract21,contract11,cross11,d3");
  for (const auto& pt : table.points) {
    lines.push_back(join_csv(
        {fmt17(pt.T), std::to_string(pt.cells), fmt17(pt.mean_l3),
         fmt17(pt.quad_l4), fmt17(pt.contract21), fmt17(pt.contract11),
         fmt17(pt.cross11), fmt17(pt.d3)}));
  }
  const fs::path dir = prepare_out_dir(o.out);
  write_lines(dir / "rates.csv", lines);
  if (o.format == "text") {
    auto txt = report_header("rates", kv);
    for (const auto& pt : table.points) {
      txt.push_back("T=" + fmt6(pt.T) + "  d3=" + fmt6(pt.d3));
    }
    write_lines(dir / "rates.txt", txt);
  }
  std::cout << "slopes: mean_l3 " << fmt6(table.slope_mean_l3)
            << ", quad_l4 " << fmt6(table.slope_quad_l4) << ", contract21 "
            << fmt6(table.slope_contract21) << ", contract11 "
            << fmt6(table.slope_contract11) << ", cross11 "
            << fmt6(table.slope_cross11) << ", d3 " << fmt6(table.slope_d3)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "poischaos: chaos-expansion algebra, normal-approximation bounds, "
      "and Monte Carlo experiments on discrete Poisson spaces"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  AlgebraOpts alg;
  auto* alg_cmd = app.add_subcommand(
      "algebra", "Contract, symmetrize, or expand products of kernels");
  alg_cmd->add_option("--op", alg.op, "contract | symmetrize | product")
      ->capture_default_str();
  alg_cmd->add_option("--f", alg.f_path, "first kernel file")
      ->capture_default_str();
  alg_cmd->add_option("--g", alg.g_path, "second kernel file")
      ->capture_default_str();
  alg_cmd->add_option("--r", alg.r, "identified argument pairs")
      ->capture_default_str();
  alg_cmd->add_option("--l", alg.l, "integrated argument pairs")
      ->capture_default_str();
  alg_cmd->add_option("--out", alg.out, "output directory")
      ->capture_default_str();
  alg_cmd->add_option("--format", alg.format, "csv | text")
      ->capture_default_str();

  BoundOpts bnd;
  auto* bnd_cmd = app.add_subcommand(
      "bound", "Assemble normal-approximation bounds for kernel families");
  bnd_cmd->add_option("--kernels", bnd.kernels, "kernel files, one per coordinate")
      ->delimiter(',');
  bnd_cmd->add_option("--target", bnd.target,
                      "row-major target covariance entries (default: the "
                      "chaos covariance of the family)")
      ->delimiter(',');
  bnd_cmd->add_option("--level", bnd.level,
                      "pairing-gap route: 1 exact, 2 contraction, 3 nested")
      ->capture_default_str();
  bnd_cmd->add_option("--out", bnd.out, "output directory")
      ->capture_default_str();
  bnd_cmd->add_option("--format", bnd.format, "csv | text")
      ->capture_default_str();

  CltOpts clt;
  auto* clt_cmd = app.add_subcommand(
      "clt-check",
      "Per-horizon vanishing-norm diagnostics for the OU second-moment "
      "kernels");
  clt_cmd->add_option("--lambda", clt.lambda, "mean-reversion rate")
      ->capture_default_str();
  clt_cmd->add_option("--lag", clt.h, "lag")->capture_default_str();
  clt_cmd->add_option("--ppu", clt.ppu, "grid points per unit time")
      ->capture_default_str();
  clt_cmd->add_option("--T", clt.t_grid, "horizons")->delimiter(',');
  clt_cmd
      ->add_option("--marks", clt.marks,
                   "mark atoms as value:mass pairs (default 1:0.5,-1:0.5)")
      ->delimiter(',');
  clt_cmd->add_option("--out", clt.out, "output directory")
      ->capture_default_str();
  clt_cmd->add_option("--format", clt.format, "csv | text")
      ->capture_default_str();

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Monte Carlo sampling of chaos-expansion families");
  sim_cmd->add_option("--kernels", sim.kernels,
                      "kernel files, one single-term functional each")
      ->delimiter(',');
  sim_cmd->add_option("--expansions", sim.expansions,
                      "expansion manifest files")
      ->delimiter(',');
  sim_cmd->add_option("--reps", sim.reps, "replications")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--family-size", sim.family_size,
                      "keep only the first n coordinates (0 = all)")
      ->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "output directory")
      ->capture_default_str();
  sim_cmd->add_option("--format", sim.format, "csv | text")
      ->capture_default_str();

  OuDemoOpts dem;
  auto* dem_cmd = app.add_subcommand(
      "ou-demo",
      "Covariance and bound reports (optionally Monte Carlo) for the OU "
      "functionals");
  dem_cmd->add_option("--which", dem.which, "A | Q | Qh")
      ->capture_default_str();
  dem_cmd->add_option("--lambdas", dem.lambdas, "mean-reversion rates")
      ->delimiter(',');
  dem_cmd->add_option("--T", dem.T, "horizon")->capture_default_str();
  dem_cmd->add_option("--lag", dem.h, "lag (Qh only)")->capture_default_str();
  dem_cmd->add_option("--ppu", dem.ppu, "grid points per unit time")
      ->capture_default_str();
  dem_cmd->add_option("--reps", dem.reps,
                      "Monte Carlo replications (0 = skip simulation)")
      ->capture_default_str();
  dem_cmd->add_option("--seed", dem.seed, "RNG seed")->capture_default_str();
  dem_cmd
      ->add_option("--marks", dem.marks,
                   "mark atoms as value:mass pairs (default 1:0.5,-1:0.5)")
      ->delimiter(',');
  dem_cmd->add_option("--out", dem.out, "output directory")
      ->capture_default_str();
  dem_cmd->add_option("--format", dem.format, "csv | text")
      ->capture_default_str();

  RatesOpts rts;
  auto* rts_cmd = app.add_subcommand(
      "rates", "Decay-rate study of the OU second-moment norms and bound");
  rts_cmd->add_option("--lambda", rts.lambda, "mean-reversion rate")
      ->capture_default_str();
  rts_cmd->add_option("--lag", rts.h, "lag")->capture_default_str();
  rts_cmd->add_option("--ppu", rts.ppu, "grid points per unit time")
      ->capture_default_str();
  rts_cmd->add_option("--T", rts.t_grid, "horizons")->delimiter(',');
  rts_cmd
      ->add_option("--marks", rts.marks,
                   "mark atoms as value:mass pairs (default 1:0.5,-1:0.5)")
      ->delimiter(',');
  rts_cmd->add_option("--out", rts.out, "output directory")
      ->capture_default_str();
  rts_cmd->add_option("--format", rts.format, "csv | text")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (alg_cmd->parsed()) return run_algebra(alg);
    if (bnd_cmd->parsed()) return run_bound(bnd);
    if (clt_cmd->parsed()) return run_clt_check(clt);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (dem_cmd->parsed()) return run_ou_demo(dem);
    if (rts_cmd->parsed()) return run_rates(rts);
  } catch (const guard_error& e) {
    std::cerr << "guard: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
