// qie: batch experiment runner over the pattern / map-search / symmetric-space
// / building libraries.  Single binary with subcommands; every run emits a
// schema-versioned JSON report (byte-identical for identical config) plus a
// plot-ready CSV for series-valued verbs, and exits 0 iff all checks in scope
// pass.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <cmath>

#include "qie/arrangement.hpp"
#include "qie/building.hpp"
#include "qie/pattern_maps.hpp"
#include "qie/sampling.hpp"
#include "qie/suite.hpp"
#include "qie/symspace.hpp"

namespace {

constexpr const char* kArtifactVersion = "0.1.0";
constexpr const char* kReportSchema = "qie-report/1";

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Report envelope
// ---------------------------------------------------------------------------

class Report {
 public:
  Report(std::string command, ordered_json config)
      : command_(std::move(command)), config_(std::move(config)) {}

  void check(const std::string& name, bool pass, ordered_json measured,
             ordered_json tolerance) {
    ordered_json c;
    c["name"] = name;
    c["status"] = pass ? "pass" : "fail";
    c["measured"] = std::move(measured);
    c["tolerance"] = std::move(tolerance);
    checks_.push_back(std::move(c));
    all_pass_ = all_pass_ && pass;
    if (!pass) failed_.push_back(name);
  }

  void payload(ordered_json p) { payload_ = std::move(p); }
  void series(std::string header, std::vector<std::string> rows) {
    csv_header_ = std::move(header);
    csv_rows_ = std::move(rows);
  }

  [[nodiscard]] bool all_pass() const { return all_pass_; }
  [[nodiscard]] const std::vector<std::string>& failed() const { return failed_; }

  [[nodiscard]] ordered_json json() const {
    ordered_json j;
    j["schema"] = kReportSchema;
    j["version"] = kArtifactVersion;
    j["command"] = command_;
    j["config"] = config_;
    j["checks"] = checks_;
    j["all_checks_pass"] = all_pass_;
    j["payload"] = payload_;
    return j;
  }

  [[nodiscard]] bool has_series() const { return !csv_header_.empty(); }
  [[nodiscard]] std::string csv() const {
    std::ostringstream os;
    os << csv_header_ << "\n";
    for (const auto& r : csv_rows_) os << r << "\n";
    return os.str();
  }

 private:
  std::string command_;
  ordered_json config_;
  ordered_json checks_ = ordered_json::array();
  ordered_json payload_ = ordered_json::object();
  std::string csv_header_;
  std::vector<std::string> csv_rows_;
  std::vector<std::string> failed_;
  bool all_pass_ = true;
};

std::string default_out_name(const std::string& command) {
  std::string name = command;
  for (char& c : name) {
    if (c == ' ') c = '-';
  }
  return name + "-report.json";
}

std::string resolve_out(const std::string& out, const std::string& command) {
  std::string path = out.empty() ? default_out_name(command) : out;
  const char* dir = std::getenv("QIE_OUT_DIR");
  bool is_relative = path.empty() || (path[0] != '/');
  if (dir != nullptr && *dir != '\0' && is_relative) {
    std::string d = dir;
    if (d.back() != '/') d += '/';
    path = d + path;
  }
  return path;
}

std::string csv_path_for(const std::string& json_path) {
  std::string p = json_path;
  std::size_t dot = p.rfind('.');
  std::size_t slash = p.rfind('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    p.resize(dot);
  }
  return p + ".csv";
}

/// Writes the report (and CSV when present), prints the human summary, and
/// returns the process exit code: 0 iff every check passed.
int finish(const Report& report, const std::string& out_flag, const std::string& command,
           const std::string& summary) {
  std::string path = resolve_out(out_flag, command);
  {
    std::ofstream f(path);
    if (!f) {
      std::cerr << "error: cannot write report to " << path << "\n";
      return 2;
    }
    f << report.json().dump(2) << "\n";
  }
  std::string csv;
  if (report.has_series()) {
    csv = csv_path_for(path);
    std::ofstream f(csv);
    f << report.csv();
  }
  std::cout << summary;
  std::cout << "report: " << path;
  if (!csv.empty()) std::cout << "  csv: " << csv;
  std::cout << "\n";
  if (!report.all_pass()) {
    for (const auto& name : report.failed()) std::cout << "FAILED: " << name << "\n";
    return 1;
  }
  return 0;
}

ordered_json json_from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  ordered_json j;
  f >> j;
  return j;
}

/// Translation scalars on the command line: an integer "n" or a dyadic
/// rational "n/2^k" written as n/d with d a power of the prime.
qie::PadicScalar parse_translation(long prime, const std::string& text, int prec) {
  std::size_t slash = text.find('/');
  if (slash == std::string::npos) {
    return qie::padic_from_integer(prime, qie::Int(text), prec);
  }
  qie::Int num(text.substr(0, slash));
  qie::Int den(text.substr(slash + 1));
  long k = 0;
  while (den > 1 && den % prime == 0) {
    den /= prime;
    ++k;
  }
  if (den != 1) {
    throw std::runtime_error("denominator of '" + text + "' is not a power of " +
                             std::to_string(prime));
  }
  return qie::padic_dyadic(prime, num, k, prec);
}

std::string rel_position_str(const std::vector<long>& exp) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < exp.size(); ++i) os << (i ? "," : "") << exp[i];
  os << ")";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-isometric embedding laboratory"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML/INI config file");
  app.set_version_flag("--version", kArtifactVersion);

  int exit_code = 0;
  auto run = [&exit_code](auto&& body) {
    return [&exit_code, body]() {
      try {
        exit_code = body();
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 2;
      }
    };
  };

  // ---- pattern ------------------------------------------------------------
  auto* pattern = app.add_subcommand("pattern", "Weyl-pattern arrangements");
  pattern->require_subcommand(1);

  {
    auto* cmd = pattern->add_subcommand("build", "build an arrangement from a spec");
    auto spec = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--spec", *spec, "pattern spec, e.g. A2, BC3, A1xA2")->required();
    cmd->add_option("--out", *out, "report path (default <verb>-report.json)");
    cmd->callback(run([spec, out]() {
      qie::Arrangement arr = qie::parse_pattern_spec(*spec);
      Report rep("pattern build", ordered_json{{"spec", *spec}});
      ordered_json p;
      p["count"] = arr.count();
      p["arrangement"] = qie::arrangement_to_json(arr);
      rep.payload(std::move(p));
      std::ostringstream os;
      os << *spec << ": " << arr.count() << " hyperplanes, dim " << arr.dim << "\n";
      return finish(rep, *out, "pattern build", os.str());
    }));
  }
  {
    auto* cmd = pattern->add_subcommand("restrict", "restrict to a hyperplane");
    auto type = std::make_shared<std::string>();
    auto rank = std::make_shared<std::size_t>(0);
    auto hyperplane = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--type", *type, "irreducible type: A, BC, D, G2, F4, E6, E7, E8")
        ->required();
    cmd->add_option("--rank", *rank, "rank")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--hyperplane", *hyperplane, "selector, e.g. \"x1=x2\" or \"x1=0\"")
        ->required();
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([type, rank, hyperplane, out]() {
      qie::Arrangement arr = qie::build_irreducible(*type, *rank);
      std::size_t idx = qie::select_hyperplane(arr, *hyperplane);
      qie::Arrangement res = qie::restrict(arr, qie::hyperplane_subspace(arr, idx));
      Report rep("pattern restrict", ordered_json{{"type", *type},
                                                  {"rank", *rank},
                                                  {"hyperplane", *hyperplane}});
      ordered_json p;
      p["hyperplane_index"] = idx;
      p["restricted_count"] = res.count();
      p["restricted"] = qie::arrangement_to_json(res);
      rep.payload(std::move(p));
      std::ostringstream os;
      os << *type << *rank << " restricted to " << *hyperplane << ": restricted_count="
         << res.count() << "\n";
      return finish(rep, *out, "pattern restrict", os.str());
    }));
  }
  {
    auto* cmd = pattern->add_subcommand("count", "hyperplane count of a spec");
    auto spec = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--spec", *spec, "pattern spec")->required();
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([spec, out]() {
      qie::Arrangement arr = qie::parse_pattern_spec(*spec);
      std::size_t oracle = 0;
      bool oracle_ok = true;
      for (const auto& f : arr.factors) oracle += qie::positive_root_count_oracle(f.type, f.rank);
      oracle_ok = oracle == arr.count();
      Report rep("pattern count", ordered_json{{"spec", *spec}});
      rep.check("count-matches-oracle", oracle_ok, arr.count(), oracle);
      rep.payload(ordered_json{{"count", arr.count()}, {"oracle", oracle}});
      std::ostringstream os;
      os << *spec << ": count=" << arr.count() << " oracle=" << oracle << "\n";
      return finish(rep, *out, "pattern count", os.str());
    }));
  }

  // ---- maps ---------------------------------------------------------------
  auto* maps = app.add_subcommand("maps", "pattern-preserving linear maps");
  maps->require_subcommand(1);

  {
    auto* cmd = maps->add_subcommand("check", "check one map for preservation");
    auto src = std::make_shared<std::string>();
    auto dst = std::make_shared<std::string>();
    auto map_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--src", *src, "source pattern spec")->required();
    cmd->add_option("--dst", *dst, "target pattern spec")->required();
    cmd->add_option("--map", *map_path, "JSON file with the rational matrix")->required();
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([src, dst, map_path, out]() {
      qie::Arrangement s = qie::parse_pattern_spec(*src);
      qie::Arrangement d = qie::parse_pattern_spec(*dst);
      qie::RatMat m = qie::matrix_from_json(json_from_file(*map_path));
      qie::PreserveDecision dec = qie::is_pattern_preserving(m, s, d);
      Report rep("maps check",
                 ordered_json{{"src", *src}, {"dst", *dst}, {"map", *map_path}});
      rep.check("pattern-preserving", dec.preserving,
                dec.preserving ? ordered_json("preserving") : ordered_json(dec.reason),
                "every source hyperplane maps onto/into the target pattern");
      ordered_json p;
      p["preserving"] = dec.preserving;
      if (!dec.preserving) p["reason"] = dec.reason;
      if (dec.preserving) {
        p["assignment"] = dec.assignment;
        qie::FactorImageReport fi = qie::factor_image(m, s, d);
        rep.check("factor-image-total", fi.total,
                  fi.total ? ordered_json(fi.image) : ordered_json(fi.violation),
                  "each source factor lands in one target factor");
        p["factor_image"] = fi.image;
        if (fi.total) p["conformal_per_factor"] = qie::is_conformal_per_factor(m, s, d);
      }
      rep.payload(std::move(p));
      std::ostringstream os;
      os << *src << " -> " << *dst << ": "
         << (dec.preserving ? "pattern-preserving" : "NOT preserving") << "\n";
      return finish(rep, *out, "maps check", os.str());
    }));
  }
  {
    auto* cmd = maps->add_subcommand("search", "exhaustive preserver search");
    auto src = std::make_shared<std::string>();
    auto dst = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto cap = std::make_shared<std::size_t>(4);
    auto injective = std::make_shared<bool>(false);
    cmd->add_option("--src", *src, "source pattern spec")->required();
    cmd->add_option("--dst", *dst, "target pattern spec")->required();
    cmd->add_option("--rank-cap", *cap, "total rank cap per side (default 4)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--allow-injective", *injective, "enable d_source < d_target searches");
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([src, dst, out, cap, injective]() {
      qie::Arrangement s = qie::parse_pattern_spec(*src);
      qie::Arrangement d = qie::parse_pattern_spec(*dst);
      qie::SearchConfig config;
      config.rank_cap = *cap;
      config.allow_injective = *injective;
      auto certs = qie::search_preservers(s, d, config);
      Report rep("maps search", ordered_json{{"src", *src},
                                             {"dst", *dst},
                                             {"rank_cap", *cap},
                                             {"allow_injective", *injective}});
      ordered_json list = ordered_json::array();
      for (const auto& c : certs) list.push_back(qie::certificate_to_json(c));
      ordered_json p;
      p["certificates"] = std::move(list);
      p["count"] = certs.size();
      p["exhaustive"] = true;  // the search enumerates all assignments within the cap
      rep.payload(std::move(p));
      std::ostringstream os;
      os << *src << " -> " << *dst << ": " << certs.size()
         << " certificates, exhaustive=true\n";
      return finish(rep, *out, "maps search", os.str());
    }));
  }
  {
    auto* cmd = maps->add_subcommand("enumerate", "known-symmetry preserver oracle");
    auto spec = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--spec", *spec, "pattern spec")->required();
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([spec, out]() {
      qie::Arrangement arr = qie::parse_pattern_spec(*spec);
      auto list = qie::enumerate_symmetry_preservers(arr);
      Report rep("maps enumerate", ordered_json{{"spec", *spec}});
      ordered_json ms = ordered_json::array();
      for (const auto& m : list) ms.push_back(qie::matrix_to_json(m));
      rep.payload(ordered_json{{"count", list.size()}, {"maps", std::move(ms)}});
      std::ostringstream os;
      os << *spec << ": " << list.size() << " symmetry preservers\n";
      return finish(rep, *out, "maps enumerate", os.str());
    }));
  }

  // ---- anmap --------------------------------------------------------------
  auto* anmap = app.add_subcommand("anmap", "continuous AN-map laboratory");
  anmap->require_subcommand(1);

  {
    auto* cmd = anmap->add_subcommand(
        "eval", "evaluate the AN-map at one point, or sample a seeded point cloud");
    auto t = std::make_shared<double>(0.0);
    auto x = std::make_shared<double>(0.0);
    auto s = std::make_shared<double>(0.0);
    auto z = std::make_shared<double>(0.0);
    auto count = std::make_shared<std::size_t>(0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto box = std::make_shared<double>(5.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--t", *t, "first factor diagonal parameter");
    cmd->add_option("--x", *x, "first factor horospherical parameter");
    cmd->add_option("--s", *s, "second factor diagonal parameter");
    cmd->add_option("--z", *z, "second factor horospherical parameter");
    auto* seed_opt = cmd->add_option("--seed", *seed, "cloud sampling seed");
    cmd->add_option("--count", *count, "sample a cloud of this many points instead")
        ->needs(seed_opt);
    cmd->add_option("--box", *box, "cloud coordinate box (default 5)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([t, x, s, z, count, seed, box, out]() {
      if (*count > 0) {
        // Point-cloud mode: seeded source points against the basepoint, with
        // the product source distance and the image distance per row.
        std::mt19937_64 gen(*seed);
        const qie::H2Point origin{0.0, 0.0};
        const qie::SymPoint base = qie::an_map(origin, origin);
        Report rep("anmap eval", ordered_json{{"count", *count},
                                              {"seed", *seed},
                                              {"box", *box}});
        std::vector<std::string> rows;
        double max_ratio = 0.0;
        for (std::size_t i = 0; i < *count; ++i) {
          qie::H2Point p1{qie::uniform_in(gen, -*box, *box),
                          qie::uniform_in(gen, -*box, *box)};
          qie::H2Point p2{qie::uniform_in(gen, -*box, *box),
                          qie::uniform_in(gen, -*box, *box)};
          double d_src = std::hypot(qie::dist_h2(origin, p1), qie::dist_h2(origin, p2));
          double d_dst = qie::dist_sym(base, qie::an_map(p1, p2));
          if (d_src > 0) max_ratio = std::max(max_ratio, d_dst / d_src);
          std::ostringstream r;
          r << p1.t << "," << p2.t << "," << p1.x << "," << p2.x << "," << d_src << ","
            << d_dst;
          rows.push_back(r.str());
        }
        rep.payload(ordered_json{{"count", *count}, {"max_ratio", max_ratio}});
        rep.series("t,s,x,z,d_src,d_dst", std::move(rows));
        std::ostringstream os;
        os << "sampled " << *count << " cloud points in box " << *box
           << ", max distortion ratio " << max_ratio << "\n";
        return finish(rep, *out, "anmap eval", os.str());
      }
      qie::SymPoint p = qie::an_map(qie::H2Point{*t, *x}, qie::H2Point{*s, *z});
      Report rep("anmap eval",
                 ordered_json{{"t", *t}, {"x", *x}, {"s", *s}, {"z", *z}});
      ordered_json rows = ordered_json::array();
      for (int i = 0; i < 3; ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < 3; ++j) row.push_back(p.rep(i, j).real());
        rows.push_back(std::move(row));
      }
      rep.payload(ordered_json{{"rep", std::move(rows)}});
      std::ostringstream os;
      os << "an_map(" << *t << "," << *x << ";" << *s << "," << *z << ") evaluated\n";
      return finish(rep, *out, "anmap eval", os.str());
    }));
  }
  {
    auto* cmd = anmap->add_subcommand("fit", "fit two-sided distortion constants");
    auto seed = std::make_shared<std::uint64_t>();
    auto pairs = std::make_shared<std::size_t>(10000);
    auto box = std::make_shared<double>(5.0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--seed", *seed, "sampling seed (mandatory)")->required();
    cmd->add_option("--pairs", *pairs, "sample count (default 10000)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--box", *box, "coordinate box (default 5)")->check(CLI::PositiveNumber);
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([seed, pairs, box, out]() {
      auto samples = qie::sample_an_map_pairs(*seed, *pairs, *box);
      qie::QiFitResult fit = qie::fit_qi_constants(samples);
      Report rep("anmap fit",
                 ordered_json{{"seed", *seed}, {"pairs", *pairs}, {"box", *box}});
      rep.check("train-violations", fit.train_violations == 0, fit.train_violations, 0);
      rep.payload(qie::fit_result_json(fit));
      std::vector<std::string> rows;
      for (const auto& fp : fit.frontier) {
        std::ostringstream r;
        r << fp.l << "," << fp.c;
        rows.push_back(r.str());
      }
      rep.series("l,c", std::move(rows));
      std::ostringstream os;
      os << "fitted L=" << fit.l << " C=" << fit.c << " (knee " << fit.knee_l << ","
         << fit.knee_c << ") on " << samples.size() << " pairs\n";
      return finish(rep, *out, "anmap fit", os.str());
    }));
  }
  {
    auto* cmd = anmap->add_subcommand("flat", "vertical-flat image diagnostics");
    auto x0 = std::make_shared<double>(0.0);
    auto z0 = std::make_shared<double>(0.0);
    auto radius = std::make_shared<double>(5.0);
    auto tol = std::make_shared<double>(1e-9);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--x0", *x0, "first horospherical coordinate (default 0)");
    cmd->add_option("--z0", *z0, "second horospherical coordinate (default 0)");
    cmd->add_option("--radius", *radius, "flat radius (default 5)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", *tol, "single-flat residual tolerance (default 1e-9)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([x0, z0, radius, tol, out]() {
      qie::VerticalFlatOptions opt;
      opt.radius = *radius;
      opt.flat_tol = *tol;
      qie::VerticalFlatReport vr = qie::vertical_flat_report(*x0, *z0, opt);
      Report rep("anmap flat", ordered_json{{"x0", *x0},
                                            {"z0", *z0},
                                            {"radius", *radius},
                                            {"tol", *tol}});
      rep.check("single-flat", vr.single_flat, vr.max_residual, *tol);
      rep.check("one-wall-crossing", vr.wall_crossings == 1, vr.wall_crossings, 1);
      rep.payload(qie::vertical_report_json(vr));
      std::ostringstream os;
      os << "vertical flat: max residual " << vr.max_residual << ", wall crossings "
         << vr.wall_crossings << "\n";
      return finish(rep, *out, "anmap flat", os.str());
    }));
  }
  {
    auto* cmd = anmap->add_subcommand("nonrigid", "composed-map product-flat diagnostics");
    auto seed = std::make_shared<std::uint64_t>();
    auto horizon = std::make_shared<double>(18.0);
    auto tol = std::make_shared<double>(0.05);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--seed", *seed, "flat sampling seed (mandatory)")->required();
    cmd->add_option("--horizon", *horizon, "flag estimation ray parameter (default 18)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tol", *tol, "frame coverage tolerance in radians (default 0.05)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([seed, horizon, tol, out]() {
      qie::NonrigidFlatSpec spec = qie::sample_nonrigid_flat(*seed);
      qie::NonrigidOptions opt;
      opt.flag_horizon = *horizon;
      opt.frame_tol = *tol;
      qie::NonrigidFlatReport nr = qie::nonrigid_flat_report(spec, opt);
      Report rep("anmap nonrigid", ordered_json{{"seed", *seed},
                                                {"horizon", *horizon},
                                                {"tol", *tol}});
      rep.check("flags-at-least-7", nr.flags.size() >= 7, nr.flags.size(), 7);
      rep.check("no-common-frame", !nr.common_frame, nr.frame_margin,
                "margin above tol with verdict false");
      rep.check("growth-slope", nr.growth_slope >= 0.05, nr.growth_slope, 0.05);
      rep.payload(qie::nonrigid_report_json(nr));
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < nr.radii.size(); ++i) {
        std::ostringstream r;
        r << nr.radii[i] << "," << nr.flat_distance[i];
        rows.push_back(r.str());
      }
      rep.series("radius,flat_distance", std::move(rows));
      std::ostringstream os;
      os << "flat seed " << *seed << ": " << nr.flags.size() << " flags, common frame "
         << (nr.common_frame ? "true" : "false") << " (margin " << nr.frame_margin
         << " rad), slope " << nr.growth_slope << "\n";
      return finish(rep, *out, "anmap nonrigid", os.str());
    }));
  }

  // ---- building -----------------------------------------------------------
  auto* building = app.add_subcommand("building", "p-adic building laboratory");
  building->require_subcommand(1);

  {
    auto* cmd = building->add_subcommand("dist", "distance between two lattice classes");
    auto a_path = std::make_shared<std::string>();
    auto b_path = std::make_shared<std::string>();
    auto bfs = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--a", *a_path, "lattice JSON file")->required();
    cmd->add_option("--b", *b_path, "lattice JSON file")->required();
    cmd->add_flag("--bfs", *bfs, "cross-check against breadth-first search");
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([a_path, b_path, bfs, out]() {
      qie::LatticeClass a = qie::lattice_from_json(json_from_file(*a_path));
      qie::LatticeClass b = qie::lattice_from_json(json_from_file(*b_path));
      qie::RelPosition pos = qie::relative_position(a, b);
      long comb = qie::comb_distance_formula(a, b);
      double cat = qie::cat0_distance(a, b);
      Report rep("building dist",
                 ordered_json{{"a", *a_path}, {"b", *b_path}, {"bfs", *bfs}});
      ordered_json p;
      p["relative_position"] = pos.exp;
      p["comb_distance"] = comb;
      p["cat0_distance"] = cat;
      if (*bfs) {
        long via_bfs = qie::comb_distance_bfs(a, b, comb + 2);
        p["bfs_distance"] = via_bfs;
        rep.check("formula-equals-bfs", via_bfs == comb, via_bfs, comb);
      }
      rep.payload(std::move(p));
      std::ostringstream os;
      os << "relative position " << rel_position_str(pos.exp) << ", skeleton distance "
         << comb << ", CAT(0) distance " << cat << "\n";
      return finish(rep, *out, "building dist", os.str());
    }));
  }
  {
    auto* cmd = building->add_subcommand("anmap", "discrete AN-map image of a point");
    auto t = std::make_shared<long>(0);
    auto s = std::make_shared<long>(0);
    auto x = std::make_shared<std::string>("0");
    auto z = std::make_shared<std::string>("0");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--t", *t, "first tree level")->required();
    cmd->add_option("--x", *x, "first translation: integer or n/2^k (default 0)");
    cmd->add_option("--s", *s, "second tree level")->required();
    cmd->add_option("--z", *z, "second translation (default 0)");
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([t, s, x, z, out]() {
      int prec = 48 + static_cast<int>(std::labs(*t) + std::labs(*s));
      qie::TreeVertex u = qie::tree_vertex(2, *t, parse_translation(2, *x, prec), prec);
      qie::TreeVertex w = qie::tree_vertex(2, *s, parse_translation(2, *z, prec), prec);
      qie::LatticeClass img = qie::an_map_p(u, w);
      Report rep("building anmap",
                 ordered_json{{"t", *t}, {"x", *x}, {"s", *s}, {"z", *z}});
      ordered_json p;
      p["image"] = qie::lattice_json(img);
      p["position_from_base"] = qie::relative_position(qie::base_lattice(2, 3), img).exp;
      rep.payload(std::move(p));
      std::ostringstream os;
      os << "image class diag exponents (" << img.diag[0] << "," << img.diag[1] << ","
         << img.diag[2] << ")\n";
      return finish(rep, *out, "building anmap", os.str());
    }));
  }
  {
    auto* cmd = building->add_subcommand("phi", "tree self-embedding image of a vertex");
    auto level = std::make_shared<long>(0);
    auto x = std::make_shared<std::string>("0");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--level", *level, "vertex level")->required();
    cmd->add_option("--x", *x, "translation: integer or n/2^k (default 0)");
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([level, x, out]() {
      int prec = 48 + static_cast<int>(std::labs(*level));
      qie::TreeVertex v = qie::tree_vertex(2, *level, parse_translation(2, *x, prec), prec);
      qie::TreeVertex img = qie::qi_self_embedding_tree(v);
      qie::TreeChart c = qie::tree_chart(img);
      std::string translation =
          c.x.zero ? "0" : qie::padic_residue(c.x, std::max<long>(c.level, 1)).str();
      Report rep("building phi", ordered_json{{"level", *level}, {"x", *x}});
      ordered_json p;
      p["image_level"] = c.level;
      p["image_translation"] = translation;
      p["image_lattice"] = qie::lattice_json(img.lattice);
      rep.payload(std::move(p));
      std::ostringstream os;
      os << "phi(" << *level << ", " << *x << ") = level " << c.level << ", translation "
         << translation << "\n";
      return finish(rep, *out, "building phi", os.str());
    }));
  }
  {
    auto* cmd = building->add_subcommand("nonrigid", "composed discrete-map flat diagnostics");
    auto seed = std::make_shared<std::uint64_t>();
    auto baseline = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--seed", *seed, "flat sampling seed (mandatory)")->required();
    cmd->add_flag("--baseline", *baseline,
                  "run the vertical-flat control under the plain discrete AN-map");
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([seed, baseline, out]() {
      Report rep("building nonrigid",
                 ordered_json{{"seed", *seed}, {"baseline", *baseline}});
      std::ostringstream os;
      if (*baseline) {
        std::mt19937_64 gen(*seed);
        long x0 = 2 * static_cast<long>(gen() % 8) + 1;
        long z0 = 2 * static_cast<long>(gen() % 8) + 1;
        qie::BuildingNonrigidReport br = qie::building_anmap_baseline(
            qie::padic_from_integer(2, x0, 48), qie::padic_from_integer(2, z0, 48));
        rep.check("common-frame-true", br.common_frame, br.common_frame, true);
        long worst = 0;
        for (long v : br.union_sup) worst = std::max(worst, v);
        rep.check("sector-union-exact", worst == 0, worst, 0);
        rep.payload(qie::building_report_json(br));
        os << "baseline x0=" << x0 << " z0=" << z0 << ": common frame "
           << (br.common_frame ? "true" : "false") << ", union sup " << worst << "\n";
        std::vector<std::string> rows;
        for (std::size_t i = 0; i < br.radii.size(); ++i) {
          std::ostringstream r;
          r << br.radii[i] << "," << br.union_sup[i] << "," << br.apartment_floor[i];
          rows.push_back(r.str());
        }
        rep.series("radius,union_sup,apartment_floor", std::move(rows));
      } else {
        auto [g1, g2] = qie::sample_tree_flat(*seed);
        qie::BuildingNonrigidReport br = qie::building_nonrigid_report(g1, g2);
        rep.check("no-common-frame", !br.common_frame, br.frame_margin,
                  "agreement valuation below the match threshold");
        long worst_sup = 0;
        double worst_floor = 1e9;
        for (std::size_t i = 0; i < br.radii.size(); ++i) {
          worst_sup = std::max(worst_sup, br.union_sup[i]);
          worst_floor = std::min(worst_floor, static_cast<double>(br.apartment_floor[i]) /
                                                  static_cast<double>(br.radii[i]));
        }
        rep.check("sector-union-within-8", worst_sup <= 8, worst_sup, 8);
        rep.check("apartment-floor-0.1R", worst_floor >= 0.1, worst_floor, 0.1);
        rep.payload(qie::building_report_json(br));
        os << "flat seed " << *seed << ": " << br.flags.size()
           << " flags, common frame " << (br.common_frame ? "true" : "false")
           << ", sup<=" << worst_sup << ", floor>=" << worst_floor << "R\n";
        std::vector<std::string> rows;
        for (std::size_t i = 0; i < br.radii.size(); ++i) {
          std::ostringstream r;
          r << br.radii[i] << "," << br.union_sup[i] << "," << br.apartment_floor[i];
          rows.push_back(r.str());
        }
        rep.series("radius,union_sup,apartment_floor", std::move(rows));
      }
      return finish(rep, *out, "building nonrigid", os.str());
    }));
  }

  // ---- suite --------------------------------------------------------------
  auto* suite = app.add_subcommand("suite", "cross-module suites");
  suite->require_subcommand(1);
  {
    auto* cmd = suite->add_subcommand("acceptance", "run every release criterion");
    auto seed = std::make_shared<std::uint64_t>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--seed", *seed, "suite seed (mandatory)")->required();
    cmd->add_option("--out", *out, "report path");
    cmd->callback(run([seed, out]() {
      qie::AcceptanceReport ar = qie::run_acceptance(*seed);
      Report rep("suite acceptance", ordered_json{{"seed", *seed}});
      for (const auto& c : ar.criteria) {
        rep.check(c.title, c.passed, c.detail, "see suite thresholds");
      }
      rep.payload(qie::acceptance_json(ar));
      std::vector<std::string> rows;
      for (const auto& c : ar.criteria) {
        std::ostringstream r;
        r << c.index << "," << (c.passed ? 1 : 0);
        rows.push_back(r.str());
      }
      rep.series("criterion,passed", std::move(rows));
      return finish(rep, *out, "suite acceptance", qie::acceptance_text(ar));
    }));
  }

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
