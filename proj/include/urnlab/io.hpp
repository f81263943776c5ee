#pragma once

#include "urnlab/assumptions.hpp"
#include "urnlab/asymptotics.hpp"
#include "urnlab/finance.hpp"
#include "urnlab/mean_field.hpp"
#include "urnlab/montecarlo.hpp"
#include "urnlab/polya.hpp"
#include "urnlab/urn.hpp"

#include <json.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace urnlab {

using nlohmann::json;

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// All file outputs go through temp + rename so readers never see partial
// content.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(bool(out), "io.write", "cannot open " + tmp.string());
    out << content;
    require(bool(out), "io.write", "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Single-writer guard for an output directory.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir)
      : path_(dir / ".urnlab.lock") {
    std::filesystem::create_directories(dir);
    if (std::filesystem::exists(path_))
      throw Error("io.locked", "output directory is locked by " +
                                   path_.string() +
                                   " (another instance running?)");
    std::ofstream out(path_);
    require(bool(out), "io.write", "cannot create lock file");
    out << "pid " << ::getpid() << "\n";
    held_ = true;
  }
  ~DirLock() {
    if (held_) {
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
  bool held_ = false;
};

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// --- trajectory / allocation CSV ------------------------------------------

inline std::string trajectory_csv(const Trajectory& t) {
  int d = t.dim();
  std::ostringstream os;
  os << "n";
  for (int i = 1; i <= d; ++i) os << ",y" << i;
  for (int i = 1; i <= d; ++i) os << ",ny" << i;
  os << "\n";
  for (size_t r = 0; r < t.ns.size(); ++r) {
    os << t.ns[r];
    for (int i = 0; i < d; ++i) os << ',' << fmt_g17(t.ytilde[r](i));
    for (int i = 0; i < d; ++i)
      os << ',' << (r < t.nfreq.size() ? fmt_g17(t.nfreq[r](i)) : "");
    os << "\n";
  }
  return os.str();
}

inline std::string allocation_csv(const AllocationTrajectory& a) {
  int d = a.base.dim();
  std::ostringstream os;
  os << "n";
  for (int i = 1; i <= d; ++i) os << ",y" << i;
  for (int i = 1; i <= d; ++i) os << ",ny" << i;
  for (int i = 1; i <= d; ++i) os << ",pi" << i;
  os << ",hdist\n";
  for (size_t r = 0; r < a.base.ns.size(); ++r) {
    os << a.base.ns[r];
    for (int i = 0; i < d; ++i) os << ',' << fmt_g17(a.base.ytilde[r](i));
    for (int i = 0; i < d; ++i) os << ',' << fmt_g17(a.base.nfreq[r](i));
    for (int i = 0; i < d; ++i) os << ',' << fmt_g17(a.pi[r](i));
    os << ',' << fmt_g17(a.hdist[r]) << "\n";
  }
  return os.str();
}

inline std::string finals_csv(const BatchResult& b) {
  std::ostringstream os;
  os << "run";
  for (int i = 1; i <= b.dim; ++i) os << ",y" << i;
  for (int i = 1; i <= b.dim; ++i) os << ",ny" << i;
  os << "\n";
  for (int r = 0; r < b.runs(); ++r) {
    os << r;
    for (int i = 0; i < b.dim; ++i) os << ',' << fmt_g17(b.final_ytilde[r](i));
    for (int i = 0; i < b.dim; ++i)
      os << ','
         << (b.final_nfreq[r].size() ? fmt_g17(b.final_nfreq[r](i)) : "");
    os << "\n";
  }
  return os.str();
}

// Per-run endpoint classification: run,endpoint_label,final_y1,...
inline std::string endpoints_csv(const BatchResult& b,
                                 const std::vector<Vec>& attractors,
                                 const std::vector<std::string>& labels,
                                 double eps) {
  std::ostringstream os;
  os << "run,endpoint_label";
  for (int i = 1; i <= b.dim; ++i) os << ",final_y" << i;
  os << "\n";
  for (int r = 0; r < b.runs(); ++r) {
    std::string label = "unresolved";
    for (size_t a = 0; a < attractors.size(); ++a)
      if ((b.final_ytilde[r] - attractors[a]).norm() < eps) label = labels[a];
    os << r << ',' << label;
    for (int i = 0; i < b.dim; ++i) os << ',' << fmt_g17(b.final_ytilde[r](i));
    os << "\n";
  }
  return os.str();
}

// --- scan CSV ---------------------------------------------------------------

inline std::string scan_csv(const AlphaScan& scan) {
  std::ostringstream os;
  os << "alpha,count,root1,stab1,root2,stab2,root3,stab3\n";
  for (const auto& row : scan.rows) {
    os << fmt_g17(row.alpha) << ',' << row.count;
    for (size_t i = 0; i < 3; ++i) {
      if (i < row.roots.size())
        os << ',' << fmt_g17(row.roots[i]) << ','
           << stability_name(row.stabilities[i]);
      else
        os << ",,";
    }
    os << "\n";
  }
  return os.str();
}

// --- JSON reports -----------------------------------------------------------

inline json to_json(const EquilibriumReport& rep) {
  json pts = json::array();
  for (const auto& p : rep.points) {
    json spectrum = json::array();
    for (auto ev : p.jacobian_spectrum)
      spectrum.push_back({{"re", ev.real()}, {"im", ev.imag()}});
    json pt = {{"y", vec_to_json(p.y)},
               {"stability", stability_name(p.stability)},
               {"jacobian_spectrum_tangent", spectrum}};
    if (p.y.size() == 2) {
      pt["h1_deriv"] = p.h1_deriv;
      pt["h1_second_deriv"] = p.h1_second_deriv;
    }
    pts.push_back(std::move(pt));
  }
  return {{"points", pts}, {"discarded_starts", rep.discarded_starts}};
}

inline json to_json(const AlphaScan& scan) {
  json rows = json::array();
  for (const auto& row : scan.rows) {
    json roots = json::array(), stabs = json::array();
    for (double r : row.roots) roots.push_back(r);
    for (auto s : row.stabilities) stabs.push_back(stability_name(s));
    rows.push_back({{"alpha", row.alpha},
                    {"count", row.count},
                    {"roots", roots},
                    {"stabilities", stabs}});
  }
  json out = {{"rows", rows}};
  if (std::isfinite(scan.alpha_star)) out["alpha_star"] = scan.alpha_star;
  return out;
}

inline json to_json(const CltPrediction& p) {
  json out = {{"y_star", vec_to_json(p.y_star)},
              {"lambda", p.lambda},
              {"regime", regime_name(p.regime.regime)},
              {"v_n", p.regime.vn.label()},
              {"gamma", mat_to_json(p.gamma)},
              {"gamma_psd", p.gamma_psd}};
  if (p.regime.regime == Regime::Clt) {
    out["sigma_tangent"] = mat_to_json(p.sigma_tangent);
    out["sigma2"] = p.sigma2;
    out["var_y1_pred"] = p.var_y1_pred;
  }
  return out;
}

inline json to_json(const CltCheckReport& r) {
  return {{"empirical_var", r.empirical_var},
          {"predicted_sigma2", r.predicted_sigma2},
          {"ratio", r.ratio},
          {"mean_proj", r.mean_proj},
          {"normality",
           {{"z_skew", r.normality.z_skew},
            {"z_kurt", r.normality.z_kurt},
            {"k2", r.normality.k2},
            {"pass_at_1pct", r.normality.pass_at_1pct}}},
          {"retained", r.retained},
          {"excluded", r.excluded}};
}

inline json to_json(const RateReport& r) {
  return {{"median_slope", r.median_slope},
          {"slope_q10", r.slope_q10},
          {"slope_q90", r.slope_q90},
          {"upsilon_n_lambda", r.upsilon},
          {"upsilon_n_one_minus_lambda", r.upsilon_gap},
          {"frac_positive", r.frac_positive},
          {"excluded", r.excluded},
          {"retained", r.retained}};
}

inline json to_json(const AssumptionReport& rep) {
  json out;
  for (const auto& [name, c] : rep.checks) {
    json entry = {{"statistic", c.statistic}, {"detail", c.detail}};
    if (c.pass.has_value())
      entry["pass"] = *c.pass;
    else {
      entry["pass"] = nullptr;
      entry["inconclusive"] = true;
    }
    out[name] = std::move(entry);
  }
  return out;
}

inline json to_json(const DirichletReport& rep) {
  json marginals = json::array();
  for (const auto& rows : rep.marginals) {
    json mj = json::array();
    for (const auto& m : rows)
      mj.push_back({{"k", m.k},
                    {"empirical", m.empirical},
                    {"expected", m.expected},
                    {"se", m.se},
                    {"pass_3se", m.pass}});
    marginals.push_back(std::move(mj));
  }
  json out = {{"runs", rep.runs},
              {"marginal_moments", marginals},
              {"moments_pass", rep.moments_pass}};
  if (std::isfinite(rep.ks_statistic)) {
    out["ks_statistic"] = rep.ks_statistic;
    out["ks_p_value"] = rep.ks_p_value;
    out["ks_pass_at_1pct"] = rep.ks_pass;
  }
  return out;
}

inline std::string code_version() {
#ifdef URNLAB_VERSION
  return URNLAB_VERSION;
#else
  return "0.1.0";
#endif
}

inline json make_manifest(const std::string& command, const json& config,
                          std::uint64_t seed) {
  return {{"schema_version", 1},
          {"command", command},
          {"config", config},
          {"config_hash", fnv1a64(config.dump())},
          {"master_seed", seed},
          {"code_version", code_version()},
          {"created_unix", std::time(nullptr)}};
}

}  // namespace urnlab
