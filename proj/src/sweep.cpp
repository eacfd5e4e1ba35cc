#include "wavescat/sweep.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/scene_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace wavescat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

double number_field(const json &doc, const char *key) {
  const json &v = doc.at(key);
  if (!v.is_number()) throw ConfigError(std::string("config: \"") + key + "\" must be a number");
  return v.get<double>();
}

std::pair<int, int> line_column(const std::string &text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

double min_width(const WaveguideScene &scene) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto &e : scene.ends) w = std::min(w, e.cross_section.width);
  return w;
}

struct Failure {
  std::size_t task = 0;
  double mu = 0.0;
  double R = 0.0;
  std::string what;
};

bool write_file(const fs::path &path, const std::string &content, std::ostream &err) {
  std::ofstream os(path, std::ios::binary);
  os << content;
  if (!os) {
    err << "error: cannot write " << path.string() << '\n';
    return false;
  }
  return true;
}

} // namespace

RunConfig config_from_json(const json &doc, const fs::path &base_dir) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> known{"scene", "mu", "R", "h", "zeta", "threshold_guard",
                                           "grade_corners", "element_order", "workers", "output_dir"};
  for (const auto &[key, value] : doc.items())
    if (!known.count(key)) throw ConfigError("config: unknown key \"" + key + "\"");
  RunConfig cfg;
  try {
    if (!doc.contains("scene") || !doc.at("scene").is_string())
      throw ConfigError("config: \"scene\" must be a path string");
    cfg.scene_path = base_dir / doc.at("scene").get<std::string>();

    if (!doc.contains("mu")) throw ConfigError("config: missing \"mu\"");
    const json &mu = doc.at("mu");
    if (mu.is_array()) {
      if (mu.empty()) throw ConfigError("config: \"mu\" list is empty");
      for (const auto &v : mu) {
        if (!v.is_number()) throw ConfigError("config: \"mu\" entries must be numbers");
        cfg.mu.push_back(v.get<double>());
      }
    } else if (mu.is_object()) {
      const double start = number_field(mu, "start"), stop = number_field(mu, "stop");
      if (!mu.at("count").is_number_integer()) throw ConfigError("config: \"mu.count\" must be an integer");
      const int count = mu.at("count").get<int>();
      if (count < 1) throw ConfigError("config: \"mu.count\" must be >= 1");
      if (!(start <= stop)) throw ConfigError("config: \"mu.start\" must not exceed \"mu.stop\"");
      if (count == 1 && start != stop) throw ConfigError("config: \"mu.count\" = 1 needs start == stop");
      for (int i = 0; i < count; ++i)
        cfg.mu.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
      cfg.mu_interval = std::make_pair(start, stop);
    } else {
      throw ConfigError("config: \"mu\" must be a list or {start, stop, count}");
    }
    for (double m : cfg.mu)
      if (!std::isfinite(m)) throw ConfigError("config: \"mu\" values must be finite");

    if (!doc.contains("R") || !doc.at("R").is_array() || doc.at("R").empty())
      throw ConfigError("config: \"R\" must be a nonempty list");
    for (const auto &v : doc.at("R")) {
      if (!v.is_number()) throw ConfigError("config: \"R\" entries must be numbers");
      const double R = v.get<double>();
      if (!(R > 0.0)) throw ConfigError("config: every R must be positive");
      if (!cfg.R_list.empty() && !(R > cfg.R_list.back()))
        throw ConfigError("config: \"R\" must be strictly ascending");
      cfg.R_list.push_back(R);
    }

    if (!doc.contains("h")) throw ConfigError("config: missing \"h\"");
    cfg.h = number_field(doc, "h");
    if (!(cfg.h > 0.0)) throw ConfigError("config: \"h\" must be positive");
    if (doc.contains("zeta")) cfg.zeta = number_field(doc, "zeta");
    if (cfg.zeta == 0.0 || !std::isfinite(cfg.zeta)) throw ConfigError("config: \"zeta\" must be nonzero");
    if (doc.contains("threshold_guard")) cfg.threshold_guard = number_field(doc, "threshold_guard");
    if (!(cfg.threshold_guard > 0.0)) throw ConfigError("config: \"threshold_guard\" must be positive");
    if (doc.contains("grade_corners")) {
      if (!doc.at("grade_corners").is_boolean()) throw ConfigError("config: \"grade_corners\" must be a boolean");
      cfg.grade_corners = doc.at("grade_corners").get<bool>();
    }
    if (doc.contains("element_order")) {
      if (!doc.at("element_order").is_number_integer())
        throw ConfigError("config: \"element_order\" must be 1 or 2");
      cfg.element_order = doc.at("element_order").get<int>();
      if (cfg.element_order != 1 && cfg.element_order != 2)
        throw ConfigError("config: \"element_order\" must be 1 or 2");
    }
    if (doc.contains("workers")) {
      if (!doc.at("workers").is_number_integer()) throw ConfigError("config: \"workers\" must be an integer");
      cfg.workers = doc.at("workers").get<int>();
      if (cfg.workers < 1) throw ConfigError("config: \"workers\" must be >= 1");
    }
    if (doc.contains("output_dir")) {
      if (!doc.at("output_dir").is_string()) throw ConfigError("config: \"output_dir\" must be a string");
      cfg.output_dir = base_dir / doc.at("output_dir").get<std::string>();
    } else {
      cfg.output_dir = base_dir / cfg.output_dir;
    }
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    const auto [line, col] = line_column(text, e.byte);
    std::ostringstream os;
    os << path.string() << ":" << line << ":" << col << ": malformed JSON: " << e.what();
    throw ConfigError(os.str());
  }
  return config_from_json(doc, path.parent_path());
}

std::vector<GridPointInfo> validate_grid(const RunConfig &config, const WaveguideScene &scene) {
  double mu_max = 0.0;
  for (double m : config.mu) mu_max = std::max(mu_max, m);
  if (config.mu_interval) mu_max = std::max(mu_max, config.mu_interval->second);
  const auto bases = scene_bases(scene, mu_max + config.threshold_guard);
  if (config.mu_interval) {
    const auto [lo, hi] = *config.mu_interval;
    for (const auto &b : bases)
      for (std::size_t k = 0; k < b.eigenvalues.size(); ++k) {
        const double nu = b.eigenvalues[k];
        if (nu >= lo - config.threshold_guard && nu <= hi + config.threshold_guard) {
          std::ostringstream os;
          os << "mu interval [" << lo << ", " << hi << "] contains threshold nu_" << k + 1 << " = " << nu
             << " of end " << b.end + 1 << " (guard " << config.threshold_guard << ")";
          throw ThresholdProximity(os.str(), nu, b.end, static_cast<int>(k) + 1);
        }
      }
  }
  std::vector<GridPointInfo> out;
  for (double m : config.mu) {
    const ModeSet ms = enumerate_modes(bases, m, config.threshold_guard);
    out.push_back({m, ms.M(), ms.per_end, ms.gamma_estimate});
  }
  return out;
}

namespace {

struct Prepared {
  WaveguideScene scene;
  std::vector<GridPointInfo> grid;
};

/// Shared front half of validate and run; returns an exit code on failure.
std::optional<int> prepare(const RunConfig &config, Prepared &p, std::ostream &err) {
  try {
    p.scene = load_scene(config.scene_path.string());
  } catch (const json::parse_error &e) {
    err << "error: scene " << config.scene_path.string() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception &e) {
    err << "error: scene " << config.scene_path.string() << ": " << e.what() << '\n';
    return kExitConfig;
  }
  if (const auto diags = validate_scene(p.scene); !diags.empty()) {
    for (const auto &d : diags) err << "error: scene " << config.scene_path.string() << ": " << d << '\n';
    return kExitConfig;
  }
  if (!(config.h < min_width(p.scene) / 4.0)) {
    err << "error: h = " << config.h << " must be below min(width)/4 = " << min_width(p.scene) / 4.0 << '\n';
    return kExitConfig;
  }
  try {
    p.grid = validate_grid(config, p.scene);
  } catch (const ThresholdProximity &e) {
    err << "error: threshold violation: " << e.what() << '\n';
    return kExitThreshold;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return std::nullopt;
}

} // namespace

int validate_command(const RunConfig &config, std::ostream &out, std::ostream &err) {
  Prepared p;
  if (auto code = prepare(config, p, err)) return *code;
  out << "scene " << p.scene.name << ": " << p.scene.ends.size() << " ends, "
      << config.mu.size() << " mu values, " << config.R_list.size() << " R values\n";
  for (const auto &g : p.grid) {
    out << "mu = " << g.mu << "  M = " << g.M << "  (";
    for (std::size_t e = 0; e < g.per_end.size(); ++e) out << (e ? ", " : "") << g.per_end[e];
    out << ")  gamma_estimate = " << g.gamma_estimate << '\n';
  }
  return kExitOk;
}

MuSummary summarize_mu(std::span<const ScatteringResult> results) {
  MuSummary s;
  if (results.empty()) return s;
  s.mu = results.front().mu;
  s.M = results.front().modes.M();
  s.gamma_estimate = results.front().modes.gamma_estimate;
  s.unitarity_defect_at_max_R = results.back().unitarity_defect;
  s.cond_E_min = s.cond_E_max = results.front().cond_E;
  s.min_eig_E_min = results.front().min_eig_E;
  for (const auto &r : results) {
    s.cond_E_min = std::min(s.cond_E_min, r.cond_E);
    s.cond_E_max = std::max(s.cond_E_max, r.cond_E);
    s.min_eig_E_min = std::min(s.min_eig_E_min, r.min_eig_E);
  }
  if (s.gamma_estimate > 0.0) s.points = convergence_points(results, 2.0 / s.gamma_estimate);
  if (results.size() < 4) {
    s.fit_status = "fewer than 4 values of R";
    return s;
  }
  try {
    s.study = convergence_study(results);
    s.fit_status = s.study->error_fit.floor_limited ? "floor-limited" : "ok";
  } catch (const FitError &e) {
    s.fit_status = e.what();
  }
  return s;
}

void write_results_csv(std::ostream &os, std::span<const ScatteringResult> results, bool complete) {
  os << "mu,R,h,zeta,l,j,re_S,im_S,J_l,unitarity_defect,cond_E,min_norm_l\n";
  for (const auto &r : results) {
    const int M = r.modes.M();
    for (int l = 0; l < M; ++l)
      for (int j = 0; j < M; ++j)
        os << num(r.mu) << ',' << num(r.R) << ',' << num(r.h) << ',' << num(r.zeta) << ',' << l + 1
           << ',' << j + 1 << ',' << num(r.S(l, j).real()) << ',' << num(r.S(l, j).imag()) << ','
           << num(r.J(l)) << ',' << num(r.unitarity_defect) << ',' << num(r.cond_E) << ','
           << num(r.minimizer_norms(l)) << '\n';
  }
  if (!complete) os << "# INCOMPLETE\n";
}

void write_convergence_csv(std::ostream &os, std::span<const MuSummary> summaries, bool complete) {
  os << "mu,R,err_fro,J_max,lambda_hat,two_gamma_hat\n";
  for (const auto &s : summaries) {
    std::string lam = "nan", tg = "nan";
    if (s.study) {
      const auto &st = *s.study;
      lam = st.error_fit.floor_limited ? "floor-limited" : num(st.error_fit.rate);
      if (st.J_fit) tg = st.J_fit->floor_limited ? "floor-limited" : num(st.J_fit->rate);
    }
    for (const auto &pt : s.points)
      os << num(s.mu) << ',' << num(pt.R) << ',' << num(pt.err_fro) << ',' << num(pt.J_max) << ',' << lam
         << ',' << tg << '\n';
  }
  if (!complete) os << "# INCOMPLETE\n";
}

json summary_json(std::span<const MuSummary> summaries, const RunConfig &config, bool complete) {
  json doc;
  doc["complete"] = complete;
  doc["scene"] = config.scene_path.filename().string();
  doc["h"] = config.h;
  doc["zeta"] = config.zeta;
  doc["element_order"] = config.element_order;
  doc["grade_corners"] = config.grade_corners;
  doc["R"] = config.R_list;
  json points = json::array();
  for (const auto &s : summaries) {
    json p;
    p["mu"] = s.mu;
    p["M"] = s.M;
    p["gamma_estimate"] = s.gamma_estimate;
    p["unitarity_defect_at_max_R"] = s.unitarity_defect_at_max_R;
    p["cond_E"] = {{"min", s.cond_E_min}, {"max", s.cond_E_max}};
    p["min_eig_E"] = s.min_eig_E_min;
    p["fit_status"] = s.fit_status;
    p["lambda_hat"] = nullptr;
    p["two_gamma_hat"] = nullptr;
    if (s.study) {
      const auto &f = s.study->error_fit;
      if (f.floor_limited) {
        p["lambda_hat"] = "floor-limited";
      } else {
        p["lambda_hat"] = f.rate;
        p["lambda_fit_residual"] = f.residual;
      }
      if (s.study->J_fit) {
        if (s.study->J_fit->floor_limited)
          p["two_gamma_hat"] = "floor-limited";
        else
          p["two_gamma_hat"] = s.study->J_fit->rate;
      }
    }
    points.push_back(std::move(p));
  }
  doc["points"] = std::move(points);
  return doc;
}

void write_plot_script(std::ostream &os, std::span<const MuSummary> summaries) {
  int M = 0;
  for (const auto &s : summaries) M = std::max(M, s.M);
  os << "# gnuplot script; run from the output directory: gnuplot plots.gp\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 900,600\n\n"
     << "set output 'err_vs_R.png'\n"
     << "set logscale y\n"
     << "set xlabel 'R'\n"
     << "set ylabel '||S^R - S^{R_ref}||_F'\n"
     << "set key outside right\n";
  bool first = true;
  for (const auto &s : summaries) {
    if (s.points.empty()) continue;
    os << (first ? "plot " : ", \\\n     ") << "'convergence.csv' every ::1 using "
       << "(abs($1 - " << num(s.mu) << ") < 1e-12 ? $2 : 1/0):3 with linespoints title 'mu = " << s.mu
       << "'";
    first = false;
  }
  if (first) os << "# no convergence data\n";
  os << "\n\nunset logscale y\n"
     << "set output 'S_vs_mu.png'\n"
     << "set xlabel 'mu'\n"
     << "set ylabel '|S_{lj}| at the largest R'\n"
     << "Rmax = system(\"awk -F, 'NR > 1 && $2 + 0 > m { m = $2 + 0 } END { printf \\\"%.17g\\\", m }' results.csv\") + 0\n";
  first = true;
  for (int l = 1; l <= M; ++l)
    for (int j = 1; j <= M; ++j) {
      os << (first ? "plot " : ", \\\n     ") << "'results.csv' every ::1 using "
         << "(abs($2 - Rmax) < 1e-12 && $5 == " << l << " && $6 == " << j
         << " ? $1 : 1/0):(sqrt($7**2 + $8**2)) with linespoints title '|S_{" << l << j << "}|'";
      first = false;
    }
  os << '\n';
}

int run_command(const RunConfig &config, std::ostream &out, std::ostream &err) {
  Prepared p;
  if (auto code = prepare(config, p, err)) return *code;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    err << "error: cannot create output directory " << config.output_dir.string() << ": " << ec.message() << '\n';
    return kExitConfig;
  }

  const std::size_t nR = config.R_list.size();
  const std::size_t tasks = config.mu.size() * nR;
  std::vector<std::optional<ScatteringResult>> results(tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mtx;
  std::optional<Failure> failure;

  const auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      ScatteringParams sp;
      sp.mu = config.mu[t / nR];
      sp.R = config.R_list[t % nR];
      sp.h = config.h;
      sp.zeta = config.zeta;
      sp.grade_corners = config.grade_corners;
      sp.element_order = config.element_order;
      sp.threshold_guard = config.threshold_guard;
      try {
        results[t] = compute_scattering(p.scene, sp);
      } catch (const std::exception &e) {
        std::lock_guard<std::mutex> lock(mtx);
        if (!failure || t < failure->task) failure = Failure{t, sp.mu, sp.R, e.what()};
        abort.store(true);
        return;
      }
    }
  };
  const int nworkers = std::max(1, std::min<int>(config.workers, static_cast<int>(tasks)));
  std::vector<std::thread> pool;
  for (int w = 1; w < nworkers; ++w) pool.emplace_back(worker);
  worker();
  for (auto &th : pool) th.join();

  const bool complete = !failure;
  std::vector<ScatteringResult> done;
  std::vector<MuSummary> summaries;
  for (std::size_t m = 0; m < config.mu.size(); ++m) {
    std::vector<ScatteringResult> row;
    for (std::size_t r = 0; r < nR; ++r)
      if (results[m * nR + r]) row.push_back(*results[m * nR + r]);
    done.insert(done.end(), row.begin(), row.end());
    if (row.size() == nR) summaries.push_back(summarize_mu(row));
  }

  std::ostringstream res_csv, conv_csv, plot;
  write_results_csv(res_csv, done, complete);
  write_convergence_csv(conv_csv, summaries, complete);
  write_plot_script(plot, summaries);
  json summary = summary_json(summaries, config, complete);
  if (failure) summary["failure"] = {{"mu", failure->mu}, {"R", failure->R}, {"message", failure->what}};
  bool ok = write_file(config.output_dir / "results.csv", res_csv.str(), err);
  ok = write_file(config.output_dir / "convergence.csv", conv_csv.str(), err) && ok;
  ok = write_file(config.output_dir / "summary.json", summary.dump(2) + "\n", err) && ok;
  ok = write_file(config.output_dir / "plots.gp", plot.str(), err) && ok;

  if (failure) {
    err << "error: numerical failure at mu = " << failure->mu << ", R = " << failure->R << ": " << failure->what
        << '\n';
    return kExitNumerical;
  }
  if (!ok) return kExitConfig;
  for (const auto &s : summaries) {
    out << "mu = " << s.mu << "  M = " << s.M << "  defect(max R) = " << s.unitarity_defect_at_max_R
        << "  cond(E) in [" << s.cond_E_min << ", " << s.cond_E_max << "]";
    if (s.study && !s.study->error_fit.floor_limited) out << "  lambda_hat = " << s.study->error_fit.rate;
    out << "  (" << s.fit_status << ")\n";
  }
  out << "wrote " << (config.output_dir / "results.csv").string() << '\n';
  return kExitOk;
}

} // namespace wavescat
