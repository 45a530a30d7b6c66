// fraglab: command-line front end.
//
//   fraglab simulate  leading cluster weights of independent trees on a t-grid
//   fraglab rates     exact jump rates of the restricted chain on [n]
//   fraglab moments   Monte Carlo moments against exact values
//   fraglab ou        OU-type process: E e^{qU(t)} against the exact transform
//   fraglab theta     exact θ_{j,k} tables
//   fraglab verify    the acceptance suite
//
// Common flags: --seed --threads --n --replicas --t --q --format json|csv --out

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fraglab/harness.hpp"

namespace {

using fraglab::RunConfig;

struct Common {
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  std::size_t n = 1000000;
  std::size_t replicas = 0;
  std::vector<double> t;
  std::vector<double> q;
  std::string format = "json";
  std::string out;

  RunConfig config(bool replicas_given) const {
    RunConfig c;
    c.seed = seed;
    c.threads = threads;
    c.n = n;
    if (replicas_given) c.replicas = replicas;
    c.t_list = t;
    c.q_list = q;
    c.format = format == "csv" ? fraglab::ReportFormat::csv : fraglab::ReportFormat::json;
    c.out = out;
    c.validate();
    return c;
  }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string moments_report(const std::vector<fraglab::MomentReport>& ms, const RunConfig& cfg) {
  if (cfg.format == fraglab::ReportFormat::csv) return fraglab::moments_csv(ms);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : ms) arr.push_back(fraglab::to_json(m));
  return nlohmann::json{{"schema", fraglab::report_schema}, {"config", fraglab::config_json(cfg)}, {"moments", arr}}.dump(2) +
         "\n";
}

std::string rational_text(const fraglab::Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fragmentation of random recursive trees: simulation and exact checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  bool replicas_given = false;
  app.add_option("--seed", common.seed, "master seed");
  app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  auto* n_opt = app.add_option("--n", common.n, "tree size (rates: ground set size, 2..12)");
  auto* rep_opt = app.add_option("--replicas", common.replicas, "replicas (trees or paths)");
  app.add_option("--t", common.t, "times")->delimiter(',');
  app.add_option("--q", common.q, "exponents")->delimiter(',');
  app.add_option("--format", common.format, "report format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", common.out, "output path (default: stdout)");

  auto* simulate = app.add_subcommand("simulate", "leading cluster weights on a t-grid");
  std::size_t blocks = 5;
  simulate->add_option("--blocks", blocks, "leading blocks reported per tree")->check(CLI::Range(1, 254));

  auto* rates = app.add_subcommand("rates", "exact rate table of the restricted chain");

  auto* moments = app.add_subcommand("moments", "Monte Carlo moments against exact values");
  std::string target = "mellin_X1";
  double q2 = 0.0;
  std::size_t index = 2;
  moments->add_option("--target", target, "mellin_X1|rho_moment|total_q_moment|joint_mellin|c3_limit_moment");
  moments->add_option("--q2", q2, "joint_mellin: exponent of X_2");
  moments->add_option("--index", index, "rho_moment: vertex; c3_limit_moment: block");

  auto* ou = app.add_subcommand("ou", "OU-type process driven by the Levy process");
  double delta = 1e-3;
  bool plain = false;
  bool path = false;
  ou->add_option("--delta", delta, "small-jump truncation in (0,1]");
  ou->add_flag("--plain", plain, "compensate small jumps without the Gaussian surrogate");
  ou->add_flag("--path", path, "emit one path (CSV: time,value,jump) instead of the MGF check");

  auto* theta = app.add_subcommand("theta", "exact θ_{j,k} tables");
  std::size_t tj = 2;
  std::size_t tk = 5;
  std::string method = "general";
  theta->add_option("--j", tj, "number of parts")->check(CLI::PositiveNumber);
  theta->add_option("--k", tk, "total size")->check(CLI::PositiveNumber);
  theta->add_option("--method", method, "general|meir-moon|bruteforce")
      ->check(CLI::IsMember({"general", "meir-moon", "bruteforce"}));

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  std::vector<int> criteria;
  bool timing = false;
  verify->add_option("--criteria", criteria, "subset of criteria 1..13")->delimiter(',');
  verify->add_flag("--timing", timing, "record runtimes in the report");

  CLI11_PARSE(app, argc, argv);
  replicas_given = rep_opt->count() > 0;

  try {
    RunConfig cfg = common.config(replicas_given);
    if (simulate->parsed()) {
      if (cfg.t_list.empty()) cfg.t_list = {0.5, 1.0};
      if (cfg.t_list.size() > fraglab::ClusterGridSampler::max_grid) throw fraglab::ConfigError("at most 8 times");
      std::vector<double> grid = cfg.t_list;
      std::sort(grid.begin(), grid.end());
      const std::size_t reps = cfg.replicas_or(10);
      const auto rows = fraglab::run_replicas(reps, cfg.threads, fraglab::stream(cfg, "cli/simulate"),
                                              [] { return fraglab::ClusterGridSampler{}; },
                                              [&](fraglab::ClusterGridSampler& s, std::size_t, fraglab::Engine& rng) {
                                                return s(cfg.n, grid, rng);
                                              });
      std::string text;
      nlohmann::json arr = nlohmann::json::array();
      if (cfg.format == fraglab::ReportFormat::csv) text = "replica,t,block,size,weight\n";
      for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t g = 0; g < grid.size(); ++g) {
          const auto w = fraglab::weights_from_sizes(rows[r][g], cfg.n, grid[g]);
          for (std::size_t b = 0; b < std::min(blocks, rows[r][g].size()); ++b) {
            if (cfg.format == fraglab::ReportFormat::csv) {
              text += std::to_string(r) + "," + fraglab::detail::csv_number(grid[g]) + "," + std::to_string(b + 1) + "," +
                      std::to_string(rows[r][g][b]) + "," + fraglab::detail::csv_number(w.values[b]) + "\n";
            } else {
              arr.push_back({{"replica", r}, {"t", grid[g]}, {"block", b + 1}, {"size", rows[r][g][b]}, {"weight", w.values[b]}});
            }
          }
        }
      if (cfg.format == fraglab::ReportFormat::json)
        text = nlohmann::json{{"schema", fraglab::report_schema}, {"config", fraglab::config_json(cfg)}, {"weights", arr}}.dump(2) + "\n";
      emit(text, cfg.out);
    } else if (rates->parsed()) {
      if (n_opt->count() == 0) throw fraglab::ConfigError("rates: pass --n between 2 and 12");
      const auto table = fraglab::rate_table(cfg.n);
      if (cfg.format == fraglab::ReportFormat::csv) {
        std::string text = "pi2,num,den\n";
        for (const auto& e : table.entries) {
          std::string red;
          for (auto v : e.pi.block(2)) red += (red.empty() ? "" : " ") + std::to_string(v);
          text += red + "," + numerator(e.value).str() + "," + denominator(e.value).str() + "\n";
        }
        emit(text, cfg.out);
      } else {
        auto j = fraglab::to_json(table);
        j["schema"] = fraglab::report_schema;
        emit(j.dump(2) + "\n", cfg.out);
      }
    } else if (moments->parsed()) {
      const auto tgt = fraglab::parse_target(target);
      if (cfg.t_list.empty()) cfg.t_list = {std::numbers::ln2};
      if (cfg.q_list.empty()) cfg.q_list = {1.0, 2.0};
      std::vector<fraglab::MomentReport> out;
      for (double t : cfg.t_list)
        for (double q : cfg.q_list)
          out.push_back(fraglab::mc_moment(cfg, {tgt, q, t, q2, index}, cfg.replicas_or(500)));
      emit(moments_report(out, cfg), cfg.out);
    } else if (ou->parsed()) {
      if (cfg.t_list.empty()) cfg.t_list = {1.0};
      if (cfg.q_list.empty()) cfg.q_list = {1.0};
      const double horizon = *std::max_element(cfg.t_list.begin(), cfg.t_list.end());
      const auto lc = fraglab::build_config(delta, std::max(horizon, 1e-12), !plain);
      if (path) {
        std::vector<double> grid = cfg.t_list;
        std::sort(grid.begin(), grid.end());
        auto rng = fraglab::make_engine(cfg.seed, fraglab::stream_id("cli/ou/path"), 0);
        const auto p = fraglab::simulate_ou_path(lc, grid, rng);
        std::string text = "time,value,jump\n";
        std::size_t jump = 0;
        for (std::size_t i = 0; i < p.times.size(); ++i) {
          const bool is_jump = jump < p.jumps.size() && !std::binary_search(grid.begin(), grid.end(), p.times[i]);
          text += fraglab::detail::csv_number(p.times[i]) + "," + fraglab::detail::csv_number(p.values[i]) + "," +
                  (is_jump ? fraglab::detail::csv_number(p.jumps[jump++]) : "") + "\n";
        }
        emit(text, cfg.out);
      } else {
        std::vector<fraglab::MomentReport> out;
        const std::size_t paths = cfg.replicas_or(100000);
        for (double t : cfg.t_list) {
          const auto u = fraglab::run_replicas(paths, cfg.threads, fraglab::stream(cfg, "cli/ou"),
                                               [&](std::size_t, fraglab::Engine& rng) { return fraglab::simulate_ou(lc, t, rng); });
          for (double q : cfg.q_list) {
            std::vector<double> xs(paths);
            for (std::size_t r = 0; r < paths; ++r) xs[r] = std::exp(q * u[r]);
            auto m = fraglab::make_moment_report("ou_mgf", xs, fraglab::ou_mgf_exact(q, t), 0, t, q);
            out.push_back(std::move(m));
          }
        }
        emit(moments_report(out, cfg), cfg.out);
      }
    } else if (theta->parsed()) {
      if (tk < tj) throw fraglab::ConfigError("theta: need k >= j");
      if (method == "meir-moon" && tj != 2) throw fraglab::ConfigError("theta: the Meir-Moon formula is the j = 2 case");
      if (method == "bruteforce" && tk > fraglab::theta_bruteforce_max_k)
        throw fraglab::ConfigError("theta: brute force is limited to k <= 9");
      std::map<std::vector<std::size_t>, fraglab::Rational> brute;
      if (method == "bruteforce") brute = fraglab::theta_bruteforce_table(tj, tk);
      nlohmann::json arr = nlohmann::json::array();
      std::string text = "composition,num,den\n";
      fraglab::for_each_composition(tk, tj, [&](const std::vector<std::size_t>& ks) {
        fraglab::Rational v;
        if (method == "general") v = fraglab::theta_general(fraglab::ThetaQuery{ks});
        else if (method == "meir-moon") v = fraglab::theta_meir_moon(tk, ks[0], ks[1]);
        else {
          const auto it = brute.find(ks);
          v = it == brute.end() ? fraglab::Rational(0) : it->second;
        }
        std::string comp;
        for (auto x : ks) comp += (comp.empty() ? "" : " ") + std::to_string(x);
        text += comp + "," + numerator(v).str() + "," + denominator(v).str() + "\n";
        arr.push_back({{"composition", ks}, {"value", rational_text(v)}});
      });
      if (cfg.format == fraglab::ReportFormat::csv) emit(text, cfg.out);
      else
        emit(nlohmann::json{{"schema", fraglab::report_schema}, {"j", tj}, {"k", tk}, {"method", method}, {"theta", arr}}.dump(2) +
                 "\n",
             cfg.out);
    } else if (verify->parsed()) {
      cfg.criteria = criteria;
      cfg.timing = timing;
      cfg.validate();
      const auto res = fraglab::run_acceptance_suite(cfg);
      emit(fraglab::render_report(res, cfg), cfg.out);
      for (const auto& v : res.verdicts)
        std::cerr << (v.pass ? "ok   " : "FAIL ") << "C" << v.criterion << " " << v.name << "\n";
      return res.pass ? 0 : 1;
    }
  } catch (const fraglab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
