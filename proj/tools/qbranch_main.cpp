#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qbranch/errors.hpp"
#include "qbranch/fitting.hpp"
#include "qbranch/rabi.hpp"
#include "qbranch/splitter.hpp"
#include "qbranch/trace_io.hpp"
#include "qbranch/verify.hpp"

namespace {

using nlohmann::ordered_json;
using namespace qbranch;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;
constexpr int kExitUnconverged = 4;

// --config names a JSON object whose keys mirror the long flag names; every
// key absent from the command line is appended as --key=value, so explicit
// flags always win.  Keys are visited in sorted order, which keeps the final
// argument vector reproducible.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) {
    throw std::invalid_argument("config: top-level JSON object required");
  }
  for (const auto& [key, value] : doc.items()) {
    std::string flag = "--" + key;
    bool present = false;
    for (const std::string& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        present = true;
        break;
      }
    }
    if (present) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag + "=" + value.dump());
    } else {
      throw std::invalid_argument("config: unsupported value type for key " + key);
    }
  }
  return args;
}

void emit(const std::string& out_path, const std::string& payload) {
  if (out_path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file " + out_path);
  f << payload;
  f.flush();
  if (!f) throw resource_error("failed writing " + out_path);
}

// ---------------------------------------------------------------- splitter

struct SplitterOpts {
  long long n = 1;
  double r = 0.5;
  double eps_r = 0.0;
  double eps_t = 0.0;
  double w_b = 1.0;
  std::string convention = "all";
  std::string method = "all";
  std::string format = "csv";
  std::string out;
  std::string config;
};

int cmd_splitter(const SplitterOpts& o) {
  SplitterSpec spec{o.r, 1.0 - o.r};
  EfficiencySpec eff{o.eps_r, o.eps_t, o.w_b};
  Convention conv = o.convention == "scattered" ? Convention::kScatteredOnly
                                                : Convention::kAllPrepared;
  SplitterChannels ch = derive_channels(spec, eff, conv);
  std::vector<std::pair<std::string, OccupationStats>> rows;
  auto want = [&](const char* m) { return o.method == "all" || o.method == m; };
  if (want("closed")) rows.emplace_back("closed", stats_lossy_closed(o.n, ch));
  if (want("binomial")) {
    // The binomial route sums the bare two-way split; with losses present it
    // reports the lossless splitter, not the effective channels.
    rows.emplace_back("binomial", stats_partition_binomial(o.n, spec));
  }
  if (want("multinomial")) {
    rows.emplace_back("multinomial", stats_partition_multinomial(o.n, ch));
  }
  if (want("enumerate")) {
    rows.emplace_back("enumerate", stats_enumerate(static_cast<int>(o.n), ch));
  }
  std::ostringstream body;
  if (o.format == "json") {
    ordered_json doc;
    doc["params"] = {{"n", o.n},        {"r", spec.reflect},
                     {"t", spec.transmit}, {"eps_r", o.eps_r},
                     {"eps_t", o.eps_t},   {"w_b", o.w_b},
                     {"convention", o.convention}};
    doc["params"]["channels"] = {
        {"r_eff", ch.r_eff}, {"t_eff", ch.t_eff}, {"loss", ch.loss}};
    doc["results"] = ordered_json::array();
    for (const auto& [name, s] : rows) {
      doc["results"].push_back({{"method", name},
                                {"mean_r", s.mean_r},
                                {"mean_t", s.mean_t},
                                {"mean_rt", s.mean_rt},
                                {"var_r", s.var_r},
                                {"var_t", s.var_t},
                                {"cov_rt", s.cov_rt}});
    }
    body << doc.dump(2) << '\n';
  } else {
    body << "method,mean_r,mean_t,mean_rt,var_r,var_t,cov_rt\n";
    for (const auto& [name, s] : rows) {
      body << name << ',' << format_double(s.mean_r) << ','
           << format_double(s.mean_t) << ',' << format_double(s.mean_rt) << ','
           << format_double(s.var_r) << ',' << format_double(s.var_t) << ','
           << format_double(s.cov_rt) << '\n';
    }
  }
  emit(o.out, body.str());
  return kExitOk;
}

// --------------------------------------------------------------- rabi-trace

struct TraceOpts {
  std::string model;
  double omega = 0.0;
  double dt = -1.0;
  double beta = -1.0;
  double eta = -1.0;
  int depth = kDefaultDepth;
  double t_max = 0.0;
  int samples = 0;
  std::string out;
  std::string config;
};

int cmd_trace(const TraceOpts& o) {
  Model model;
  if (o.model == "closed") {
    model = Model::kClosed;
  } else if (o.model == "indist") {
    model = Model::kIndist;
  } else if (o.model == "approx") {
    model = Model::kApprox;
  } else {
    model = Model::kDist;
  }
  if (model == Model::kDist) {
    if (o.eta < 0.0) throw std::invalid_argument("--model dist requires --eta");
    if (o.beta >= 0.0) {
      throw std::invalid_argument("--beta does not apply to --model dist");
    }
    if (o.dt <= 0.0) throw std::invalid_argument("--model dist requires --dt");
  } else if (model != Model::kClosed) {
    if (o.beta < 0.0) {
      throw std::invalid_argument("--model " + o.model + " requires --beta");
    }
    if (o.eta >= 0.0) {
      throw std::invalid_argument("--eta only applies to --model dist");
    }
    if (o.dt <= 0.0) {
      throw std::invalid_argument("--model " + o.model + " requires --dt");
    }
  }
  std::variant<RabiParams, DistParams> params;
  if (model == Model::kDist) {
    params = DistParams{o.omega, o.dt, o.eta};
  } else if (model == Model::kClosed) {
    params = RabiParams{o.omega, 1.0, 1.0};  // spacing/weight unused
  } else {
    params = RabiParams{o.omega, o.dt, o.beta};
  }
  ProbabilityTrace tr = trace(model, params, o.depth, o.t_max, o.samples);
  std::ostringstream body;
  write_trace_csv(body, tr);
  emit(o.out, body.str());
  return kExitOk;
}

// ---------------------------------------------------------------------- fit

struct FitOpts {
  std::string input;
  double omega = 0.0;
  double t_min = 0.0;
  double t_max = -1.0;
  double gamma_hi = -1.0;
  std::string out;
  std::string config;
};

int cmd_fit(const FitOpts& o) {
  ProbabilityTrace tr = read_trace_csv_file(o.input);
  if (tr.samples.empty()) throw std::invalid_argument("fit: trace has no samples");
  double t_max = o.t_max >= 0.0 ? o.t_max : tr.samples.back().first;
  double gamma_hi = o.gamma_hi > 0.0 ? o.gamma_hi : o.omega;
  FitWindow window{o.t_min, t_max};
  DampingFit fit = fit_gamma(tr, o.omega, window, gamma_hi);
  int used = 0;
  for (const auto& [t, p] : tr.samples) {
    if (t >= window.t_min && t <= window.t_max) ++used;
  }
  ordered_json doc;
  doc["gamma"] = fit.gamma;
  doc["gamma_over_omega"] = fit.gamma / fit.omega;
  doc["rms"] = fit.rms;
  doc["window"] = {{"t_min", fit.window.t_min}, {"t_max", fit.window.t_max}};
  doc["converged"] = fit.converged;
  doc["params"] = {{"omega", o.omega},
                   {"gamma_hi", gamma_hi},
                   {"input", o.input},
                   {"samples_used", used}};
  emit(o.out, doc.dump(2) + "\n");
  return fit.converged ? kExitOk : kExitUnconverged;
}

// ---------------------------------------------------------------------- eid

struct EidOpts {
  double omega0 = 0.0;
  double dt = 0.0;
  double beta = 0.0;
  int depth = kDefaultDepth;
  std::string levels = "0..6";
  int samples_per_period = 100;
  std::string windows;
  std::string format = "csv";
  std::string out;
  std::string config;
};

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  auto parse_int = [](const std::string& s) {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("--levels: bad integer " + s);
    return v;
  };
  size_t dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      int lo = parse_int(text.substr(0, dots));
      int hi = parse_int(text.substr(dots + 2));
      if (lo > hi) throw std::invalid_argument("--levels: empty range " + text);
      for (int v = lo; v <= hi; ++v) levels.push_back(v);
    } else {
      std::istringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) levels.push_back(parse_int(item));
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--levels: expected A..B or a comma list, got " + text);
  }
  if (levels.empty()) throw std::invalid_argument("--levels: empty list");
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return levels;
}

std::vector<FitWindow> parse_windows(const std::string& text) {
  std::vector<FitWindow> windows;
  if (text.empty()) return windows;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("--windows: expected lo:hi, got " + item);
    }
    try {
      windows.push_back(FitWindow{std::stod(item.substr(0, colon)),
                                  std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("--windows: bad number in " + item);
    }
  }
  return windows;
}

int cmd_eid(const EidOpts& o) {
  std::vector<int> levels = parse_levels(o.levels);
  std::vector<FitWindow> windows = parse_windows(o.windows);
  RabiParams base{o.omega0, o.dt, o.beta};
  EidResult result =
      eid_sweep(base, o.depth, levels, windows, o.samples_per_period);
  if (levels.size() == 1) {
    std::cerr << "warning: a single level leaves the exponent undefined\n";
  }
  std::ostringstream body;
  if (o.format == "json") {
    ordered_json doc;
    doc["params"] = {{"omega0", o.omega0},
                     {"dt", o.dt},
                     {"beta", o.beta},
                     {"depth", o.depth},
                     {"samples_per_period", o.samples_per_period}};
    doc["levels"] = ordered_json::array();
    for (size_t i = 0; i < result.levels.size(); ++i) {
      doc["levels"].push_back(
          {{"level", result.levels[i]},
           {"omega_n", freq_ladder(o.omega0, result.levels[i])},
           {"gamma_n", result.gammas[i]},
           {"ratio", result.ratios[i]},
           {"converged", static_cast<bool>(result.converged[i])}});
    }
    doc["exponent"] = result.exponent;
    doc["exponent_stderr"] = result.exponent_stderr;
    body << doc.dump(2) << '\n';
  } else {
    body << "level,omega_n,gamma_n,ratio\n";
    for (size_t i = 0; i < result.levels.size(); ++i) {
      body << result.levels[i] << ','
           << format_double(freq_ladder(o.omega0, result.levels[i])) << ','
           << format_double(result.gammas[i]) << ','
           << format_double(result.ratios[i]) << '\n';
    }
    body << "# exponent = " << format_double(result.exponent) << '\n';
    body << "# exponent_stderr = " << format_double(result.exponent_stderr)
         << '\n';
  }
  emit(o.out, body.str());
  bool all_converged = true;
  for (size_t i = 0; i < result.converged.size(); ++i) {
    all_converged = all_converged && result.converged[i];
  }
  return all_converged ? kExitOk : kExitUnconverged;
}

// ------------------------------------------------------------------- verify

struct VerifyOpts {
  bool quick = false;
  bool inject = false;
  std::string config;
};

int cmd_verify(const VerifyOpts& o) {
  std::vector<VerifyCheck> checks = run_verification(o.quick, o.inject);
  bool all = true;
  for (const VerifyCheck& c : checks) {
    if (c.passed) {
      std::cout << "[pass] " << c.name << "\n";
    } else {
      std::cout << "[FAIL] " << c.name << ": " << c.detail << "\n";
      all = false;
    }
  }
  std::cout << (all ? "verification passed" : "verification FAILED") << " ("
            << checks.size() << " suites)\n";
  return all ? kExitOk : kExitVerifyFailed;
}

int run(std::vector<std::string> args) {
  args = apply_config(std::move(args));
  CLI::App app{"deterministic splitter statistics and damped-oscillation models"};
  app.require_subcommand(1);

  SplitterOpts so;
  CLI::App* sp = app.add_subcommand(
      "splitter", "occupation statistics for n photons on a lossy splitter");
  sp->add_option("--n", so.n, "photon count")->required();
  sp->add_option("--r", so.r, "reflection probability; transmission is 1 - r")
      ->required();
  sp->add_option("--eps-r", so.eps_r, "reflected-detector failure probability");
  sp->add_option("--eps-t", so.eps_t, "transmitted-detector failure probability");
  sp->add_option("--w-b", so.w_b, "weight of the subensemble reaching the splitter");
  sp->add_option("--convention", so.convention,
                 "denominator convention: all prepared photons or scattered only")
      ->check(CLI::IsMember({"all", "scattered"}));
  sp->add_option("--method", so.method,
                 "closed|binomial|multinomial|enumerate|all (binomial sums the "
                 "bare two-way split and ignores losses)")
      ->check(CLI::IsMember({"closed", "binomial", "multinomial", "enumerate", "all"}));
  sp->add_option("--format", so.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  sp->add_option("--out", so.out, "write to this file instead of stdout");
  sp->add_option("--config", so.config,
                 "JSON object of defaults keyed by long flag name");

  TraceOpts to;
  CLI::App* rt = app.add_subcommand(
      "rabi-trace", "sample one oscillation model as a t,p_g,p_e CSV");
  rt->add_option("--model", to.model, "closed|indist|approx|dist")
      ->required()
      ->check(CLI::IsMember({"closed", "indist", "approx", "dist"}));
  rt->add_option("--omega", to.omega, "drive frequency")->required();
  rt->add_option("--dt", to.dt, "node spacing");
  rt->add_option("--beta", to.beta, "per-node survival weight (indist/approx)");
  rt->add_option("--eta", to.eta, "per-node kept fraction (dist)");
  rt->add_option("--depth", to.depth, "refinement rows for indist");
  rt->add_option("--t-max", to.t_max, "trace end time")->required();
  rt->add_option("--samples", to.samples, "number of samples, endpoints included")
      ->required();
  rt->add_option("--out", to.out, "write to this file instead of stdout");
  rt->add_option("--config", to.config,
                 "JSON object of defaults keyed by long flag name");

  FitOpts fo;
  CLI::App* ft = app.add_subcommand(
      "fit", "fit the damped-envelope curve to a trace CSV");
  ft->add_option("--input", fo.input, "trace CSV to read")->required();
  ft->add_option("--omega", fo.omega, "oscillation frequency of the model curve")
      ->required();
  ft->add_option("--t-min", fo.t_min, "window start (default 0)");
  ft->add_option("--t-max", fo.t_max, "window end (default: last sample)");
  ft->add_option("--gamma-hi", fo.gamma_hi, "upper search bound (default: omega)");
  ft->add_option("--out", fo.out, "write to this file instead of stdout");
  ft->add_option("--config", fo.config,
                 "JSON object of defaults keyed by long flag name");

  EidOpts eo;
  CLI::App* ei = app.add_subcommand(
      "eid", "damping rate across the sideband frequency ladder");
  ei->add_option("--omega0", eo.omega0, "carrier frequency")->required();
  ei->add_option("--dt", eo.dt, "node spacing")->required();
  ei->add_option("--beta", eo.beta, "per-node survival weight")->required();
  ei->add_option("--depth", eo.depth, "refinement rows");
  ei->add_option("--levels", eo.levels, "A..B range or comma list, must include 0");
  ei->add_option("--samples-per-period", eo.samples_per_period,
                 "trace samples per half-oscillation period");
  ei->add_option("--windows", eo.windows,
                 "per-level fit windows lo:hi,lo:hi,... (default 4 periods each)");
  ei->add_option("--format", eo.format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  ei->add_option("--out", eo.out, "write to this file instead of stdout");
  ei->add_option("--config", eo.config,
                 "JSON object of defaults keyed by long flag name");

  VerifyOpts vo;
  CLI::App* vf = app.add_subcommand(
      "verify", "run the built-in consistency suites");
  vf->add_flag("--quick", vo.quick, "trim the grids to a fast subset");
  vf->add_flag("--inject-perturbation", vo.inject,
               "bias one oracle so verification must fail (self-test)");
  vf->add_option("--config", vo.config,
                 "JSON object of defaults keyed by long flag name");

  std::vector<const char*> argv;
  argv.push_back("qbranch");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (sp->parsed()) return cmd_splitter(so);
  if (rt->parsed()) return cmd_trace(to);
  if (ft->parsed()) return cmd_fit(fo);
  if (ei->parsed()) return cmd_eid(eo);
  if (vf->parsed()) return cmd_verify(vo);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(std::move(args));
  } catch (const resource_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResource;
  } catch (const unconverged_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnconverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
