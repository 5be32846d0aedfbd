#include "nmetro/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "nmetro/io.hpp"

namespace nmetro::cli {

namespace {

using io::json;
namespace fs = std::filesystem;

struct Common {
  std::string errors = "text";
  std::string format = "json";
  std::string output;
  int precision = 12;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 0;
  double tol = kDefaultTolerance;
};

struct Emitter {
  const Common& common;
  std::ostream& out;

  void write(const std::string& text) const {
    if (common.output.empty()) {
      out << text;
      return;
    }
    std::ofstream file(common.output);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + common.output);
    file << text;
  }
  void json_doc(const json& doc) const { write(doc.dump(2) + "\n"); }
};

fs::path base_of(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

json load_arg(const std::string& arg) {
  return io::load_json_file(arg);
}

// Values on the command line: a keyword, inline JSON, or a file path.
json keyword_or_file(const std::string& arg,
                     std::initializer_list<const char*> keywords) {
  for (const char* k : keywords) {
    if (arg == k || arg.rfind(std::string(k) + ":", 0) == 0) return json(arg);
  }
  if (!arg.empty() && (arg.front() == '[' || arg.front() == '{')) {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
  }
  return load_arg(arg);
}

ExplorationMatrix exploration_arg(const json& doc, std::size_t n) {
  if (doc.is_string() && doc.get<std::string>() == "uniform") {
    return ExplorationMatrix::uniform(n);
  }
  return io::exploration_from_json(doc);
}

// ---------------------------------------------------------------- commands

void check_kernel(const Common& c, const Emitter& emit, const std::string& path) {
  const auto k = io::kernel_from_json(load_arg(path));
  const int d = c.precision;
  const auto report = check_transitivity(k, c.tol);
  json doc = {{"n", k.size()},
              {"positive", is_positive(k)},
              {"unbiased", is_unbiased(k, c.tol)},
              {"transitivity", io::transitivity_to_json(report, d)}};
  if (is_positive(k) && report.is_transitive) {
    doc["decomposition"] = io::decomposition_to_json(hastings_decompose(k, c.tol), d);
  } else {
    doc["decomposition"] = nullptr;
  }
  emit.json_doc(doc);
}

struct AnalyzeArgs {
  std::string kernel, q = "uniform", mu = "uniform", stopping = "geometric:0.5",
                      rt = "ones";
};

void analyze(const Common& c, const Emitter& emit, const AnalyzeArgs& a) {
  const int d = c.precision;
  const auto k = io::kernel_from_json(load_arg(a.kernel));
  const auto n = k.size();
  const auto q = exploration_arg(keyword_or_file(a.q, {"uniform"}), n);
  const auto mu = io::initial_from_json(keyword_or_file(a.mu, {"uniform", "delta"}), n);
  const auto rt = io::rt_mean_from_json(keyword_or_file(a.rt, {"ones"}), n);
  const auto st = io::stopping_from_spec(a.stopping, fs::path("."));

  const auto m = build_transition(q, k);
  const auto nice = niceness(q);
  const auto tau = conditional_iteration_time(q, rt);
  const auto stopped = analyze_stopped(m, mu, tau, st);

  json doc;
  doc["transition"] = io::columns_to_json(m.grid(), d);
  doc["niceness"] = {{"is_symmetric", nice.is_symmetric},
                     {"min_offdiag", io::round_sig(nice.min_offdiag, d)},
                     {"is_nice", nice.is_nice}};
  try {
    const auto sol = solve_stationary(m);
    doc["stationary"] = {{"pi", io::vector_to_json(sol.pi, d)},
                         {"residual", io::round_sig(sol.residual, d)},
                         {"reciprocal_condition", io::round_sig(sol.reciprocal_condition, d)}};
    doc["balance"] = io::balance_to_json(balance_report(m, sol.pi), d);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotErgodic) throw;
    doc["stationary"] = nullptr;
    doc["stationary_error"] = e.what();
    doc["balance"] = {{"max_kolmogorov_residual",
                       io::round_sig(kolmogorov_residual(m).residual, d)}};
  }
  doc["stopping"] = st.describe();
  doc["tau"] = io::vector_to_json(tau, d);
  doc.update(io::stopped_to_json(stopped, d));
  emit.json_doc(doc);
}

struct Experiment {
  fs::path base;
  std::optional<ChoiceKernel> kernel;
  ProcessSpec spec;
  std::string stopping;
  long trials;
  std::vector<double> deadlines;
  std::optional<std::uint64_t> seed;
};

Experiment load_experiment(const std::string& path) {
  const json cfg = load_arg(path);
  const auto base = base_of(path);
  std::optional<ChoiceKernel> kernel;
  if (cfg.contains("kernel")) {
    kernel = io::kernel_from_json(io::resolve_ref(cfg.at("kernel"), base));
  }
  if (!cfg.contains("bbc") && !kernel) {
    throw Error(ErrorCode::ParseError, "experiment needs a kernel or a bbc");
  }
  BBCModel bbc = cfg.contains("bbc")
                     ? io::bbc_from_json(cfg.at("bbc"), base, kernel)
                     : BBCModel(TabularBBC(*kernel, ResponseTimeDist::constant(1)));
  const auto n = bbc.size();
  const json qdoc = cfg.contains("q") ? io::resolve_ref(cfg.at("q"), base) : json("uniform");
  auto q = exploration_arg(qdoc, n);
  const json mudoc =
      cfg.contains("mu") ? io::resolve_ref(cfg.at("mu"), base) : json("uniform");
  auto mu = io::initial_from_json(mudoc, n);

  Experiment e{base, kernel, ProcessSpec{std::move(mu), std::move(q), std::move(bbc)},
               cfg.value("stopping", std::string("geometric:0.5")),
               cfg.value("trials", 100000L), {}, std::nullopt};
  if (cfg.contains("deadlines")) {
    e.deadlines = cfg.at("deadlines").get<std::vector<double>>();
  }
  if (cfg.contains("seed")) e.seed = cfg.at("seed").get<std::uint64_t>();
  e.spec.validate();
  return e;
}

struct SimulateArgs {
  std::string config, stopping;
  long trials = 0;
  long kernel_trials = 100000;
};

void simulate(const Common& c, const Emitter& emit, const SimulateArgs& a) {
  const int d = c.precision;
  auto e = load_experiment(a.config);
  const std::string spec_text = a.stopping.empty() ? e.stopping : a.stopping;
  const long trials = a.trials > 0 ? a.trials : e.trials;
  const std::uint64_t seed = e.seed.value_or(c.seed);

  std::optional<ChoiceKernel> kernel = e.spec.bbc.exact_kernel();
  std::optional<Eigen::MatrixXd> rt = e.spec.bbc.exact_rt_mean();
  const bool from_estimate = !kernel;
  if (!kernel) {
    const auto est = estimate_kernel(e.spec.bbc, a.kernel_trials, seed, c.workers);
    kernel = est.kernel;
    rt = mean_rt_matrix(est);
  }
  const auto m = build_transition(e.spec.q, *kernel);

  if (spec_text.rfind("deadline:", 0) == 0) {
    const double deadline = std::strtod(spec_text.c_str() + 9, nullptr);
    ConjectureOptions opts;
    opts.workers = c.workers;
    opts.kernel_trials = a.kernel_trials;
    const auto r = conjecture_experiment(e.spec, {deadline}, trials, seed, opts);
    if (c.format == "csv") {
      emit.write(io::conjecture_to_csv(r, d));
    } else {
      emit.json_doc(io::conjecture_to_json(r, d));
    }
    return;
  }

  const auto st = io::stopping_from_spec(spec_text, e.base);
  const auto tau = conditional_iteration_time(e.spec.q, *rt);
  const auto analytic = analyze_stopped(m, e.spec.mu, tau, st);
  const auto mc = estimate_choice_distribution(e.spec, st, trials, seed, c.workers);

  auto z = [](double est, double ref, std::optional<double> se) -> json {
    if (!se || *se == 0.0) return nullptr;
    return (est - ref) / *se;
  };
  json rows = json::array();
  std::ostringstream csv;
  csv << "quantity,analytic,empirical,stderr,z\n";
  for (Eigen::Index k = 0; k < analytic.p.size(); ++k) {
    std::optional<double> se;
    if (mc.frequency_stderr) se = (*mc.frequency_stderr)(k);
    const json zk = z(mc.frequencies(k), analytic.p(k), se);
    rows.push_back({{"alternative", k},
                    {"analytic", io::round_sig(analytic.p(k), d)},
                    {"empirical", io::round_sig(mc.frequencies(k), d)},
                    {"stderr", se ? json(io::round_sig(*se, d)) : json(nullptr)},
                    {"z", zk.is_null() ? zk : json(io::round_sig(zk.get<double>(), d))}});
    csv << "p" << k << ',' << io::format_number(analytic.p(k), d) << ','
        << io::format_number(mc.frequencies(k), d) << ','
        << (se ? io::format_number(*se, d) : "") << ','
        << (zk.is_null() ? "" : io::format_number(zk.get<double>(), d)) << '\n';
  }
  const json zt = z(mc.mean_time, analytic.mean_decision_time, mc.time_stderr);
  csv << "mean_time," << io::format_number(analytic.mean_decision_time, d) << ','
      << io::format_number(mc.mean_time, d) << ','
      << (mc.time_stderr ? io::format_number(*mc.time_stderr, d) : "") << ','
      << (zt.is_null() ? "" : io::format_number(zt.get<double>(), d)) << '\n';

  if (c.format == "csv") {
    emit.write(csv.str());
    return;
  }
  emit.json_doc(
      {{"stopping", st.describe()},
       {"trials", trials},
       {"seed", seed},
       {"analytic_from_estimate", from_estimate},
       {"choice", rows},
       {"mean_time",
        {{"analytic", io::round_sig(analytic.mean_decision_time, d)},
         {"empirical", io::round_sig(mc.mean_time, d)},
         {"stderr", mc.time_stderr ? json(io::round_sig(*mc.time_stderr, d)) : json(nullptr)},
         {"z", zt.is_null() ? zt : json(io::round_sig(zt.get<double>(), d))}}},
       {"truncation_tail", io::round_sig(analytic.truncation_tail, d)}});
}

void bbc_estimate(const Common& c, const Emitter& emit, const std::string& path,
                  long trials) {
  const json doc = load_arg(path);
  BBCModel model = doc.contains("type") ? io::bbc_from_json(doc, base_of(path))
                                        : BBCModel(io::ou_params_from_json(doc));
  const auto est = estimate_kernel(model, trials, c.seed, c.workers);
  if (c.format == "csv") {
    emit.write(io::estimate_to_csv(est, c.precision));
  } else {
    emit.json_doc(io::estimate_to_json(est, c.precision));
  }
}

struct ConjectureArgs {
  std::string config;
  std::vector<double> deadlines;
  long trials = 0;
  long kernel_trials = 100000;
  bool finish = false;
};

void conjecture(const Common& c, const Emitter& emit, const ConjectureArgs& a) {
  auto e = load_experiment(a.config);
  const auto deadlines = a.deadlines.empty() ? e.deadlines : a.deadlines;
  if (deadlines.empty()) {
    throw Error(ErrorCode::InvalidParameter, "no deadlines given");
  }
  ConjectureOptions opts;
  opts.workers = c.workers;
  opts.kernel_trials = a.kernel_trials;
  opts.mode = a.finish ? DeadlineMode::FinishComparison : DeadlineMode::AtDeadline;
  const auto r = conjecture_experiment(e.spec, deadlines,
                                       a.trials > 0 ? a.trials : e.trials,
                                       e.seed.value_or(c.seed), opts);
  if (c.format == "csv") {
    emit.write(io::conjecture_to_csv(r, c.precision));
  } else {
    emit.json_doc(io::conjecture_to_json(r, c.precision));
  }
}

void spectral(const Common& c, const Emitter& emit, const std::string& kernel_path,
              const std::string& q_arg) {
  const int d = c.precision;
  const auto k = io::kernel_from_json(load_arg(kernel_path));
  const auto q = exploration_arg(keyword_or_file(q_arg, {"uniform"}), k.size());
  const auto m = build_transition(q, k);
  const auto sol = solve_stationary(m);
  const auto sd = spectral_decompose(m, sol.pi);
  emit.json_doc({{"pi", io::vector_to_json(sol.pi, d)},
                 {"eigenvalues", io::vector_to_json(sd.eigenvalues, d)},
                 {"eigenvectors", io::columns_to_json(sd.eigenvectors, d)["columns"]},
                 {"reconstruction_error", io::round_sig(sd.reconstruction_error, d)},
                 {"reciprocal_condition", io::round_sig(sol.reciprocal_condition, d)}});
}

void report_error(const Common& c, std::ostream& err, const std::string& code,
                  const std::string& message) {
  if (c.errors == "json") {
    err << json{{"error", code}, {"message", message}}.dump() << "\n";
  } else {
    err << "error: " << message << "\n";
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Common common;
  if (const char* env = std::getenv("NM_SEED")) {
    common.seed = std::strtoull(env, nullptr, 10);
  }

  CLI::App app{"Metropolis multialternative choice: analysis and simulation"};
  app.require_subcommand(1);
  app.add_option("--errors", common.errors, "error report format")
      ->check(CLI::IsMember({"text", "json"}));
  app.add_option("--format", common.format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("-o,--output", common.output, "write results to this file");
  app.add_option("--precision", common.precision,
                 "significant digits in output (0 = full)");
  app.add_option("--seed", common.seed, "random seed (env NM_SEED)");
  app.add_option("--workers", common.workers,
                 "worker threads (0 = hardware concurrency)");
  app.add_option("--tol", common.tol, "algebraic tolerance");

  std::string kernel_path;
  auto* check = app.add_subcommand("check-kernel", "diagnose a choice kernel");
  check->add_option("kernel", kernel_path, "kernel JSON")->required();

  AnalyzeArgs analyze_args;
  auto* an = app.add_subcommand("analyze", "exact choice law and decision time");
  an->add_option("--kernel", analyze_args.kernel, "kernel JSON")->required();
  an->add_option("--q", analyze_args.q, "exploration JSON or 'uniform'");
  an->add_option("--mu", analyze_args.mu, "'uniform', 'delta:k', JSON file or array");
  an->add_option("--stopping", analyze_args.stopping,
                 "fixed:M | geometric:Z | poisson:L | custom:@pmf.json");
  an->add_option("--rt", analyze_args.rt, "mean response times JSON or 'ones'");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo vs exact comparison");
  sim->add_option("--config", sim_args.config, "experiment JSON")->required();
  sim->add_option("--stopping", sim_args.stopping, "override stopping spec");
  sim->add_option("--trials", sim_args.trials, "override trial count");
  sim->add_option("--kernel-trials", sim_args.kernel_trials,
                  "trials per pair when the kernel must be estimated");

  std::string ou_path;
  long bbc_trials = 100000;
  auto* est = app.add_subcommand("bbc-estimate", "estimate a kernel from a BBC model");
  est->add_option("params", ou_path, "OU params or bbc JSON")->required();
  est->add_option("--trials", bbc_trials, "trials per ordered pair");

  ConjectureArgs conj_args;
  auto* conj = app.add_subcommand("conjecture", "deadline sweep against pi*");
  conj->add_option("--config", conj_args.config, "experiment JSON")->required();
  conj->add_option("--deadlines", conj_args.deadlines, "clock deadlines")
      ->delimiter(',');
  conj->add_option("--trials", conj_args.trials, "trials per deadline");
  conj->add_option("--kernel-trials", conj_args.kernel_trials,
                   "trials per pair when the kernel must be estimated");
  conj->add_flag("--finish-comparison", conj_args.finish,
                 "let the comparison straddling the deadline resolve");

  std::string spec_kernel, spec_q = "uniform";
  auto* spec = app.add_subcommand("spectral", "eigen report of a reversible chain");
  spec->add_option("--kernel", spec_kernel, "kernel JSON")->required();
  spec->add_option("--q", spec_q, "exploration JSON or 'uniform'");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(common, err, "UsageError", e.what());
    return kExitValidation;
  }

  const Emitter emit{common, out};
  try {
    if (*check) check_kernel(common, emit, kernel_path);
    else if (*an) analyze(common, emit, analyze_args);
    else if (*sim) simulate(common, emit, sim_args);
    else if (*est) bbc_estimate(common, emit, ou_path, bbc_trials);
    else if (*conj) conjecture(common, emit, conj_args);
    else if (*spec) spectral(common, emit, spec_kernel, spec_q);
  } catch (const Error& e) {
    report_error(common, err, std::string(to_string(e.code())), e.what());
    return is_numerical(e.code()) ? kExitNumerical : kExitValidation;
  } catch (const io::json::exception& e) {
    report_error(common, err, "ParseError", e.what());
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace nmetro::cli
