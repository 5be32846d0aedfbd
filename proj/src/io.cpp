#include "nmetro/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nmetro::io {

namespace {

[[noreturn]] void parse_fail(const std::string& message) {
  throw Error(ErrorCode::ParseError, message);
}

const json& require_field(const json& doc, const char* key, const char* what) {
  if (!doc.is_object() || !doc.contains(key)) {
    parse_fail(std::string(what) + " is missing field '" + key + "'");
  }
  return doc.at(key);
}

double as_number(const json& v, const char* what) {
  if (!v.is_number()) parse_fail(std::string(what) + " must be a number");
  return v.get<double>();
}

void check_declared_size(const json& doc, Eigen::Index actual, const char* what) {
  if (doc.is_object() && doc.contains("n")) {
    const auto declared = doc.at("n");
    if (!declared.is_number_integer() || declared.get<long>() != actual) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(what) + " declares n that does not match its data");
    }
  }
}

std::vector<std::pair<long, double>> pmf_from_json(const json& doc,
                                                   const char* what) {
  if (!doc.is_array()) parse_fail(std::string(what) + " must be [[m, p], ...]");
  std::vector<std::pair<long, double>> pmf;
  for (const auto& entry : doc) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer()) {
      parse_fail(std::string(what) + " entries must be [integer, probability]");
    }
    pmf.emplace_back(entry[0].get<long>(), as_number(entry[1], what));
  }
  return pmf;
}

ResponseTimeDist rt_law(const std::string& dist, double mean) {
  if (dist == "constant") {
    if (mean != std::floor(mean)) {
      throw Error(ErrorCode::InvalidParameter,
                  "constant response times must be whole steps");
    }
    return ResponseTimeDist::constant(static_cast<long>(mean));
  }
  if (dist == "geometric") return ResponseTimeDist::geometric(mean);
  parse_fail("unknown response time law '" + dist + "'");
}

}  // namespace

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    parse_fail(path.string() + ": " + e.what());
  }
}

json resolve_ref(const json& value, const std::filesystem::path& base) {
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (!text.empty() && text.front() == '@') {
      std::filesystem::path target(text.substr(1));
      if (target.is_relative()) target = base / target;
      return load_json_file(target);
    }
  }
  return value;
}

double round_sig(double x, int digits) {
  if (digits <= 0 || !std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

std::string format_number(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits > 0 ? digits : 17, x);
  return buf;
}

Eigen::MatrixXd grid_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) {
    parse_fail(std::string(what) + " must be a non-empty array of rows");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  Eigen::Index c = -1;
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array()) parse_fail(std::string(what) + " rows must be arrays");
    if (c < 0) {
      c = static_cast<Eigen::Index>(row.size());
      out.resize(r, c);
    } else if (static_cast<Eigen::Index>(row.size()) != c) {
      throw Error(ErrorCode::NonSquare, std::string(what) + " is ragged");
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j)];
      // Diagonals of kernels may be written as null.
      out(i, j) = cell.is_null() ? 1.0 : as_number(cell, what);
    }
  }
  return out;
}

json grid_to_json(const Eigen::MatrixXd& grid, int digits) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < grid.cols(); ++j) {
      row.push_back(round_sig(grid(i, j), digits));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd columns_from_json(const json& doc, const char* what) {
  const auto& cols = require_field(doc, "columns", what);
  Eigen::MatrixXd m = grid_from_json(cols, what).transpose();
  check_declared_size(doc, m.rows(), what);
  return m;
}

json columns_to_json(const Eigen::MatrixXd& m, int digits) {
  return {{"n", m.rows()}, {"columns", grid_to_json(m.transpose(), digits)}};
}

Eigen::VectorXd vector_from_json(const json& values, const char* what) {
  if (!values.is_array() || values.empty()) {
    parse_fail(std::string(what) + " must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = as_number(values[k], what);
  }
  return v;
}

json vector_to_json(const Eigen::VectorXd& v, int digits) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(round_sig(v(k), digits));
  return out;
}

ChoiceKernel kernel_from_json(const json& doc) {
  const Eigen::MatrixXd raw = grid_from_json(require_field(doc, "rho", "kernel"), "kernel");
  check_declared_size(doc, raw.rows(), "kernel");
  return validate_kernel(raw);
}

json kernel_to_json(const ChoiceKernel& k, int digits) {
  return {{"n", k.size()}, {"rho", grid_to_json(k.grid(), digits)}};
}

ExplorationMatrix exploration_from_json(const json& doc) {
  return ExplorationMatrix::from_grid(columns_from_json(doc, "exploration matrix"));
}

TransitionMatrix transition_from_json(const json& doc) {
  return TransitionMatrix::from_grid(columns_from_json(doc, "transition matrix"));
}

Eigen::VectorXd initial_from_json(const json& doc, std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::VectorXd mu;
  if (doc.is_string()) {
    const auto text = doc.get<std::string>();
    if (text == "uniform") {
      mu = Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(n));
    } else if (text.rfind("delta:", 0) == 0) {
      const long k = std::strtol(text.c_str() + 6, nullptr, 10);
      if (k < 0 || k >= size) {
        throw Error(ErrorCode::InvalidDistribution, "delta index out of range");
      }
      mu = Eigen::VectorXd::Zero(size);
      mu(k) = 1.0;
    } else {
      parse_fail("initial distribution '" + text + "' not understood");
    }
  } else if (doc.is_object()) {
    mu = vector_from_json(require_field(doc, "mu", "initial distribution"),
                          "initial distribution");
  } else {
    mu = vector_from_json(doc, "initial distribution");
  }
  if (mu.size() != size) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial distribution has the wrong length");
  }
  require_distribution(mu, /*full_support=*/false, 1e-10);
  return mu;
}

Eigen::MatrixXd rt_mean_from_json(const json& doc, std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  if (doc.is_string() && doc.get<std::string>() == "ones") {
    Eigen::MatrixXd rt = Eigen::MatrixXd::Ones(size, size);
    rt.diagonal().setZero();
    return rt;
  }
  Eigen::MatrixXd rt = grid_from_json(require_field(doc, "rt_mean", "rt grid"),
                                      "rt grid");
  if (rt.rows() != size || rt.cols() != size) {
    throw Error(ErrorCode::DimensionMismatch, "rt grid does not match the menu");
  }
  check_declared_size(doc, rt.rows(), "rt grid");
  rt.diagonal().setZero();
  return rt;
}

OUParams ou_params_from_json(const json& doc) {
  OUParams p;
  const auto& values = require_field(doc, "values", "OU params");
  const Eigen::VectorXd v = vector_from_json(values, "values");
  p.values.assign(v.data(), v.data() + v.size());
  p.lambda = as_number(require_field(doc, "lambda", "OU params"), "lambda");
  p.sigma = as_number(require_field(doc, "sigma", "OU params"), "sigma");
  p.beta = as_number(require_field(doc, "beta", "OU params"), "beta");
  if (doc.contains("max_steps")) {
    if (!doc.at("max_steps").is_number_integer()) {
      parse_fail("max_steps must be an integer");
    }
    p.max_steps = doc.at("max_steps").get<long>();
  }
  if (doc.contains("mu")) {
    const auto& mu = doc.at("mu");
    if (mu.is_number()) {
      p.drift = DriftSchedule::constant(mu.get<double>());
    } else {
      const auto type = require_field(mu, "type", "drift schedule").get<std::string>();
      const Eigen::VectorXd table =
          vector_from_json(require_field(mu, "values", "drift schedule"), "drift");
      if (type == "constant") {
        if (table.size() != 1) parse_fail("constant drift takes one value");
        p.drift = DriftSchedule::constant(table(0));
      } else if (type == "table") {
        p.drift = DriftSchedule::table(
            std::vector<double>(table.data(), table.data() + table.size()));
      } else {
        parse_fail("unknown drift schedule type '" + type + "'");
      }
    }
  }
  p.validate();
  return p;
}

json ou_params_to_json(const OUParams& p) {
  json mu;
  if (p.drift.is_constant()) {
    mu = p.drift.values().front();
  } else {
    mu = {{"type", "table"}, {"values", p.drift.values()}};
  }
  return {{"values", p.values}, {"lambda", p.lambda}, {"mu", mu},
          {"sigma", p.sigma},   {"beta", p.beta},     {"max_steps", p.max_steps}};
}

BBCModel bbc_from_json(const json& raw, const std::filesystem::path& base,
                       const std::optional<ChoiceKernel>& fallback_kernel) {
  const json doc = resolve_ref(raw, base);
  const auto type = require_field(doc, "type", "bbc").get<std::string>();
  if (type == "ou") return BBCModel(ou_params_from_json(doc));
  if (type != "tabular") parse_fail("unknown bbc type '" + type + "'");

  std::optional<ChoiceKernel> kernel = fallback_kernel;
  if (doc.contains("kernel")) kernel = kernel_from_json(resolve_ref(doc.at("kernel"), base));
  if (!kernel) parse_fail("tabular bbc needs a kernel");
  const auto n = kernel->size();

  if (!doc.contains("rt")) {
    return BBCModel(TabularBBC(*kernel, ResponseTimeDist::constant(1)));
  }
  const json rt = resolve_ref(doc.at("rt"), base);
  const auto dist = require_field(rt, "dist", "rt law").get<std::string>();
  if (dist == "table") {
    return BBCModel(TabularBBC(
        *kernel, ResponseTimeDist::table(pmf_from_json(
                     require_field(rt, "pmf", "rt law"), "rt pmf"))));
  }
  const auto& mean = require_field(rt, "mean", "rt law");
  if (mean.is_number()) {
    return BBCModel(TabularBBC(*kernel, rt_law(dist, mean.get<double>())));
  }
  const Eigen::MatrixXd grid = grid_from_json(mean, "rt mean grid");
  if (static_cast<std::size_t>(grid.rows()) != n ||
      static_cast<std::size_t>(grid.cols()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "rt mean grid does not match the menu");
  }
  std::vector<ResponseTimeDist> laws;
  laws.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      laws.push_back(i == j ? ResponseTimeDist::constant(1)
                            : rt_law(dist, grid(i, j)));
    }
  }
  return BBCModel(TabularBBC(*kernel, std::move(laws)));
}

StoppingTime stopping_from_spec(const std::string& spec,
                                const std::filesystem::path& base) {
  if (spec.rfind("custom:", 0) == 0) {
    const json doc = resolve_ref(json(spec.substr(7)), base);
    if (doc.is_string()) parse_fail("custom stopping needs custom:@pmf.json");
    return StoppingTime::custom(pmf_from_json(doc, "stopping pmf"));
  }
  return StoppingTime::parse(spec);
}

json transitivity_to_json(const TransitivityReport& r, int digits) {
  return {{"max_cycle_discrepancy", round_sig(r.max_cycle_discrepancy, digits)},
          {"worst_triple", r.worst_triple},
          {"is_transitive", r.is_transitive}};
}

json decomposition_to_json(const HastingsDecomposition& d, int digits) {
  return {{"pi", vector_to_json(d.pi, digits)},
          {"s", grid_to_json(d.s.to_matrix(), digits)},
          {"unbiased", d.unbiased}};
}

json balance_to_json(const BalanceReport& r, int digits) {
  return {{"max_detailed_balance_residual",
           round_sig(r.detailed_balance.residual, digits)},
          {"detailed_balance_witness", r.detailed_balance.witness},
          {"max_kolmogorov_residual", round_sig(r.kolmogorov.residual, digits)},
          {"kolmogorov_witness", r.kolmogorov.witness}};
}

json stopped_to_json(const StoppedChoiceResult& r, int digits) {
  return {{"p", vector_to_json(r.p, digits)},
          {"mean_decision_time", round_sig(r.mean_decision_time, digits)},
          {"truncation_tail", round_sig(r.truncation_tail, digits)}};
}

json estimate_to_json(const KernelEstimate& est, int digits) {
  json out = kernel_to_json(est.kernel, digits);
  out["stderr"] = grid_to_json(est.std_error, digits);
  out["rt_mean"] = grid_to_json(est.rt_mean, digits);
  out["rt_var"] = grid_to_json(est.rt_var, digits);
  out["censored_frac"] = grid_to_json(est.censored_frac, digits);
  out["trials_per_pair"] = est.trials_per_pair;
  return out;
}

std::string estimate_to_csv(const KernelEstimate& est, int digits) {
  std::ostringstream os;
  os << "proposal,incumbent,rho_hat,stderr,rt_mean,rt_var,censored_frac\n";
  const auto n = est.kernel.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      os << i << ',' << j << ',' << format_number(est.kernel(i, j), digits) << ','
         << format_number(est.std_error(i, j), digits) << ','
         << format_number(est.rt_mean(i, j), digits) << ','
         << format_number(est.rt_var(i, j), digits) << ','
         << format_number(est.censored_frac(i, j), digits) << '\n';
    }
  }
  return os.str();
}

json conjecture_to_json(const ConjectureResult& r, int digits) {
  json rows = json::array();
  for (std::size_t d = 0; d < r.deadlines.size(); ++d) {
    rows.push_back({{"T", r.deadlines[d]},
                    {"tv", round_sig(r.tv_distance[d], digits)},
                    {"stderr", round_sig(r.tv_stderr[d], digits)},
                    {"empirical", vector_to_json(r.empirical[d], digits)}});
  }
  return {{"pi", vector_to_json(r.pi, digits)},
          {"pi_star", vector_to_json(r.pi_star, digits)},
          {"trials", r.trials},
          {"rows", rows}};
}

std::string conjecture_to_csv(const ConjectureResult& r, int digits) {
  std::ostringstream os;
  os << "T,tv,stderr\n";
  for (std::size_t d = 0; d < r.deadlines.size(); ++d) {
    os << format_number(r.deadlines[d], digits) << ','
       << format_number(r.tv_distance[d], digits) << ','
       << format_number(r.tv_stderr[d], digits) << '\n';
  }
  return os.str();
}

}  // namespace nmetro::io
