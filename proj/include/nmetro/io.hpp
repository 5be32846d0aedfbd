#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>

#include <json.hpp>

#include "nmetro/bbc.hpp"
#include "nmetro/chain.hpp"
#include "nmetro/kernel.hpp"
#include "nmetro/simulation.hpp"
#include "nmetro/stopping.hpp"

// File formats. Grids named "rho" and "rt_mean" are row-major, so
// rho[i][j] = rho(i|j). Stochastic matrices are stored by column:
// columns[j][i] = Q(i|j), the law of the next state given state j.
namespace nmetro::io {

using json = nlohmann::json;

json load_json_file(const std::filesystem::path& path);

/// Inline value, or "@path" resolved against `base`.
json resolve_ref(const json& value, const std::filesystem::path& base);

Eigen::MatrixXd grid_from_json(const json& rows, const char* what);
json grid_to_json(const Eigen::MatrixXd& grid, int digits);

Eigen::MatrixXd columns_from_json(const json& doc, const char* what);
json columns_to_json(const Eigen::MatrixXd& m, int digits);

Eigen::VectorXd vector_from_json(const json& values, const char* what);
json vector_to_json(const Eigen::VectorXd& v, int digits);

/// Rounds to `digits` significant digits (0 keeps full precision).
double round_sig(double x, int digits);

ChoiceKernel kernel_from_json(const json& doc);
json kernel_to_json(const ChoiceKernel& k, int digits = 0);

ExplorationMatrix exploration_from_json(const json& doc);
TransitionMatrix transition_from_json(const json& doc);

/// "uniform", "delta:<k>", an array, or {"mu": [...]}.
Eigen::VectorXd initial_from_json(const json& doc, std::size_t n);

/// "ones", or {"n": n, "rt_mean": [[...]]}.
Eigen::MatrixXd rt_mean_from_json(const json& doc, std::size_t n);

OUParams ou_params_from_json(const json& doc);
json ou_params_to_json(const OUParams& p);

/// {"type": "ou", ...} or {"type": "tabular", "kernel": ..., "rt": ...}.
/// A tabular model without its own kernel uses `fallback_kernel`.
BBCModel bbc_from_json(const json& doc, const std::filesystem::path& base,
                       const std::optional<ChoiceKernel>& fallback_kernel = {});

/// Stopping spec string; "custom:@file" reads [[m, prob], ...].
StoppingTime stopping_from_spec(const std::string& spec,
                                const std::filesystem::path& base);

json transitivity_to_json(const TransitivityReport& r, int digits);
json decomposition_to_json(const HastingsDecomposition& d, int digits);
json balance_to_json(const BalanceReport& r, int digits);
json stopped_to_json(const StoppedChoiceResult& r, int digits);
json estimate_to_json(const KernelEstimate& est, int digits);
std::string estimate_to_csv(const KernelEstimate& est, int digits);
json conjecture_to_json(const ConjectureResult& r, int digits);
std::string conjecture_to_csv(const ConjectureResult& r, int digits);

std::string format_number(double x, int digits);

}  // namespace nmetro::io
