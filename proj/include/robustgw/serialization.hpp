#pragma once

#include <span>
#include <utility>

#include "json.hpp"
#include "robustgw/contamination.hpp"
#include "robustgw/experiments.hpp"
#include "robustgw/gaussian_mixture.hpp"
#include "robustgw/gw.hpp"
#include "robustgw/lrgw.hpp"

namespace robustgw {

using Json = nlohmann::json;

Json penalty_params(const RobustPenalty& penalty);
/// {method, penalty, params, value, converged, iterations, trace}
Json to_json(const GwResult& result);
Json to_json(const ThresholdEstimate& estimate);
Json to_json(const LrigwResult& result);
Json to_json(const GaussianMixture& mix);
Json runs_to_json(std::span<const ExperimentRun> runs);
Json summary_to_json(std::span<const SummaryRow> rows);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Vector vector_from_json(const Json& j);

/// {weights: [...], components: [{mean: [...], cov: [[...]]}]}
GaussianMixture mixture_from_json(const Json& j);

/// Sweep manifest; see the README for the schema.
SweepConfig sweep_config_from_json(const Json& j);
/// Builds source and target spaces from the "source"/"target" entries of a manifest.
std::pair<MmSpace, MmSpace> sweep_spaces_from_json(const Json& j, const SweepConfig& cfg);

}  // namespace robustgw
