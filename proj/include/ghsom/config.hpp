#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "ghsom/types.hpp"

namespace ghsom {

const char* to_string(GrowthMode mode) noexcept;
const char* to_string(Tau1Reference ref) noexcept;
GrowthMode parse_growth_mode(std::string_view text);
Tau1Reference parse_tau1_reference(std::string_view text);

/// Throws ErrorCode::invalid_argument naming the first offending field.
/// With n_samples > 0 also checks that alpha * n_samples >= 1.
void validate(const Params& params, std::size_t n_samples = 0);

/// Assigns one parameter from its textual form; keys use the CLI spelling
/// with underscores ("tau1", "gamma_w", "growth_mode", "interactive", ...).
/// tau2 accepts "off".
void set_param(Params& params, std::string_view key, std::string_view value);

nlohmann::json to_json(const Params& params);

/// Missing keys keep the values already in `base`.
Params params_from_json(const nlohmann::json& j, Params base = {});

}  // namespace ghsom
