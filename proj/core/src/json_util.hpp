#pragma once

// Internal JSON helpers shared by serialize.cpp and experiment.cpp. Not
// installed; the public API never exposes nlohmann types.

#include <string>

#include <json.hpp>

#include "bdett/degradation.hpp"
#include "bdett/encoding.hpp"
#include "bdett/threshold.hpp"

namespace bdett::detail {

nlohmann::json require(const nlohmann::json& j, const char* key,
                       const char* where);
nlohmann::json parse(const std::string& text, const char* what);

std::string scheme_kind_name(SchemeKind kind);
SchemeKind scheme_kind_from(const std::string& name);
nlohmann::json scheme_to_json(const ThresholdSchemeConfig& cfg);
ThresholdSchemeConfig scheme_from_json(const nlohmann::json& j);

nlohmann::json degradation_to_json(const DegradationSpec& spec);
DegradationSpec degradation_from_json(const nlohmann::json& j);

nlohmann::json normalizer_to_json(const StateNormalizer& norm);
StateNormalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace bdett::detail
