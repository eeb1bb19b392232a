#pragma once

#include "json.hpp"
#include "osteo/pipeline/mri.hpp"
#include "osteo/pipeline/xray.hpp"

namespace osteo::pipeline {

std::string_view to_string(xray::ChanVeseInput v);
std::string_view to_string(mri::TumorRule v);

/// Nested objects mirroring the config structs, e.g.
/// `{"gamma1": 0.8, "clahe": {"clip_limit": 2.0, ...}, ...}`.
nlohmann::ordered_json to_json(const xray::XrayConfig& cfg);
nlohmann::ordered_json to_json(const mri::MriConfig& cfg);

/// Starts from the defaults and overrides the fields present. Unknown fields
/// and wrong types are InvalidParameter naming the dotted field path. The
/// result is validated.
xray::XrayConfig xray_config_from_json(const nlohmann::json& j);
mri::MriConfig mri_config_from_json(const nlohmann::json& j);

}  // namespace osteo::pipeline
