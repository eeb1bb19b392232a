#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace osteo::schema {

/// Validates `doc` against a JSON Schema using the keywords the published
/// schemas need: type, enum, const, oneOf, required, properties,
/// additionalProperties, items, minItems, maxItems, minimum,
/// exclusiveMinimum, maximum, minLength, pattern and local `$ref` into
/// `#/$defs/...`. Unknown keywords are ignored.
///
/// Each message starts with the JSON path of the offending value, e.g.
/// `images[0].modality: ...`; missing members are reported at their own path.
std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& doc);

/// Throws Schema with the first message.
void require_valid(const nlohmann::json& schema, const nlohmann::json& doc, const std::string& what);

}  // namespace osteo::schema
