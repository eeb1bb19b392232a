#include "osteo/json_schema.hpp"

#include <regex>

#include "osteo/error.hpp"

namespace osteo::schema {

namespace {

using nlohmann::json;

std::string member(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string where(const std::string& path) {
  return path.empty() ? "(root)" : path;
}

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<double>(v.get<long long>()));
  }
  return false;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& s, const json& v, const std::string& path) {
    if (s.is_boolean()) {
      if (!s.get<bool>()) {
        errors.push_back(where(path) + ": not allowed");
      }
      return;
    }
    if (s.contains("$ref")) {
      check(resolve(s["$ref"].get<std::string>()), v, path);
    }
    if (s.contains("oneOf")) {
      one_of(s["oneOf"], v, path);
    }
    if (s.contains("type")) {
      const json& t = s["type"];
      bool ok = false;
      std::string names;
      for (const json& one : t.is_array() ? t : json::array({t})) {
        ok = ok || has_type(v, one.get<std::string>());
        names += (names.empty() ? "" : " or ") + one.get<std::string>();
      }
      if (!ok) {
        errors.push_back(where(path) + ": expected " + names + ", got " + v.type_name());
        return;
      }
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const json& e : s["enum"]) {
        found = found || e == v;
      }
      if (!found) {
        errors.push_back(where(path) + ": " + v.dump() + " is not one of " + s["enum"].dump());
      }
    }
    if (s.contains("const") && s["const"] != v) {
      errors.push_back(where(path) + ": expected " + s["const"].dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) {
        errors.push_back(where(path) + ": " + v.dump() + " is below the minimum " + s["minimum"].dump());
      }
      if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) {
        errors.push_back(where(path) + ": " + v.dump() + " must exceed " + s["exclusiveMinimum"].dump());
      }
      if (s.contains("maximum") && x > s["maximum"].get<double>()) {
        errors.push_back(where(path) + ": " + v.dump() + " is above the maximum " + s["maximum"].dump());
      }
    }
    if (v.is_string()) {
      const auto& str = v.get_ref<const std::string&>();
      if (s.contains("minLength") && str.size() < s["minLength"].get<std::size_t>()) {
        errors.push_back(where(path) + ": shorter than " + s["minLength"].dump() + " characters");
      }
      if (s.contains("pattern") && !std::regex_search(str, std::regex(s["pattern"].get<std::string>()))) {
        errors.push_back(where(path) + ": '" + str + "' does not match " + s["pattern"].get<std::string>());
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
        errors.push_back(where(path) + ": fewer than " + s["minItems"].dump() + " items");
      }
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
        errors.push_back(where(path) + ": more than " + s["maxItems"].dump() + " items");
      }
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          check(s["items"], v[i], path + "[" + std::to_string(i) + "]");
        }
      }
    }
    if (v.is_object()) {
      for (const json& key : s.value("required", json::array())) {
        if (!v.contains(key.get<std::string>())) {
          errors.push_back(member(path, key.get<std::string>()) + ": required field is missing");
        }
      }
      const json props = s.value("properties", json::object());
      for (const auto& [key, value] : v.items()) {
        if (props.contains(key)) {
          check(props[key], value, member(path, key));
        } else if (s.contains("additionalProperties")) {
          check(s["additionalProperties"], value, member(path, key));
        }
      }
    }
  }

  std::vector<std::string> errors;

 private:
  // Exactly one alternative must match. On failure the closest alternative's
  // messages are kept so the offending field is still named; an alternative
  // of the wrong type altogether is the least close.
  void one_of(const json& alternatives, const json& v, const std::string& path) {
    std::vector<std::string> closest;
    std::size_t best = 0;
    std::size_t matches = 0;
    const std::string wrong_type = where(path) + ": expected ";
    for (const json& alt : alternatives) {
      Validator sub(root_);
      sub.check(alt, v, path);
      if (sub.errors.empty()) {
        ++matches;
        continue;
      }
      std::size_t score = sub.errors.size();
      for (const std::string& e : sub.errors) {
        score += e.rfind(wrong_type, 0) == 0 ? 1000 : 0;
      }
      if (closest.empty() || score < best) {
        closest = std::move(sub.errors);
        best = score;
      }
    }
    if (matches == 0) {
      errors.insert(errors.end(), closest.begin(), closest.end());
    } else if (matches > 1) {
      errors.push_back(where(path) + ": matches more than one alternative");
    }
  }

  const json& resolve(const std::string& ref) {
    require(ref.rfind("#/", 0) == 0, ErrorCode::Schema, "only local $ref is supported: " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& doc) {
  Validator v(schema);
  v.check(schema, doc, "");
  return v.errors;
}

void require_valid(const nlohmann::json& schema, const nlohmann::json& doc, const std::string& what) {
  const auto errors = validate(schema, doc);
  require(errors.empty(), ErrorCode::Schema, errors.empty() ? std::string() : what + ": " + errors.front());
}

}  // namespace osteo::schema
