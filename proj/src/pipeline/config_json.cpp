#include "osteo/pipeline/config_json.hpp"

#include <limits>
#include <variant>

#include "osteo/error.hpp"

namespace osteo::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(xray::ChanVeseInput v) {
  switch (v) {
    case xray::ChanVeseInput::Original: return "original";
    case xray::ChanVeseInput::Equalized: return "equalized";
    case xray::ChanVeseInput::Stretched: return "stretched";
  }
  return "stretched";
}

std::string_view to_string(mri::TumorRule v) {
  switch (v) {
    case mri::TumorRule::Brightest: return "brightest";
    case mri::TumorRule::Darkest: return "darkest";
    case mri::TumorRule::LargestComponent: return "largest_component";
  }
  return "brightest";
}

namespace {

using Slot = std::variant<double*, int*, std::uint64_t*, xray::ChanVeseInput*, mri::TumorRule*>;
using Slots = std::vector<std::pair<std::string, Slot>>;

Slots slots(xray::XrayConfig& c) {
  return {{"gaussian_sigma", &c.gaussian_sigma},
          {"gamma1", &c.gamma1},
          {"clahe.clip_limit", &c.clahe.clip_limit},
          {"clahe.tiles_x", &c.clahe.tiles_x},
          {"clahe.tiles_y", &c.clahe.tiles_y},
          {"stretch.p_low", &c.stretch.p_low},
          {"stretch.p_high", &c.stretch.p_high},
          {"chan_vese.mu", &c.chan_vese.mu},
          {"chan_vese.lambda1", &c.chan_vese.lambda1},
          {"chan_vese.lambda2", &c.chan_vese.lambda2},
          {"chan_vese.max_iter", &c.chan_vese.max_iter},
          {"chan_vese.tol", &c.chan_vese.tol},
          {"chan_vese.dt", &c.chan_vese.dt},
          {"chan_vese.checkerboard_period", &c.chan_vese.checkerboard_period},
          {"gamma2", &c.gamma2},
          {"chan_vese_input", &c.chan_vese_input}};
}

Slots slots(mri::MriConfig& c) {
  return {{"sharpen.amount", &c.sharpen.amount},
          {"sharpen.sigma", &c.sharpen.sigma},
          {"gamma", &c.gamma},
          {"otsu_classes", &c.otsu_classes},
          {"morph_radius", &c.morph_radius},
          {"kmeans.k", &c.kmeans.k},
          {"kmeans.seed", &c.kmeans.seed},
          {"kmeans.restarts", &c.kmeans.restarts},
          {"kmeans.max_iter", &c.kmeans.max_iter},
          {"kmeans.min_shift", &c.kmeans.min_shift},
          {"tumor_rule", &c.tumor_rule}};
}

ordered_json value_of(const Slot& s) {
  return std::visit(
      [](auto* p) -> ordered_json {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_enum_v<T>) {
          return std::string(to_string(*p));
        } else {
          return *p;
        }
      },
      s);
}

ordered_json dump_slots(const Slots& all) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, slot] : all) {
    const auto dot = name.find('.');
    if (dot == std::string::npos) {
      j[name] = value_of(slot);
    } else {
      j[name.substr(0, dot)][name.substr(dot + 1)] = value_of(slot);
    }
  }
  return j;
}

template <class Enum, std::size_t N>
Enum enum_from(const json& v, const std::array<Enum, N>& values, const std::string& field) {
  if (v.is_string()) {
    for (Enum e : values) {
      if (to_string(e) == v.get<std::string>()) {
        return e;
      }
    }
  }
  std::string names;
  for (Enum e : values) {
    names += (names.empty() ? "" : ", ") + std::string(to_string(e));
  }
  fail(ErrorCode::InvalidParameter, "config field '" + field + "' must be one of " + names);
}

void assign(const Slot& s, const json& v, const std::string& field) {
  auto bad = [&](const char* want) {
    fail(ErrorCode::InvalidParameter, "config field '" + field + "' must be " + want + ", got " + v.dump());
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) bad("a number");
          *p = v.get<double>();
        } else if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer() || v.get<long long>() < std::numeric_limits<int>::min() ||
              v.get<long long>() > std::numeric_limits<int>::max()) {
            bad("an integer");
          }
          *p = v.get<int>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (!v.is_number_unsigned()) bad("a non-negative integer");
          *p = v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, xray::ChanVeseInput>) {
          *p = enum_from(v, std::array{xray::ChanVeseInput::Original, xray::ChanVeseInput::Equalized,
                                       xray::ChanVeseInput::Stretched},
                         field);
        } else {
          *p = enum_from(v, std::array{mri::TumorRule::Brightest, mri::TumorRule::Darkest,
                                       mri::TumorRule::LargestComponent},
                         field);
        }
      },
      s);
}

void load_slots(const Slots& all, const json& j, const std::string& prefix = {}) {
  require(j.is_object(), ErrorCode::InvalidParameter,
          (prefix.empty() ? std::string("config") : "config field '" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = prefix.empty() ? key : prefix + "." + key;
    bool found = false;
    for (const auto& [name, slot] : all) {
      if (name == field) {
        assign(slot, value, field);
        found = true;
        break;
      }
      if (name.rfind(field + ".", 0) == 0) {
        load_slots(all, value, field);
        found = true;
        break;
      }
    }
    require(found, ErrorCode::InvalidParameter, "unknown config field '" + field + "'");
  }
}

}  // namespace

ordered_json to_json(const xray::XrayConfig& cfg) {
  xray::XrayConfig copy = cfg;
  return dump_slots(slots(copy));
}

ordered_json to_json(const mri::MriConfig& cfg) {
  mri::MriConfig copy = cfg;
  return dump_slots(slots(copy));
}

xray::XrayConfig xray_config_from_json(const json& j) {
  xray::XrayConfig cfg;
  if (!j.is_null()) {
    load_slots(slots(cfg), j);
  }
  cfg.validate();
  return cfg;
}

mri::MriConfig mri_config_from_json(const json& j) {
  mri::MriConfig cfg;
  if (!j.is_null()) {
    load_slots(slots(cfg), j);
  }
  cfg.validate();
  return cfg;
}

}  // namespace osteo::pipeline
