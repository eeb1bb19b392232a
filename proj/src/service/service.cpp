#include "osteo/service.hpp"

#include <algorithm>

#include "httplib.h"
#include "osteo/api.hpp"
#include "osteo/error.hpp"
#include "osteo/margin.hpp"
#include "osteo/png_io.hpp"
#include "osteo/pipeline/config_json.hpp"

namespace osteo::service {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Failures that are about the request itself rather than the domain.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void bad_request(const std::string& message) {
  throw HttpError{400, "BAD_REQUEST", message};
}

[[noreturn]] void not_found(const std::string& message) {
  throw HttpError{404, "NOT_FOUND", message};
}

const json& need(const json& body, const char* key) {
  if (!body.contains(key)) {
    bad_request(std::string("missing field '") + key + "'");
  }
  return body[key];
}

std::string need_string(const json& body, const char* key) {
  const json& v = need(body, key);
  if (!v.is_string()) {
    bad_request(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

double need_number(const json& body, const char* key) {
  const json& v = need(body, key);
  if (!v.is_number()) {
    bad_request(std::string("field '") + key + "' must be a number");
  }
  return v.get<double>();
}

calibration::Point need_point(const json& line, const char* key) {
  const json& v = need(line, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad_request(std::string("field 'line.") + key + "' must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

int status_of(ErrorCode code) {
  return code == ErrorCode::Io ? 500 : 422;
}

std::string artifact_url(const std::string& case_id, const std::string& file) {
  return "/artifacts/" + case_id + "/" + file;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < path.size()) {
    auto end = path.find('/', start);
    if (end == std::string::npos) {
      end = path.size();
    }
    if (end > start) {
      out.push_back(path.substr(start, end - start));
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

struct ImageState {
  dataset::ImageResult result;
  ordered_json summary;
};

struct Service::CaseState {
  dataset::PatientCase meta;
  std::map<std::string, ImageState> results;  // by filename
  std::string latest_mask_image;              // image id of the newest segmentation
  std::optional<calibration::CalibrationRecord> calibration;
  std::string calibration_image;
  std::optional<margin::EnnekingStage> stage;
  std::vector<margin::MarginPrediction> margins;
  std::uint64_t revision = 0;  // session revision of the last mutation
  std::string created;
  std::string updated;
  std::vector<dataset::RenderedFile> artifacts;
};

struct Service::CaseSlot {
  std::mutex write;
  mutable std::mutex read;
  std::shared_ptr<const CaseState> state;
};

namespace {

dataset::CaseResultBundle bundle_of(const std::string& case_id, const std::map<std::string, ImageState>& results,
                                    const std::optional<calibration::CalibrationRecord>& cal,
                                    const std::vector<margin::MarginPrediction>& margins, const std::string& created,
                                    const std::string& updated) {
  dataset::CaseResultBundle b;
  b.case_id = case_id;
  for (const auto& [name, img] : results) {
    b.images.push_back(img.result);
  }
  b.calibration = cal;
  b.margins = margins;
  b.created = created;
  b.updated = updated;
  return b;
}

}  // namespace

ServiceOptions options_from_json(const json& j, const fs::path& base_dir, ServiceOptions opts) {
  require(j.is_object(), ErrorCode::InvalidParameter, "service config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "artifact_dir" || key == "femur_table") {
      require(value.is_string(), ErrorCode::InvalidParameter, "service config field '" + key + "' must be a string");
      const fs::path p = base_dir / value.get<std::string>();
      (key == "artifact_dir" ? opts.artifact_dir : opts.femur_table) = p.lexically_normal();
    } else if (key == "xray") {
      json merged = json(pipeline::to_json(opts.xray));
      merged.merge_patch(value);
      opts.xray = pipeline::xray_config_from_json(merged);
    } else if (key == "mri") {
      json merged = json(pipeline::to_json(opts.mri));
      merged.merge_patch(value);
      opts.mri = pipeline::mri_config_from_json(merged);
    } else {
      fail(ErrorCode::InvalidParameter, "unknown service config field '" + key + "'");
    }
  }
  return opts;
}

Service::Service(ServiceOptions opts)
    : opts_(std::move(opts)),
      femur_table_(opts_.femur_table.empty() ? calibration::FemurReferenceTable::bundled()
                                             : calibration::FemurReferenceTable::load(opts_.femur_table)) {
  opts_.xray.validate();
  opts_.mri.validate();
  if (opts_.case_root.empty()) {
    return;
  }
  std::error_code ec;
  require(fs::is_directory(opts_.case_root, ec), ErrorCode::Io,
          "case root " + opts_.case_root.string() + " is not a directory");
  if (!fs::exists(opts_.case_root / "metadata.csv", ec)) {
    return;
  }
  auto ingested = dataset::ingest(opts_.case_root);
  diagnostics_ = std::move(ingested.diagnostics);
  for (auto& c : ingested.cases) {
    auto slot = std::make_unique<CaseSlot>();
    auto state = std::make_shared<CaseState>();
    state->meta = std::move(c);
    slot->state = std::move(state);
    cases_.emplace(slot->state->meta.case_id, std::move(slot));
  }
}

Service::~Service() = default;

std::shared_ptr<const Service::CaseState> Service::snapshot(const CaseSlot& slot) const {
  std::lock_guard<std::mutex> g(slot.read);
  return slot.state;
}

void Service::publish(CaseSlot& slot, std::shared_ptr<CaseState> next) {
  std::lock_guard<std::mutex> g(slot.read);
  slot.state = std::move(next);
}

Service::CaseSlot& Service::slot_of(const std::string& case_id) const {
  const auto it = cases_.find(case_id);
  if (it == cases_.end()) {
    not_found("unknown case '" + case_id + "'");
  }
  return *it->second;
}

std::pair<Service::CaseSlot&, dataset::ImageRef> Service::image_of(const std::string& image_id) const {
  const auto slash = image_id.find('/');
  if (slash == std::string::npos) {
    not_found("unknown image '" + image_id + "'");
  }
  CaseSlot& slot = slot_of(image_id.substr(0, slash));
  for (const auto& ref : snapshot(slot)->meta.images) {
    if (ref.path == image_id) {
      return {slot, ref};
    }
  }
  not_found("unknown image '" + image_id + "'");
}

Response Service::json_response(int status, ordered_json body) const {
  Response r;
  r.status = status;
  r.revision = revision_.load();
  if (body.is_object() && body.contains("revision")) {
    r.revision = body["revision"].get<std::uint64_t>();
  } else if (body.is_object()) {
    body["revision"] = r.revision;
  }
  r.body = api::dump(body);
  return r;
}

Response Service::handle(const Request& req) {
  try {
    const auto parts = split_path(req.path);
    const std::string head = parts.empty() ? std::string() : parts[0];
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    auto only = [&](bool ok) {
      if (!ok) {
        throw HttpError{405, "METHOD_NOT_ALLOWED", req.method + " is not supported on " + req.path};
      }
    };

    if (head == "cases" && parts.size() <= 2) {
      only(get);
      return parts.size() == 1 ? get_cases() : get_case(parts[1]);
    }
    if (head == "images" && parts.size() >= 3) {
      only(get);
      return get_image(req.path.substr(req.path.find("images/") + 7));
    }
    if (head == "artifacts" && parts.size() == 3) {
      only(get);
      return get_artifact(parts[1], parts[2]);
    }
    if (head == "margin-table" && parts.size() == 1) {
      only(get);
      return get_margin_table(req);
    }
    if (head == "explore" && parts.size() == 1) {
      only(get);
      return get_explore();
    }
    if ((head == "segment" || head == "calibrate" || head == "margin") && parts.size() == 1) {
      only(post);
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        bad_request(std::string("body is not valid JSON: ") + e.what());
      }
      if (!body.is_object()) {
        bad_request("body must be a JSON object");
      }
      if (const auto it = req.headers.find("if-match"); it != req.headers.end() && !body.contains("if_revision")) {
        try {
          body["if_revision"] = std::stoull(it->second);
        } catch (const std::exception&) {
          bad_request("If-Match must be a revision number");
        }
      }
      if (head == "segment") return post_segment(body);
      if (head == "calibrate") return post_calibrate(body);
      return post_margin(body);
    }
    not_found("no endpoint " + req.path);
  } catch (const HttpError& e) {
    return json_response(e.status, api::error_json(e.code, e.message));
  } catch (const Error& e) {
    return json_response(status_of(e.code()), api::error_json(e));
  } catch (const std::exception& e) {
    return json_response(500, api::error_json("INTERNAL", e.what()));
  }
}

Response Service::get_cases() const {
  ordered_json out = ordered_json::array();
  for (const auto& [id, slot] : cases_) {
    out.push_back(dataset::to_json(snapshot(*slot)->meta));
  }
  return json_response(200, out);
}

Response Service::get_case(const std::string& id) const {
  const auto s = snapshot(slot_of(id));
  ordered_json state;
  state["calibration"] = s->calibration ? api::calibration_json(*s->calibration) : ordered_json(nullptr);
  state["calibration_image"] = s->calibration ? ordered_json(s->calibration_image) : ordered_json(nullptr);
  state["stage"] = s->stage ? ordered_json(std::string(margin::to_string(*s->stage))) : ordered_json(nullptr);
  state["latest_mask_image"] = s->latest_mask_image.empty() ? ordered_json(nullptr) : ordered_json(s->latest_mask_image);
  state["segmentations"] = ordered_json::array();
  for (const auto& [name, img] : s->results) {
    state["segmentations"].push_back({{"image_id", id + "/" + name}, {"result", img.summary}});
  }
  state["margins"] = ordered_json::array();
  for (const auto& m : s->margins) {
    state["margins"].push_back(api::margin_json(m));
  }
  ordered_json out;
  out["case"] = dataset::to_json(s->meta);
  out["state"] = std::move(state);
  out["artifacts"] = ordered_json::array();
  for (const auto& f : s->artifacts) {
    out["artifacts"].push_back(artifact_url(id, f.name));
  }
  out["case_revision"] = s->revision;
  return json_response(200, out);
}

Response Service::get_image(const std::string& image_id) const {
  image_of(image_id);
  const auto bytes = io::read_bytes(opts_.case_root / image_id);
  Response r;
  r.content_type = "image/png";
  r.body.assign(bytes.begin(), bytes.end());
  r.revision = revision_.load();
  return r;
}

Response Service::get_artifact(const std::string& case_id, const std::string& file) const {
  const auto s = snapshot(slot_of(case_id));
  for (const auto& f : s->artifacts) {
    if (f.name == file) {
      Response r;
      r.content_type = file.ends_with(".json") ? "application/json" : "image/png";
      r.body.assign(f.bytes.begin(), f.bytes.end());
      r.revision = revision_.load();
      return r;
    }
  }
  not_found("no artifact '" + file + "' for case '" + case_id + "'");
}

Response Service::get_margin_table(const Request& req) const {
  const auto it = req.query.find("stage");
  if (it == req.query.end()) {
    bad_request("query parameter 'stage' is required");
  }
  const auto stage = margin::parse_stage(it->second);
  const auto fmt = req.query.find("format");
  if (fmt != req.query.end() && fmt->second == "csv") {
    const auto rows = margin::margin_table(margin::reference_model(), stage);
    Response r;
    r.content_type = "text/csv";
    r.body = margin::margin_table_csv(rows);
    r.revision = revision_.load();
    return r;
  }
  if (fmt != req.query.end() && fmt->second != "json") {
    bad_request("format must be json or csv");
  }
  return json_response(200, api::margin_table_json(stage));
}

Response Service::get_explore() const {
  std::vector<dataset::PatientCase> cases;
  for (const auto& [id, slot] : cases_) {
    cases.push_back(snapshot(*slot)->meta);
  }
  return json_response(200, dataset::to_json(dataset::explore(cases)));
}

// Runs one mutation of a case: checks the conditional revision, applies
// `change` to a private copy, stamps the next revision, renders and persists
// the bundle, then publishes the copy.
template <class Change>
ordered_json Service::mutate(CaseSlot& slot, const json& body, Change&& change) {
  std::lock_guard<std::mutex> g(slot.write);
  const auto cur = snapshot(slot);
  if (body.contains("if_revision")) {
    if (!body["if_revision"].is_number_unsigned()) {
      bad_request("field 'if_revision' must be a non-negative integer");
    }
    const auto expected = body["if_revision"].get<std::uint64_t>();
    if (expected != cur->revision) {
      throw HttpError{409, "STALE_REVISION",
                      "case is at revision " + std::to_string(cur->revision) + ", request expected " +
                          std::to_string(expected)};
    }
  }
  auto next = std::make_shared<CaseState>(*cur);
  ordered_json payload = change(*next);
  next->revision = ++revision_;
  next->updated = dataset::utc_timestamp();
  if (next->created.empty()) {
    next->created = next->updated;
  }
  const auto bundle = bundle_of(next->meta.case_id, next->results, next->calibration, next->margins, next->created,
                                next->updated);
  next->artifacts = dataset::render_bundle(bundle);
  if (!opts_.artifact_dir.empty()) {
    dataset::persist(bundle, opts_.artifact_dir);
  }
  payload["case_revision"] = next->revision;
  payload["artifacts"] = ordered_json::array();
  for (const auto& f : next->artifacts) {
    payload["artifacts"].push_back(artifact_url(next->meta.case_id, f.name));
  }
  payload["revision"] = next->revision;
  publish(slot, std::move(next));
  return payload;
}

Response Service::post_segment(const json& body) {
  const std::string image_id = need_string(body, "image_id");
  auto [slot, ref] = image_of(image_id);
  if (body.contains("modality")) {
    if (!body["modality"].is_string()) {
      bad_request("field 'modality' must be a string");
    }
    const auto asked = dataset::parse_modality(body["modality"].get<std::string>());
    require(asked == ref.modality, ErrorCode::InvalidParameter,
            "image '" + image_id + "' is " + std::string(dataset::to_string(ref.modality)) + ", not " +
                std::string(dataset::to_string(asked)));
  }
  const json config = body.value("config", json());
  if (!config.is_null() && !config.is_object()) {
    bad_request("field 'config' must be an object");
  }
  const GrayImage img = io::read_png(opts_.case_root / image_id);
  const std::string filename = image_id.substr(image_id.find('/') + 1);

  auto payload = mutate(slot, body, [&](CaseState& st) {
    ImageState out;
    out.result.image = filename;
    out.result.modality = ref.modality;
    if (ref.modality == dataset::Modality::Xray) {
      json merged = json(pipeline::to_json(opts_.xray));
      merged.merge_patch(config);
      auto r = xray::segment_xray(img, pipeline::xray_config_from_json(merged));
      out.summary = api::segmentation_json(r);
      out.result.mask = std::move(r.lesion_mask);
    } else {
      json merged = json(pipeline::to_json(opts_.mri));
      merged.merge_patch(config);
      auto r = mri::segment_mri(img, pipeline::mri_config_from_json(merged));
      out.summary = api::segmentation_json(r);
      out.result.mask = std::move(r.tumor_mask);
      out.result.labels = std::move(r.labels);
    }
    ordered_json p;
    p["image_id"] = image_id;
    p["modality"] = std::string(dataset::to_string(ref.modality));
    p["result"] = out.summary;
    st.results[filename] = std::move(out);
    st.latest_mask_image = image_id;
    return p;
  });
  return json_response(200, std::move(payload));
}

Response Service::post_calibrate(const json& body) {
  const std::string image_id = need_string(body, "image_id");
  auto [slot, ref] = image_of(image_id);
  const json& line_json = need(body, "line");
  if (!line_json.is_object()) {
    bad_request("field 'line' must be an object");
  }
  const calibration::ReferenceLine line{need_point(line_json, "p0"), need_point(line_json, "p1")};
  std::optional<double> estimate;
  double known_cm = 0.0;
  auto source = calibration::Source::UserSupplied;
  if (body.contains("known_cm")) {
    known_cm = need_number(body, "known_cm");
  } else if (body.contains("sex") || body.contains("age")) {
    const std::string sex = need_string(body, "sex");
    const double age = need_number(body, "age");
    estimate = calibration::estimate_femur_length(sex, age, femur_table_);
    known_cm = *estimate;
    source = calibration::Source::ReferenceTable;
  } else {
    bad_request("either 'known_cm' or 'sex' and 'age' is required");
  }
  const auto record = calibration::set_scale(line, known_cm, source);

  auto payload = mutate(slot, body, [&](CaseState& st) {
    st.calibration = record;
    st.calibration_image = image_id;
    ordered_json p;
    p["image_id"] = image_id;
    p["calibration"] = api::calibration_json(record);
    if (estimate) {
      p["estimated_length_cm"] = *estimate;
    }
    return p;
  });
  return json_response(200, std::move(payload));
}

Response Service::post_margin(const json& body) {
  const auto stage = margin::parse_stage(need_string(body, "stage"));
  std::optional<double> radius;
  if (body.contains("radius_cm") && !body["radius_cm"].is_null()) {
    radius = need_number(body, "radius_cm");
  }
  auto rule = margin::RadiusRule::EquivalentArea;
  if (body.contains("rule")) {
    rule = margin::parse_radius_rule(need_string(body, "rule"));
  }
  // Without a case this is a pure lookup that leaves the session untouched.
  if (!body.contains("case_id") || body["case_id"].is_null()) {
    if (!radius) {
      bad_request("'radius_cm' is required when no 'case_id' is given");
    }
    return json_response(200, api::margin_json(margin::predict_margin(margin::reference_model(), stage, *radius)));
  }
  const std::string case_id = need_string(body, "case_id");
  CaseSlot& slot = slot_of(case_id);

  auto payload = mutate(slot, body, [&](CaseState& st) {
    ordered_json extra;
    double r = 0.0;
    if (radius) {
      r = *radius;
      extra["radius_source"] = "request";
    } else {
      require(!st.latest_mask_image.empty(), ErrorCode::MissingInput,
              "case '" + case_id + "' has no segmented mask; pass radius_cm or POST /segment first");
      require(st.calibration.has_value(), ErrorCode::MissingInput,
              "case '" + case_id + "' has no calibration; POST /calibrate first");
      const auto& img = st.results.at(st.latest_mask_image.substr(st.latest_mask_image.find('/') + 1));
      r = margin::lesion_radius(*img.result.mask, *st.calibration, rule);
      extra["radius_source"] = "mask";
      extra["mask_image"] = st.latest_mask_image;
      extra["rule"] = std::string(margin::to_string(rule));
    }
    const auto prediction = margin::predict_margin(margin::reference_model(), stage, r);
    st.stage = stage;
    st.margins.push_back(prediction);
    ordered_json p = api::margin_json(prediction);
    p["case_id"] = case_id;
    for (auto& [k, v] : extra.items()) {
      p[k] = v;
    }
    return p;
  });
  return json_response(200, std::move(payload));
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  std::mutex join_guard;
  explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto forward = [this](const httplib::Request& hreq, httplib::Response& hres) {
    Request req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) {
      req.query.emplace(k, v);
    }
    for (const auto& [k, v] : hreq.headers) {
      std::string key = k;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      req.headers.emplace(std::move(key), v);
    }
    req.body = hreq.body;
    const Response res = impl_->service.handle(req);
    hres.status = res.status;
    hres.set_header("X-Revision", std::to_string(res.revision));
    hres.set_content(res.body, res.content_type);
  };
  impl_->server.Get(".*", forward);
  impl_->server.Post(".*", forward);
  impl_->server.Put(".*", forward);
  impl_->server.Patch(".*", forward);
  impl_->server.Delete(".*", forward);
}

HttpServer::~HttpServer() {
  stop();
  wait();
}

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
    require(bound > 0, ErrorCode::Io, "cannot bind " + host + " to a free port");
  } else {
    require(impl_->server.bind_to_port(host, port), ErrorCode::Io,
            "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::wait() {
  std::lock_guard<std::mutex> g(impl_->join_guard);
  if (impl_->thread.joinable()) {
    impl_->thread.join();
  }
}

void HttpServer::stop() {
  impl_->server.stop();
}

}  // namespace osteo::service
