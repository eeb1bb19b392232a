#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "osteo/calibration.hpp"
#include "osteo/dataset.hpp"
#include "osteo/pipeline/mri.hpp"
#include "osteo/pipeline/xray.hpp"

namespace osteo::service {

struct ServiceOptions {
  std::filesystem::path case_root;
  std::filesystem::path artifact_dir;  // bundles are persisted here; empty keeps them in memory only
  xray::XrayConfig xray;               // defaults that request configs are merged over
  mri::MriConfig mri;
  std::filesystem::path femur_table;  // empty uses the bundled placeholder table
};

/// Reads a `--config` file: `{"artifact_dir", "femur_table", "xray": {...},
/// "mri": {...}}`, all optional. Relative paths resolve against the file.
ServiceOptions options_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                 ServiceOptions defaults = {});

struct Request {
  std::string method;  // "GET" or "POST"
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::uint64_t revision = 0;  // also sent as the X-Revision header
};

/// Session over one case root. Thread-safe: reads see an immutable per-case
/// snapshot, and mutations of one case are serialized while distinct cases
/// proceed in parallel. Every mutation takes the next session revision.
class Service {
 public:
  /// Ingests `<case_root>/metadata.csv`; a root without one has no cases.
  explicit Service(ServiceOptions opts);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& req);

  std::uint64_t revision() const { return revision_.load(); }
  const std::vector<dataset::Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  struct CaseState;
  struct CaseSlot;

  Response get_cases() const;
  Response get_case(const std::string& id) const;
  Response get_image(const std::string& image_id) const;
  Response get_artifact(const std::string& case_id, const std::string& file) const;
  Response get_margin_table(const Request& req) const;
  Response get_explore() const;
  Response post_segment(const nlohmann::json& body);
  Response post_calibrate(const nlohmann::json& body);
  Response post_margin(const nlohmann::json& body);

  template <class Change>
  nlohmann::ordered_json mutate(CaseSlot& slot, const nlohmann::json& body, Change&& change);

  std::shared_ptr<const CaseState> snapshot(const CaseSlot& slot) const;
  void publish(CaseSlot& slot, std::shared_ptr<CaseState> next);
  CaseSlot& slot_of(const std::string& case_id) const;
  std::pair<CaseSlot&, dataset::ImageRef> image_of(const std::string& image_id) const;
  Response json_response(int status, nlohmann::ordered_json body) const;

  ServiceOptions opts_;
  calibration::FemurReferenceTable femur_table_;
  std::vector<dataset::Diagnostic> diagnostics_;
  std::map<std::string, std::unique_ptr<CaseSlot>, std::less<>> cases_;  // fixed after construction
  std::atomic<std::uint64_t> revision_{0};
};

/// cpp-httplib front end forwarding every request to a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Blocks until the server stops.
  void wait();
  /// Asks the server to stop; safe from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace osteo::service
