#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "osteo/calibration.hpp"
#include "osteo/image.hpp"
#include "osteo/margin.hpp"
#include "osteo/metrics.hpp"
#include "osteo/pipeline/mri.hpp"

namespace osteo::dataset {

enum class Sex { Male, Female, Unknown };
enum class Bone { Femur, Tibia, Fibula, Other };
enum class Modality { Xray, Mri };
enum class Plane { None, Frontal, Sagittal, Axial };

inline constexpr std::array<Sex, 3> kSexes = {Sex::Male, Sex::Female, Sex::Unknown};
inline constexpr std::array<Bone, 4> kBones = {Bone::Femur, Bone::Tibia, Bone::Fibula, Bone::Other};
inline constexpr std::array<Plane, 3> kMriPlanes = {Plane::Frontal, Plane::Sagittal, Plane::Axial};

std::string_view to_string(Sex s);
std::string_view to_string(Bone b);
std::string_view to_string(Modality m);
std::string_view to_string(Plane p);  // None is ""

/// Case-insensitive. Empty sex is Unknown; "x-ray" is accepted for xray and
/// "coronal" for frontal. Anything else is UnknownKey.
Sex parse_sex(std::string_view s);
Bone parse_bone(std::string_view s);
Modality parse_modality(std::string_view s);
Plane parse_plane(std::string_view s);

struct ImageRef {
  std::string path;  // relative to the case root: <case_id>/<filename>
  Modality modality = Modality::Xray;
  Plane plane = Plane::None;
  bool accepted = true;  // quality filter outcome

  bool operator==(const ImageRef&) const = default;
};

struct PatientCase {
  std::string case_id;
  int age_years = 0;
  Sex sex = Sex::Unknown;
  std::string origin;
  Bone bone = Bone::Other;
  std::vector<ImageRef> images;  // sorted by path

  bool operator==(const PatientCase&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based line in the metadata CSV
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct IngestOptions {
  bool run_quality_filter = true;  // decode every image and record quality_filter
  mri::QualityThresholds thresholds;
};

struct IngestResult {
  std::vector<PatientCase> cases;  // sorted by case_id
  std::vector<Diagnostic> diagnostics;
};

/// Required columns: case_id, age, sex, origin, bone, filename, modality,
/// plane (any order; extra columns ignored; fields may be double-quoted).
/// Rows with bad values or unreadable files are skipped with a diagnostic.
/// A case whose rows disagree on age, sex, origin or bone is dropped as a
/// whole, so the outcome never depends on row order. A repeated
/// case_id + filename throws Schema.
IngestResult parse_metadata(const std::string& csv, const std::filesystem::path& root, const IngestOptions& opts = {});

/// Reads `metadata_csv`, or `<root>/metadata.csv` when empty.
IngestResult ingest(const std::filesystem::path& root, const std::filesystem::path& metadata_csv = {},
                    const IngestOptions& opts = {});

struct AgeBin {
  int lower = 0;  // [lower, lower + 10)
  std::size_t count = 0;

  bool operator==(const AgeBin&) const = default;
};

struct ExploreReport {
  std::size_t cases = 0;
  std::size_t images = 0;
  std::vector<AgeBin> age_histogram;    // every decade from 0 to the oldest, zeros included
  std::array<std::size_t, 3> sex{};     // kSexes order
  std::array<std::size_t, 4> bone{};    // kBones order
  std::size_t xray_images = 0;
  std::size_t mri_images = 0;
  std::array<std::size_t, 3> mri_planes{};  // kMriPlanes order; X-rays never count here
  std::size_t accepted_images = 0;

  bool operator==(const ExploreReport&) const = default;
};

/// Throws InsufficientData without cases.
ExploreReport explore(const std::vector<PatientCase>& cases);
nlohmann::ordered_json to_json(const ExploreReport& r);
std::string explore_json(const ExploreReport& r);
/// `category,key,count` rows.
std::string explore_csv(const ExploreReport& r);

nlohmann::ordered_json to_json(const PatientCase& c);

/// Segmentation output for one image of a case.
struct ImageResult {
  std::string image;  // filename within the case directory
  Modality modality = Modality::Xray;
  std::optional<BinaryMask> mask;     // X-ray lesion or MRI tumor
  std::optional<LabelMask> labels;    // MRI tissue labels

  bool operator==(const ImageResult&) const = default;
};

struct CaseResultBundle {
  std::string case_id;
  std::vector<ImageResult> images;
  std::optional<calibration::CalibrationRecord> calibration;
  std::vector<margin::MarginPrediction> margins;
  std::vector<metrics::MetricRow> metrics;
  std::string created;  // UTC, 2024-01-31T12:00:00Z
  std::string updated;

  bool operator==(const CaseResultBundle&) const = default;
};

std::string utc_timestamp();

/// JSON Schema of index.json, as shipped in docs/index.schema.json.
const nlohmann::json& index_schema();

struct RenderedFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// Every file of a persisted bundle, mask PNGs first and index.json last.
/// Depends only on the bundle.
std::vector<RenderedFile> render_bundle(const CaseResultBundle& bundle);

/// Writes `<out_dir>/<case_id>/index.json` plus one PNG per mask and returns
/// the index path. Output depends only on the bundle, so persisting twice
/// gives identical bytes. Files are written to a temporary name and renamed;
/// writes to one case directory are serialized.
std::filesystem::path persist(const CaseResultBundle& bundle, const std::filesystem::path& out_dir);

/// Validates the index against the schema before reading anything else.
CaseResultBundle load(const std::filesystem::path& index_path);

}  // namespace osteo::dataset
