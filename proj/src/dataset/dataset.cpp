#include "osteo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "../common/text.hpp"
#include "osteo/error.hpp"
#include "osteo/json_schema.hpp"
#include "osteo/png_io.hpp"

namespace osteo::dataset {

extern const char* const kIndexSchemaJson;

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::Male: return "male";
    case Sex::Female: return "female";
    case Sex::Unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Bone b) {
  switch (b) {
    case Bone::Femur: return "femur";
    case Bone::Tibia: return "tibia";
    case Bone::Fibula: return "fibula";
    case Bone::Other: return "other";
  }
  return "other";
}

std::string_view to_string(Modality m) {
  return m == Modality::Xray ? "xray" : "mri";
}

std::string_view to_string(Plane p) {
  switch (p) {
    case Plane::None: return "";
    case Plane::Frontal: return "frontal";
    case Plane::Sagittal: return "sagittal";
    case Plane::Axial: return "axial";
  }
  return "";
}

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<Enum, N>& values, const char* what) {
  const std::string key = text::lower(text::trim(s));
  for (Enum v : values) {
    if (to_string(v) == key) {
      return v;
    }
  }
  fail(ErrorCode::UnknownKey, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

Sex parse_sex(std::string_view s) {
  if (text::trim(s).empty()) {
    return Sex::Unknown;
  }
  const std::string key = text::lower(text::trim(s));
  if (key == "m") return Sex::Male;
  if (key == "f") return Sex::Female;
  return parse_enum(s, kSexes, "sex");
}

Bone parse_bone(std::string_view s) {
  return parse_enum(s, kBones, "bone");
}

Modality parse_modality(std::string_view s) {
  const std::string key = text::lower(text::trim(s));
  if (key == "x-ray") {
    return Modality::Xray;
  }
  return parse_enum(s, std::array{Modality::Xray, Modality::Mri}, "modality");
}

Plane parse_plane(std::string_view s) {
  const std::string key = text::lower(text::trim(s));
  if (key.empty()) {
    return Plane::None;
  }
  if (key == "coronal") {
    return Plane::Frontal;
  }
  return parse_enum(s, kMriPlanes, "plane");
}

namespace {

// One CSV record; fields may be wrapped in double quotes with "" escapes.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(text::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(text::trim(cur));
  return out;
}

bool safe_name(std::string_view s) {
  return !s.empty() && s != "." && s != ".." && s.find_first_of("/\\") == std::string_view::npos;
}

int parse_age(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && ptr == s.data() + s.size() && !s.empty() && v >= 0, ErrorCode::Schema,
          "age '" + std::string(s) + "' is not a non-negative integer");
  return v;
}

constexpr const char* kColumns[] = {"case_id", "age", "sex", "origin", "bone", "filename", "modality", "plane"};

struct Row {
  std::size_t line = 0;
  PatientCase meta;  // case fields only
  std::string filename;
  ImageRef image;
};

}  // namespace

IngestResult parse_metadata(const std::string& csv, const fs::path& root, const IngestOptions& opts) {
  const auto lines = text::data_lines(csv);
  require(!lines.empty(), ErrorCode::Schema, "metadata: missing header row");

  std::array<std::size_t, std::size(kColumns)> col{};
  {
    const auto header = split_record(lines.front().second);
    for (std::size_t c = 0; c < std::size(kColumns); ++c) {
      const auto it = std::find_if(header.begin(), header.end(),
                                   [&](const std::string& h) { return text::lower(h) == kColumns[c]; });
      require(it != header.end(), ErrorCode::Schema, std::string("metadata: missing column '") + kColumns[c] + "'");
      col[c] = static_cast<std::size_t>(it - header.begin());
    }
  }

  IngestResult result;
  auto diag = [&](std::size_t line, const std::string& msg) {
    result.diagnostics.push_back({line, "row " + std::to_string(line) + ": " + msg});
  };

  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::vector<Row> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [line_no, line] = lines[i];
    const auto f = split_record(line);
    if (f.size() <= *std::max_element(col.begin(), col.end())) {
      diag(line_no, "expected at least " + std::to_string(*std::max_element(col.begin(), col.end()) + 1) +
                        " fields, found " + std::to_string(f.size()));
      continue;
    }
    Row r;
    r.line = line_no;
    r.meta.case_id = f[col[0]];
    r.filename = f[col[5]];
    const auto key = std::make_pair(r.meta.case_id, r.filename);
    if (const auto it = seen.find(key); it != seen.end()) {
      fail(ErrorCode::Schema, "metadata: duplicate case_id '" + r.meta.case_id + "' and filename '" + r.filename +
                                  "' on rows " + std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    seen.emplace(key, line_no);
    try {
      require(safe_name(r.meta.case_id), ErrorCode::Schema, "case_id '" + r.meta.case_id + "' is not a directory name");
      require(safe_name(r.filename), ErrorCode::Schema, "filename '" + r.filename + "' is not a plain file name");
      r.meta.age_years = parse_age(f[col[1]]);
      r.meta.sex = parse_sex(f[col[2]]);
      r.meta.origin = f[col[3]];
      r.meta.bone = parse_bone(f[col[4]]);
      r.image.modality = parse_modality(f[col[6]]);
      r.image.plane = parse_plane(f[col[7]]);
      require(r.image.modality != Modality::Mri || r.image.plane != Plane::None, ErrorCode::Schema,
              "MRI image '" + r.filename + "' has no plane");
    } catch (const Error& e) {
      diag(line_no, e.what());
      continue;
    }
    r.image.path = r.meta.case_id + "/" + r.filename;
    const fs::path file = root / r.meta.case_id / r.filename;
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) {
      diag(line_no, "missing file " + file.string());
      continue;
    }
    if (opts.run_quality_filter) {
      try {
        r.image.accepted = mri::quality_filter(io::read_png(file), opts.thresholds).accepted;
      } catch (const Error& e) {
        diag(line_no, "cannot read " + file.string() + ": " + e.what());
        continue;
      }
    }
    rows.push_back(std::move(r));
  }

  std::map<std::string, std::vector<const Row*>> by_case;
  for (const Row& r : rows) {
    by_case[r.meta.case_id].push_back(&r);
  }
  for (auto& [id, group] : by_case) {
    std::sort(group.begin(), group.end(), [](const Row* a, const Row* b) { return a->filename < b->filename; });
    const PatientCase& ref = group.front()->meta;
    std::vector<std::string> conflicts;
    auto same = [&](auto get, const char* name) {
      for (const Row* r : group) {
        if (get(r->meta) != get(ref)) {
          conflicts.emplace_back(name);
          return;
        }
      }
    };
    same([](const PatientCase& c) { return c.age_years; }, "age");
    same([](const PatientCase& c) { return c.sex; }, "sex");
    same([](const PatientCase& c) { return c.origin; }, "origin");
    same([](const PatientCase& c) { return c.bone; }, "bone");
    if (!conflicts.empty()) {
      std::set<std::size_t> line_set;
      for (const Row* r : group) {
        line_set.insert(r->line);
      }
      std::string fields;
      for (const auto& c : conflicts) {
        fields += (fields.empty() ? "" : ", ") + c;
      }
      std::string where;
      for (std::size_t l : line_set) {
        where += (where.empty() ? "" : ", ") + std::to_string(l);
      }
      result.diagnostics.push_back({*line_set.begin(), "case '" + id + "' dropped: rows " + where +
                                                           " disagree on " + fields});
      continue;
    }
    PatientCase c = ref;
    for (const Row* r : group) {
      c.images.push_back(r->image);
    }
    result.cases.push_back(std::move(c));
  }
  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  return result;
}

IngestResult ingest(const fs::path& root, const fs::path& metadata_csv, const IngestOptions& opts) {
  const fs::path meta = metadata_csv.empty() ? root / "metadata.csv" : metadata_csv;
  const auto bytes = io::read_bytes(meta);
  return parse_metadata(std::string(bytes.begin(), bytes.end()), root, opts);
}

ExploreReport explore(const std::vector<PatientCase>& cases) {
  require(!cases.empty(), ErrorCode::InsufficientData, "explore needs at least one case");
  ExploreReport r;
  r.cases = cases.size();
  int oldest = 0;
  for (const PatientCase& c : cases) {
    oldest = std::max(oldest, c.age_years);
  }
  for (int lower = 0; lower <= oldest; lower += 10) {
    r.age_histogram.push_back({lower, 0});
  }
  for (const PatientCase& c : cases) {
    ++r.age_histogram[static_cast<std::size_t>(c.age_years / 10)].count;
    ++r.sex[static_cast<std::size_t>(c.sex)];
    ++r.bone[static_cast<std::size_t>(c.bone)];
    for (const ImageRef& img : c.images) {
      ++r.images;
      r.accepted_images += img.accepted ? 1 : 0;
      if (img.modality == Modality::Xray) {
        ++r.xray_images;
      } else {
        ++r.mri_images;
        ++r.mri_planes[static_cast<std::size_t>(img.plane) - 1];
      }
    }
  }
  return r;
}

ordered_json to_json(const ExploreReport& r) {
  ordered_json j;
  j["cases"] = r.cases;
  j["images"] = r.images;
  j["age_histogram"] = ordered_json::array();
  for (const AgeBin& b : r.age_histogram) {
    j["age_histogram"].push_back({{"lower", b.lower}, {"upper", b.lower + 10}, {"count", b.count}});
  }
  for (std::size_t i = 0; i < kSexes.size(); ++i) {
    j["sex"][std::string(to_string(kSexes[i]))] = r.sex[i];
  }
  for (std::size_t i = 0; i < kBones.size(); ++i) {
    j["bone"][std::string(to_string(kBones[i]))] = r.bone[i];
  }
  j["modality"] = {{"xray", r.xray_images}, {"mri", r.mri_images}};
  for (std::size_t i = 0; i < kMriPlanes.size(); ++i) {
    j["mri_planes"][std::string(to_string(kMriPlanes[i]))] = r.mri_planes[i];
  }
  j["accepted_images"] = r.accepted_images;
  return j;
}

std::string explore_json(const ExploreReport& r) {
  return to_json(r).dump(2) + "\n";
}

std::string explore_csv(const ExploreReport& r) {
  std::ostringstream out;
  out << "category,key,count\n";
  out << "total,cases," << r.cases << "\n";
  out << "total,images," << r.images << "\n";
  for (const AgeBin& b : r.age_histogram) {
    out << "age," << b.lower << "-" << b.lower + 9 << "," << b.count << "\n";
  }
  for (std::size_t i = 0; i < kSexes.size(); ++i) {
    out << "sex," << to_string(kSexes[i]) << "," << r.sex[i] << "\n";
  }
  for (std::size_t i = 0; i < kBones.size(); ++i) {
    out << "bone," << to_string(kBones[i]) << "," << r.bone[i] << "\n";
  }
  out << "modality,xray," << r.xray_images << "\n";
  out << "modality,mri," << r.mri_images << "\n";
  for (std::size_t i = 0; i < kMriPlanes.size(); ++i) {
    out << "mri_plane," << to_string(kMriPlanes[i]) << "," << r.mri_planes[i] << "\n";
  }
  out << "quality,accepted," << r.accepted_images << "\n";
  return out.str();
}

ordered_json to_json(const PatientCase& c) {
  ordered_json j;
  j["case_id"] = c.case_id;
  j["age_years"] = c.age_years;
  j["sex"] = std::string(to_string(c.sex));
  j["origin"] = c.origin;
  j["bone"] = std::string(to_string(c.bone));
  j["images"] = ordered_json::array();
  for (const ImageRef& img : c.images) {
    ordered_json i;
    i["path"] = img.path;
    i["modality"] = std::string(to_string(img.modality));
    i["plane"] = img.plane == Plane::None ? ordered_json(nullptr) : ordered_json(std::string(to_string(img.plane)));
    i["accepted"] = img.accepted;
    j["images"].push_back(std::move(i));
  }
  return j;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const json& index_schema() {
  static const json schema = json::parse(kIndexSchemaJson);
  return schema;
}

namespace {

std::string artifact_name(std::size_t index, const std::string& image, const char* kind) {
  std::string stem = fs::path(image).stem().string();
  for (char& c : stem) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    c = ok ? c : '_';
  }
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return prefix + stem + "_" + kind + ".png";
}

void write_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  io::write_bytes(tmp, bytes);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::mutex& case_lock(const fs::path& dir) {
  static std::mutex registry_guard;
  static std::map<std::string, std::mutex> locks;
  std::lock_guard<std::mutex> g(registry_guard);
  return locks[fs::absolute(dir).lexically_normal().string()];
}

}  // namespace

std::vector<RenderedFile> render_bundle(const CaseResultBundle& bundle) {
  require(safe_name(bundle.case_id), ErrorCode::InvalidParameter,
          "case_id '" + bundle.case_id + "' is not a directory name");

  ordered_json j;
  j["schema_version"] = 1;
  j["case_id"] = bundle.case_id;
  j["created"] = bundle.created;
  j["updated"] = bundle.updated;
  j["images"] = ordered_json::array();
  std::vector<RenderedFile> files;
  for (std::size_t i = 0; i < bundle.images.size(); ++i) {
    const ImageResult& img = bundle.images[i];
    ordered_json e;
    e["image"] = img.image;
    e["modality"] = std::string(to_string(img.modality));
    e["mask"] = nullptr;
    e["labels"] = nullptr;
    if (img.mask) {
      const std::string name = artifact_name(i, img.image, "mask");
      e["mask"] = {{"file", name},
                   {"width", img.mask->width()},
                   {"height", img.mask->height()},
                   {"foreground_pixels", img.mask->count()}};
      files.push_back({name, io::encode_png(*img.mask)});
    }
    if (img.labels) {
      const std::string name = artifact_name(i, img.image, "labels");
      const auto& c = img.labels->counts();
      e["labels"] = {{"file", name},
                     {"width", img.labels->width()},
                     {"height", img.labels->height()},
                     {"label_counts", {c[0], c[1], c[2]}}};
      files.push_back({name, io::encode_png(*img.labels)});
    }
    j["images"].push_back(std::move(e));
  }
  j["calibration"] = bundle.calibration ? ordered_json(calibration::to_json(*bundle.calibration)) : ordered_json(nullptr);
  j["margins"] = ordered_json::array();
  for (const auto& m : bundle.margins) {
    j["margins"].push_back(margin::to_json(m));
  }
  j["metrics"] = ordered_json::array();
  for (const auto& row : bundle.metrics) {
    j["metrics"].push_back(metrics::to_json(row));
  }
  schema::require_valid(index_schema(), json(j), "index for case '" + bundle.case_id + "'");
  const std::string text = j.dump(2) + "\n";
  files.push_back({"index.json", std::vector<std::uint8_t>(text.begin(), text.end())});
  return files;
}

fs::path persist(const CaseResultBundle& bundle, const fs::path& out_dir) {
  const auto files = render_bundle(bundle);
  const fs::path dir = out_dir / bundle.case_id;
  std::lock_guard<std::mutex> guard(case_lock(dir));
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  for (const RenderedFile& f : files) {
    write_atomic(dir / f.name, f.bytes);
  }
  return dir / "index.json";
}

CaseResultBundle load(const fs::path& index_path) {
  const auto bytes = io::read_bytes(index_path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, index_path.string() + ": not valid JSON: " + e.what());
  }
  schema::require_valid(index_schema(), j, index_path.string());

  const fs::path dir = index_path.parent_path();
  CaseResultBundle b;
  b.case_id = j["case_id"].get<std::string>();
  b.created = j["created"].get<std::string>();
  b.updated = j["updated"].get<std::string>();
  for (const json& e : j["images"]) {
    ImageResult img;
    img.image = e["image"].get<std::string>();
    img.modality = parse_modality(e["modality"].get<std::string>());
    auto check_shape = [&](const auto& raster, const json& meta) {
      require(raster.width() == meta["width"].get<int>() && raster.height() == meta["height"].get<int>(),
              ErrorCode::Schema, (dir / meta["file"].get<std::string>()).string() + ": size differs from the index");
    };
    if (!e["mask"].is_null()) {
      const json& m = e["mask"];
      img.mask = io::read_mask_png(dir / m["file"].get<std::string>());
      check_shape(*img.mask, m);
      require(img.mask->count() == m["foreground_pixels"].get<std::size_t>(), ErrorCode::Schema,
              (dir / m["file"].get<std::string>()).string() + ": foreground count differs from the index");
    }
    if (!e["labels"].is_null()) {
      const json& m = e["labels"];
      img.labels = io::read_label_png(dir / m["file"].get<std::string>());
      check_shape(*img.labels, m);
      const auto& c = img.labels->counts();
      require(json({c[0], c[1], c[2]}) == m["label_counts"], ErrorCode::Schema,
              (dir / m["file"].get<std::string>()).string() + ": label counts differ from the index");
    }
    b.images.push_back(std::move(img));
  }
  if (!j["calibration"].is_null()) {
    b.calibration = calibration::calibration_from_json(j["calibration"]);
  }
  for (const json& m : j["margins"]) {
    b.margins.push_back(margin::prediction_from_json(m));
  }
  for (const json& row : j["metrics"]) {
    b.metrics.push_back(metrics::metric_row_from_json(row));
  }
  return b;
}

}  // namespace osteo::dataset
