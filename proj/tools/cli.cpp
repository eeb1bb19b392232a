#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "osteo/api.hpp"
#include "osteo/calibration.hpp"
#include "osteo/dataset.hpp"
#include "osteo/error.hpp"
#include "osteo/margin.hpp"
#include "osteo/metrics.hpp"
#include "osteo/pipeline/config_json.hpp"
#include "osteo/pipeline/mri.hpp"
#include "osteo/pipeline/xray.hpp"
#include "osteo/png_io.hpp"
#include "osteo/service.hpp"

namespace osteo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  const auto bytes = io::read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidParameter, path + ": not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  io::write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Files to compare: a single file, or every *.png in a directory by name.
std::map<std::string, fs::path> png_set(const std::string& where) {
  std::map<std::string, fs::path> out;
  std::error_code ec;
  if (fs::is_directory(where, ec)) {
    for (const auto& e : fs::directory_iterator(where)) {
      if (e.is_regular_file() && e.path().extension() == ".png") {
        out.emplace(e.path().filename().string(), e.path());
      }
    }
    require(!out.empty(), ErrorCode::InsufficientData, "no .png files in " + where);
  } else {
    out.emplace(fs::path(where).filename().string(), fs::path(where));
  }
  return out;
}

struct Options {
  std::string in;
  std::string config;
  std::string out_mask;
  std::string out_display;
  std::string out_labels;
  std::string out_neighbor;
  std::string intermediates;
  std::vector<std::string> files;
  double max_saturated = mri::QualityThresholds{}.max_saturated_fraction;
  double min_stddev = mri::QualityThresholds{}.min_stddev;
  std::string pred;
  std::string gt;
  std::string eval_format;
  std::string table_format;
  std::string explore_format;
  std::string out;
  std::vector<double> p0;
  std::vector<double> p1;
  std::optional<double> known_cm;
  std::string sex;
  std::optional<double> age;
  std::string femur_table;
  std::string stage;
  std::optional<double> radius;
  std::string mask;
  std::string calibration;
  std::string rule = "equivalent_area";
  std::string root;
  std::string metadata;
  bool no_quality = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string case_root;
};

int segment_xray(const Options& o, std::ostream& out) {
  const auto cfg = o.config.empty() ? xray::XrayConfig{} : pipeline::xray_config_from_json(read_json_file(o.config));
  const auto r = xray::segment_xray(io::read_png(o.in), cfg, !o.intermediates.empty());
  if (!o.out_mask.empty()) {
    io::write_png(o.out_mask, r.lesion_mask);
  }
  if (!o.out_display.empty()) {
    io::write_png(o.out_display, r.display);
  }
  if (!o.intermediates.empty()) {
    fs::create_directories(o.intermediates);
    for (std::size_t i = 0; i < r.intermediates.size(); ++i) {
      const auto& step = r.intermediates[i];
      const fs::path p = fs::path(o.intermediates) / (std::to_string(i + 1) + "_" + step.step + ".png");
      std::visit([&](const auto& data) { io::write_png(p, data); }, step.data);
    }
  }
  out << api::dump(api::segmentation_json(r));
  return 0;
}

int segment_mri(const Options& o, std::ostream& out) {
  const auto cfg = o.config.empty() ? mri::MriConfig{} : pipeline::mri_config_from_json(read_json_file(o.config));
  const auto r = mri::segment_mri(io::read_png(o.in), cfg);
  if (!o.out_labels.empty()) {
    io::write_png(o.out_labels, r.labels);
  }
  if (!o.out_mask.empty()) {
    io::write_png(o.out_mask, r.tumor_mask);
  }
  if (!o.out_neighbor.empty()) {
    io::write_png(o.out_neighbor, r.neighbor_mask);
  }
  out << api::dump(api::segmentation_json(r));
  return 0;
}

int filter(const Options& o, std::ostream& out) {
  mri::QualityThresholds t;
  t.max_saturated_fraction = o.max_saturated;
  t.min_stddev = o.min_stddev;
  api::ordered_json all = api::ordered_json::array();
  for (const auto& f : o.files) {
    auto j = api::quality_json(mri::quality_filter(io::read_png(f), t));
    api::ordered_json row;
    row["file"] = f;
    for (auto& [k, v] : j.items()) {
      row[k] = v;
    }
    all.push_back(std::move(row));
  }
  out << api::dump(all);
  return 0;
}

int evaluate(const Options& o, std::ostream& out) {
  const auto preds = png_set(o.pred);
  const auto gts = png_set(o.gt);
  std::vector<metrics::MaskPair> pairs;
  if (preds.size() == 1 && gts.size() == 1) {
    pairs.push_back({preds.begin()->first, io::read_mask_png(preds.begin()->second),
                     io::read_mask_png(gts.begin()->second)});
  } else {
    for (const auto& [name, path] : preds) {
      const auto it = gts.find(name);
      require(it != gts.end(), ErrorCode::InvalidParameter, "no reference mask named " + name + " in " + o.gt);
      pairs.push_back({name, io::read_mask_png(path), io::read_mask_png(it->second)});
    }
    for (const auto& [name, path] : gts) {
      require(preds.count(name) == 1, ErrorCode::InvalidParameter, "no predicted mask named " + name + " in " + o.pred);
    }
  }
  const auto report = metrics::evaluate_batch(pairs);
  const std::string text = o.eval_format == "json" ? metrics::report_json(report) : metrics::report_csv(report);
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
  }
  return 0;
}

int calibrate(const Options& o, std::ostream& out) {
  const calibration::ReferenceLine line{{o.p0[0], o.p0[1]}, {o.p1[0], o.p1[1]}};
  std::optional<double> estimate;
  double known = 0.0;
  auto source = calibration::Source::UserSupplied;
  if (o.known_cm) {
    known = *o.known_cm;
  } else {
    const auto table = o.femur_table.empty() ? calibration::FemurReferenceTable::bundled()
                                             : calibration::FemurReferenceTable::load(o.femur_table);
    estimate = calibration::estimate_femur_length(o.sex, *o.age, table);
    known = *estimate;
    source = calibration::Source::ReferenceTable;
  }
  auto j = api::calibration_json(calibration::set_scale(line, known, source));
  if (estimate) {
    j["estimated_length_cm"] = *estimate;
  }
  if (!o.out.empty()) {
    write_text(o.out, j.dump(2) + "\n");
  }
  out << api::dump(j);
  return 0;
}

int margin_cmd(const Options& o, std::ostream& out) {
  const auto stage = margin::parse_stage(o.stage);
  double radius = 0.0;
  if (o.radius) {
    radius = *o.radius;
  } else {
    const auto cal = calibration::calibration_from_json(read_json_file(o.calibration));
    radius = margin::lesion_radius(io::read_mask_png(o.mask), cal, margin::parse_radius_rule(o.rule));
  }
  out << api::dump(api::margin_json(margin::predict_margin(margin::reference_model(), stage, radius)));
  return 0;
}

int margin_table(const Options& o, std::ostream& out) {
  const auto stage = margin::parse_stage(o.stage);
  if (o.table_format == "json") {
    out << api::dump(api::margin_table_json(stage));
  } else {
    out << margin::margin_table_csv(margin::margin_table(margin::reference_model(), stage));
  }
  return 0;
}

int explore(const Options& o, std::ostream& out, std::ostream& err) {
  dataset::IngestOptions io_opts;
  io_opts.run_quality_filter = !o.no_quality;
  const auto r = dataset::ingest(o.root, o.metadata, io_opts);
  for (const auto& d : r.diagnostics) {
    err << "warning: " << d.message << "\n";
  }
  const auto report = dataset::explore(r.cases);
  out << (o.explore_format == "csv" ? dataset::explore_csv(report) : dataset::explore_json(report));
  return 0;
}

int serve(const Options& o, std::ostream& err) {
  service::ServiceOptions opts;
  if (!o.config.empty()) {
    opts = service::options_from_json(read_json_file(o.config), fs::path(o.config).parent_path());
  }
  opts.case_root = o.case_root;
  service::Service svc(opts);
  for (const auto& d : svc.diagnostics()) {
    err << "warning: " << d.message << "\n";
  }
  service::HttpServer server(svc);
  const int port = server.start(o.host, o.port);
  err << "listening on http://" << o.host << ":" << port << "\n" << std::flush;
  server.wait();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Osteosarcoma imaging, calibration and safety-margin tools", "osteo"};
  app.require_subcommand(1);
  Options o;

  auto* sx = app.add_subcommand("segment-xray", "Segment the lytic lesion on an X-ray PNG");
  sx->add_option("--in", o.in, "Input PNG")->required();
  sx->add_option("--config", o.config, "JSON config overriding the defaults");
  sx->add_option("--out-mask", o.out_mask, "Write the lesion mask PNG");
  sx->add_option("--out-display", o.out_display, "Write the display image PNG");
  sx->add_option("--intermediates", o.intermediates, "Write every step's output PNG into this directory");

  auto* sm = app.add_subcommand("segment-mri", "Label background, tumor and neighboring tissue on an MRI PNG");
  sm->add_option("--in", o.in, "Input PNG")->required();
  sm->add_option("--config", o.config, "JSON config overriding the defaults");
  sm->add_option("--out-labels", o.out_labels, "Write the label map PNG (0, 128, 255)");
  sm->add_option("--out-mask", o.out_mask, "Write the tumor mask PNG");
  sm->add_option("--out-neighbor", o.out_neighbor, "Write the neighboring-region mask PNG");

  auto* fl = app.add_subcommand("filter", "Quality-filter images for saturation and contrast");
  fl->add_option("--in", o.files, "Input PNGs")->required()->expected(1, -1);
  fl->add_option("--max-saturated", o.max_saturated, "Largest accepted saturated fraction");
  fl->add_option("--min-stddev", o.min_stddev, "Smallest accepted intensity standard deviation");

  auto* ev = app.add_subcommand("evaluate", "Compare predicted masks with reference masks");
  ev->add_option("--pred", o.pred, "Predicted mask PNG or directory")->required();
  ev->add_option("--gt", o.gt, "Reference mask PNG or directory")->required();
  ev->add_option("--format", o.eval_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->default_val("csv");
  ev->add_option("--out", o.out, "Write the report here instead of stdout");

  auto* ca = app.add_subcommand("calibrate", "Pixel-to-cm scale from a reference line");
  ca->add_option("--p0", o.p0, "First endpoint X Y")->required()->expected(2);
  ca->add_option("--p1", o.p1, "Second endpoint X Y")->required()->expected(2);
  auto* known = ca->add_option("--known-cm", o.known_cm, "Known length of the line in cm");
  auto* sex = ca->add_option("--sex", o.sex, "Patient sex, for the femur length lookup");
  auto* age = ca->add_option("--age", o.age, "Patient age in years, for the femur length lookup");
  ca->add_option("--femur-table", o.femur_table, "sex,age_years,femur_length_cm CSV (default: bundled placeholder)");
  ca->add_option("--out", o.out, "Also write the calibration record JSON here");
  known->excludes(sex)->excludes(age);
  sex->needs(age);
  age->needs(sex);

  auto* mg = app.add_subcommand("margin", "Suggested safety margin for a stage and lesion radius");
  mg->add_option("--stage", o.stage, "IB, IIA or IIB")->required();
  auto* radius = mg->add_option("--radius", o.radius, "Lesion radius in cm");
  auto* mask = mg->add_option("--mask", o.mask, "Lesion mask PNG to take the radius from");
  auto* cal = mg->add_option("--calibration", o.calibration, "Calibration record JSON for --mask");
  mg->add_option("--rule", o.rule, "equivalent_area, max_inscribed or circumscribed");
  radius->excludes(mask)->excludes(cal);
  mask->needs(cal);
  cal->needs(mask);

  auto* mt = app.add_subcommand("margin-table", "Suggested margins over 0.50 to 4.75 cm for one stage");
  mt->add_option("--stage", o.stage, "IB, IIA or IIB")->required();
  mt->add_option("--format", o.table_format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->default_val("csv");

  auto* ex = app.add_subcommand("explore", "Cohort statistics for a case directory");
  ex->add_option("--root", o.root, "Case root with metadata.csv")->required();
  ex->add_option("--metadata", o.metadata, "Metadata CSV (default <root>/metadata.csv)");
  ex->add_option("--format", o.explore_format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->default_val("json");
  ex->add_flag("--no-quality", o.no_quality, "Skip decoding images for the quality filter");

  auto* sv = app.add_subcommand("serve", "Run the local HTTP service");
  sv->add_option("--port", o.port, "TCP port (0 picks a free one)")->default_val(8080);
  sv->add_option("--case-root", o.case_root, "Case root with metadata.csv")->required();
  sv->add_option("--config", o.config, "Service config JSON");
  sv->add_option("--host", o.host, "Bind address")->default_val("127.0.0.1");

  if (args.empty()) {
    err << app.help();
    return 2;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, err, err);
    return 2;
  }

  auto usage = [&](const std::string& msg) {
    err << app.get_subcommands().front()->get_name() << ": " << msg << "\n";
    return 2;
  };
  try {
    if (sx->parsed()) return segment_xray(o, out);
    if (sm->parsed()) return segment_mri(o, out);
    if (fl->parsed()) return filter(o, out);
    if (ev->parsed()) return evaluate(o, out);
    if (ca->parsed()) {
      if (!o.known_cm && !o.age) return usage("either --known-cm or --sex with --age is required");
      return calibrate(o, out);
    }
    if (mg->parsed()) {
      if (!o.radius && o.mask.empty()) return usage("either --radius or --mask with --calibration is required");
      return margin_cmd(o, out);
    }
    if (mt->parsed()) return margin_table(o, out);
    if (ex->parsed()) return explore(o, out, err);
    if (sv->parsed()) return serve(o, err);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace osteo::cli
