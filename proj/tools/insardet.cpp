// insardet command line: variogram, interpolate, synth, train, detect, report.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "insardet/classifier.hpp"
#include "insardet/covariogram.hpp"
#include "insardet/interp.hpp"
#include "insardet/io.hpp"
#include "insardet/parallel.hpp"
#include "insardet/pipeline.hpp"
#include "insardet/serialize.hpp"
#include "insardet/synth.hpp"
#include "insardet/wrapping.hpp"

namespace fs = std::filesystem;
using namespace insardet;

namespace {

// ---------------------------------------------------------------------------
// Config plumbing: a flat JSON document whose keys are the long flag names
// with dashes replaced by underscores. Values from the file are injected
// ahead of the real arguments, so explicit flags win.

std::string key_of(const std::string& flag) {
  std::string k = flag;
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

std::string flag_of(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

std::string json_scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + json_scalar(e);
    return out;
  }
  return v.dump();
}

Json typed(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ec == std::errc() && p == s.data() + s.size()) return i;
  std::uint64_t u = 0;
  auto [pu, ecu] = std::from_chars(s.data(), s.data() + s.size(), u);
  if (ecu == std::errc() && pu == s.data() + s.size()) return u;
  double d = 0.0;
  auto [pd, ecd] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ecd == std::errc() && pd == s.data() + s.size() && !s.empty()) return d;
  return s;
}

Json resolved_config(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto res = opt->reduced_results();
      for (const auto& r : res) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_type_size() == 0 && value.empty()) value = "false";
    j[key_of(name)] = typed(value);
  }
  return j;
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Inputs

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

/// Grid covering every point at the given pixel size.
GridSpec grid_for_points(const std::vector<std::vector<VelocityPoint>>& sets, double pixel) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& pts : sets)
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  if (!std::isfinite(x0)) throw std::runtime_error("no data");
  GridSpec g;
  g.pixel_size = pixel;
  g.origin_x = std::floor(x0 / pixel) * pixel;
  g.origin_y = (std::floor(y1 / pixel) + 1) * pixel;
  g.width = static_cast<int>(std::floor((x1 - g.origin_x) / pixel)) + 1;
  g.height = static_cast<int>(std::floor((g.origin_y - y0) / pixel)) + 1;
  return g;
}

std::vector<SparseVelocityField> load_fields(const std::vector<fs::path>& paths, double pixel) {
  std::vector<SparseVelocityField> out;
  if (std::all_of(paths.begin(), paths.end(), is_csv)) {
    std::vector<std::vector<VelocityPoint>> sets;
    for (const auto& p : paths) sets.push_back(io::read_points_csv(p));
    const auto spec = grid_for_points(sets, pixel);
    for (const auto& pts : sets) out.push_back(rasterize(pts, spec).field);
    return out;
  }
  for (const auto& p : paths) {
    if (is_csv(p)) throw std::invalid_argument("cannot mix CSV and raster looks");
    out.push_back(io::read_sparse(p));
  }
  for (const auto& f : out)
    if (!(f.spec() == out.front().spec())) throw std::invalid_argument("looks are not on the same grid");
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double v = 0.0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || p != item.data() + item.size()) throw std::invalid_argument("bad number: " + item);
    out.push_back(v);
  }
  return out;
}

Raster<std::uint8_t> symmetric_quicklook(const Raster<double>& v) {
  double m = 0.0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, std::abs(x));
  return io::quicklook(v, -std::max(m, 1e-9), std::max(m, 1e-9));
}

// ---------------------------------------------------------------------------
// Subcommands

struct VariogramArgs {
  std::string input, out_prefix = "variogram";
  double pixel = 10.0, max_dist = 6.0;
  int bins = 30;
  std::uint64_t max_pairs = 2'000'000, seed = 0;
};

void run_variogram(const VariogramArgs& a, const Json& cfg) {
  const auto field = load_fields({a.input}, a.pixel).front();
  VariogramOptions opts{a.max_dist, a.bins, a.max_pairs, a.seed};
  const auto curve = empirical_variogram(field, opts);
  std::ofstream csv(a.out_prefix + "_variogram.csv");
  csv << "distance_km,gamma_mm2_yr2,pairs\n";
  for (std::size_t i = 0; i < curve.bin_centers.size(); ++i) {
    csv << curve.bin_centers[i] << ',';
    if (std::isfinite(curve.gamma[i])) csv << curve.gamma[i];
    csv << ',' << curve.pair_counts[i] << '\n';
  }
  const auto model = fit_exponential_covariance(curve);
  write_json(a.out_prefix + "_model.json", Json(model));
  write_json(a.out_prefix + "_config.json", cfg);
  std::cout << Json(model).dump() << '\n';
}

struct InterpolateArgs {
  std::string input, out = "interpolated.f32", method = "mc";
  double pixel = 10.0;
  McParams mc;
};

void run_interpolate(const InterpolateArgs& a, const Json& cfg) {
  const auto field = load_fields({a.input}, a.pixel).front();
  DenseVelocityGrid grid;
  if (a.method == "mc") {
    const auto r = matrix_complete_detailed(field, a.mc);
    grid = r.grid;
    std::cerr << "matrix completion: " << r.iterations << " iterations, " << r.stages << " stages\n";
  } else if (a.method == "dt") {
    grid = delaunay_interpolate(field);
  } else if (a.method == "nearest") {
    grid = nearest_fill(field);
  } else {
    throw std::invalid_argument("unknown method: " + a.method);
  }
  io::write_dense(a.out, grid);
  io::write_pgm(a.out + ".pgm", symmetric_quicklook(grid.values()));
  write_json(a.out + ".config.json", cfg);
}

struct SynthArgs {
  std::string cls = "point", out_dir = "dataset", config_json;
  std::size_t n = 10;
  std::uint64_t seed = 0;
  int jobs = default_jobs();
  double pixel = SynthConfig{}.grid.pixel_size, los_min = SynthConfig{}.los_min, los_max = SynthConfig{}.los_max;
  int size = 256;
};

void run_synth(const SynthArgs& a, const Json& cfg) {
  SynthConfig sc;
  if (!a.config_json.empty()) {
    std::ifstream in(a.config_json);
    if (!in) throw std::runtime_error("cannot open " + a.config_json);
    Json::parse(in).get_to(sc);
  }
  sc.cls = scene_class_from_string(a.cls);
  sc.grid = {a.size, a.size, a.pixel, 0.0, a.size * a.pixel};
  sc.los_min = a.los_min;
  sc.los_max = a.los_max;
  const auto ds = generate_dataset(sc, a.n, a.seed, a.out_dir, a.jobs);
  write_json(fs::path(a.out_dir) / "config.json", cfg);
  std::cout << ds.entries.size() << " scenes written to " << a.out_dir << '\n';
}

struct TrainArgs {
  std::string manifest, out = "model.json", kind = "mc", intervals = "14,7,3.5,1.75";
  TrainConfig tc;
  double holdout = 0.2;
  bool no_flips = false, no_rotations = false;
};

/// Per class, the last ceil(holdout * n_class) scenes (by index) are held out.
void split(const Dataset& ds, double holdout, std::vector<std::size_t>& train_idx, std::vector<std::size_t>& test_idx) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.entries.size(); ++i)
    by_class[ds.entries[i].record.label == Label::positive].push_back(i);
  for (auto& [label, idx] : by_class) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t x, std::size_t y) { return ds.entries[x].record.index < ds.entries[y].record.index; });
    const auto n_test = static_cast<std::size_t>(std::ceil(holdout * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) (k + n_test < idx.size() ? train_idx : test_idx).push_back(idx[k]);
  }
}

void run_train(const TrainArgs& a, const Json& cfg) {
  if (!(a.holdout >= 0.0 && a.holdout < 1.0)) throw std::invalid_argument("holdout must lie in [0,1)");
  const auto ds = read_manifest(a.manifest);
  WrapConfig wrap;
  wrap.intervals = parse_list(a.intervals);
  const auto kind = input_kind_from_string(a.kind);
  std::vector<std::size_t> train_idx, test_idx;
  split(ds, a.holdout, train_idx, test_idx);

  TrainConfig tc = a.tc;
  tc.flips = !a.no_flips;
  tc.rotations = !a.no_rotations;
  const Architecture arch;
  const auto source = load_scenes(ds, kind, wrap, arch.input_size, train_idx);
  const auto model = train(source, tc, arch);
  model.save(a.out);

  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  const auto test = load_scenes(ds, kind, wrap, arch.input_size, {});
  for (std::size_t i : test_idx) {
    const auto& e = ds.entries[i];
    const auto& rel = kind == InputKind::sparse     ? e.sparse_path
                      : kind == InputKind::delaunay ? e.delaunay_path
                                                    : e.completion_path;
    const auto values = io::read_raster(ds.root / rel).second;
    const bool predicted = scene_probability(values, model, wrap) > 0.5;
    const bool actual = e.record.label == Label::positive;
    (predicted ? (actual ? tp : fp) : (actual ? fn : tn))++;
  }
  Json metrics = {{"input", to_string(kind)}, {"train_scenes", train_idx.size()}, {"test_scenes", test_idx.size()},
                  {"tp", tp}, {"tn", tn}, {"fp", fp}, {"fn", fn}, {"loss_curve", model.metadata().loss_curve}};
  if (!test_idx.empty()) {
    metrics["accuracy"] = double(tp + tn) / double(test_idx.size());
    metrics["false_positive_rate"] = (fp + tn) ? double(fp) / double(fp + tn) : 0.0;
  }
  write_json(a.out + ".metrics.json", metrics);
  write_json(a.out + ".config.json", cfg);
  std::cout << metrics.dump() << '\n';
}

struct DetectArgs {
  std::string input, model, looks, intervals = "14,7,3.5,1.75", out_prefix = "detect";
  double pixel = 10.0;
  int tile = 512, jobs = default_jobs();
};

Json detections_json(const std::vector<Detection>& dets) {
  Json arr = Json::array();
  for (const auto& d : dets)
    arr.push_back({{"centroid_m", {d.centroid_x, d.centroid_y}},
                   {"area_km2", d.area_km2},
                   {"max_p", d.max_probability},
                   {"level", d.level}});
  return arr;
}

void run_detect(const DetectArgs& a, const Json& cfg) {
  std::vector<fs::path> paths;
  std::vector<Pass> passes;
  if (!a.looks.empty()) {
    std::stringstream ss(a.looks);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("looks must be pass=path pairs");
      const auto pass = item.substr(0, eq);
      if (pass != "asc" && pass != "desc") throw std::invalid_argument("look pass must be asc or desc");
      passes.push_back(pass == "asc" ? Pass::ascending : Pass::descending);
      paths.emplace_back(item.substr(eq + 1));
    }
  } else if (!a.input.empty()) {
    paths.emplace_back(a.input);
    passes.push_back(Pass::ascending);
  } else {
    throw std::invalid_argument("give --input or --looks");
  }
  const auto fields = load_fields(paths, a.pixel);
  const auto model = CnnModel::load(a.model);

  DetectConfig dc;
  dc.wrap.intervals = parse_list(a.intervals);
  dc.tile = a.tile;
  dc.jobs = a.jobs;
  dc.patch.patch_size = model.architecture().input_size;
  dc.patch.stride = dc.patch.patch_size / 8;
  std::vector<Look> looks;
  for (std::size_t i = 0; i < fields.size(); ++i) looks.push_back({passes[i], fields[i]});
  const auto result = detect(looks, model, dc);

  const std::string pre = a.out_prefix;
  io::write_raster(pre + "_prob.f32", result.fused.spec, result.fused.values);
  io::write_pgm(pre + "_prob.pgm", io::quicklook(result.fused.values, 0.0, 1.0));
  for (std::size_t i = 0; i < looks.size(); ++i)
    for (double mu : dc.wrap.intervals) {
      std::ostringstream name;
      name << pre << "_look" << i << "_wrapped_mu" << mu << ".pgm";
      io::write_pgm(name.str(), wrap_gray(looks[i].field.values(), mu));
    }
  const Json out = {{"detections", detections_json(result.detections)}};
  write_json(pre + "_detections.json", out);
  write_json(pre + "_config.json", cfg);
  std::cout << result.detections.size() << " detections\n";
}

struct ReportArgs {
  std::string detections, out;
  int top = 20;
  double level = 0.0;
};

void run_report(const ReportArgs& a, const Json& cfg) {
  std::ifstream in(a.detections);
  if (!in) throw std::runtime_error("cannot open " + a.detections);
  const Json j = Json::parse(in);
  struct Row {
    double x, y, area, p, level;
  };
  std::vector<Row> rows;
  for (const auto& d : j.at("detections")) {
    Row r{d.at("centroid_m").at(0), d.at("centroid_m").at(1), d.at("area_km2"), d.at("max_p"), d.at("level")};
    if (r.level >= a.level) rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& l, const Row& r) {
    if (l.area != r.area) return l.area > r.area;
    return l.p > r.p;
  });
  if (a.top > 0 && rows.size() > static_cast<std::size_t>(a.top)) rows.resize(a.top);
  std::ostringstream csv;
  csv << "rank,centroid_x_m,centroid_y_m,area_km2,max_p,level\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    csv << i + 1 << ',' << rows[i].x << ',' << rows[i].y << ',' << rows[i].area << ',' << rows[i].p << ','
        << rows[i].level << '\n';
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(a.out) << csv.str();
    write_json(a.out + ".config.json", cfg);
  }
}

std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == "--config" && i + 1 < argc) return argv[i + 1];
    if (s.rfind("--config=", 0) == 0) return s.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InSAR sparse-velocity deformation detection"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  std::string config_path;

  VariogramArgs va;
  auto* var = app.add_subcommand("variogram", "Empirical variogram and exponential covariance fit");
  var->add_option("--config", config_path, "Flat JSON config; flags override it");
  var->add_option("--input", va.input, "Points CSV or sparse raster")->required();
  var->add_option("--pixel-size", va.pixel, "Grid pixel size for CSV input (m)");
  var->add_option("--max-dist-km", va.max_dist, "Largest separation (km)");
  var->add_option("--bins", va.bins, "Number of distance bins");
  var->add_option("--max-pairs", va.max_pairs, "Pair budget before sampling");
  var->add_option("--seed", va.seed, "Seed for pair sampling");
  var->add_option("--out-prefix", va.out_prefix, "Output prefix");

  InterpolateArgs ia;
  auto* itp = app.add_subcommand("interpolate", "Fill a sparse velocity field");
  itp->add_option("--config", config_path, "Flat JSON config; flags override it");
  itp->add_option("--input", ia.input, "Points CSV or sparse raster")->required();
  itp->add_option("--method", ia.method, "mc, dt or nearest")->check(CLI::IsMember({"mc", "dt", "nearest"}));
  itp->add_option("--pixel-size", ia.pixel, "Grid pixel size for CSV input (m)");
  itp->add_option("--out", ia.out, "Output raster");
  itp->add_option("--p", ia.mc.p, "Schatten p");
  itp->add_option("--lambda", ia.mc.lambda, "Step parameter lambda");
  itp->add_option("--tol", ia.mc.tol, "Convergence tolerance");
  itp->add_option("--sigma", ia.mc.gauss_sigma, "Gaussian smoothing sigma (pixels)");
  itp->add_option("--max-inner", ia.mc.max_inner, "Inner iterations per stage");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  syn->add_option("--config", config_path, "Flat JSON config; flags override it");
  syn->add_option("--class", sa.cls, "point or line")->check(CLI::IsMember({"point", "line"}));
  syn->add_option("--n", sa.n, "Scenes per class");
  syn->add_option("--seed", sa.seed, "Dataset seed");
  syn->add_option("--out-dir", sa.out_dir, "Output directory");
  syn->add_option("--jobs", sa.jobs, "Worker threads");
  syn->add_option("--pixel-size", sa.pixel, "Scene pixel size (m)");
  syn->add_option("--size", sa.size, "Scene width and height (pixels)");
  syn->add_option("--los-min", sa.los_min, "Minimum peak LOS of positives (mm/yr)");
  syn->add_option("--los-max", sa.los_max, "Maximum peak LOS of positives (mm/yr)");
  syn->add_option("--synth-config", sa.config_json, "Full generator parameter file (JSON)");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train the patch classifier on a dataset");
  trn->add_option("--config", config_path, "Flat JSON config; flags override it");
  trn->add_option("--manifest", ta.manifest, "Dataset manifest.jsonl")->required();
  trn->add_option("--input-kind", ta.kind, "mc, dt or sparse")
      ->check(CLI::IsMember({"mc", "dt", "sparse", "completion", "delaunay"}));
  trn->add_option("--epochs", ta.tc.epochs, "Training epochs");
  trn->add_option("--lr", ta.tc.learning_rate, "Learning rate");
  trn->add_option("--momentum", ta.tc.momentum, "SGD momentum");
  trn->add_option("--batch-size", ta.tc.batch_size, "Mini-batch size");
  trn->add_option("--weight-decay", ta.tc.weight_decay, "L2 weight decay");
  trn->add_option("--seed", ta.tc.seed, "Training seed");
  trn->add_option("--holdout", ta.holdout, "Held-out fraction per class");
  trn->add_option("--intervals", ta.intervals, "Wrap intervals (mm/yr), comma separated");
  trn->add_flag("--no-flips", ta.no_flips, "Disable flip augmentation");
  trn->add_flag("--no-rotations", ta.no_rotations, "Disable rotation augmentation");
  trn->add_option("--out", ta.out, "Model descriptor path");

  DetectArgs da;
  auto* det = app.add_subcommand("detect", "Probability map and detections for a velocity map");
  det->add_option("--config", config_path, "Flat JSON config; flags override it");
  det->add_option("--input", da.input, "Points CSV or sparse raster (single look)");
  det->add_option("--looks", da.looks, "asc=PATH,desc=PATH,...");
  det->add_option("--model", da.model, "Model descriptor")->required();
  det->add_option("--tile", da.tile, "Tile size (pixels)");
  det->add_option("--intervals", da.intervals, "Wrap intervals (mm/yr), comma separated");
  det->add_option("--pixel-size", da.pixel, "Grid pixel size for CSV input (m)");
  det->add_option("--jobs", da.jobs, "Worker threads");
  det->add_option("--out-prefix", da.out_prefix, "Output prefix");

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Rank detections by area for triage");
  rep->add_option("--config", config_path, "Flat JSON config; flags override it");
  rep->add_option("--detections", ra.detections, "Detections JSON")->required();
  rep->add_option("--top", ra.top, "Rows to keep (0 = all)");
  rep->add_option("--min-level", ra.level, "Only detections at or above this level");
  rep->add_option("--out", ra.out, "CSV path (default stdout)");

  // Inject config-file values ahead of the real flags.
  std::vector<std::string> args(argv, argv + argc);
  try {
    const auto cfg_file = find_config(argc, argv);
    if (!cfg_file.empty() && argc > 1) {
      std::ifstream in(cfg_file);
      if (!in) throw std::runtime_error("cannot open config " + cfg_file);
      const Json j = Json::parse(in);
      if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
      CLI::App* sub = nullptr;
      for (auto* s : app.get_subcommands({})) if (s->get_name() == args[1]) sub = s;
      if (!sub) throw CLI::ParseError("unknown subcommand " + args[1], CLI::ExitCodes::InvalidError);
      std::vector<std::string> injected;
      for (const auto& [key, value] : j.items()) {
        if (key == "config") continue;
        const auto* opt = sub->get_option_no_throw(flag_of(key));
        if (!opt) throw CLI::ParseError("unknown config key '" + key + "'", CLI::ExitCodes::InvalidError);
        const auto text = json_scalar(value);
        if (!text.empty()) injected.push_back(flag_of(key) + "=" + text);  // empty means unset
      }
      args.insert(args.begin() + 2, injected.begin(), injected.end());
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << " (see --help)\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*var) run_variogram(va, resolved_config(*var));
    if (*itp) run_interpolate(ia, resolved_config(*itp));
    if (*syn) run_synth(sa, resolved_config(*syn));
    if (*trn) run_train(ta, resolved_config(*trn));
    if (*det) run_detect(da, resolved_config(*det));
    if (*rep) run_report(ra, resolved_config(*rep));
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}
