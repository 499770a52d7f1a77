#include "insardet/serialize.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace insardet {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw std::invalid_argument("unknown key '" + item.key() + "' in " + what);
  }
}

namespace {

template <class T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(Json& j, const GridSpec& g) {
  j = {{"width", g.width},
       {"height", g.height},
       {"pixel_size_m", g.pixel_size},
       {"origin_x_m", g.origin_x},
       {"origin_y_m", g.origin_y}};
}

void from_json(const Json& j, GridSpec& g) {
  reject_unknown_keys(j, {"width", "height", "pixel_size_m", "origin_x_m", "origin_y_m"}, "grid");
  get_opt(j, "width", g.width);
  get_opt(j, "height", g.height);
  get_opt(j, "pixel_size_m", g.pixel_size);
  get_opt(j, "origin_x_m", g.origin_x);
  get_opt(j, "origin_y_m", g.origin_y);
}

void to_json(Json& j, const McParams& p) {
  j = {{"p", p.p},           {"alpha0_factor", p.alpha0_factor}, {"alpha_decay", p.alpha_decay},
       {"lambda", p.lambda}, {"tol", p.tol},                     {"max_inner", p.max_inner},
       {"gauss_sigma", p.gauss_sigma}};
}

void from_json(const Json& j, McParams& p) {
  reject_unknown_keys(j, {"p", "alpha0_factor", "alpha_decay", "lambda", "tol", "max_inner", "gauss_sigma"},
                      "mc");
  get_opt(j, "p", p.p);
  get_opt(j, "alpha0_factor", p.alpha0_factor);
  get_opt(j, "alpha_decay", p.alpha_decay);
  get_opt(j, "lambda", p.lambda);
  get_opt(j, "tol", p.tol);
  get_opt(j, "max_inner", p.max_inner);
  get_opt(j, "gauss_sigma", p.gauss_sigma);
}

void to_json(Json& j, const LayoutConfig& c) {
  j = {{"background_density_min", c.background_density_min},
       {"background_density_max", c.background_density_max},
       {"clusters_per_km2", c.clusters_per_km2},
       {"cluster_radius_min_m", c.cluster_radius_min_m},
       {"cluster_radius_max_m", c.cluster_radius_max_m},
       {"cluster_peak_density", c.cluster_peak_density}};
}

void from_json(const Json& j, LayoutConfig& c) {
  reject_unknown_keys(j,
                      {"background_density_min", "background_density_max", "clusters_per_km2",
                       "cluster_radius_min_m", "cluster_radius_max_m", "cluster_peak_density"},
                      "layout");
  get_opt(j, "background_density_min", c.background_density_min);
  get_opt(j, "background_density_max", c.background_density_max);
  get_opt(j, "clusters_per_km2", c.clusters_per_km2);
  get_opt(j, "cluster_radius_min_m", c.cluster_radius_min_m);
  get_opt(j, "cluster_radius_max_m", c.cluster_radius_max_m);
  get_opt(j, "cluster_peak_density", c.cluster_peak_density);
}

#define INSARDET_RANGE(name) {#name "_min", c.name##_min}, {#name "_max", c.name##_max}

void to_json(Json& j, const SynthConfig& c) {
  j = Json{{"class", to_string(c.cls)},
           {"grid", c.grid},
           INSARDET_RANGE(depth),
           INSARDET_RANGE(log10_volume),
           INSARDET_RANGE(l_sag),
           INSARDET_RANGE(l_hog),
           INSARDET_RANGE(d_sag),
           INSARDET_RANGE(d_hog),
           {"los_min", c.los_min},
           {"los_max", c.los_max},
           INSARDET_RANGE(a),
           INSARDET_RANGE(b),
           INSARDET_RANGE(sill),
           {"descending_fraction", c.descending_fraction},
           {"source_margin", c.source_margin},
           {"layout", c.layout},
           {"mc", c.compose.mc},
           {"with_delaunay", c.compose.with_delaunay},
           {"with_completion", c.compose.with_completion},
           {"atmosphere_direct_cap", c.atmosphere.direct_cap},
           {"atmosphere_coarse_cap", c.atmosphere.coarse_cap},
           {"atmosphere_jitter", c.atmosphere.jitter}};
}

#undef INSARDET_RANGE

void from_json(const Json& j, SynthConfig& c) {
  reject_unknown_keys(
      j,
      {"class", "grid", "depth_min", "depth_max", "log10_volume_min", "log10_volume_max", "l_sag_min", "l_sag_max",
       "l_hog_min", "l_hog_max", "d_sag_min", "d_sag_max", "d_hog_min", "d_hog_max", "los_min", "los_max", "a_min",
       "a_max", "b_min", "b_max", "sill_min", "sill_max", "descending_fraction", "source_margin", "layout", "mc",
       "with_delaunay", "with_completion", "atmosphere_direct_cap", "atmosphere_coarse_cap", "atmosphere_jitter"},
      "synth config");
  if (auto it = j.find("class"); it != j.end()) c.cls = scene_class_from_string(it->get<std::string>());
  get_opt(j, "grid", c.grid);
  get_opt(j, "depth_min", c.depth_min);
  get_opt(j, "depth_max", c.depth_max);
  get_opt(j, "log10_volume_min", c.log10_volume_min);
  get_opt(j, "log10_volume_max", c.log10_volume_max);
  get_opt(j, "l_sag_min", c.l_sag_min);
  get_opt(j, "l_sag_max", c.l_sag_max);
  get_opt(j, "l_hog_min", c.l_hog_min);
  get_opt(j, "l_hog_max", c.l_hog_max);
  get_opt(j, "d_sag_min", c.d_sag_min);
  get_opt(j, "d_sag_max", c.d_sag_max);
  get_opt(j, "d_hog_min", c.d_hog_min);
  get_opt(j, "d_hog_max", c.d_hog_max);
  get_opt(j, "los_min", c.los_min);
  get_opt(j, "los_max", c.los_max);
  get_opt(j, "a_min", c.a_min);
  get_opt(j, "a_max", c.a_max);
  get_opt(j, "b_min", c.b_min);
  get_opt(j, "b_max", c.b_max);
  get_opt(j, "sill_min", c.sill_min);
  get_opt(j, "sill_max", c.sill_max);
  get_opt(j, "descending_fraction", c.descending_fraction);
  get_opt(j, "source_margin", c.source_margin);
  get_opt(j, "layout", c.layout);
  get_opt(j, "mc", c.compose.mc);
  get_opt(j, "with_delaunay", c.compose.with_delaunay);
  get_opt(j, "with_completion", c.compose.with_completion);
  get_opt(j, "atmosphere_direct_cap", c.atmosphere.direct_cap);
  get_opt(j, "atmosphere_coarse_cap", c.atmosphere.coarse_cap);
  get_opt(j, "atmosphere_jitter", c.atmosphere.jitter);
}

void to_json(Json& j, const CovarianceModel& m) {
  j = {{"a", m.a}, {"b", m.b}, {"sill", m.sill}, {"nugget", m.nugget}};
}

void from_json(const Json& j, CovarianceModel& m) {
  reject_unknown_keys(j, {"a", "b", "sill", "nugget"}, "covariance model");
  j.at("a").get_to(m.a);
  j.at("b").get_to(m.b);
  j.at("sill").get_to(m.sill);
  j.at("nugget").get_to(m.nugget);
}

void to_json(Json& j, const SceneRecord& r) {
  j = Json{{"index", r.index},
           {"label", r.label == Label::positive ? "positive" : "negative"},
           {"class", to_string(r.cls)},
           {"seed", r.seed},
           {"atmosphere", r.atmosphere},
           {"pass", r.geometry.pass == Pass::ascending ? "ascending" : "descending"},
           {"incidence_deg", r.geometry.incidence_deg},
           {"heading_deg", r.geometry.heading_deg},
           {"peak_los_mm_yr", r.peak_los},
           {"observed", r.observed}};
  if (r.mogi) {
    j["mogi"] = {{"x_m", r.mogi->x},
                 {"y_m", r.mogi->y},
                 {"depth_m", r.mogi->depth},
                 {"volume_change_m3", r.mogi->volume_change},
                 {"poisson_ratio", r.mogi->poisson_ratio}};
  }
  if (r.tunnel) {
    Json path = Json::array();
    for (const auto& v : r.tunnel->path)
      path.push_back({{"x_m", v.x},
                      {"y_m", v.y},
                      {"l_sag_m", v.l_sag},
                      {"l_hog_m", v.l_hog},
                      {"d_sag_mm", v.d_sag},
                      {"d_hog_mm", v.d_hog}});
    j["tunnel"] = path;
  }
}

void from_json(const Json& j, SceneRecord& r) {
  j.at("index").get_to(r.index);
  r.label = j.at("label").get<std::string>() == "positive" ? Label::positive : Label::negative;
  r.cls = scene_class_from_string(j.at("class").get<std::string>());
  j.at("seed").get_to(r.seed);
  j.at("atmosphere").get_to(r.atmosphere);
  r.geometry.pass = j.at("pass").get<std::string>() == "ascending" ? Pass::ascending : Pass::descending;
  j.at("incidence_deg").get_to(r.geometry.incidence_deg);
  j.at("heading_deg").get_to(r.geometry.heading_deg);
  j.at("peak_los_mm_yr").get_to(r.peak_los);
  j.at("observed").get_to(r.observed);
  r.mogi.reset();
  r.tunnel.reset();
  if (auto it = j.find("mogi"); it != j.end()) {
    MogiSource m;
    it->at("x_m").get_to(m.x);
    it->at("y_m").get_to(m.y);
    it->at("depth_m").get_to(m.depth);
    it->at("volume_change_m3").get_to(m.volume_change);
    it->at("poisson_ratio").get_to(m.poisson_ratio);
    r.mogi = m;
  }
  if (auto it = j.find("tunnel"); it != j.end()) {
    TunnelModel t;
    for (const auto& v : *it)
      t.path.push_back({v.at("x_m").get<double>(), v.at("y_m").get<double>(), v.at("l_sag_m").get<double>(),
                        v.at("l_hog_m").get<double>(), v.at("d_sag_mm").get<double>(),
                        v.at("d_hog_mm").get<double>()});
    r.tunnel = t;
  }
}

}  // namespace insardet
