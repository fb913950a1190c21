#include "replan/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "replan/error.hpp"
#include "replan/rng.hpp"

namespace replan {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json doc = json::parse(ss.str(), nullptr, false);
  if (doc.is_discarded()) throw ValidationError(path.string() + ": not valid JSON");
  return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::string feature_label(const json& props, std::size_t index) {
  if (props.is_object() && props.contains("id") && props["id"].is_string()) {
    return "feature '" + props["id"].get<std::string>() + "'";
  }
  return "feature #" + std::to_string(index);
}

std::vector<Point> parse_ring(const json& geometry, const std::string& where) {
  if (!geometry.is_object() || geometry.value("type", "") != "Polygon") {
    throw ValidationError(where + ": geometry must be a Polygon");
  }
  const json& coords = geometry.value("coordinates", json());
  if (!coords.is_array() || coords.empty() || !coords[0].is_array()) {
    throw ValidationError(where + ": geometry.coordinates must hold one ring");
  }
  if (coords.size() > 1) throw ValidationError(where + ": polygons with holes are not supported");
  std::vector<Point> ring;
  for (const auto& pt : coords[0]) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw ValidationError(where + ": geometry.coordinates has a malformed point");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

}  // namespace

Region region_from_json(const json& doc, const PlanningConfig& config) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
    throw ValidationError("region file must be a FeatureCollection");
  }
  const json& features = doc.value("features", json());
  if (!features.is_array()) throw ValidationError("region file has no features array");

  std::vector<Plot> plots;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const json& f = features[i];
    const json props = f.is_object() ? f.value("properties", json()) : json();
    const std::string where = feature_label(props, i);
    if (!props.is_object()) throw ValidationError(where + ": missing properties");
    if (!props.contains("id") || !props["id"].is_string()) {
      throw ValidationError(where + ": properties.id must be a string");
    }
    const std::string id = props["id"].get<std::string>();
    if (!ids.insert(id).second) throw ValidationError(where + ": duplicate id");

    const std::string status_text = props.value("status", "");
    const auto status = parse_status(status_text);
    if (!status) {
      throw ValidationError(where + ": properties.status must be fixed, vacant or planned, got '" +
                            status_text + "'");
    }
    std::optional<FuncType> type;
    if (props.contains("type") && !props["type"].is_null()) {
      const std::string name = props["type"].is_string() ? props["type"].get<std::string>() : "";
      type = parse_func_type(name);
      if (!type || name != to_string(*type)) {
        throw ValidationError(where + ": properties.type '" + name + "' is not one of " +
                              valid_func_type_names());
      }
    }
    if (*status != PlotStatus::Vacant && !type) {
      throw ValidationError(where + ": properties.type is required for " + status_text + " plots");
    }
    if (*status == PlotStatus::Vacant && type) {
      throw ValidationError(where + ": properties.type must be absent on vacant plots");
    }
    std::optional<FacilitySubtype> subtype;
    if (props.contains("subtype") && !props["subtype"].is_null()) {
      const std::string name = props["subtype"].is_string() ? props["subtype"].get<std::string>() : "";
      subtype = parse_subtype(name);
      if (!subtype) throw ValidationError(where + ": properties.subtype '" + name + "' is unknown");
    }
    try {
      Polygon poly(parse_ring(f.value("geometry", json()), where));
      plots.push_back(make_plot(id, std::move(poly), *status, type, subtype));
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      if (msg.rfind(where, 0) == 0) throw;
      throw ValidationError(where + ": geometry: " + msg);
    }
  }
  return Region(std::move(plots), config);
}

Region parse_region(const std::filesystem::path& path, const PlanningConfig& config) {
  try {
    return region_from_json(read_json_file(path), config);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ojson region_to_json(const Region& region) {
  ojson doc;
  doc["type"] = "FeatureCollection";
  auto& features = doc["features"] = ojson::array();
  for (const auto& p : region.plots()) {
    ojson f;
    f["type"] = "Feature";
    ojson ring = ojson::array();
    for (const auto& v : p.geometry.ring()) ring.push_back({v.x, v.y});
    ring.push_back({p.geometry.ring().front().x, p.geometry.ring().front().y});
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", ojson::array({ring})}};
    ojson props;
    props["id"] = p.id;
    props["status"] = to_string(p.status);
    if (p.func) props["type"] = to_string(*p.func);
    if (p.subtype) props["subtype"] = to_string(*p.subtype);
    f["properties"] = std::move(props);
    features.push_back(std::move(f));
  }
  return doc;
}

void write_region(const Region& region, const std::filesystem::path& path) {
  write_text_file(path, region_to_json(region).dump(2) + "\n");
}

ojson demands_to_json(const Demands& demands) {
  ojson doc;
  ojson cov;
  for (FuncType t : kCoverageTypes) cov[std::string(to_string(t))] = demands.coverage(t);
  ojson fac;
  for (FacilitySubtype s : kAllSubtypes) fac[std::string(to_string(s))] = demands.quota(s);
  doc["coverage"] = std::move(cov);
  doc["facilities"] = std::move(fac);
  return doc;
}

Demands demands_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("demands document must be an object");
  Demands d;
  const json& cov = doc.value("coverage", json::object());
  for (auto it = cov.begin(); it != cov.end(); ++it) {
    const auto t = parse_func_type(it.key());
    if (!t || std::find(kCoverageTypes.begin(), kCoverageTypes.end(), *t) == kCoverageTypes.end()) {
      throw ValidationError("demands: '" + it.key() + "' has no coverage target");
    }
    double v = 0.0;
    if (it.value().is_number()) {
      v = it.value().get<double>();
    } else if (it.value().is_string()) {
      const auto lv = parse_coverage_level(it.value().get<std::string>());
      if (!lv) throw ValidationError("demands: bad coverage level for '" + it.key() + "'");
      v = coverage_fraction(*lv);
    } else {
      throw ValidationError("demands: coverage for '" + it.key() + "' must be a number or level");
    }
    if (!(v > 0.0 && v <= 1.0)) {
      throw ValidationError("demands: coverage for '" + it.key() + "' must be in (0, 1]");
    }
    d.coverage_targets[*t] = v;
  }
  const json& fac = doc.value("facilities", json::object());
  for (auto it = fac.begin(); it != fac.end(); ++it) {
    const auto s = parse_subtype(it.key());
    if (!s) throw ValidationError("demands: unknown facility '" + it.key() + "'");
    if (!it.value().is_number_integer() || it.value().get<long>() < 0) {
      throw ValidationError("demands: facility count for '" + it.key() + "' must be >= 0");
    }
    d.facility_counts[*s] = it.value().get<int>();
  }
  for (FuncType t : kCoverageTypes) {
    if (!d.coverage_targets.count(t)) {
      throw ValidationError("demands: missing coverage target for '" +
                            std::string(to_string(t)) + "'");
    }
  }
  return d;
}

Demands load_demands(const std::filesystem::path& path) {
  try {
    return demands_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_demands(const Demands& demands, const std::filesystem::path& path) {
  write_text_file(path, demands_to_json(demands).dump(2) + "\n");
}

namespace {

template <typename T>
void read_field(const json& section, const char* key, T& out) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config document must be an object");
  RunConfig c;
  const json planning = doc.value("planning", json::object());
  auto& p = c.planning;
  read_field(planning, "d_c", p.living_circle_radius);
  read_field(planning, "alpha", p.equity_alpha);
  read_field(planning, "lambda", p.enhancement_lambda);
  read_field(planning, "gamma", p.gamma);
  read_field(planning, "clip_eps", p.clip_eps);
  read_field(planning, "learning_rate", p.learning_rate);
  read_field(planning, "episodes", p.episodes);
  read_field(planning, "large_plot_threshold", p.large_plot_threshold);
  read_field(planning, "seed", p.seed);
  p.validate();

  const json demo = doc.value("demographics", json::object());
  read_field(demo, "region", c.demographics.region_label);
  read_field(demo, "residents", c.demographics.residents);
  read_field(demo, "workers", c.demographics.workers);
  read_field(demo, "style", c.demographics.style);

  const json adv = doc.value("advisor", json::object());
  std::string mode = "mock";
  read_field(adv, "mode", mode);
  if (mode == "mock") {
    c.advisor.mode = AdvisorMode::Mock;
  } else if (mode == "remote") {
    c.advisor.mode = AdvisorMode::Remote;
  } else {
    throw ValidationError("advisor.mode must be mock or remote, got '" + mode + "'");
  }
  read_field(adv, "endpoint", c.advisor.endpoint);
  read_field(adv, "model", c.advisor.model);
  std::string prompt_dir = c.advisor.prompt_dir.string();
  read_field(adv, "prompt_dir", prompt_dir);
  c.advisor.prompt_dir = prompt_dir;
  std::string cache = c.advisor.cache.string();
  read_field(adv, "cache", cache);
  c.advisor.cache = cache;
  read_field(adv, "max_in_flight", c.advisor.max_in_flight);

  const json tr = doc.value("training", json::object());
  read_field(tr, "batch_episodes", c.training.batch_episodes);
  read_field(tr, "inner_epochs", c.training.inner_epochs);
  read_field(tr, "normalize_advantages", c.training.normalize_advantages);
  read_field(tr, "checkpoint_every", c.training.checkpoint_every);
  read_field(tr, "eval_episodes", c.training.eval_episodes);
  read_field(tr, "workers", c.training.workers);
  read_field(tr, "log_wall_time", c.training.log_wall_time);
  std::string enhance = "softmax";
  read_field(tr, "enhance_mode", enhance);
  if (enhance == "softmax") {
    c.enhance_mode = EnhanceMode::Softmax;
  } else if (enhance == "renormalize") {
    c.enhance_mode = EnhanceMode::Renormalize;
  } else {
    throw ValidationError("training.enhance_mode must be softmax or renormalize");
  }
  if (c.training.batch_episodes < 1) throw ValidationError("training.batch_episodes must be >= 1");
  if (c.training.inner_epochs < 1) throw ValidationError("training.inner_epochs must be >= 1");

  const json s = doc.value("search", json::object());
  read_field(s, "population", c.search.population);
  read_field(s, "generations", c.search.generations);
  read_field(s, "crossover_rate", c.search.crossover_rate);
  read_field(s, "mutation_rate", c.search.mutation_rate);
  read_field(s, "tournament_size", c.search.tournament_size);
  read_field(s, "elitism", c.search.elitism);
  read_field(s, "initial_temperature", c.search.initial_temperature);
  read_field(s, "cooling", c.search.cooling);
  read_field(s, "proposals_per_temperature", c.search.proposals_per_temperature);
  read_field(s, "floor_temperature", c.search.floor_temperature);
  read_field(s, "with_satisfaction", c.search.with_satisfaction);
  if (s.contains("budget_seconds")) {
    double budget = 0.0;
    read_field(s, "budget_seconds", budget);
    c.search.budget_seconds = budget;
  }
  c.search.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void ScenarioSpec::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("scenario spec: " + m); };
  if (cols < 1 || rows < 1) fail("grid dimensions must be >= 1");
  if (cols * rows < 2) fail("grid needs at least 2 plots");
  if (!(min_plot_area > 0.0) || !(max_plot_area >= min_plot_area)) fail("bad plot area range");
  if (vacant_fraction < 0.0 || vacant_fraction > 1.0) fail("vacant_fraction must be in [0, 1]");
  if (residential_fraction < 0.0 || residential_fraction > 1.0) {
    fail("residential_fraction must be in [0, 1]");
  }
}

ScenarioSpec scenario_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("scenario spec must be an object");
  ScenarioSpec s;
  read_field(doc, "cols", s.cols);
  read_field(doc, "rows", s.rows);
  read_field(doc, "min_plot_area", s.min_plot_area);
  read_field(doc, "max_plot_area", s.max_plot_area);
  read_field(doc, "vacant_fraction", s.vacant_fraction);
  read_field(doc, "residential_fraction", s.residential_fraction);
  read_field(doc, "style", s.style);
  read_field(doc, "seed", s.seed);
  const json demo = doc.value("demographics", json::object());
  read_field(demo, "region", s.demographics.region_label);
  read_field(demo, "residents", s.demographics.residents);
  read_field(demo, "workers", s.demographics.workers);
  s.demographics.style = s.style;
  s.validate();
  return s;
}

namespace {

double round_cm(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

ojson gen_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const double lo = std::sqrt(spec.min_plot_area);
  const double hi = std::sqrt(spec.max_plot_area);
  const auto cols = static_cast<std::size_t>(spec.cols);
  const auto rows = static_cast<std::size_t>(spec.rows);

  std::vector<double> xs{0.0};
  for (std::size_t c = 0; c < cols; ++c) xs.push_back(xs.back() + lo + (hi - lo) * rng.uniform());
  std::vector<double> ys{0.0};
  for (std::size_t r = 0; r < rows; ++r) ys.push_back(ys.back() + lo + (hi - lo) * rng.uniform());

  // Interior nodes move by at most 15% of the shortest possible side; every cell
  // stays a simple quadrilateral and neighbours keep sharing edges.
  const double jitter = 0.15 * lo;
  std::vector<std::vector<Point>> node(cols + 1, std::vector<Point>(rows + 1));
  for (std::size_t c = 0; c <= cols; ++c) {
    for (std::size_t r = 0; r <= rows; ++r) {
      Point p{xs[c], ys[r]};
      if (c > 0 && c < cols) p.x += jitter * (2.0 * rng.uniform() - 1.0);
      if (r > 0 && r < rows) p.y += jitter * (2.0 * rng.uniform() - 1.0);
      node[c][r] = {round_cm(p.x), round_cm(p.y)};
    }
  }

  const std::size_t n = cols * rows;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  auto vacant_count = static_cast<std::size_t>(std::lround(spec.vacant_fraction * static_cast<double>(n)));
  vacant_count = std::min(vacant_count, n - 1);  // keep one fixed plot for a residence
  std::vector<bool> vacant(n, false);
  for (std::size_t i = 0; i < vacant_count; ++i) vacant[perm[i]] = true;

  std::vector<std::size_t> fixed;
  for (std::size_t i = 0; i < n; ++i) {
    if (!vacant[i]) fixed.push_back(i);
  }
  auto residential = static_cast<std::size_t>(
      std::lround(spec.residential_fraction * static_cast<double>(fixed.size())));
  residential = std::clamp<std::size_t>(residential, 1, fixed.size());
  std::vector<std::optional<FuncType>> types(n);
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    types[fixed[k]] = k < residential ? FuncType::Residential
                                      : func_type_at(1 + rng.below(kNumFuncTypes - 1));
  }

  ojson doc;
  doc["type"] = "FeatureCollection";
  auto& features = doc["features"] = ojson::array();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t i = r * cols + c;
      const Point a = node[c][r];
      const Point b = node[c + 1][r];
      const Point d = node[c + 1][r + 1];
      const Point e = node[c][r + 1];
      ojson ring = ojson::array({{a.x, a.y}, {b.x, b.y}, {d.x, d.y}, {e.x, e.y}, {a.x, a.y}});
      ojson f;
      f["type"] = "Feature";
      f["geometry"] = {{"type", "Polygon"}, {"coordinates", ojson::array({ring})}};
      ojson props;
      char id[32];
      std::snprintf(id, sizeof(id), "p%03zu", i);
      props["id"] = id;
      props["status"] = vacant[i] ? "vacant" : "fixed";
      if (types[i]) props["type"] = to_string(*types[i]);
      f["properties"] = std::move(props);
      features.push_back(std::move(f));
    }
  }
  return doc;
}

const std::array<std::string_view, kNumFuncTypes>& palette() {
  static const std::array<std::string_view, kNumFuncTypes> colors = {
      "#e9c46a",  // residential
      "#e76f51",  // business
      "#8d99ae",  // office
      "#f4a261",  // recreation
      "#2a9d8f",  // school
      "#d62828",  // hospital
      "#57a773",  // park
      "#a8dadc",  // open space
  };
  return colors;
}

namespace {

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Region& region, bool legend) {
  constexpr double kMapSize = 800.0;
  constexpr double kMargin = 20.0;
  constexpr double kLegendWidth = 170.0;
  const Bounds& b = region.bounds();
  const double span = std::max(b.width(), b.height());
  const double scale = span > 0.0 ? kMapSize / span : 1.0;
  const double map_w = b.width() * scale;
  const double map_h = b.height() * scale;
  const double width = map_w + 2 * kMargin + (legend ? kLegendWidth : 0.0);
  const double height = std::max(map_h + 2 * kMargin, legend ? 9 * 24.0 + 2 * kMargin : 0.0);

  auto sx = [&](double x) { return kMargin + (x - b.min.x) * scale; };
  auto sy = [&](double y) { return kMargin + (b.max.y - y) * scale; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(width) << "\" height=\""
     << fmt2(height) << "\" viewBox=\"0 0 " << fmt2(width) << ' ' << fmt2(height) << "\">\n";
  os << "  <defs>\n"
     << "    <pattern id=\"vacant\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\" "
        "patternTransform=\"rotate(45)\">\n"
     << "      <rect width=\"8\" height=\"8\" fill=\"#e0e0e0\"/>\n"
     << "      <line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"#9e9e9e\" stroke-width=\"2\"/>\n"
     << "    </pattern>\n"
     << "  </defs>\n";
  os << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  os << "  <g id=\"plots\" stroke-linejoin=\"round\">\n";
  for (const auto& p : region.plots()) {
    os << "    <path id=\"" << escape_xml(p.id) << "\" d=\"";
    const auto& ring = p.geometry.ring();
    for (std::size_t i = 0; i < ring.size(); ++i) {
      os << (i == 0 ? 'M' : 'L') << fmt2(sx(ring[i].x)) << ',' << fmt2(sy(ring[i].y)) << ' ';
    }
    os << "Z\" fill=\"";
    if (p.occupied()) {
      os << palette()[index_of(*p.func)];
    } else {
      os << "url(#vacant)";
    }
    const bool planned = p.status == PlotStatus::Planned;
    os << "\" stroke=\"" << (planned ? "#000000" : "#444444") << "\" stroke-width=\""
       << (planned ? "2" : "1") << "\"/>\n";
  }
  os << "  </g>\n";
  if (legend) {
    const double lx = map_w + 2 * kMargin;
    os << "  <g id=\"legend\" font-family=\"sans-serif\" font-size=\"13\">\n";
    for (std::size_t t = 0; t <= kNumFuncTypes; ++t) {
      const double y = kMargin + static_cast<double>(t) * 24.0;
      const bool vacant_row = t == kNumFuncTypes;
      os << "    <rect x=\"" << fmt2(lx) << "\" y=\"" << fmt2(y)
         << "\" width=\"16\" height=\"16\" stroke=\"#444444\" fill=\""
         << (vacant_row ? std::string("url(#vacant)") : std::string(palette()[t])) << "\"/>\n";
      os << "    <text x=\"" << fmt2(lx + 24) << "\" y=\"" << fmt2(y + 13) << "\">"
         << (vacant_row ? std::string_view("vacant") : to_string(func_type_at(t))) << "</text>\n";
    }
    os << "  </g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const Region& region, const std::filesystem::path& path, bool legend) {
  write_text_file(path, render_svg(region, legend));
}

}  // namespace replan
