#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json_text.hpp"
#include "nlsobs/experiment.hpp"

namespace nlsobs {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct KindName {
  ExperimentKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {
    {ExperimentKind::Decay, "decay"},
    {ExperimentKind::GramianScan, "gramian-scan"},
    {ExperimentKind::Reconstruct, "reconstruct"},
    {ExperimentKind::DeterminingModes, "determining-modes"},
    {ExperimentKind::Convergence, "convergence"},
};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

// Object reader that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(path(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      (void)value;
      if (!seen_.count(key)) fail(where_, "unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) fail(where, what);
}

std::vector<AxisInterval> parse_axes(const json& j, int dim, const std::string& where) {
  require(j.is_array() && static_cast<int>(j.size()) == dim, where,
          "expected an array with one entry per axis");
  std::vector<AxisInterval> out;
  for (int a = 0; a < dim; ++a) {
    const json& e = j[a];
    if (e.is_null()) {
      out.push_back(AxisInterval::whole());
      continue;
    }
    require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(), where,
            "axis entry must be null or [lo, hi]");
    out.push_back(AxisInterval::range(e[0].get<double>(), e[1].get<double>()));
  }
  return out;
}

json axes_json(const std::vector<AxisInterval>& axes) {
  json out = json::array();
  for (const auto& a : axes) out.push_back(a.full ? json(nullptr) : json::array({a.lo, a.hi}));
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw ConfigError("kind: unrecognized experiment kind '" + name + "'");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  // A run record carries its config; accept it directly.
  if (root.is_object() && root.contains("config") && root.contains("tables")) root = root.at("config");

  ExperimentConfig c;
  Section top(root, "config");

  require(top.has("schema_version"), "config", "missing schema_version");
  top.get("schema_version", c.schema_version);
  require(c.schema_version == kSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(c.schema_version));

  require(top.has("kind"), "config", "missing kind");
  std::string kind;
  top.get("kind", kind);
  c.kind = parse_kind(kind);

  if (top.has("geometry")) {
    Section g(top.at("geometry"), "geometry");
    g.get("lengths", c.lengths);
    g.get("sizes", c.sizes);
    g.finish();
  }
  require(!c.sizes.empty() && c.sizes.size() <= 2, "geometry.sizes", "dimension must be 1 or 2");
  if (c.lengths.size() == 1 && c.sizes.size() == 2) c.lengths.push_back(c.lengths[0]);
  require(c.lengths.size() == c.sizes.size(), "geometry", "lengths and sizes differ in length");
  for (double L : c.lengths) require(std::isfinite(L) && L > 0.0, "geometry.lengths", "lengths must be positive");
  int total = 1;
  for (int n : c.sizes) {
    require(is_pow2(n) && n <= 4096, "geometry.sizes", "sizes must be powers of two up to 4096");
    total *= n;
  }
  require(total >= 4, "geometry.sizes", "need at least 4 modes");
  const int dim = static_cast<int>(c.sizes.size());

  if (top.has("window")) {
    const json& w = top.at("window");
    if (w.is_string()) {
      require(w.get<std::string>() == "everywhere", "window", "the only named window is \"everywhere\"");
      c.window_everywhere = true;
    } else {
      Section ws(w, "window");
      require(ws.has("boxes") && ws.at("boxes").is_array(), "window", "expected a boxes array");
      for (std::size_t i = 0; i < ws.at("boxes").size(); ++i) {
        const std::string where = "window.boxes[" + std::to_string(i) + "]";
        Section b(ws.at("boxes")[i], where);
        require(b.has("support") && b.has("plateau"), where, "box needs support and plateau");
        WindowBox box;
        box.support = parse_axes(b.at("support"), dim, where + ".support");
        box.plateau = parse_axes(b.at("plateau"), dim, where + ".plateau");
        b.finish();
        c.window_boxes.push_back(std::move(box));
      }
      ws.finish();
    }
  } else {
    // Interval [1, 2] along the first axis with its middle half as plateau.
    c.window_boxes = ObservationWindow::slab(c.geometry(), 1.0, 2.0, 0.5, 0).boxes();
  }
  try {
    (void)c.window(c.geometry());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("window", e.what());
  }

  if (top.has("nonlinearity")) {
    Section n(top.at("nonlinearity"), "nonlinearity");
    n.get("coefficients", c.nonlinearity);
    n.get("defocusing", c.defocusing);
    n.finish();
  }
  for (double a : c.nonlinearity) require(std::isfinite(a), "nonlinearity.coefficients", "must be finite");
  require(c.nonlinearity.size() <= 4, "nonlinearity.coefficients", "degree at most 3 is supported");
  try {
    (void)c.nonlinearity_spec();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("nonlinearity", e.what());
  }

  if (top.has("time")) {
    Section t(top.at("time"), "time");
    t.get("T", c.T);
    t.get("dt", c.dt);
    t.get("reference_substeps", c.reference_substeps);
    t.finish();
  }
  require(std::isfinite(c.T) && c.T > 0.0 && c.T <= 1e3, "time.T", "must lie in (0, 1000]");
  require(std::isfinite(c.dt) && c.dt > 0.0 && c.dt <= c.T, "time.dt", "must lie in (0, T]");
  const double steps = c.T / c.dt;
  require(std::abs(steps - std::round(steps)) <= 1e-9 * steps && steps <= 1e7, "time",
          "T / dt must be an integer no larger than 1e7");
  require(c.reference_substeps >= 1 && c.reference_substeps <= 1000, "time.reference_substeps",
          "must lie in [1, 1000]");

  top.get("sobolev", c.sobolev);
  require(std::isfinite(c.sobolev) && c.sobolev >= 0.0 && c.sobolev <= 4.0, "sobolev", "must lie in [0, 4]");

  top.get("ranks", c.ranks);
  require(!c.ranks.empty(), "ranks", "need at least one rank");
  for (int n : c.ranks) require(n >= 1 && n < total, "ranks", "each rank must lie in [1, modes)");

  if (top.has("reconstruction")) {
    Section r(top.at("reconstruction"), "reconstruction");
    r.get("eta", c.reconstruction.eta);
    r.get("R", c.reconstruction.R);
    r.get("R0", c.reconstruction.R0);
    r.get("max_iterations", c.reconstruction.max_iterations);
    r.get("tolerance", c.reconstruction.tolerance);
    r.finish();
  }
  try {
    c.reconstruction.validate();
  } catch (const Error& e) {
    fail("reconstruction", e.what());
  }

  if (top.has("initial_data")) {
    Section d(top.at("initial_data"), "initial_data");
    d.get("kind", c.initial.kind);
    d.get("decay", c.initial.decay);
    d.get("h1_norm", c.initial.h1_norm);
    if (d.has("modes")) {
      const json& m = d.at("modes");
      require(m.is_array(), "initial_data.modes", "expected an array");
      for (std::size_t i = 0; i < m.size(); ++i) {
        const std::string where = "initial_data.modes[" + std::to_string(i) + "]";
        Section e(m[i], where);
        InitialDataConfig::Mode mode;
        std::vector<int> k;
        require(e.has("k"), where, "missing k");
        e.get("k", k);
        require(static_cast<int>(k.size()) == dim, where, "k needs one entry per axis");
        for (int a = 0; a < dim; ++a) {
          require(std::abs(k[a]) < c.sizes[a] / 2, where, "wavenumber outside the grid");
          mode.k[a] = k[a];
        }
        e.get("re", mode.re);
        e.get("im", mode.im);
        e.finish();
        c.initial.modes.push_back(mode);
      }
    }
    d.finish();
  }
  require(c.initial.kind == "random" || c.initial.kind == "modes", "initial_data.kind",
          "must be \"random\" or \"modes\"");
  require(c.initial.decay > 0.0 && c.initial.decay < 1.0, "initial_data.decay", "must lie in (0, 1)");
  require(std::isfinite(c.initial.h1_norm) && c.initial.h1_norm >= 0.0, "initial_data.h1_norm",
          "must be non-negative");
  require(c.initial.kind != "modes" || !c.initial.modes.empty(), "initial_data.modes",
          "kind \"modes\" needs at least one mode");

  if (top.has("potentials")) {
    Section p(top.at("potentials"), "potentials");
    p.get("count", c.potentials.count);
    p.get("modes", c.potentials.modes);
    p.get("radius", c.potentials.radius);
    p.get("sobolev", c.potentials.sobolev);
    p.finish();
  }
  require(c.potentials.count >= 1 && c.potentials.count <= 100, "potentials.count", "must lie in [1, 100]");
  require(c.potentials.modes >= 1 && c.potentials.modes <= total, "potentials.modes", "must lie in [1, modes]");
  require(c.potentials.radius > 0.0 && std::isfinite(c.potentials.radius), "potentials.radius", "must be positive");
  require(c.potentials.sobolev >= 0.0 && c.potentials.sobolev <= 8.0, "potentials.sobolev", "must lie in [0, 8]");

  if (top.has("damping")) {
    Section d(top.at("damping"), "damping");
    d.get("amplitude", c.damping_amplitude);
    d.get("fit_window", c.fit_window);
    d.get("output_stride", c.output_stride);
    d.finish();
  }
  require(c.damping_amplitude >= 0.0 && c.damping_amplitude <= 1e4, "damping.amplitude", "must lie in [0, 1e4]");
  require(c.output_stride >= 1, "damping.output_stride", "must be at least 1");
  if (c.kind == ExperimentKind::Decay)
    require(c.fit_window[0] >= 0.0 && c.fit_window[0] < c.fit_window[1] && c.fit_window[1] <= c.T * (1 + 1e-12),
            "damping.fit_window", "need 0 <= lo < hi <= T");

  if (top.has("perturbation")) {
    Section p(top.at("perturbation"), "perturbation");
    p.get("epsilons", c.epsilons);
    p.finish();
  }
  require(!c.epsilons.empty(), "perturbation.epsilons", "need at least one epsilon");
  for (double e : c.epsilons) require(e > 0.0 && e <= 1.0, "perturbation.epsilons", "must lie in (0, 1]");

  if (top.has("convergence")) {
    Section v(top.at("convergence"), "convergence");
    v.get("refinements", c.refinements);
    v.finish();
  }
  require(c.refinements >= 1 && c.refinements <= 8, "convergence.refinements", "must lie in [1, 8]");

  if (top.has("gcc")) {
    Section g(top.at("gcc"), "gcc");
    g.get("T0", c.gcc.T0);
    g.get("positions", c.gcc.positions);
    g.get("directions", c.gcc.directions);
    g.get("seed", c.gcc.seed);
    g.finish();
  }
  require(c.gcc.T0 > 0.0 && std::isfinite(c.gcc.T0), "gcc.T0", "must be positive");
  require(c.gcc.positions >= 1 && c.gcc.positions <= 10000000, "gcc.positions", "must lie in [1, 1e7]");
  require(c.gcc.directions >= 1 && c.gcc.directions <= 100000, "gcc.directions", "must lie in [1, 1e5]");

  if (top.has("scan")) {
    Section s(top.at("scan"), "scan");
    s.get("extra_sizes", c.extra_sizes);
    s.finish();
  }
  for (int n : c.extra_sizes)
    require(is_pow2(n) && n >= c.sizes[0] && n <= 4096, "scan.extra_sizes",
            "must be powers of two between sizes[0] and 4096");

  top.get("seed", c.seed);
  top.get("workers", c.workers);
  require(c.workers >= 1 && c.workers <= 256, "workers", "must lie in [1, 256]");
  top.get("output", c.output);
  require(!c.output.empty(), "output", "must not be empty");

  top.finish();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file " + path.string());
  return from_json_text(buf.str());
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["schema_version"] = schema_version;
  j["kind"] = to_string(kind);
  j["geometry"] = {{"lengths", lengths}, {"sizes", sizes}};
  if (window_everywhere) {
    j["window"] = "everywhere";
  } else {
    json boxes = json::array();
    for (const auto& b : window_boxes)
      boxes.push_back({{"support", axes_json(b.support)}, {"plateau", axes_json(b.plateau)}});
    j["window"] = {{"boxes", boxes}};
  }
  j["nonlinearity"] = {{"coefficients", nonlinearity}, {"defocusing", defocusing}};
  j["time"] = {{"T", T}, {"dt", dt}, {"reference_substeps", reference_substeps}};
  j["sobolev"] = sobolev;
  j["ranks"] = ranks;
  j["reconstruction"] = {{"eta", reconstruction.eta},
                         {"R", reconstruction.R},
                         {"R0", reconstruction.R0},
                         {"max_iterations", reconstruction.max_iterations},
                         {"tolerance", reconstruction.tolerance}};
  json modes = json::array();
  for (const auto& m : initial.modes) {
    std::vector<int> k(m.k.begin(), m.k.begin() + static_cast<long>(sizes.size()));
    modes.push_back({{"k", k}, {"re", m.re}, {"im", m.im}});
  }
  j["initial_data"] = {{"kind", initial.kind}, {"decay", initial.decay}, {"h1_norm", initial.h1_norm},
                       {"modes", modes}};
  j["potentials"] = {{"count", potentials.count},
                     {"modes", potentials.modes},
                     {"radius", potentials.radius},
                     {"sobolev", potentials.sobolev}};
  j["damping"] = {{"amplitude", damping_amplitude},
                  {"fit_window", fit_window},
                  {"output_stride", output_stride}};
  j["perturbation"] = {{"epsilons", epsilons}};
  j["convergence"] = {{"refinements", refinements}};
  j["gcc"] = {{"T0", gcc.T0}, {"positions", gcc.positions}, {"directions", gcc.directions}, {"seed", gcc.seed}};
  j["scan"] = {{"extra_sizes", extra_sizes}};
  j["seed"] = seed;
  j["workers"] = workers;
  j["output"] = output;
  return detail::dump_sorted(j);
}

GeometryPtr ExperimentConfig::geometry() const { return geometry_with_sizes(sizes); }

GeometryPtr ExperimentConfig::geometry_with_sizes(const std::vector<int>& s) const {
  try {
    return TorusGeometry::create(lengths, s);
  } catch (const Error& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
}

ObservationWindow ExperimentConfig::window(const GeometryPtr& g) const {
  if (window_everywhere) return ObservationWindow::everywhere(g);
  try {
    return ObservationWindow::from_boxes(g, window_boxes);
  } catch (const Error& e) {
    throw ConfigError(std::string("window: ") + e.what());
  }
}

NonlinearitySpec ExperimentConfig::nonlinearity_spec() const {
  try {
    return NonlinearitySpec(nonlinearity, defocusing);
  } catch (const Error& e) {
    throw ConfigError(std::string("nonlinearity: ") + e.what());
  }
}

}  // namespace nlsobs
