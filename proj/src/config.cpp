#include "armsafe/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "armsafe/errors.hpp"

namespace armsafe {

namespace {

using Setter = std::function<void(Scenario&, const YAML::Node&)>;
// Returns a null node when the key is inactive.
using Getter = std::function<YAML::Node(const Scenario&)>;

struct Entry {
  ConfigKey doc;
  Setter set;
  Getter get;
};

[[noreturn]] void bad(const std::string& key, const std::string& expected,
                      const YAML::Node& n) {
  std::string got = n.IsScalar() ? "'" + n.Scalar() + "'" : "a non-scalar value";
  throw ConfigError(key + ": expected " + expected + ", got " + got);
}

double as_number(const std::string& key, const YAML::Node& n) {
  if (!n.IsScalar()) bad(key, "a number", n);
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    bad(key, "a number", n);
  }
}

Vec3 as_vec3(const std::string& key, const YAML::Node& n) {
  if (n.IsScalar()) return Vec3::Constant(as_number(key, n));
  if (!n.IsSequence() || n.size() != 3) bad(key, "3 numbers or one number", n);
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = as_number(key, n[i]);
  return v;
}

// Full 3x3 as rows, or a diagonal given as 3 numbers / one number.
Mat3 as_mat3(const std::string& key, const YAML::Node& n) {
  if (n.IsSequence() && n.size() == 3 && n[0].IsSequence()) {
    Mat3 m;
    for (int i = 0; i < 3; ++i) {
      if (!n[i].IsSequence() || n[i].size() != 3) bad(key, "a 3x3 matrix", n);
      for (int j = 0; j < 3; ++j) m(i, j) = as_number(key, n[i][j]);
    }
    return m;
  }
  return as_vec3(key, n).asDiagonal();
}

bool as_bool(const std::string& key, const YAML::Node& n) {
  if (!n.IsScalar()) bad(key, "true or false", n);
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    bad(key, "true or false", n);
  }
}

std::string as_string(const std::string& key, const YAML::Node& n) {
  if (!n.IsScalar()) bad(key, "a string", n);
  return n.Scalar();
}

int as_int(const std::string& key, const YAML::Node& n) {
  const double v = as_number(key, n);
  if (v != std::floor(v) || std::abs(v) > 1e9) bad(key, "an integer", n);
  return static_cast<int>(v);
}

// Round-trip formatting; yaml-cpp would print inf as a plain "inf".
std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest exact
  return std::string(buf, res.ptr);
}

YAML::Node num(double v) { return YAML::Node(fmt(v)); }

YAML::Node vec(const Vec3& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (int i = 0; i < 3; ++i) n.push_back(fmt(v[i]));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node mat(const Mat3& m) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (int i = 0; i < 3; ++i) n.push_back(vec(m.row(i).transpose()));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node boolean(bool b) { return YAML::Node(b ? "true" : "false"); }

std::string_view kind_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::sim_profile:
      return "sim_profile";
    case ProfileKind::hw_profile:
      return "hw_profile";
    case ProfileKind::custom:
      return "custom";
  }
  return "custom";
}

WallSpec& wall(Scenario& s) {
  if (!s.safety) s.safety = WallSpec{};
  return *s.safety;
}

InputBox& box(Scenario& s) {
  if (!s.u_box) {
    const double inf = std::numeric_limits<double>::infinity();
    s.u_box = InputBox{Vec3::Constant(-inf), Vec3::Constant(inf)};
  }
  return *s.u_box;
}

// Reference fields drop the builtin label only when they actually change.
void set_ref_field(Scenario& s, Vec3 ReferenceProfile::*field, const Vec3& v) {
  if (s.reference.*field != v) s.reference.kind = ProfileKind::custom;
  s.reference.*field = v;
}

#define NUM(KEY, HELP, EXPR)                                                        \
  Entry {                                                                           \
    {KEY, "number", HELP},                                                          \
        [](Scenario& s, const YAML::Node& n) { s.EXPR = as_number(KEY, n); },       \
        [](const Scenario& s) { return num(s.EXPR); }                               \
  }
#define VEC(KEY, HELP, EXPR)                                                        \
  Entry {                                                                           \
    {KEY, "vec3", HELP}, [](Scenario& s, const YAML::Node& n) { s.EXPR = as_vec3(KEY, n); }, \
        [](const Scenario& s) { return vec(s.EXPR); }                               \
  }
#define BOOL(KEY, HELP, EXPR)                                                       \
  Entry {                                                                           \
    {KEY, "bool", HELP}, [](Scenario& s, const YAML::Node& n) { s.EXPR = as_bool(KEY, n); }, \
        [](const Scenario& s) { return boolean(s.EXPR); }                           \
  }

void add_signal(std::vector<Entry>& out, const std::string& prefix,
                TimeSignal DisturbanceProfile::*sig, const std::string& unit) {
  const auto vec_field = [&](const char* name, Vec3 TimeSignal::*f, const std::string& help) {
    const std::string key = prefix + "." + name;
    out.push_back({{key, "vec3", help},
                   [key, sig, f](Scenario& s, const YAML::Node& n) {
                     s.disturbances.*sig.*f = as_vec3(key, n);
                   },
                   [sig, f](const Scenario& s) { return vec(s.disturbances.*sig.*f); }});
  };
  const auto num_field = [&](const char* name, double TimeSignal::*f, const std::string& help) {
    const std::string key = prefix + "." + name;
    out.push_back({{key, "number", help},
                   [key, sig, f](Scenario& s, const YAML::Node& n) {
                     s.disturbances.*sig.*f = as_number(key, n);
                   },
                   [sig, f](const Scenario& s) { return num(s.disturbances.*sig.*f); }});
  };
  vec_field("constant", &TimeSignal::constant, "constant part (" + unit + ")");
  vec_field("amplitude", &TimeSignal::amplitude, "sine amplitude (" + unit + ")");
  vec_field("frequency", &TimeSignal::frequency, "sine frequency (rad/s)");
  vec_field("phase", &TimeSignal::phase, "sine phase (rad)");
  num_field("t_on", &TimeSignal::t_on, "switch-on time (s)");
  num_field("t_off", &TimeSignal::t_off, "switch-off time (s), .inf for never");
  num_field("rise_time", &TimeSignal::rise_time, "half-cosine ramp after t_on (s), 0 = step");
}

std::vector<Entry> build_registry() {
  std::vector<Entry> r;
  r.push_back({{"name", "string", "scenario name"},
               [](Scenario& s, const YAML::Node& n) { s.name = as_string("name", n); },
               [](const Scenario& s) { return YAML::Node(s.name); }});
  r.push_back({{"description", "string", "free text"},
               [](Scenario& s, const YAML::Node& n) {
                 s.description = as_string("description", n);
               },
               [](const Scenario& s) { return YAML::Node(s.description); }});
  r.push_back(NUM("duration", "simulated horizon (s)", duration));
  r.push_back(NUM("physics_dt", "RK4 plant step (s)", physics_dt));
  r.push_back(NUM("control_dt", "outer-loop sample time (s)", control_dt));
  r.push_back({{"filter", "none|cbf_nominal|rcbf_eso|rcbf_eso_bound|dob_cbf|dob_cbf_bound|cbf_true_f",
                "safety filter variant"},
               [](Scenario& s, const YAML::Node& n) {
                 s.filter = filter_from_string(as_string("filter", n));
               },
               [](const Scenario& s) { return YAML::Node(std::string(to_string(s.filter))); }});
  r.push_back(BOOL("oracle_disturbance", "use the exact f instead of the ESO estimate",
                   oracle_disturbance));
  r.push_back(VEC("initial_offset", "q(0) - q*(0) (rad)", initial_offset));
  r.push_back(NUM("steady_start", "start of the RMSE window (s)", steady_start));
  r.push_back(NUM("transient_threshold", "joint error defining transient_time (rad)",
                  transient_threshold));

  r.push_back(VEC("arm.link_lengths", "[d, L2, L3] (m)", arm.link_lengths));
  r.push_back(VEC("arm.com_offsets", "COM distance along each link (m)", arm.com_offsets));
  r.push_back(VEC("arm.masses", "link masses (kg)", arm.masses));
  r.push_back(VEC("arm.link_inertias", "link inertia about the COM (kg m^2)", arm.link_inertias));
  r.push_back(VEC("arm.rotor_inertias", "reflected rotor inertia (kg m^2)", arm.rotor_inertias));
  r.push_back(NUM("arm.gravity", "gravitational acceleration (m/s^2)", arm.gravity_accel));
  r.push_back(VEC("arm.viscous_friction", "viscous friction (N m s/rad)", arm.viscous_friction));
  r.push_back(VEC("arm.coulomb_friction", "Coulomb friction (N m)", arm.coulomb_friction));
  r.push_back(NUM("arm.coulomb_smoothing", "tanh velocity scale (rad/s)", arm.coulomb_smoothing));
  r.push_back(VEC("arm.torque_map", "voltage-to-torque gains B (N m/V)", arm.torque_map_B));

  r.push_back(VEC("inner.kp", "firmware proportional gain", inner.kp));
  r.push_back(VEC("inner.kd", "firmware derivative gain", inner.kd));
  r.push_back({{"inner.psi", "pd_only|pd_plus_integral|pd_plus_gravity_comp", "firmware extra term"},
               [](Scenario& s, const YAML::Node& n) {
                 s.inner.psi_variant = psi_from_string(as_string("inner.psi", n));
               },
               [](const Scenario& s) {
                 return YAML::Node(std::string(to_string(s.inner.psi_variant)));
               }});
  r.push_back(VEC("inner.integral_gain", "integral gain for pd_plus_integral", inner.integral_gain));
  r.push_back(NUM("inner.integral_clamp", "anti-windup bound (rad s)", inner.integral_clamp));
  r.push_back(BOOL("inner.voltage_mode", "firmware outputs volts (tau = B v)", inner.voltage_mode));

  r.push_back({{"nominal.m_bar", "mat3", "nominal inertia, 3x3 or diagonal"},
               [](Scenario& s, const YAML::Node& n) {
                 s.nominal.m_bar = as_mat3("nominal.m_bar", n);
               },
               [](const Scenario& s) { return mat(s.nominal.m_bar); }});
  r.push_back({{"nominal.c_bar", "mat3", "nominal velocity term, 3x3 or diagonal"},
               [](Scenario& s, const YAML::Node& n) {
                 s.nominal.c_bar = as_mat3("nominal.c_bar", n);
               },
               [](const Scenario& s) { return mat(s.nominal.c_bar); }});
  r.push_back(VEC("nominal.g_bar", "nominal gravity torque", nominal.g_bar));
  r.push_back(VEC("nominal.kd_bar", "nominal command gain", nominal.kd_bar));
  r.push_back(NUM("nominal.kd_scale", "multiplies kd_bar at run time", kd_scale));

  r.push_back(VEC("tracking.kp", "outer-loop position gain (1/s^2)", tracking.kp));
  r.push_back(VEC("tracking.kd", "outer-loop velocity gain (1/s)", tracking.kd));

  r.push_back({{"reference.kind", "sim_profile|hw_profile|custom",
                "builtin reference; sim/hw reset amplitude, frequency and offset"},
               [](Scenario& s, const YAML::Node& n) {
                 const std::string v = as_string("reference.kind", n);
                 if (v == "sim_profile") {
                   s.reference = ReferenceProfile::sim();
                 } else if (v == "hw_profile") {
                   s.reference = ReferenceProfile::hw();
                 } else if (v == "custom") {
                   s.reference.kind = ProfileKind::custom;
                 } else {
                   bad("reference.kind", "sim_profile, hw_profile or custom", n);
                 }
               },
               [](const Scenario& s) { return YAML::Node(std::string(kind_name(s.reference.kind))); }});
  for (auto [name, field] : {std::pair{"amplitude", &ReferenceProfile::amplitude},
                             std::pair{"frequency", &ReferenceProfile::frequency},
                             std::pair{"offset", &ReferenceProfile::offset}}) {
    const std::string key = std::string("reference.") + name;
    r.push_back({{key, "vec3", std::string("q*_i = amplitude sin(frequency t) + offset: ") + name},
                 [key, field](Scenario& s, const YAML::Node& n) {
                   set_ref_field(s, field, as_vec3(key, n));
                 },
                 [field](const Scenario& s) { return vec(s.reference.*field); }});
  }

  r.push_back(VEC("eso_bandwidths", "observer bandwidth per joint (rad/s)", eso_bandwidths));

  r.push_back({{"safety.enabled", "bool", "false removes the wall constraint"},
               [](Scenario& s, const YAML::Node& n) {
                 if (as_bool("safety.enabled", n)) {
                   wall(s);
                 } else {
                   s.safety.reset();
                 }
               },
               [](const Scenario& s) { return boolean(s.safety.has_value()); }});
  r.push_back({{"safety.axis", "integer", "Cartesian axis 0 = x, 1 = y, 2 = z"},
               [](Scenario& s, const YAML::Node& n) { wall(s).axis = as_int("safety.axis", n); },
               [](const Scenario& s) {
                 return s.safety ? YAML::Node(std::to_string(s.safety->axis)) : YAML::Node();
               }});
  r.push_back({{"safety.offset", "number", "wall position y0 (m)"},
               [](Scenario& s, const YAML::Node& n) {
                 wall(s).offset = as_number("safety.offset", n);
               },
               [](const Scenario& s) { return s.safety ? num(s.safety->offset) : YAML::Node(); }});
  r.push_back({{"safety.direction", "keep_above|keep_below", "side of the wall that is safe"},
               [](Scenario& s, const YAML::Node& n) {
                 wall(s).direction = direction_from_string(as_string("safety.direction", n));
               },
               [](const Scenario& s) {
                 return s.safety ? YAML::Node(std::string(to_string(s.safety->direction)))
                                 : YAML::Node();
               }});
  r.push_back({{"safety.gamma", "number", "CBF chain pole (1/s)"},
               [](Scenario& s, const YAML::Node& n) {
                 wall(s).gamma = as_number("safety.gamma", n);
               },
               [](const Scenario& s) { return s.safety ? num(s.safety->gamma) : YAML::Node(); }});

  add_signal(r, "disturbances.force", &DisturbanceProfile::force, "N");
  add_signal(r, "disturbances.joint_offset", &DisturbanceProfile::joint_offset, "N m or V");
  r.push_back(BOOL("disturbances.joint_offset_in_volts", "joint_offset is in volts",
                   disturbances.joint_offset_in_volts));
  r.push_back(NUM("disturbances.payload_mass", "point mass at the wrist (kg)",
                  disturbances.payload_mass));

  r.push_back(VEC("bound.l_f", "disturbance rate bound per joint", l_f));
  r.push_back(NUM("bound.t_s", "sample time of the error bound (s)", bound_t_s));
  r.push_back(BOOL("bound.calibrate", "measure l_f / b_h from the closed loop first",
                   calibrate_bounds));
  r.push_back(NUM("bound.rate_window_start", "rates are measured from this time (s)",
                  rate_window_start));
  r.push_back(NUM("dob.k_b", "disturbance observer gain (1/s)", dob_k_b));
  r.push_back(NUM("dob.b_h", "rate bound on b_e", dob_b_h));

  r.push_back({{"u_box.enabled", "bool", "false removes the input box"},
               [](Scenario& s, const YAML::Node& n) {
                 if (as_bool("u_box.enabled", n)) {
                   box(s);
                 } else {
                   s.u_box.reset();
                 }
               },
               [](const Scenario& s) { return boolean(s.u_box.has_value()); }});
  r.push_back({{"u_box.lower", "vec3", "lower command limit (rad/s)"},
               [](Scenario& s, const YAML::Node& n) { box(s).lower = as_vec3("u_box.lower", n); },
               [](const Scenario& s) { return s.u_box ? vec(s.u_box->lower) : YAML::Node(); }});
  r.push_back({{"u_box.upper", "vec3", "upper command limit (rad/s)"},
               [](Scenario& s, const YAML::Node& n) { box(s).upper = as_vec3("u_box.upper", n); },
               [](const Scenario& s) { return s.u_box ? vec(s.u_box->upper) : YAML::Node(); }});
  return r;
}

#undef NUM
#undef VEC
#undef BOOL

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = build_registry();
  return r;
}

const Entry* find_entry(std::string_view key) {
  for (const Entry& e : registry()) {
    if (e.doc.key == key) return &e;
  }
  return nullptr;
}

YAML::Node parse(std::string_view text, const std::string& what) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void apply_map(Scenario& scn, const YAML::Node& map, const std::string& prefix) {
  for (const auto& kv : map) {
    const std::string key = prefix + kv.first.as<std::string>();
    if (const Entry* e = find_entry(key)) {
      e->set(scn, kv.second);
    } else if (kv.second.IsMap()) {
      apply_map(scn, kv.second, key + ".");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

std::string emit(const YAML::Node& n) {
  YAML::Emitter out;
  out << n;
  return out.c_str();
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : registry()) k.push_back(e.doc);
    return k;
  }();
  return keys;
}

bool is_config_key(std::string_view key) { return find_entry(key) != nullptr; }

void set_config_value(Scenario& scn, std::string_view key, std::string_view value) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError("unknown config key '" + std::string(key) + "'");
  const YAML::Node n = parse(value, std::string(key));
  if (!n.IsDefined() || n.IsNull()) {
    throw ConfigError(std::string(key) + ": missing value");
  }
  e->set(scn, n);
}

std::string get_config_value(const Scenario& scn, std::string_view key) {
  const Entry* e = find_entry(key);
  if (!e) throw ConfigError("unknown config key '" + std::string(key) + "'");
  const YAML::Node n = e->get(scn);
  return n.IsNull() ? std::string() : emit(n);
}

Scenario scenario_from_document(std::string_view text) {
  const YAML::Node doc = parse(text, "scenario document");
  if (doc.IsNull()) throw ConfigError("scenario document is empty");
  if (!doc.IsMap()) throw ConfigError("scenario document must be a mapping");
  Scenario scn;
  if (const YAML::Node base = doc["base"]) {
    scn = find_scenario(as_string("base", base));
  }
  YAML::Node rest = YAML::Clone(doc);
  rest.remove("base");
  apply_map(scn, rest, "");
  return scn;
}

std::string scenario_to_document(const Scenario& scn) {
  YAML::Node root(YAML::NodeType::Map);
  for (const Entry& e : registry()) {
    const YAML::Node v = e.get(scn);
    if (v.IsNull()) continue;
    // Split the dotted key into nested maps.
    std::vector<std::string> parts;
    std::string_view k = e.doc.key;
    for (std::size_t pos; (pos = k.find('.')) != std::string_view::npos; k.remove_prefix(pos + 1)) {
      parts.emplace_back(k.substr(0, pos));
    }
    YAML::Node node = root;
    for (const std::string& p : parts) {
      if (!node[p]) node[p] = YAML::Node(YAML::NodeType::Map);
      node.reset(node[p]);
    }
    node[std::string(k)] = v;
  }
  return emit(root) + "\n";
}

Scenario resolve_scenario(const RunConfig& cfg) {
  Scenario scn;
  if (!cfg.document_path.empty()) {
    std::ifstream in(cfg.document_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + cfg.document_path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    scn = scenario_from_document(text.str());
  } else if (!cfg.scenario.empty()) {
    scn = find_scenario(cfg.scenario);
  } else {
    throw ConfigError("no scenario given");
  }
  for (const auto& [key, value] : cfg.overrides) set_config_value(scn, key, value);
  try {
    scn.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Fault& f) {
    throw ConfigError(std::string(f.name()) + ": " + f.what());
  }
  return scn;
}

}  // namespace armsafe
