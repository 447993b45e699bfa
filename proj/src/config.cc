#include "safecert/config.h"

#include <fstream>
#include <set>
#include <sstream>

namespace safecert {

using nlohmann::json;

std::string ToString(BenchmarkKind kind) {
  return kind == BenchmarkKind::kRoom ? "room" : "platoon";
}

namespace {

void RequireObject(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void CheckKeys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  RequireObject(j, where);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T Get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": missing or of the wrong type");
  }
}

template <typename T>
void GetOptional(const json& j, const std::string& key, const std::string& where, T& out) {
  if (j.contains(key)) out = Get<T>(j, key, where);
}

std::vector<int> GetCounts(const json& j, const std::string& key, const std::string& where) {
  const auto counts = Get<std::vector<int>>(j, key, where);
  for (int c : counts) {
    if (c < 1) throw ConfigError(where + "." + key + ": grid counts must be positive");
  }
  return counts;
}

Eigen::VectorXd ToVector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::Matrix2d Matrix2FromJson(const json& j, const std::string& where) {
  const auto rows = Get<std::vector<std::vector<double>>>(json{{"m", j}}, "m", where);
  if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2) {
    throw ConfigError(where + ": expected a 2x2 matrix");
  }
  Eigen::Matrix2d m;
  m << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
  return m;
}

json Matrix2ToJson(const Eigen::Matrix2d& m) {
  return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

ClassConfig ParseClass(const json& j, const std::string& where) {
  CheckKeys(j, where,
            {"id", "benchmark", "params", "data", "state_box", "input_box", "initial_box",
             "unsafe_box", "template", "grid", "probe"});
  ClassConfig c;
  c.id = Get<std::string>(j, "id", where);
  if (c.id.empty()) throw ConfigError(where + ".id: must not be empty");
  const std::string here = where + "[" + c.id + "]";
  if (j.contains("benchmark") == j.contains("data")) {
    throw ConfigError(here + ": exactly one of 'benchmark' and 'data' is required");
  }
  if (j.contains("benchmark")) {
    const auto name = Get<std::string>(j, "benchmark", here);
    if (name == "room") {
      c.benchmark = BenchmarkKind::kRoom;
    } else if (name == "platoon") {
      c.benchmark = BenchmarkKind::kPlatoon;
    } else {
      throw ConfigError(here + ".benchmark: unknown benchmark '" + name + "'");
    }
    if (j.contains("params")) {
      const json& p = j.at("params");
      const std::string pw = here + ".params";
      if (*c.benchmark == BenchmarkKind::kRoom) {
        CheckKeys(p, pw, {"a", "e", "c"});
        GetOptional(p, "a", pw, c.room.a);
        GetOptional(p, "e", pw, c.room.e);
        GetOptional(p, "c", pw, c.room.c);
      } else {
        CheckKeys(p, pw, {"A", "E", "c"});
        if (p.contains("A")) c.platoon.A = Matrix2FromJson(p.at("A"), pw + ".A");
        if (p.contains("E")) c.platoon.E = Matrix2FromJson(p.at("E"), pw + ".E");
        if (p.contains("c")) {
          const auto v = Get<std::vector<double>>(p, "c", pw);
          if (v.size() != 2) throw ConfigError(pw + ".c: expected two entries");
          c.platoon.c << v[0], v[1];
        }
      }
    }
  } else {
    if (j.contains("params")) throw ConfigError(here + ".params: only valid with 'benchmark'");
    c.data_path = Get<std::string>(j, "data", here);
  }
  if (j.contains("state_box")) c.state_box = BoxFromJson(j.at("state_box"), here + ".state_box");
  if (j.contains("input_box")) c.input_box = BoxFromJson(j.at("input_box"), here + ".input_box");
  if (j.contains("initial_box")) c.initial_box = BoxFromJson(j.at("initial_box"), here + ".initial_box");
  if (j.contains("unsafe_box")) c.unsafe_box = BoxFromJson(j.at("unsafe_box"), here + ".unsafe_box");
  if (j.contains("template")) {
    const json& t = j.at("template");
    const std::string tw = here + ".template";
    CheckKeys(t, tw, {"exponents", "degree"});
    if (t.contains("exponents") == t.contains("degree")) {
      throw ConfigError(tw + ": exactly one of 'exponents' and 'degree' is required");
    }
    if (t.contains("exponents")) {
      c.exponents = Get<std::vector<std::vector<int>>>(t, "exponents", tw);
    } else {
      const int degree = Get<int>(t, "degree", tw);
      if (degree < 0) throw ConfigError(tw + ".degree: must be non-negative");
      const int n = c.state_box ? c.state_box->dim()
                    : c.benchmark == BenchmarkKind::kRoom ? 1
                    : c.benchmark == BenchmarkKind::kPlatoon ? 2
                                                             : -1;
      if (n < 1) throw ConfigError(tw + ".degree: needs a state_box to know the dimension");
      c.exponents = StcTemplate::FullPolynomial(n, degree).exponents();
    }
  }
  const std::string gw = here + ".grid";
  const json& grid = j.contains("grid") ? j.at("grid") : json::object();
  CheckKeys(grid, gw, {"state", "input"});
  if (c.benchmark) {
    c.grid_state = GetCounts(grid, "state", gw);
    c.grid_input = GetCounts(grid, "input", gw);
  } else if (!grid.empty()) {
    throw ConfigError(gw + ": recorded-data classes take their samples from the CSV file");
  }
  if (j.contains("probe")) c.probe_counts = GetCounts(j, "probe", here);
  if (!c.benchmark) {
    if (!c.state_box || !c.input_box || !c.initial_box || !c.unsafe_box || !c.exponents) {
      throw ConfigError(here + ": recorded-data classes need all four boxes and a template");
    }
    if (c.probe_counts.empty()) throw ConfigError(here + ".probe: required for recorded data");
  }
  return c;
}

}  // namespace

json BoxToJson(const IntervalBox& box) {
  std::vector<double> lo(box.lower().data(), box.lower().data() + box.dim());
  std::vector<double> hi(box.upper().data(), box.upper().data() + box.dim());
  return json{{"lower", lo}, {"upper", hi}};
}

IntervalBox BoxFromJson(const json& j, const std::string& where) {
  CheckKeys(j, where, {"lower", "upper"});
  const auto lo = Get<std::vector<double>>(j, "lower", where);
  const auto hi = Get<std::vector<double>>(j, "upper", where);
  try {
    return IntervalBox(ToVector(lo), ToVector(hi));
  } catch (const InvalidInputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

SubsystemClass BuildClass(const ClassConfig& c) {
  const std::string here = "class '" + c.id + "'";
  try {
    std::optional<SubsystemClass> base;
    if (c.benchmark == BenchmarkKind::kRoom) base = RoomClass(c.room, c.id);
    if (c.benchmark == BenchmarkKind::kPlatoon) base = PlatoonClass(c.platoon, c.id);
    const IntervalBox state = c.state_box ? *c.state_box : base->state_box();
    const IntervalBox input = c.input_box ? *c.input_box : base->input_box();
    const IntervalBox initial = c.initial_box ? *c.initial_box : base->safety().initial();
    const IntervalBox unsafe = c.unsafe_box ? *c.unsafe_box : base->safety().unsafe();
    if (initial.dim() != state.dim() || unsafe.dim() != state.dim()) {
      throw ConfigError(here + ": initial and unsafe boxes must match the state dimension");
    }
    if (!state.ContainsBox(initial) || !state.ContainsBox(unsafe)) {
      throw ConfigError(here + ": initial and unsafe boxes must lie inside the state box");
    }
    StcTemplate tmpl = c.exponents ? StcTemplate(state.dim(), *c.exponents) : base->stc_template();
    if (tmpl.state_dim() != state.dim()) {
      throw ConfigError(here + ": template dimension differs from the state dimension");
    }
    TransitionOracle oracle;
    if (base) {
      if (state.dim() != base->state_dim() || input.dim() != base->input_dim()) {
        throw ConfigError(here + ": boxes do not match the benchmark dimensions");
      }
      oracle = c.benchmark == BenchmarkKind::kRoom ? MakeRoomOracle(c.room)
                                                   : MakePlatoonOracle(c.platoon);
    }
    if (base && (static_cast<int>(c.grid_state.size()) != state.dim() ||
                 static_cast<int>(c.grid_input.size()) != input.dim())) {
      throw ConfigError(here + ": grid counts must have one entry per state and input dimension");
    }
    if (!c.probe_counts.empty() &&
        static_cast<int>(c.probe_counts.size()) != state.dim() + input.dim()) {
      throw ConfigError(here + ": probe counts need one entry per joint dimension");
    }
    return SubsystemClass(c.id, state, input, SafetySpec(initial, unsafe), std::move(tmpl),
                          std::move(oracle));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInputError& e) {
    throw ConfigError(here + ": " + e.what());
  }
}

PipelineConfig ParseConfig(const json& doc, const std::filesystem::path& base_dir) {
  CheckKeys(doc, "config",
            {"version", "output_dir", "classes", "scp", "lipschitz", "refine", "simulation",
             "verify"});
  const int version = Get<int>(doc, "version", "config");
  if (version != kConfigVersion) {
    throw ConfigError("config: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  PipelineConfig cfg;
  cfg.base_dir = base_dir;
  GetOptional(doc, "output_dir", "config", cfg.output_dir);

  const json& classes = doc.contains("classes") ? doc.at("classes") : json();
  if (!classes.is_array() || classes.empty()) {
    throw ConfigError("config.classes: expected a non-empty array");
  }
  std::set<std::string> ids;
  for (size_t k = 0; k < classes.size(); ++k) {
    ClassConfig c = ParseClass(classes[k], "config.classes[" + std::to_string(k) + "]");
    if (!ids.insert(c.id).second) throw ConfigError("config.classes: duplicate id '" + c.id + "'");
    BuildClass(c);
    cfg.classes.push_back(std::move(c));
  }

  if (doc.contains("scp")) {
    const json& s = doc.at("scp");
    CheckKeys(s, "config.scp",
              {"coeff_bound", "level_bound", "slope_bound", "gap", "feasibility_tol",
               "minimize_eta_second", "export_lp"});
    GetOptional(s, "coeff_bound", "config.scp", cfg.scp.coeff_bound);
    if (s.contains("level_bound")) cfg.scp.level_bound = Get<double>(s, "level_bound", "config.scp");
    if (s.contains("slope_bound")) cfg.scp.slope_bound = Get<double>(s, "slope_bound", "config.scp");
    GetOptional(s, "gap", "config.scp", cfg.scp.gap);
    GetOptional(s, "feasibility_tol", "config.scp", cfg.scp.feasibility_tol);
    GetOptional(s, "minimize_eta_second", "config.scp", cfg.scp.minimize_eta_second);
    GetOptional(s, "export_lp", "config.scp", cfg.export_lp);
  }
  if (doc.contains("lipschitz")) {
    const json& l = doc.at("lipschitz");
    CheckKeys(l, "config.lipschitz", {"gamma", "inner_count", "outer_count", "seed"});
    GetOptional(l, "gamma", "config.lipschitz", cfg.lipschitz.gamma);
    GetOptional(l, "inner_count", "config.lipschitz", cfg.lipschitz.inner_count);
    GetOptional(l, "outer_count", "config.lipschitz", cfg.lipschitz.outer_count);
    GetOptional(l, "seed", "config.lipschitz", cfg.lipschitz.seed);
  }
  if (doc.contains("refine")) {
    const json& r = doc.at("refine");
    CheckKeys(r, "config.refine", {"enabled", "max_retries"});
    GetOptional(r, "enabled", "config.refine", cfg.refine_enabled);
    GetOptional(r, "max_retries", "config.refine", cfg.max_retries);
  }
  if (doc.contains("simulation")) {
    const json& s = doc.at("simulation");
    const std::string sw = "config.simulation";
    CheckKeys(s, sw, {"topology", "weight_decay", "surrogate_size", "steps", "trajectories"});
    if (s.contains("topology")) {
      try {
        cfg.topology.kind = ParseTopologyKind(Get<std::string>(s, "topology", sw));
      } catch (const InvalidInputError& e) {
        throw ConfigError(sw + ".topology: " + e.what());
      }
    }
    GetOptional(s, "weight_decay", sw, cfg.topology.weight_decay);
    GetOptional(s, "surrogate_size", sw, cfg.topology.surrogate_size);
    GetOptional(s, "steps", sw, cfg.steps);
    GetOptional(s, "trajectories", sw, cfg.trajectories);
  }
  if (doc.contains("verify")) {
    const json& v = doc.at("verify");
    CheckKeys(v, "config.verify", {"refinement", "csv_refinement"});
    GetOptional(v, "refinement", "config.verify", cfg.verify_refinement);
    GetOptional(v, "csv_refinement", "config.verify", cfg.csv_refinement);
  }

  try {
    cfg.scp.Validate();
    cfg.lipschitz.Validate();
    cfg.topology.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInputError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.max_retries < 0) throw ConfigError("config.refine.max_retries: must be non-negative");
  if (cfg.steps < 0) throw ConfigError("config.simulation.steps: must be non-negative");
  if (cfg.trajectories < 1) throw ConfigError("config.simulation.trajectories: must be positive");
  if (cfg.verify_refinement < 1 || cfg.csv_refinement < 1) {
    throw ConfigError("config.verify: refinement factors must be positive");
  }
  if (cfg.output_dir.empty()) throw ConfigError("config.output_dir: must not be empty");
  return cfg;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "': " + e.what());
  }
  return ParseConfig(doc, path.parent_path());
}

json ToJson(const PipelineConfig& cfg) {
  json classes = json::array();
  for (const ClassConfig& c : cfg.classes) {
    json j;
    j["id"] = c.id;
    if (c.benchmark) {
      j["benchmark"] = ToString(*c.benchmark);
      if (*c.benchmark == BenchmarkKind::kRoom) {
        j["params"] = {{"a", c.room.a}, {"e", c.room.e}, {"c", c.room.c}};
      } else {
        j["params"] = {{"A", Matrix2ToJson(c.platoon.A)},
                       {"E", Matrix2ToJson(c.platoon.E)},
                       {"c", {c.platoon.c[0], c.platoon.c[1]}}};
      }
      j["grid"] = {{"state", c.grid_state}, {"input", c.grid_input}};
    } else {
      j["data"] = c.data_path;
    }
    if (c.state_box) j["state_box"] = BoxToJson(*c.state_box);
    if (c.input_box) j["input_box"] = BoxToJson(*c.input_box);
    if (c.initial_box) j["initial_box"] = BoxToJson(*c.initial_box);
    if (c.unsafe_box) j["unsafe_box"] = BoxToJson(*c.unsafe_box);
    if (c.exponents) j["template"] = {{"exponents", *c.exponents}};
    if (!c.probe_counts.empty()) j["probe"] = c.probe_counts;
    classes.push_back(std::move(j));
  }
  json scp = {{"coeff_bound", cfg.scp.coeff_bound},
              {"gap", cfg.scp.gap},
              {"feasibility_tol", cfg.scp.feasibility_tol},
              {"minimize_eta_second", cfg.scp.minimize_eta_second},
              {"export_lp", cfg.export_lp}};
  if (cfg.scp.level_bound) scp["level_bound"] = *cfg.scp.level_bound;
  if (cfg.scp.slope_bound) scp["slope_bound"] = *cfg.scp.slope_bound;
  return json{
      {"version", kConfigVersion},
      {"output_dir", cfg.output_dir},
      {"classes", classes},
      {"scp", scp},
      {"lipschitz",
       {{"gamma", cfg.lipschitz.gamma},
        {"inner_count", cfg.lipschitz.inner_count},
        {"outer_count", cfg.lipschitz.outer_count},
        {"seed", cfg.lipschitz.seed}}},
      {"refine", {{"enabled", cfg.refine_enabled}, {"max_retries", cfg.max_retries}}},
      {"simulation",
       {{"topology", ToString(cfg.topology.kind)},
        {"weight_decay", cfg.topology.weight_decay},
        {"surrogate_size", cfg.topology.surrogate_size},
        {"steps", cfg.steps},
        {"trajectories", cfg.trajectories}}},
      {"verify", {{"refinement", cfg.verify_refinement}, {"csv_refinement", cfg.csv_refinement}}}};
}

}  // namespace safecert
