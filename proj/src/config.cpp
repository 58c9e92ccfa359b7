#include "ljchain/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ljchain {

namespace {

// ---------------------------------------------------------------------------
// TOML-subset document model
// ---------------------------------------------------------------------------

struct Value {
  enum class Kind { number, boolean, string, array };
  Kind kind = Kind::number;
  double num = 0.0;
  bool flag = false;
  std::string str;
  std::vector<Value> arr;
  int line = 0;
  int col = 0;
};

struct Table {
  std::map<std::string, Value> kv;
  int line = 0;
};

struct Doc {
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> arrays;
};

[[noreturn]] void fail(const std::string& msg, int line, int col) {
  throw ConfigError(ConfigError::Kind::parse, msg, line, col);
}

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;
  int line;
  int col_base = 1;
  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  int col() const { return static_cast<int>(pos) + col_base; }
  void skip_ws() {
    while (!done() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n')) ++pos;
  }
};

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  Value v;
  v.kind = Value::Kind::array;
  v.line = c.line;
  v.col = c.col();
  ++c.pos;  // '['
  c.skip_ws();
  while (!c.done() && c.peek() != ']') {
    v.arr.push_back(parse_value(c));
    c.skip_ws();
    if (!c.done() && c.peek() == ',') {
      ++c.pos;
      c.skip_ws();
    }
  }
  if (c.done()) fail("unterminated array", v.line, v.col);
  ++c.pos;  // ']'
  return v;
}

Value parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) fail("expected a value", c.line, c.col());
  Value v;
  v.line = c.line;
  v.col = c.col();
  const char ch = c.peek();
  if (ch == '[') return parse_array(c);
  if (ch == '"') {
    v.kind = Value::Kind::string;
    ++c.pos;
    while (!c.done() && c.peek() != '"') {
      if (c.peek() == '\\' && c.pos + 1 < c.s.size()) ++c.pos;
      v.str += c.s[c.pos++];
    }
    if (c.done()) fail("unterminated string", v.line, v.col);
    ++c.pos;
    return v;
  }
  // bare word: boolean or number
  std::size_t start = c.pos;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != ' ' && c.peek() != '\t' &&
         c.peek() != '\n')
    ++c.pos;
  std::string word = c.s.substr(start, c.pos - start);
  if (word == "true" || word == "false") {
    v.kind = Value::Kind::boolean;
    v.flag = word == "true";
    return v;
  }
  char* end = nullptr;
  v.num = std::strtod(word.c_str(), &end);
  if (end == word.c_str() || *end != '\0')
    fail("expected number, boolean, string or array, got '" + word + "'", v.line, v.col);
  v.kind = Value::Kind::number;
  return v;
}

// Strips a comment that starts outside of any string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

int bracket_balance(const std::string& text) {
  bool in_string = false;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '"' && (i == 0 || text[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    if (text[i] == '[') ++depth;
    if (text[i] == ']') --depth;
  }
  return depth;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

Doc parse_doc(const std::string& text) {
  Doc doc;
  Table* current = nullptr;
  std::istringstream in(text);
  std::string physical;
  int line_no = 0;
  while (std::getline(in, physical)) {
    ++line_no;
    std::string logical = strip_comment(physical);
    const int start_line = line_no;
    // join continuation lines while brackets stay open
    while (bracket_balance(logical) > 0) {
      std::string next;
      if (!std::getline(in, next)) fail("unbalanced '[' in value", start_line, 1);
      ++line_no;
      logical += "\n" + strip_comment(next);
    }
    if (bracket_balance(logical) < 0) fail("unbalanced ']'", start_line, 1);
    std::string stripped = trim(logical);
    if (stripped.empty()) continue;

    if (stripped.front() == '[') {
      const bool is_array = stripped.size() > 1 && stripped[1] == '[';
      const std::string closer = is_array ? "]]" : "]";
      const std::size_t name_start = is_array ? 2 : 1;
      const std::size_t close = stripped.find(closer);
      if (close == std::string::npos || trim(stripped.substr(close + closer.size())) != "")
        fail("malformed table header", start_line, 1);
      const std::string name = trim(stripped.substr(name_start, close - name_start));
      if (name.empty()) fail("empty table name", start_line, 1);
      if (is_array) {
        doc.arrays[name].push_back(Table{{}, start_line});
        current = &doc.arrays[name].back();
      } else {
        if (doc.tables.count(name)) fail("duplicate table [" + name + "]", start_line, 1);
        current = &doc.tables[name];
        current->line = start_line;
      }
      continue;
    }

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'", start_line, 1);
    const std::string key = trim(stripped.substr(0, eq));
    if (key.empty()) fail("empty key", start_line, 1);
    if (!current) fail("key '" + key + "' outside any table", start_line, 1);
    std::string rhs = trim(stripped.substr(eq + 1));
    if (rhs.empty()) fail("missing value for key '" + key + "'", start_line, 1);
    Cursor c{rhs, 0, start_line};
    Value v = parse_value(c);
    c.skip_ws();
    if (!c.done()) fail("trailing characters after value for '" + key + "'", start_line, c.col());
    if (current->kv.count(key)) fail("duplicate key '" + key + "'", start_line, 1);
    current->kv[key] = std::move(v);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Typed getters
// ---------------------------------------------------------------------------

[[noreturn]] void range_error(const std::string& msg, int line = 0) {
  throw ConfigError(ConfigError::Kind::range, msg, line);
}

const Value* find(const Table& t, const std::string& key) {
  auto it = t.kv.find(key);
  return it == t.kv.end() ? nullptr : &it->second;
}

const Value& require(const Table& t, const std::string& key, const std::string& where) {
  const Value* v = find(t, key);
  if (!v) range_error(where + ": missing key '" + key + "'", t.line);
  return *v;
}

double as_number(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::number) range_error(key + ": expected a number", v.line);
  return v.num;
}

std::string as_string(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::string) range_error(key + ": expected a string", v.line);
  return v.str;
}

bool as_bool(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::boolean) range_error(key + ": expected true/false", v.line);
  return v.flag;
}

std::uint64_t as_count(const Value& v, const std::string& key) {
  const double d = as_number(v, key);
  if (!(d >= 0.0) || d != std::floor(d) || d > 9.007199254740992e15)
    range_error(key + ": expected a nonnegative integer", v.line);
  return static_cast<std::uint64_t>(d);
}

std::vector<double> as_number_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::array) range_error(key + ": expected an array", v.line);
  std::vector<double> out;
  for (const Value& e : v.arr) out.push_back(as_number(e, key));
  return out;
}

std::vector<std::uint64_t> as_count_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::array) range_error(key + ": expected an array", v.line);
  std::vector<std::uint64_t> out;
  for (const Value& e : v.arr) out.push_back(as_count(e, key));
  return out;
}

std::vector<std::string> as_string_list(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::array) range_error(key + ": expected an array", v.line);
  std::vector<std::string> out;
  for (const Value& e : v.arr) out.push_back(as_string(e, key));
  return out;
}

std::vector<std::vector<double>> as_matrix(const Value& v, const std::string& key) {
  if (v.kind != Value::Kind::array) range_error(key + ": expected an array of arrays", v.line);
  std::vector<std::vector<double>> out;
  for (const Value& row : v.arr) out.push_back(as_number_list(row, key));
  return out;
}

// ---------------------------------------------------------------------------
// Mapping
// ---------------------------------------------------------------------------

PotentialSpec map_potential(const Table& t) {
  const std::string family = as_string(require(t, "family", "[[potential]]"), "family");
  const std::string label = as_string(require(t, "label", "[[potential]]"), "label");
  try {
    if (family == "twelve-six") {
      return make_twelve_six(as_number(require(t, "depth", label), "depth"),
                             as_number(require(t, "length", label), "length"), label);
    }
    if (family == "morse") {
      return make_morse(as_number(require(t, "depth", label), "depth"),
                        as_number(require(t, "width", label), "width"),
                        as_number(require(t, "equilibrium", label), "equilibrium"), label);
    }
    if (family == "shifted-quadratic-with-tail") {
      double well_position = 1.0;
      if (const Value* v = find(t, "well_position")) well_position = as_number(*v, "well_position");
      return make_shifted_quadratic_tail(
          as_number(require(t, "stiffness", label), "stiffness"),
          as_number(require(t, "well_depth", label), "well_depth"),
          as_number(require(t, "decay_rate", label), "decay_rate"), well_position, label);
    }
    if (family == "tabulated") {
      bool c3 = false;
      if (const Value* v = find(t, "c3_extension")) c3 = as_bool(*v, "c3_extension");
      return make_tabulated(as_number_list(require(t, "knots", label), "knots"),
                            as_number_list(require(t, "values", label), "values"), c3, label);
    }
  } catch (const std::invalid_argument& e) {
    range_error(std::string("potential '") + label + "': " + e.what(), t.line);
  }
  range_error("potential '" + label + "': unknown family '" + family + "'", t.line);
}

ExperimentMode mode_from_string(const std::string& s, int line) {
  if (s == "validate") return ExperimentMode::validate;
  if (s == "predict") return ExperimentMode::predict;
  if (s == "minimize") return ExperimentMode::minimize;
  if (s == "sweep") return ExperimentMode::sweep;
  if (s == "recover") return ExperimentMode::recover;
  if (s == "ergodic") return ExperimentMode::ergodic;
  range_error("experiment: unknown mode '" + s + "'", line);
}

}  // namespace

const char* to_string(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::validate: return "validate";
    case ExperimentMode::predict: return "predict";
    case ExperimentMode::minimize: return "minimize";
    case ExperimentMode::sweep: return "sweep";
    case ExperimentMode::recover: return "recover";
    default: return "ergodic";
  }
}

RunConfig parse_config_text(const std::string& text) {
  const Doc doc = parse_doc(text);
  RunConfig cfg;

  auto pots = doc.arrays.find("potential");
  if (pots == doc.arrays.end() || pots->second.empty())
    range_error("config needs at least one [[potential]] block");
  for (const Table& t : pots->second) {
    PotentialSpec spec = map_potential(t);
    for (const auto& existing : cfg.potentials) {
      if (existing.label == spec.label)
        range_error("duplicate potential label '" + spec.label + "'", t.line);
    }
    cfg.potentials.push_back(std::move(spec));
  }

  if (auto it = doc.tables.find("class_params"); it != doc.tables.end()) {
    const Table& t = it->second;
    if (const Value* v = find(t, "alpha_floor")) cfg.class_params.alpha_floor = as_number(*v, "alpha_floor");
    if (const Value* v = find(t, "b")) cfg.class_params.b = as_number(*v, "b");
    if (const Value* v = find(t, "c")) cfg.class_params.c = as_number(*v, "c");
    if (const Value* v = find(t, "d")) cfg.class_params.d = as_number(*v, "d");
    if (const Value* v = find(t, "eta")) cfg.class_params.eta = as_number(*v, "eta");
    if (const Value* v = find(t, "psi_power")) cfg.class_params.psi.power = as_number(*v, "psi_power");
    if (const Value* v = find(t, "psi_slope")) cfg.class_params.psi.slope = as_number(*v, "psi_slope");
    try {
      cfg.class_params.check();
    } catch (const std::invalid_argument& e) {
      range_error(e.what(), t.line);
    }
  }

  auto ens = doc.tables.find("ensemble");
  if (ens == doc.tables.end()) range_error("config needs an [ensemble] table");
  {
    const Table& t = ens->second;
    cfg.law = as_string(require(t, "law", "ensemble"), "law");
    if (cfg.law != "iid" && cfg.law != "markov" && cfg.law != "periodic")
      range_error("ensemble: unknown law '" + cfg.law + "'", t.line);
    cfg.support_labels = as_string_list(require(t, "support", "ensemble"), "support");
    if (const Value* v = find(t, "label")) cfg.ensemble_label = as_string(*v, "label");
    if (cfg.law == "iid")
      cfg.probabilities = as_number_list(require(t, "probabilities", "ensemble"), "probabilities");
    if (cfg.law == "markov") {
      cfg.transition = as_matrix(require(t, "transition", "ensemble"), "transition");
      cfg.initial = as_number_list(require(t, "initial", "ensemble"), "initial");
    }
    if (cfg.law == "periodic")
      cfg.pattern_labels = as_string_list(require(t, "pattern", "ensemble"), "pattern");

    // label resolution
    for (const std::string& lbl : cfg.support_labels) {
      bool known = false;
      for (const auto& p : cfg.potentials) known = known || p.label == lbl;
      if (!known)
        throw ConfigError(ConfigError::Kind::unknown_label,
                          "ensemble: unknown label '" + lbl + "'", t.line);
    }
    for (const std::string& lbl : cfg.pattern_labels) {
      bool known = false;
      for (const auto& s : cfg.support_labels) known = known || s == lbl;
      if (!known)
        throw ConfigError(ConfigError::Kind::unknown_label,
                          "ensemble pattern: unknown label '" + lbl + "'", t.line);
    }
  }

  auto exp = doc.tables.find("experiment");
  if (exp == doc.tables.end()) range_error("config needs an [experiment] table");
  {
    const Table& t = exp->second;
    ExperimentConfig& e = cfg.experiment;
    e.mode = mode_from_string(as_string(require(t, "mode", "experiment"), "mode"), t.line);
    if (const Value* v = find(t, "gamma")) e.gamma = as_number(*v, "gamma");
    if (const Value* v = find(t, "gamma_list")) e.gamma_list = as_number_list(*v, "gamma_list");
    if (const Value* v = find(t, "n_list")) e.n_list = as_count_list(*v, "n_list");
    if (const Value* v = find(t, "seeds")) e.seeds = as_count_list(*v, "seeds");
    if (const Value* v = find(t, "k_max")) e.k_max = static_cast<int>(as_count(*v, "k_max"));
    if (const Value* v = find(t, "weakest_count"))
      e.weakest_count = static_cast<std::uint32_t>(as_count(*v, "weakest_count"));
    if (const Value* v = find(t, "n")) e.n = as_count(*v, "n");
    if (const Value* v = find(t, "seed")) e.seed = as_count(*v, "seed");
    if (const Value* v = find(t, "slope")) e.slope = as_number(*v, "slope");
    if (const Value* v = find(t, "rho")) e.rho = as_number(*v, "rho");
    if (const Value* v = find(t, "jump_x")) e.jump_x = as_number(*v, "jump_x");
    if (const Value* v = find(t, "mu_list")) e.mu_list = as_number_list(*v, "mu_list");
    if (const Value* v = find(t, "window")) {
      const auto w = as_number_list(*v, "window");
      if (w.size() != 2) range_error("experiment: window must be [a, b]", t.line);
      e.window_a = w[0];
      e.window_b = w[1];
    }
    if (const Value* v = find(t, "quantity")) e.quantity = as_string(*v, "quantity");
    if (const Value* v = find(t, "kappa")) e.kappa = as_number(*v, "kappa");
    if (const Value* v = find(t, "output")) e.output = as_string(*v, "output");
    if (const Value* v = find(t, "workers")) e.workers = static_cast<int>(as_count(*v, "workers"));

    if (e.gamma < 0.0) range_error("experiment: gamma must be >= 0", t.line);
    for (double g : e.gamma_list)
      if (g < 0.0) range_error("experiment: gamma_list entries must be >= 0", t.line);
    if (e.workers < 1) range_error("experiment: workers must be >= 1", t.line);
    if (e.quantity != "inverse_alpha" && e.quantity != "ckappa")
      range_error("experiment: quantity must be inverse_alpha or ckappa", t.line);
  }

  // Exercise ensemble construction so distribution errors surface at parse
  // time with the config diagnostics.
  try {
    cfg.build_ensemble();
  } catch (const std::invalid_argument& e) {
    range_error(e.what(), ens->second.line);
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigError::Kind::parse, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::shared_ptr<const Ensemble> RunConfig::build_ensemble() const {
  std::vector<PotentialSpec> specs;
  for (const std::string& lbl : support_labels) {
    for (const auto& p : potentials) {
      if (p.label == lbl) {
        specs.push_back(p);
        break;
      }
    }
  }
  if (law == "iid") return Ensemble::make_iid(std::move(specs), probabilities, ensemble_label);
  if (law == "markov")
    return Ensemble::make_markov(std::move(specs), transition, initial, ensemble_label);
  std::vector<std::uint32_t> pattern;
  for (const std::string& lbl : pattern_labels) {
    for (std::size_t k = 0; k < support_labels.size(); ++k) {
      if (support_labels[k] == lbl) {
        pattern.push_back(static_cast<std::uint32_t>(k));
        break;
      }
    }
  }
  return Ensemble::make_periodic(std::move(specs), std::move(pattern), ensemble_label);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

std::string fmt_counts(const std::vector<std::uint64_t>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
  return out + "]";
}

std::string fmt_strings(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", \"" : "\"") + v[i] + "\"";
  return out + "]";
}

}  // namespace

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& p : potentials) {
    out += "[[potential]]\n";
    out += std::string("family = \"") + p.family_name() + "\"\n";
    out += "label = \"" + p.label + "\"\n";
    if (const auto* lj = std::get_if<TwelveSix>(&p.params)) {
      out += "depth = " + fmt(lj->depth) + "\nlength = " + fmt(lj->length) + "\n";
    } else if (const auto* m = std::get_if<Morse>(&p.params)) {
      out += "depth = " + fmt(m->depth) + "\nwidth = " + fmt(m->width) +
             "\nequilibrium = " + fmt(m->equilibrium) + "\n";
    } else if (const auto* s = std::get_if<ShiftedQuadraticTail>(&p.params)) {
      out += "stiffness = " + fmt(s->stiffness) + "\nwell_depth = " + fmt(s->well_depth) +
             "\ndecay_rate = " + fmt(s->decay_rate) +
             "\nwell_position = " + fmt(s->well_position) + "\n";
    } else if (const auto* tb = std::get_if<Tabulated>(&p.params)) {
      out += "knots = " + fmt_list(tb->knots) + "\nvalues = " + fmt_list(tb->values) +
             "\nc3_extension = " + (tb->c3_extension ? "true" : "false") + "\n";
    }
    out += "\n";
  }

  out += "[class_params]\n";
  out += "alpha_floor = " + fmt(class_params.alpha_floor) + "\n";
  out += "b = " + fmt(class_params.b) + "\n";
  out += "c = " + fmt(class_params.c) + "\n";
  out += "d = " + fmt(class_params.d) + "\n";
  out += "eta = " + fmt(class_params.eta) + "\n";
  out += "psi_power = " + fmt(class_params.psi.power) + "\n";
  out += "psi_slope = " + fmt(class_params.psi.slope) + "\n\n";

  out += "[ensemble]\n";
  out += "law = \"" + law + "\"\n";
  out += "support = " + fmt_strings(support_labels) + "\n";
  if (law == "iid") out += "probabilities = " + fmt_list(probabilities) + "\n";
  if (law == "markov") {
    out += "transition = [";
    for (std::size_t i = 0; i < transition.size(); ++i)
      out += (i ? ", " : "") + fmt_list(transition[i]);
    out += "]\n";
    out += "initial = " + fmt_list(initial) + "\n";
  }
  if (law == "periodic") out += "pattern = " + fmt_strings(pattern_labels) + "\n";
  out += "label = \"" + ensemble_label + "\"\n\n";

  const ExperimentConfig& e = experiment;
  out += "[experiment]\n";
  out += std::string("mode = \"") + to_string(e.mode) + "\"\n";
  out += "gamma = " + fmt(e.gamma) + "\n";
  if (!e.gamma_list.empty()) out += "gamma_list = " + fmt_list(e.gamma_list) + "\n";
  if (!e.n_list.empty()) out += "n_list = " + fmt_counts(e.n_list) + "\n";
  if (!e.seeds.empty()) out += "seeds = " + fmt_counts(e.seeds) + "\n";
  out += "k_max = " + std::to_string(e.k_max) + "\n";
  out += "weakest_count = " + std::to_string(e.weakest_count) + "\n";
  out += "n = " + std::to_string(e.n) + "\n";
  out += "seed = " + std::to_string(e.seed) + "\n";
  out += "slope = " + fmt(e.slope) + "\n";
  out += "rho = " + fmt(e.rho) + "\n";
  out += "jump_x = " + fmt(e.jump_x) + "\n";
  if (!e.mu_list.empty()) out += "mu_list = " + fmt_list(e.mu_list) + "\n";
  out += "window = [" + fmt(e.window_a) + ", " + fmt(e.window_b) + "]\n";
  out += "quantity = \"" + e.quantity + "\"\n";
  out += "kappa = " + fmt(e.kappa) + "\n";
  out += "output = \"" + e.output + "\"\n";
  out += "workers = " + std::to_string(e.workers) + "\n";
  return out;
}

}  // namespace ljchain
