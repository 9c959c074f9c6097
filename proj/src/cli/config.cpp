#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "interbank/cli.hpp"
#include "interbank/csv.hpp"

namespace interbank::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Entry {
  std::string value;
  int line;
};

class Section {
 public:
  explicit Section(std::string name) : name_(std::move(name)) {}

  void add(const std::string& key, std::string value, int line) {
    if (!entries_.emplace(key, Entry{std::move(value), line}).second) {
      fail(line, "duplicate key '" + key + "'");
    }
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const Entry* find(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) fail(entry.line, "unknown key '" + key + "' in " + where());
    }
  }

  std::string where() const { return name_.empty() ? "top level" : "[" + name_ + "]"; }

  [[noreturn]] static void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }

 private:
  std::string name_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

double to_double(const Entry& e, const std::string& key) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) Section::fail(e.line, "'" + key + "' is not a number: " + e.value);
  return v;
}

template <class Int>
Int to_integer(const Entry& e, const std::string& key) {
  Int v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) Section::fail(e.line, "'" + key + "' is not an integer: " + e.value);
  return v;
}

std::vector<double> to_doubles(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) out.push_back(to_double(Entry{item, e.line}, key));
  return out;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  Section::fail(e.line, "'" + key + "' must be true or false");
}

void read(Section& s, const char* key, double& out) {
  if (const auto* e = s.find(key)) out = to_double(*e, key);
}
template <class Int>
void read_int(Section& s, const char* key, Int& out) {
  if (const auto* e = s.find(key)) out = to_integer<Int>(*e, key);
}
void read(Section& s, const char* key, std::string& out) {
  if (const auto* e = s.find(key)) out = e->value;
}

void require_choice(const std::string& value, std::initializer_list<const char*> choices, const std::string& key) {
  for (const char* c : choices) {
    if (value == c) return;
  }
  throw ConfigError("invalid value '" + value + "' for " + key);
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::vector<Section> sections{Section("")};
  std::map<std::string, std::size_t> by_name{{"", 0}};
  Section* current = &sections[0];

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') Section::fail(line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (by_name.count(name)) Section::fail(line_no, "duplicate section [" + name + "]");
      by_name[name] = sections.size();
      sections.emplace_back(name);
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) Section::fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) Section::fail(line_no, "empty key");
    current->add(key, trim(line.substr(eq + 1)), line_no);
  }

  auto section = [&](const std::string& name) -> Section* {
    const auto it = by_name.find(name);
    return it == by_name.end() ? nullptr : &sections[it->second];
  };

  RunConfig c;
  Section& top = sections[0];
  read(top, "horizon", c.market.horizon);
  read(top, "rho", c.market.rho);
  read_int(top, "steps", c.steps);
  read_int(top, "seed", c.seed);
  read_int(top, "threads", c.threads);
  read(top, "output_dir", c.output_dir);
  if (const auto* e = top.find("systems")) c.systems = split_list(e->value);
  for (const auto& s : c.systems) require_choice(s, {"closed", "open", "limiting", "mfg"}, "systems");

  std::size_t n_groups = 0;
  while (section("group." + std::to_string(n_groups + 1))) ++n_groups;
  if (n_groups == 0) throw ConfigError("config needs at least one [group.1] section");
  for (std::size_t k = 0; k < n_groups; ++k) {
    Section& g = *section("group." + std::to_string(k + 1));
    GroupParams p;
    for (const char* key : {"q", "eps"}) {
      if (!g.has(key)) throw ConfigError(std::string("missing '") + key + "' in " + g.where());
    }
    read(g, "sigma", p.sigma);
    read(g, "q", p.q);
    read(g, "eps", p.eps);
    read(g, "c", p.c);
    read(g, "lambda", p.lambda);
    read(g, "rho_k", p.rho_k);
    std::vector<double> gamma_values{0.0}, gamma_breaks;
    if (const auto* e = g.find("gamma")) gamma_values = to_doubles(*e, "gamma");
    if (const auto* e = g.find("gamma_breaks")) gamma_breaks = to_doubles(*e, "gamma_breaks");
    try {
      p.gamma = gamma_breaks.empty() && gamma_values.size() == 1 ? StepFunction(gamma_values[0])
                                                                  : StepFunction(gamma_breaks, gamma_values);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(g.where() + ": " + ex.what());
    }
    if (const auto* e = g.find("n_banks")) p.n_banks = to_integer<std::int64_t>(*e, "n_banks");
    if (const auto* e = g.find("beta")) p.beta = to_double(*e, "beta");
    double x0 = 0.0, x0_sd = 0.0;
    read(g, "x0", x0);
    read(g, "x0_sd", x0_sd);
    c.x0_mean.push_back(x0);
    c.x0_sd.push_back(x0_sd);
    c.market.groups.push_back(std::move(p));
    g.reject_unused();
  }

  if (Section* s = section("sim")) {
    read_int(*s, "paths", c.sim.paths);
    read(*s, "strategy", c.sim.strategy);
    if (const auto* e = s->find("quantiles")) c.sim.quantiles = to_doubles(*e, "quantiles");
    if (const auto* e = s->find("raw")) c.sim.raw = to_bool(*e, "raw");
    s->reject_unused();
  }
  require_choice(c.sim.strategy, {"auto", "closed", "open", "limiting", "mfg"}, "sim.strategy");

  if (Section* s = section("sweep")) {
    read(*s, "axis", c.sweep.axis);
    if (const auto* e = s->find("values")) c.sweep.values = to_doubles(*e, "values");
    read(*s, "expect", c.sweep.expect);
    s->reject_unused();
  }
  require_choice(c.sweep.expect, {"none", "increasing", "decreasing"}, "sweep.expect");

  if (Section* s = section("check")) {
    read(*s, "name", c.check.name);
    if (const auto* e = s->find("n_values")) {
      c.check.n_values.clear();
      for (const auto& item : split_list(e->value)) {
        c.check.n_values.push_back(to_integer<std::int64_t>(Entry{item, e->line}, "n_values"));
      }
    }
    read_int(*s, "samples", c.check.samples);
    s->reject_unused();
  }
  require_choice(c.check.name, {"all", "identity", "bounds", "row_sums", "convergence", "hjb"}, "check.name");

  if (Section* s = section("prob")) {
    read(*s, "level", c.prob.level);
    read(*s, "target", c.prob.target);
    read_int(*s, "group", c.prob.group);
    read_int(*s, "bank", c.prob.bank);
    s->reject_unused();
  }
  require_choice(c.prob.target, {"global", "group", "bank"}, "prob.target");

  top.reject_unused();
  for (const auto& [name, index] : by_name) {
    const bool known = name.empty() || name == "sim" || name == "sweep" || name == "check" || name == "prob" ||
                       (name.rfind("group.", 0) == 0 && section(name) != nullptr &&
                        [&] {
                          const std::string tail = name.substr(6);
                          return !tail.empty() && std::all_of(tail.begin(), tail.end(), ::isdigit) &&
                                 std::stoul(tail) >= 1 && std::stoul(tail) <= n_groups;
                        }());
    if (!known) throw ConfigError("unknown or out-of-sequence section [" + name + "]");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::string render_config(const RunConfig& c) {
  std::ostringstream out;
  out << "horizon = " << format_double(c.market.horizon) << '\n';
  out << "rho = " << format_double(c.market.rho) << '\n';
  out << "steps = " << c.steps << '\n';
  out << "seed = " << c.seed << '\n';
  out << "threads = " << c.threads << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  if (!c.systems.empty()) {
    out << "systems = ";
    for (std::size_t i = 0; i < c.systems.size(); ++i) out << (i ? ", " : "") << c.systems[i];
    out << '\n';
  }
  for (std::size_t k = 0; k < c.market.groups.size(); ++k) {
    const auto& g = c.market.groups[k];
    out << "\n[group." << k + 1 << "]\n";
    out << "sigma = " << format_double(g.sigma) << '\n';
    out << "q = " << format_double(g.q) << '\n';
    out << "eps = " << format_double(g.eps) << '\n';
    out << "c = " << format_double(g.c) << '\n';
    out << "lambda = " << format_double(g.lambda) << '\n';
    out << "rho_k = " << format_double(g.rho_k) << '\n';
    out << "gamma = " << join(g.gamma.values()) << '\n';
    if (!g.gamma.breakpoints().empty()) out << "gamma_breaks = " << join(g.gamma.breakpoints()) << '\n';
    if (g.n_banks) out << "n_banks = " << *g.n_banks << '\n';
    if (g.beta) out << "beta = " << format_double(*g.beta) << '\n';
    out << "x0 = " << format_double(k < c.x0_mean.size() ? c.x0_mean[k] : 0.0) << '\n';
    out << "x0_sd = " << format_double(k < c.x0_sd.size() ? c.x0_sd[k] : 0.0) << '\n';
  }
  out << "\n[sim]\n";
  out << "paths = " << c.sim.paths << '\n';
  out << "strategy = " << c.sim.strategy << '\n';
  out << "quantiles = " << join(c.sim.quantiles) << '\n';
  out << "raw = " << (c.sim.raw ? "true" : "false") << '\n';
  out << "\n[sweep]\n";
  if (!c.sweep.axis.empty()) out << "axis = " << c.sweep.axis << '\n';
  if (!c.sweep.values.empty()) out << "values = " << join(c.sweep.values) << '\n';
  out << "expect = " << c.sweep.expect << '\n';
  out << "\n[check]\n";
  out << "name = " << c.check.name << '\n';
  out << "n_values = ";
  for (std::size_t i = 0; i < c.check.n_values.size(); ++i) out << (i ? ", " : "") << c.check.n_values[i];
  out << '\n';
  out << "samples = " << c.check.samples << '\n';
  out << "\n[prob]\n";
  out << "level = " << format_double(c.prob.level) << '\n';
  out << "target = " << c.prob.target << '\n';
  out << "group = " << c.prob.group << '\n';
  out << "bank = " << c.prob.bank << '\n';
  return out.str();
}

void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.steps) c.steps = *o.steps;
  if (o.paths) c.sim.paths = *o.paths;
  if (o.threads) c.threads = *o.threads;
  if (o.raw) c.sim.raw = true;
}

}  // namespace interbank::cli
