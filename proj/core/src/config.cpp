#include "eipass/config.hpp"

#include "eipass/csv.hpp"
#include "eipass/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace eipass {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

double to_double(std::string_view tok, int line, std::string_view field) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    fail(line, "field " + std::string(field) + ": '" + std::string(tok) + "' is not a number");
  return v;
}

long to_integer(std::string_view tok, int line, std::string_view field) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    fail(line, "field " + std::string(field) + ": '" + std::string(tok) + "' is not an integer");
  return v;
}

bool to_bool(std::string_view tok, int line, std::string_view field) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  fail(line, "field " + std::string(field) + ": expected true or false");
}

std::optional<double> optional_double(std::string_view tok, int line, std::string_view field,
                                      std::string_view placeholder) {
  if (tok == placeholder) return std::nullopt;
  return to_double(tok, line, field);
}

// "-" stands for a constant the machine kind does not use
double dashed_double(std::string_view tok, int line, std::string_view field, bool allowed) {
  if (tok == "-") {
    if (!allowed) fail(line, "field " + std::string(field) + " is required for this machine kind");
    return 0.0;
  }
  return to_double(tok, line, field);
}

void require_positive(double v, int line, std::string_view field) {
  if (!(v > 0.0)) fail(line, "field " + std::string(field) + " must be > 0");
}

LineParams parse_line_row(const std::vector<std::string_view>& tok, int line) {
  if (tok.size() != 5) fail(line, "line rows need 5 fields: from to g b c");
  LineParams p;
  const long from = to_integer(tok[0], line, "from");
  const long to = to_integer(tok[1], line, "to");
  if (from < 1 || to < 1) fail(line, "bus numbers start at 1");
  p.from_bus = static_cast<std::size_t>(from - 1);
  p.to_bus = static_cast<std::size_t>(to - 1);
  p.g = to_double(tok[2], line, "g");
  p.b = to_double(tok[3], line, "b");
  p.c = to_double(tok[4], line, "c");
  if (p.from_bus == p.to_bus) fail(line, "from and to must differ");
  if (p.g < 0.0) fail(line, "field g must be >= 0");
  if (p.b > 0.0) fail(line, "field b must be <= 0");
  if (p.c < 0.0) fail(line, "field c must be >= 0");
  return p;
}

MachineSpec parse_machine_row(const std::vector<std::string_view>& tok, int line) {
  if (tok.size() != 10) fail(line, "machine rows need 10 fields: bus kind M D X Xprime tau_d tau_q V_fd P_m");
  MachineSpec m;
  const long bus = to_integer(tok[0], line, "bus");
  if (bus < 1) fail(line, "bus numbers start at 1");
  m.bus = static_cast<std::size_t>(bus - 1);
  try {
    m.kind = machine_kind_from_string(tok[1]);
  } catch (const ValidationError& e) {
    fail(line, e.what());
  }
  const bool two_axis = m.kind == MachineKind::TwoAxis;
  m.M = dashed_double(tok[2], line, "M", m.kind == MachineKind::Droop);
  m.D = to_double(tok[3], line, "D");
  m.X = to_double(tok[4], line, "X");
  m.Xprime = dashed_double(tok[5], line, "Xprime", !two_axis);
  m.tau_d = dashed_double(tok[6], line, "tau_d", !two_axis);
  m.tau_q = dashed_double(tok[7], line, "tau_q", !two_axis);
  m.V_fd = optional_double(tok[8], line, "V_fd", "auto");
  m.P_m = optional_double(tok[9], line, "P_m", "auto");

  if (m.kind != MachineKind::Droop) require_positive(m.M, line, "M");
  require_positive(m.D, line, "D");
  require_positive(m.X, line, "X");
  if (two_axis) {
    require_positive(m.Xprime, line, "Xprime");
    require_positive(m.tau_d, line, "tau_d");
    require_positive(m.tau_q, line, "tau_q");
    if (m.Xprime > m.X) fail(line, "field Xprime must not exceed X");
  }
  if (m.V_fd) require_positive(*m.V_fd, line, "V_fd");
  if (!m.V_fd && !two_axis) fail(line, "V_fd = auto is only supported for two_axis machines");
  return m;
}

}  // namespace

NetworkSpec parse_spec_text(std::string_view text) {
  NetworkSpec spec;
  std::string section;
  bool have_buses = false;
  bool seen_machines = false;
  std::map<std::string, int> seen_sections;
  int line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto content = trim(raw);
    if (content.empty()) continue;

    if (content.front() == '[') {
      if (content.back() != ']') fail(line_no, "unterminated section header");
      section = std::string(trim(content.substr(1, content.size() - 2)));
      static const char* known[] = {"system", "buses", "lines", "machines", "sweep", "solver"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        fail(line_no, "unknown section [" + section + "]");
      if (seen_sections[section]++ > 0) fail(line_no, "duplicate section [" + section + "]");
      continue;
    }
    if (section.empty()) fail(line_no, "content before the first section header");

    if (section == "lines") {
      spec.lines.push_back(parse_line_row(split_ws(content), line_no));
      continue;
    }
    if (section == "machines") {
      spec.machines.push_back(parse_machine_row(split_ws(content), line_no));
      seen_machines = true;
      continue;
    }

    const auto eq = content.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const auto key = std::string(trim(content.substr(0, eq)));
    const auto value = trim(content.substr(eq + 1));
    if (value.empty()) fail(line_no, "missing value for " + key);

    if (section == "system" && key == "omega0") {
      spec.omega0 = to_double(value, line_no, key);
      require_positive(spec.omega0, line_no, key);
    } else if (section == "buses" && key == "count") {
      const long count = to_integer(value, line_no, key);
      if (count < 1) fail(line_no, "field count must be >= 1");
      spec.bus_count = static_cast<std::size_t>(count);
      have_buses = true;
    } else if (section == "sweep" && key == "range") {
      const auto tok = split_ws(value);
      if (tok.size() != 2) fail(line_no, "range needs two numbers");
      spec.sweep.range_min = to_double(tok[0], line_no, "range");
      spec.sweep.range_max = to_double(tok[1], line_no, "range");
      if (!(spec.sweep.range_max > spec.sweep.range_min)) fail(line_no, "range must be increasing");
    } else if (section == "sweep" && key == "resolution") {
      const long r = to_integer(value, line_no, key);
      if (r < 1) fail(line_no, "field resolution must be >= 1");
      spec.sweep.resolution = static_cast<int>(r);
    } else if (section == "sweep" && key == "lossless") {
      spec.sweep.lossless = to_bool(value, line_no, key);
    } else if (section == "sweep" && key == "continuation") {
      spec.sweep.continuation = to_bool(value, line_no, key);
    } else if (section == "solver" && key == "newton_max_iter") {
      const long v = to_integer(value, line_no, key);
      if (v < 1) fail(line_no, "field newton_max_iter must be >= 1");
      spec.solver.newton_max_iter = static_cast<int>(v);
    } else if (section == "solver" && key == "newton_tol") {
      spec.solver.newton_tol = to_double(value, line_no, key);
      require_positive(spec.solver.newton_tol, line_no, key);
    } else if (section == "solver" && key == "abs_tol") {
      spec.solver.abs_tol = to_double(value, line_no, key);
      require_positive(spec.solver.abs_tol, line_no, key);
    } else if (section == "solver" && key == "rel_tol") {
      spec.solver.rel_tol = to_double(value, line_no, key);
      require_positive(spec.solver.rel_tol, line_no, key);
    } else {
      fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    }
  }

  if (!have_buses) throw ValidationError("schema error: missing [buses] count");
  if (!seen_machines) throw ValidationError("schema error: no [machines] rows");
  for (std::size_t k = 0; k < spec.lines.size(); ++k) {
    const auto& l = spec.lines[k];
    if (l.from_bus >= spec.bus_count || l.to_bus >= spec.bus_count)
      throw ValidationError("line row " + std::to_string(k + 1) + " references a bus beyond count");
  }
  std::vector<bool> taken(spec.bus_count, false);
  for (const auto& m : spec.machines) {
    if (m.bus >= spec.bus_count)
      throw ValidationError("machine at bus " + std::to_string(m.bus + 1) + " beyond bus count");
    if (taken[m.bus])
      throw ValidationError("more than one machine at bus " + std::to_string(m.bus + 1));
    taken[m.bus] = true;
  }
  return spec;
}

NetworkSpec parse_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

std::string serialize_spec(const NetworkSpec& spec) {
  std::ostringstream os;
  auto num = [](double v) { return format_number(v); };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string("auto"); };
  os << "[system]\nomega0 = " << num(spec.omega0) << "\n\n";
  os << "[buses]\ncount = " << spec.bus_count << "\n\n";
  os << "[lines]\n# from to g b c\n";
  for (const auto& l : spec.lines)
    os << l.from_bus + 1 << ' ' << l.to_bus + 1 << ' ' << num(l.g) << ' ' << num(l.b) << ' '
       << num(l.c) << '\n';
  os << "\n[machines]\n# bus kind M D X Xprime tau_d tau_q V_fd P_m\n";
  for (const auto& m : spec.machines) {
    const bool two_axis = m.kind == MachineKind::TwoAxis;
    auto flux = [&](double v) { return two_axis ? num(v) : std::string("-"); };
    const std::string inertia =
        m.kind == MachineKind::Droop && m.M == 0.0 ? std::string("-") : num(m.M);
    os << m.bus + 1 << ' ' << to_string(m.kind) << ' ' << inertia << ' ' << num(m.D) << ' '
       << num(m.X) << ' ' << flux(m.Xprime) << ' ' << flux(m.tau_d) << ' ' << flux(m.tau_q)
       << ' ' << opt(m.V_fd) << ' ' << opt(m.P_m) << '\n';
  }
  os << "\n[sweep]\nrange = " << num(spec.sweep.range_min) << ' ' << num(spec.sweep.range_max)
     << "\nresolution = " << spec.sweep.resolution
     << "\nlossless = " << (spec.sweep.lossless ? "true" : "false")
     << "\ncontinuation = " << (spec.sweep.continuation ? "true" : "false") << "\n\n";
  os << "[solver]\nnewton_max_iter = " << spec.solver.newton_max_iter
     << "\nnewton_tol = " << num(spec.solver.newton_tol)
     << "\nabs_tol = " << num(spec.solver.abs_tol) << "\nrel_tol = " << num(spec.solver.rel_tol)
     << '\n';
  return os.str();
}

BuiltSystem build_system(const NetworkSpec& spec, const BuildOptions& options) {
  auto lines = spec.lines;
  if (options.lossless || spec.sweep.lossless)
    for (auto& l : lines) l.g = 0.0;
  const auto full = build_admittance(spec.bus_count, lines, spec.omega0);

  auto machines_sorted = spec.machines;
  std::sort(machines_sorted.begin(), machines_sorted.end(),
            [](const MachineSpec& a, const MachineSpec& b) { return a.bus < b.bus; });

  BuiltSystem built;
  std::vector<bool> has_machine(spec.bus_count, false);
  std::vector<MachineParams> params;
  for (std::size_t k = 0; k < machines_sorted.size(); ++k) {
    const auto& m = machines_sorted[k];
    has_machine[m.bus] = true;
    built.machine_buses.push_back(m.bus);
    MachineParams p;
    p.kind = m.kind;
    if (options.load_model && m.kind != MachineKind::TwoAxis) p.kind = *options.load_model;
    p.M = m.M;
    p.D = m.D;
    p.X = m.X;
    p.Xprime = m.Xprime;
    p.tau_d = m.tau_d;
    p.tau_q = m.tau_q;
    p.V_fd = m.V_fd.value_or(1.0);
    p.P_m = m.P_m;
    if (!m.V_fd) built.calibrated.push_back(k);
    params.push_back(p);
  }
  for (std::size_t b = 0; b < spec.bus_count; ++b)
    if (!has_machine[b]) built.eliminated_buses.push_back(b);

  auto admittance = built.eliminated_buses.empty()
                        ? full
                        : eliminate_buses(full, built.machine_buses);
  built.newton.max_iter = spec.solver.newton_max_iter;
  built.newton.tol = spec.solver.newton_tol;
  built.integrator.abs_tol = spec.solver.abs_tol;
  built.integrator.rel_tol = spec.solver.rel_tol;

  built.model = make_model(std::move(params), std::move(admittance), spec.omega0);
  if (!built.calibrated.empty())
    built.model = calibrate_field_voltages(built.model, built.calibrated, built.newton);
  return built;
}

}  // namespace eipass
