#include "qfigeo/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace qfigeo {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, int line, const std::string& msg) {
  std::ostringstream os;
  os << source << ":" << line << ": " << msg;
  throw Error(Errc::parse_error, os.str());
}

double parse_double(const std::string& source, int line, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) parse_fail(source, line, "trailing characters in number '" + v + "'");
    return d;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    parse_fail(source, line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& source, int line, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) parse_fail(source, line, "trailing characters in integer '" + v + "'");
    return i;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    parse_fail(source, line, "expected an integer, got '" + v + "'");
  }
}

RealVector parse_coords(const std::string& source, int line, const std::string& v) {
  const auto parts = split(v, ',');
  RealVector out(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = parse_double(source, line, parts[i]);
  }
  return out;
}

bool parse_flag(const std::string& source, int line, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  parse_fail(source, line, "expected on/off, got '" + v + "'");
}

struct RawEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

struct RawScenario {
  std::vector<RawEntry> entries;
  std::string source;

  const RawEntry* find(const std::string& section, const std::string& key) const {
    for (const auto& e : entries) {
      if (e.section == section && e.key == key) return &e;
    }
    return nullptr;
  }
  std::vector<const RawEntry*> find_all(const std::string& section, const std::string& key) const {
    std::vector<const RawEntry*> out;
    for (const auto& e : entries) {
      if (e.section == section && e.key == key) out.push_back(&e);
    }
    return out;
  }
  bool has_section(const std::string& section) const {
    for (const auto& e : entries) {
      if (e.section == section) return true;
    }
    return false;
  }
};

RawScenario tokenize(std::istream& in, const std::string& source) {
  static const std::vector<std::string> known_sections = {"family",     "probe", "quantities",
                                                          "fd",         "inline", "tolerances"};
  RawScenario raw;
  raw.source = source;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(source, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : known_sections) known = known || s == section;
      if (!known) parse_fail(source, lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(source, lineno, "expected key = value");
    if (section.empty()) parse_fail(source, lineno, "key outside of any [section]");
    raw.entries.push_back(
        RawEntry{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }
  return raw;
}

StateFamily resolve_family(const RawScenario& raw, std::string* label) {
  const RawEntry* name = raw.find("family", "name");
  if (!name) throw Error(Errc::validation_error, raw.source + ": [family] name is required");
  *label = name->value;

  StateFamily* built = nullptr;
  std::optional<StateFamily> fam;
  if (name->value == "inline") {
    const RawEntry* dim = raw.find("family", "dim");
    const RawEntry* params = raw.find("family", "params");
    const RawEntry* lo = raw.find("family", "lo");
    const RawEntry* hi = raw.find("family", "hi");
    if (!dim || !params || !lo || !hi) {
      throw Error(Errc::validation_error,
                  raw.source + ": inline family needs dim, params, lo, hi");
    }
    const auto d = parse_int(raw.source, dim->line, dim->value);
    const auto n = parse_int(raw.source, params->line, params->value);
    ParameterDomain dom;
    dom.lo = parse_coords(raw.source, lo->line, lo->value);
    dom.hi = parse_coords(raw.source, hi->line, hi->value);
    if (dom.lo.size() != n || dom.hi.size() != n) {
      throw Error(Errc::validation_error, raw.source + ": inline domain size mismatch");
    }
    std::vector<std::pair<RealVector, ComplexMatrix>> table;
    for (const RawEntry* at : raw.find_all("inline", "at")) {
      const auto bar = at->value.find('|');
      if (bar == std::string::npos) {
        parse_fail(raw.source, at->line, "inline row needs 'coords | entries'");
      }
      const RealVector coords =
          parse_coords(raw.source, at->line, trim(at->value.substr(0, bar)));
      if (coords.size() != n) parse_fail(raw.source, at->line, "wrong coordinate count");
      std::istringstream entries(at->value.substr(bar + 1));
      ComplexMatrix m(d, d);
      std::string tok;
      Eigen::Index filled = 0;
      while (entries >> tok) {
        if (filled >= d * d) parse_fail(raw.source, at->line, "too many matrix entries");
        const auto pair = split(tok, ',');
        if (pair.size() != 2) parse_fail(raw.source, at->line, "entries are re,im pairs");
        m(filled / d, filled % d) = Complex(parse_double(raw.source, at->line, pair[0]),
                                            parse_double(raw.source, at->line, pair[1]));
        ++filled;
      }
      if (filled != d * d) parse_fail(raw.source, at->line, "too few matrix entries");
      table.emplace_back(coords, std::move(m));
    }
    if (table.empty()) {
      throw Error(Errc::validation_error, raw.source + ": inline family has no [inline] rows");
    }
    fam.emplace(make_table_family("inline", d, static_cast<int>(n), std::move(table), dom));
  } else {
    std::string spec = name->value;
    const RawEntry* dim = raw.find("family", "dim");
    const RawEntry* seed = raw.find("family", "seed");
    if (dim && seed && spec.find('(') == std::string::npos) {
      spec += "(" + dim->value + "," + seed->value + ")";
    }
    fam.emplace(builtin_family(spec));
  }
  (void)built;

  if (const RawEntry* bind = raw.find("family", "bind")) {
    std::vector<std::pair<int, double>> bindings;
    for (const auto& item : split(bind->value, ';')) {
      const auto parts = split(item, ':');
      if (parts.size() != 2) parse_fail(raw.source, bind->line, "bind entries are index:value");
      bindings.emplace_back(static_cast<int>(parse_int(raw.source, bind->line, parts[0])),
                            parse_double(raw.source, bind->line, parts[1]));
    }
    fam.emplace(fix_parameters(*fam, bindings));
  }
  return std::move(*fam);
}

ProbeSpec resolve_probe(const RawScenario& raw, const StateFamily& fam) {
  ProbeSpec probe;
  const int n = fam.n_params();
  const RawEntry* point = raw.find("probe", "point");
  const RawEntry* axis = raw.find("probe", "axis");
  const RawEntry* grid = raw.find("probe", "grid");
  const int modes = (point != nullptr) + (axis != nullptr) + (grid != nullptr);
  if (modes != 1) {
    throw Error(Errc::validation_error,
                raw.source + ": [probe] needs exactly one of point / axis / grid");
  }

  probe.point = RealVector::Zero(n);
  if (const RawEntry* base = raw.find("probe", "base")) {
    probe.point = parse_coords(raw.source, base->line, base->value);
    if (probe.point.size() != n) {
      throw Error(Errc::validation_error, raw.source + ": base coordinate count mismatch");
    }
  }

  auto axis_range = [&](const std::string& text, int line) {
    const auto parts = split(text, ',');
    if (parts.size() != 4) parse_fail(raw.source, line, "range is axis,start,stop,count");
    ProbeSpec::AxisRange r;
    r.axis = static_cast<int>(parse_int(raw.source, line, parts[0]));
    r.start = parse_double(raw.source, line, parts[1]);
    r.stop = parse_double(raw.source, line, parts[2]);
    r.count = static_cast<int>(parse_int(raw.source, line, parts[3]));
    if (r.axis < 0 || r.axis >= n) parse_fail(raw.source, line, "range axis out of bounds");
    if (r.count < 2) parse_fail(raw.source, line, "sweep count must be >= 2");
    return r;
  };

  if (point) {
    probe.kind = ProbeSpec::Kind::single;
    probe.point = parse_coords(raw.source, point->line, point->value);
    if (probe.point.size() != n) {
      throw Error(Errc::validation_error, raw.source + ": probe point coordinate count mismatch");
    }
  } else if (axis) {
    probe.kind = ProbeSpec::Kind::axis;
    const RawEntry* start = raw.find("probe", "start");
    const RawEntry* stop = raw.find("probe", "stop");
    const RawEntry* count = raw.find("probe", "count");
    if (!start || !stop || !count) {
      throw Error(Errc::validation_error, raw.source + ": axis sweep needs start, stop, count");
    }
    std::ostringstream os;
    os << axis->value << "," << start->value << "," << stop->value << "," << count->value;
    probe.axes.push_back(axis_range(os.str(), axis->line));
  } else {
    probe.kind = ProbeSpec::Kind::grid;
    for (const auto& part : split(grid->value, ';')) {
      probe.axes.push_back(axis_range(part, grid->line));
    }
    if (probe.axes.size() != 2 || probe.axes[0].axis == probe.axes[1].axis) {
      throw Error(Errc::validation_error, raw.source + ": grid needs two distinct axes");
    }
  }

  long long total = 1;
  for (const auto& r : probe.axes) total *= r.count;
  if (total > 1000000) {
    throw Error(Errc::validation_error, raw.source + ": grid exceeds 10^6 points");
  }
  return probe;
}

QuantitySelection resolve_quantities(const RawScenario& raw, const StateFamily& fam) {
  QuantitySelection q;
  const int n = fam.n_params();
  for (const auto& e : raw.entries) {
    if (e.section != "quantities") continue;
    if (e.key == "H") q.qfi = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "Hc") q.continuous_qfi = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "truncated") q.truncated = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "hessian_sum") q.hessian_sum = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "sld") q.sld = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "crb") q.crb = parse_flag(raw.source, e.line, e.value);
    else if (e.key == "jump") q.jump_direction = parse_coords(raw.source, e.line, e.value);
    else if (e.key == "fidelity_curve")
      q.fidelity_reference = parse_coords(raw.source, e.line, e.value);
    else if (e.key == "regularization") {
      for (const auto& part : split(e.value, ','))
        q.regularization_schedule.push_back(parse_double(raw.source, e.line, part));
    } else {
      parse_fail(raw.source, e.line, "unknown quantity '" + e.key + "'");
    }
  }
  if (!q.any()) {
    throw Error(Errc::validation_error, raw.source + ": [quantities] selects nothing");
  }
  if (q.jump_direction && q.jump_direction->size() != n) {
    throw Error(Errc::validation_error, raw.source + ": jump direction coordinate count mismatch");
  }
  if (q.fidelity_reference && q.fidelity_reference->size() != n) {
    throw Error(Errc::validation_error, raw.source + ": fidelity reference count mismatch");
  }
  if (!q.regularization_schedule.empty()) {
    double prev = std::numeric_limits<double>::infinity();
    for (double nu : q.regularization_schedule) {
      if (!(nu > 0.0) || !(nu < 1.0) || nu >= prev) {
        throw Error(Errc::validation_error,
                    raw.source + ": regularization schedule must decrease within (0,1)");
      }
      prev = nu;
    }
  }
  return q;
}

}  // namespace

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::validation_error, "cannot open scenario file " + path);
  return parse(in, path);
}

Scenario Scenario::parse(std::istream& in, const std::string& source_name) {
  RawScenario raw = tokenize(in, source_name);
  for (const auto& e : raw.entries) {
    if (e.section == "probe" &&
        !(e.key == "point" || e.key == "axis" || e.key == "start" || e.key == "stop" ||
          e.key == "count" || e.key == "base" || e.key == "grid")) {
      parse_fail(raw.source, e.line, "unknown probe key '" + e.key + "'");
    }
    if (e.section == "fd" && !(e.key == "h" || e.key == "richardson_levels")) {
      parse_fail(raw.source, e.line, "unknown fd key '" + e.key + "'");
    }
    if (e.section == "tolerances" && e.key != "tol_zero") {
      parse_fail(raw.source, e.line, "unknown tolerance key '" + e.key + "'");
    }
  }

  std::string label;
  StateFamily fam = resolve_family(raw, &label);
  ProbeSpec probe = resolve_probe(raw, fam);
  QuantitySelection quantities = resolve_quantities(raw, fam);

  FiniteDifferenceConfig fd;
  if (const RawEntry* h = raw.find("fd", "h")) {
    fd.h = parse_double(raw.source, h->line, h->value);
  }
  if (const RawEntry* rl = raw.find("fd", "richardson_levels")) {
    fd.richardson_levels = static_cast<int>(parse_int(raw.source, rl->line, rl->value));
  }
  fd.validate();

  double tol_zero = kDefaultZeroTol;
  if (const RawEntry* tz = raw.find("tolerances", "tol_zero")) {
    tol_zero = parse_double(raw.source, tz->line, tz->value);
    if (!(tol_zero >= 0.0) || tol_zero > 1e-2) {
      throw Error(Errc::validation_error, raw.source + ": tol_zero out of range");
    }
  }

  return Scenario{std::move(label), std::move(fam), std::move(probe), std::move(quantities),
                  fd, tol_zero};
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.11e", v);
  return buf;
}

namespace {

void matrix_columns(const std::string& prefix, int n, std::vector<std::string>* cols) {
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      cols->push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
}

void push_matrix(const RealMatrix& m, std::vector<Cell>* row) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) row->push_back(Cell::number_of(m(i, j)));
  }
}

std::vector<std::string> result_columns(const Scenario& sc) {
  const int n = sc.family.n_params();
  std::vector<std::string> cols;
  for (int i = 0; i < n; ++i) cols.push_back("eps_" + std::to_string(i));
  cols.push_back("rank");
  const auto& q = sc.quantities;
  if (q.qfi) matrix_columns("H", n, &cols);
  if (q.continuous_qfi) matrix_columns("Hc", n, &cols);
  if (q.truncated) matrix_columns("truncated", n, &cols);
  if (q.hessian_sum) matrix_columns("hessian_sum", n, &cols);
  if (q.sld) {
    for (int i = 0; i < n; ++i) cols.push_back("sld_" + std::to_string(i) + "_norm");
  }
  if (q.crb) {
    matrix_columns("crb", n, &cols);
    cols.push_back("crb_singular");
  }
  if (q.jump_direction) {
    matrix_columns("jump", n, &cols);
    cols.push_back("jump_excluded");
  }
  if (q.fidelity_reference) {
    cols.push_back("fidelity");
    cols.push_back("bures_dsq");
  }
  if (!q.regularization_schedule.empty()) matrix_columns("reg_limit", n, &cols);
  cols.push_back("flag");
  return cols;
}

std::vector<Cell> evaluate_record(const Scenario& sc, const RealVector& pt,
                                  std::size_t total_columns) {
  const int n = sc.family.n_params();
  const auto& q = sc.quantities;
  std::vector<Cell> row;
  for (int i = 0; i < n; ++i) row.push_back(Cell::number_of(pt[i]));
  try {
    const DerivativeBundle bundle =
        evaluate_bundle(sc.family, pt, sc.fd, sc.tol_zero, q.needs_second());
    row.push_back(Cell::integer_of(bundle.spectrum.rank()));
    if (q.qfi) push_matrix(qfi_spectral(bundle).values, &row);
    if (q.continuous_qfi) push_matrix(continuous_qfi(bundle).values, &row);
    if (q.truncated) push_matrix(truncated_metric(bundle).values, &row);
    if (q.hessian_sum) push_matrix(kernel_hessian_sum(bundle).values, &row);
    if (q.sld) {
      const SldSet set = sld(bundle);
      for (const auto& op : set.operators) row.push_back(Cell::number_of(op.norm()));
    }
    if (q.crb) {
      const CramerRaoBound bound = cramer_rao_lower_bound(qfi_spectral(bundle));
      push_matrix(bound.covariance_bound, &row);
      row.push_back(Cell::integer_of(bound.singular ? 1 : 0));
    }
    if (q.jump_direction) {
      const JumpReport report = jump(bundle, DirectionVector::unit(*q.jump_direction));
      push_matrix(report.delta.values, &row);
      row.push_back(Cell::integer_of(static_cast<long long>(report.excluded.size())));
    }
    if (q.fidelity_reference) {
      const DensityMatrix ref = sc.family.evaluate(*q.fidelity_reference);
      const double f = uhlmann_fidelity(ref, bundle.rho);
      row.push_back(Cell::number_of(f));
      row.push_back(Cell::number_of(2.0 * (1.0 - std::sqrt(f))));
    }
    if (!q.regularization_schedule.empty()) {
      const DensityMatrix rho0 = DensityMatrix::from_matrix(
          ComplexMatrix::Identity(sc.family.dim(), sc.family.dim()) /
          static_cast<double>(sc.family.dim()));
      const RegularizationTrace trace = regularization_limit(
          sc.family, pt, rho0, q.regularization_schedule, sc.fd, sc.tol_zero);
      push_matrix(trace.extrapolated_limit, &row);
    }
    row.push_back(Cell::text_of("ok"));
  } catch (const Error& err) {
    while (row.size() + 1 < total_columns) {
      row.push_back(Cell::number_of(std::nan("")));
    }
    row.push_back(Cell::text_of(errc_name(err.code())));
  }
  return row;
}

std::vector<RealVector> enumerate_points(const Scenario& sc) {
  const auto& probe = sc.probe;
  std::vector<RealVector> pts;
  auto ticks = [](const ProbeSpec::AxisRange& r) {
    std::vector<double> t(r.count);
    for (int i = 0; i < r.count; ++i) {
      t[i] = r.start + static_cast<double>(i) * (r.stop - r.start) / (r.count - 1);
    }
    return t;
  };
  switch (probe.kind) {
    case ProbeSpec::Kind::single:
      pts.push_back(probe.point);
      break;
    case ProbeSpec::Kind::axis: {
      for (double t : ticks(probe.axes[0])) {
        RealVector p = probe.point;
        p[probe.axes[0].axis] = t;
        pts.push_back(std::move(p));
      }
      break;
    }
    case ProbeSpec::Kind::grid: {
      const auto t0 = ticks(probe.axes[0]);
      const auto t1 = ticks(probe.axes[1]);
      for (double a : t0) {
        for (double b : t1) {
          RealVector p = probe.point;
          p[probe.axes[0].axis] = a;
          p[probe.axes[1].axis] = b;
          pts.push_back(std::move(p));
        }
      }
      break;
    }
  }
  return pts;
}

// Single-point regularization runs emit the whole trace, one row per nu plus
// the extrapolated nu = 0 row.
SweepResult run_regularization_trace(const Scenario& sc) {
  const int n = sc.family.n_params();
  SweepResult result;
  for (int i = 0; i < n; ++i) result.columns.push_back("eps_" + std::to_string(i));
  result.columns.push_back("nu");
  result.columns.push_back("rank");
  matrix_columns("H", n, &result.columns);
  result.columns.push_back("flag");

  const RealVector& pt = sc.probe.point;
  try {
    const DensityMatrix rho0 = DensityMatrix::from_matrix(
        ComplexMatrix::Identity(sc.family.dim(), sc.family.dim()) /
        static_cast<double>(sc.family.dim()));
    const RegularizationTrace trace = regularization_limit(
        sc.family, pt, rho0, sc.quantities.regularization_schedule, sc.fd, sc.tol_zero);
    for (std::size_t s = 0; s < trace.nu_schedule.size(); ++s) {
      std::vector<Cell> row;
      for (int i = 0; i < n; ++i) row.push_back(Cell::number_of(pt[i]));
      row.push_back(Cell::number_of(trace.nu_schedule[s]));
      row.push_back(Cell::integer_of(sc.family.dim()));
      push_matrix(trace.qfi_values[s].values, &row);
      row.push_back(Cell::text_of("ok"));
      result.rows.push_back(std::move(row));
    }
    std::vector<Cell> limit_row;
    for (int i = 0; i < n; ++i) limit_row.push_back(Cell::number_of(pt[i]));
    limit_row.push_back(Cell::number_of(0.0));
    const DerivativeBundle base = evaluate_bundle(sc.family, pt, sc.fd, sc.tol_zero, false);
    limit_row.push_back(Cell::integer_of(base.spectrum.rank()));
    push_matrix(trace.extrapolated_limit, &limit_row);
    limit_row.push_back(Cell::text_of("extrapolated"));
    result.rows.push_back(std::move(limit_row));
  } catch (const Error& err) {
    std::vector<Cell> row;
    for (int i = 0; i < n; ++i) row.push_back(Cell::number_of(pt[i]));
    while (row.size() + 1 < result.columns.size()) row.push_back(Cell::number_of(std::nan("")));
    row.push_back(Cell::text_of(errc_name(err.code())));
    result.rows.push_back(std::move(row));
    result.n_errors = 1;
  }
  return result;
}

}  // namespace

SweepResult run_scenario(const Scenario& sc, int threads) {
  if (threads < 1) throw Error(Errc::validation_error, "thread count must be >= 1");
  if (sc.probe.kind == ProbeSpec::Kind::single &&
      !sc.quantities.regularization_schedule.empty()) {
    return run_regularization_trace(sc);
  }

  SweepResult result;
  result.columns = result_columns(sc);
  const std::vector<RealVector> points = enumerate_points(sc);
  result.rows.resize(points.size());

  const std::size_t total = result.columns.size();
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      result.rows[i] = evaluate_record(sc, points[i], total);
    }
  };

  const std::size_t hw = static_cast<std::size_t>(std::max(1, threads));
  if (hw == 1 || points.size() < 2 * hw) {
    worker(0, points.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (points.size() + hw - 1) / hw;
    for (std::size_t t = 0; t < hw; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(points.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& row : result.rows) {
    if (!row.empty() && row.back().kind == Cell::Kind::text && row.back().text != "ok" &&
        row.back().text != "extrapolated") {
      ++result.n_errors;
    }
  }
  return result;
}

namespace {

void write_cell_csv(const Cell& cell, std::ostream& out) {
  switch (cell.kind) {
    case Cell::Kind::number: out << format_number(cell.num); break;
    case Cell::Kind::integer: out << cell.integer; break;
    case Cell::Kind::text: out << cell.text; break;
  }
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

void write_cell_json(const Cell& cell, std::ostream& out) {
  switch (cell.kind) {
    case Cell::Kind::number:
      if (std::isnan(cell.num)) {
        out << "null";
      } else {
        out << format_number(cell.num);
      }
      break;
    case Cell::Kind::integer: out << cell.integer; break;
    case Cell::Kind::text: out << '"' << json_escape(cell.text) << '"'; break;
  }
}

}  // namespace

void write_csv(const SweepResult& result, std::ostream& out) {
  for (std::size_t c = 0; c < result.columns.size(); ++c) {
    if (c) out << ',';
    out << result.columns[c];
  }
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      write_cell_csv(row[c], out);
    }
    out << '\n';
  }
}

void write_json(const SweepResult& result, const Scenario& scenario, std::ostream& out) {
  out << "{\n  \"family\": \"" << json_escape(scenario.family_label) << "\",\n";
  out << "  \"n_params\": " << scenario.family.n_params() << ",\n";
  out << "  \"columns\": [";
  for (std::size_t c = 0; c < result.columns.size(); ++c) {
    if (c) out << ", ";
    out << '"' << json_escape(result.columns[c]) << '"';
  }
  out << "],\n  \"rows\": [\n";
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    out << "    [";
    for (std::size_t c = 0; c < result.rows[r].size(); ++c) {
      if (c) out << ", ";
      write_cell_json(result.rows[r][c], out);
    }
    out << (r + 1 < result.rows.size() ? "],\n" : "]\n");
  }
  out << "  ]\n}\n";
}

}  // namespace qfigeo
