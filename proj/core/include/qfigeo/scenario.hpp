#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qfigeo/discontinuity.hpp"
#include "qfigeo/family.hpp"
#include "qfigeo/metrology.hpp"

namespace qfigeo {

// Where a run evaluates: one point, an axis sweep, or a 2D grid.
struct ProbeSpec {
  enum class Kind { single, axis, grid };
  struct AxisRange {
    int axis = 0;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
  };

  Kind kind = Kind::single;
  RealVector point;              // single probe, or base coords for sweeps
  std::vector<AxisRange> axes;   // one entry for axis sweeps, two for grids
};

struct QuantitySelection {
  bool qfi = false;
  bool continuous_qfi = false;
  bool truncated = false;
  bool hessian_sum = false;
  bool sld = false;
  bool crb = false;
  std::optional<RealVector> jump_direction;
  std::optional<RealVector> fidelity_reference;
  std::vector<double> regularization_schedule;

  bool needs_second() const {
    return continuous_qfi || hessian_sum || jump_direction.has_value() ||
           !regularization_schedule.empty();
  }
  bool any() const {
    return qfi || continuous_qfi || truncated || hessian_sum || sld || crb ||
           jump_direction || fidelity_reference || !regularization_schedule.empty();
  }
};

// One declarative run: family, probe, quantities, numerics.
struct Scenario {
  std::string family_label;
  StateFamily family;
  ProbeSpec probe;
  QuantitySelection quantities;
  FiniteDifferenceConfig fd;
  double tol_zero = kDefaultZeroTol;

  static Scenario load(const std::string& path);
  static Scenario parse(std::istream& in, const std::string& source_name);
};

// Typed output cell; numbers render with fixed 12-significant-digit
// scientific formatting so identical runs produce identical bytes.
struct Cell {
  enum class Kind { number, integer, text } kind = Kind::number;
  double num = 0.0;
  long long integer = 0;
  std::string text;

  static Cell number_of(double v) { return Cell{Kind::number, v, 0, {}}; }
  static Cell integer_of(long long v) { return Cell{Kind::integer, 0.0, v, {}}; }
  static Cell text_of(std::string v) { return Cell{Kind::text, 0.0, 0, std::move(v)}; }
};

struct SweepResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  int n_errors = 0;
};

std::string format_number(double v);  // %.11e, 12 significant digits

SweepResult run_scenario(const Scenario& scenario, int threads = 1);

void write_csv(const SweepResult& result, std::ostream& out);
void write_json(const SweepResult& result, const Scenario& scenario, std::ostream& out);

}  // namespace qfigeo
