// Command line front end: scenario sweeps, jump reports, regularization
// traces, the property-suite verifier and the builtin family listing.
//
// Exit codes: 0 success, 2 validation/parse problems, 3 numerical failures
// (partial output is still written for sweeps).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "qfigeo/discontinuity.hpp"
#include "qfigeo/scenario.hpp"
#include "qfigeo/selfcheck.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace qfigeo;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

json matrix_to_json(const RealMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const RealVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

RealVector parse_coords_arg(const std::string& text, const char* what) {
  std::vector<double> vals;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(Errc::validation_error, std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (vals.empty()) throw Error(Errc::validation_error, std::string(what) + ": empty list");
  RealVector out(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& out_path,
            const std::string& format, int threads) {
  const Scenario scenario = Scenario::load(scenario_path);
  const SweepResult result = run_scenario(scenario, threads);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(Errc::validation_error, "cannot open output file " + out_path);
  if (format == "csv") {
    write_csv(result, out);
  } else if (format == "json") {
    write_json(result, scenario, out);
  } else {
    throw Error(Errc::validation_error, "format must be csv or json");
  }
  out.close();

  if (result.n_errors > 0) {
    std::cerr << result.n_errors << " of " << result.rows.size()
              << " records failed numerically; rows are flagged in " << out_path << "\n";
    return kExitNumerical;
  }
  std::cout << "wrote " << result.rows.size() << " records to " << out_path << "\n";
  return kExitOk;
}

int cmd_jump(const std::string& family_name, const std::string& at, const std::string& dir,
             bool confirm) {
  const StateFamily fam = builtin_family(family_name);
  const RealVector point = parse_coords_arg(at, "--at");
  const DirectionVector u = DirectionVector::unit(parse_coords_arg(dir, "--dir"));

  const DerivativeBundle bundle = evaluate_bundle(fam, point);
  JumpReport report = jump(bundle, u);
  const MetricMatrix hc = continuous_qfi(bundle);

  json doc;
  doc["family"] = fam.name();
  doc["point"] = vector_to_json(point);
  doc["direction"] = vector_to_json(report.direction);
  doc["rank"] = bundle.spectrum.rank();
  doc["delta"] = matrix_to_json(report.delta.values);
  doc["hc"] = matrix_to_json(hc.values);
  json contributing = json::array();
  for (const auto& c : report.contributing) {
    contributing.push_back({{"branch", c.branch_index}, {"curvature", c.curvature}});
  }
  doc["contributing"] = std::move(contributing);
  json excluded = json::array();
  for (const auto& c : report.excluded) {
    excluded.push_back({{"branch", c.branch_index}, {"curvature", c.curvature}});
  }
  doc["excluded"] = std::move(excluded);

  if (confirm) {
    const DirectionalLimit limit = directional_limit(fam, point, u);
    doc["confirmation"] = {{"limit", matrix_to_json(limit.limit)},
                           {"residual", limit.residual}};
    report.numeric_confirmation_residual = limit.residual;
  }
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_regularize(const std::string& family_name, const std::string& at,
                   const std::string& schedule_text) {
  const StateFamily fam = builtin_family(family_name);
  const RealVector point = parse_coords_arg(at, "--at");
  const RealVector nus = parse_coords_arg(schedule_text, "--schedule");
  std::vector<double> schedule(nus.data(), nus.data() + nus.size());

  const DensityMatrix rho0 = DensityMatrix::from_matrix(
      ComplexMatrix::Identity(fam.dim(), fam.dim()) / static_cast<double>(fam.dim()));
  const RegularizationTrace trace = regularization_limit(fam, point, rho0, schedule);

  json doc;
  doc["family"] = fam.name();
  doc["point"] = vector_to_json(point);
  doc["rho0"] = trace.rho0_description;
  doc["schedule"] = trace.nu_schedule;
  json hs = json::array();
  for (const auto& h : trace.qfi_values) hs.push_back(matrix_to_json(h.values));
  doc["H"] = std::move(hs);
  doc["min_eigenvalues"] = trace.min_eigenvalues;
  doc["limit"] = matrix_to_json(trace.extrapolated_limit);
  doc["limit_plus_2_hessian_sum"] = matrix_to_json(trace.hc_prediction);
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_verify(std::uint64_t seed, int trials) {
  const auto results = run_property_suite(seed, trials);
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": worst residual "
              << r.worst_residual << " (tol " << r.tolerance << ")";
    if (!r.detail.empty()) std::cout << " at " << r.detail;
    std::cout << "\n";
  }
  std::cout << (all_pass ? "all properties passed\n" : "property failures detected\n");
  return all_pass ? kExitOk : kExitNumerical;
}

int cmd_list_families() {
  for (const auto& name : builtin_family_names()) {
    if (name.find("dim,seed") != std::string::npos) {
      std::cout << name << "  (seeded deterministic full-rank family, dim 2..64)\n";
      continue;
    }
    const StateFamily fam = builtin_family(name);
    std::cout << name << "  dim=" << fam.dim() << " params=" << fam.n_params() << " domain=[";
    for (int i = 0; i < fam.n_params(); ++i) {
      if (i) std::cout << " x ";
      std::cout << fam.domain().lo[i] << ".." << fam.domain().hi[i];
    }
    std::cout << "]" << (fam.smoothness().c2_everywhere ? "" : "  (C2 violated at listed points)")
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum Fisher information / Bures metric toolkit"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, format = "csv";
  int threads = 1;
  auto* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_path, "output file")->required();
  run->add_option("--format", format, "csv or json");
  run->add_option("--threads", threads, "worker threads");

  std::string jump_family, jump_at, jump_dir;
  bool jump_confirm = false;
  auto* jump_cmd = app.add_subcommand("jump", "directional discontinuity at a point");
  jump_cmd->add_option("family", jump_family, "builtin family")->required();
  jump_cmd->add_option("--at", jump_at, "parameter point, comma separated")->required();
  jump_cmd->add_option("--dir", jump_dir, "direction, comma separated")->required();
  jump_cmd->add_flag("--confirm", jump_confirm, "confirm via directional limit");

  std::string reg_family, reg_at, reg_schedule;
  auto* reg_cmd = app.add_subcommand("regularize", "regularization trace at a point");
  reg_cmd->add_option("family", reg_family, "builtin family")->required();
  reg_cmd->add_option("--at", reg_at, "parameter point")->required();
  reg_cmd->add_option("--schedule", reg_schedule, "decreasing nu values")->required();

  std::uint64_t seed = 20240817;
  int trials = 20;
  auto* verify_cmd = app.add_subcommand("verify", "run the property suite");
  verify_cmd->add_option("--seed", seed, "random seed");
  verify_cmd->add_option("--trials", trials, "number of random families");

  auto* list_cmd = app.add_subcommand("list-families", "list builtin families");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_path, format, threads);
    if (jump_cmd->parsed()) return cmd_jump(jump_family, jump_at, jump_dir, jump_confirm);
    if (reg_cmd->parsed()) return cmd_regularize(reg_family, reg_at, reg_schedule);
    if (verify_cmd->parsed()) return cmd_verify(seed, trials);
    if (list_cmd->parsed()) return cmd_list_families();
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.is_validation() ? kExitValidation : kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}
