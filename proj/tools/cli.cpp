#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "sdde/atlas.hpp"
#include "sdde/builtin_models.hpp"
#include "sdde/harness.hpp"
#include "sdde/semiflow.hpp"

namespace sdde::cli {

namespace {

struct ModelFlags {
  std::string source;
  std::optional<int> grid;
  std::optional<double> zero_tol;
  std::vector<std::string> params;  // name=value
};

struct OutputFlags {
  std::string path;
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("-m,--model", m.source, "built-in id (ode, eq1, mvw, twodelay) or model definition JSON")->required();
  cmd->add_option("--grid", m.grid, "grid nodes on [-r, 0]")->check(CLI::Range(5, 4097));
  cmd->add_option("--zero-tol", m.zero_tol, "threshold below which a delay counts as zero")->check(CLI::PositiveNumber);
  cmd->add_option("-p,--param", m.params, "model parameter override name=value (repeatable)");
}

void add_output_flag(CLI::App* cmd, OutputFlags& o, const std::string& what) {
  cmd->add_option("-o,--output", o.path, what + " (default: $SDDE_OUTPUT_DIR/<name>, else stdout)");
}

json parse_params(const std::vector<std::string>& items) {
  json out = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::config, "parameter '" + item + "' is not name=value");
    const std::string value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      out[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::config, "parameter value '" + value + "' is not a number");
    }
  }
  return out;
}

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config, path + ": " + e.what());
  }
}

/// Model definition document with the command-line overrides applied.
json model_document(const ModelFlags& m) {
  json doc;
  if (is_builtin(m.source)) {
    doc = {{"builtin", m.source}};
  } else {
    doc = parse_json_file(m.source);
    if (!doc.is_object()) throw Error(ErrorCode::config, m.source + ": model definition must be an object");
  }
  const json overrides = parse_params(m.params);
  if (!overrides.empty()) {
    json params = doc.value("params", json::object());
    params.update(overrides);
    doc["params"] = params;
  }
  if (m.grid) doc["grid"] = *m.grid;
  if (m.zero_tol) doc["zero_tol"] = *m.zero_tol;
  return doc;
}

ModelPtr load(const ModelFlags& m) { return model_from_json(model_document(m)); }

/// Explicit path, else $SDDE_OUTPUT_DIR/name, else empty (stdout).
std::string resolve_output(const OutputFlags& o, const std::string& name) {
  if (!o.path.empty()) return o.path;
  if (const char* dir = std::getenv("SDDE_OUTPUT_DIR"); dir && *dir) {
    return (std::filesystem::path(dir) / name).string();
  }
  return {};
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
      throw Error(ErrorCode::io, "output directory '" + parent.string() + "' does not exist");
    }
    write_file_atomic(path, content);
  }
}

SegmentC1 read_segment(const std::string& path, const Model& model) {
  return segment_from_json(parse_json_file(path), model.grid_ptr());
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

std::vector<SegmentC1> atlas_seeds(const ModelPtr& model, std::uint64_t seed, int count) {
  std::vector<SegmentC1> seeds;
  if (model->witness()) seeds.push_back(*model->witness());
  Rng rng = make_rng(seed, "atlas.seeds");
  for (auto& s : sample_in_U(rng, *model, count, HarnessConfig{}.amplitude, model->W_box())) seeds.push_back(std::move(s));
  return seeds;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::no_convergence:
    case ErrorCode::overlap_no_convergence:
    case ErrorCode::no_chart_for_stratum:
    case ErrorCode::infeasible_rank:
    case ErrorCode::grid_too_coarse:
      return kCheckFailure;
    default:
      return kUsageError;
  }
}

// ---------------------------------------------------------------------------

struct VerifyCmd {
  ModelFlags model;
  OutputFlags output;
  HarnessConfig config;
  std::string format = "text";
};

int do_verify(const VerifyCmd& c, std::ostream& out) {
  const ModelPtr model = load(c.model);
  const std::string builtin = is_builtin(c.model.source) && c.model.params.empty() ? c.model.source : "";
  const VerificationReport report = run_suite(model, c.config, builtin);
  const std::string path = resolve_output(c.output, "verify_" + model->name() + ".json");
  const std::string doc = dump_json(report.to_json());
  if (c.format == "json" && path.empty()) {
    out << doc;
  } else {
    out << report.to_text();
    if (!path.empty()) {
      emit(path, doc, out);
      out << "report written to " << path << "\n";
    }
  }
  return report.passed() ? kSuccess : kCheckFailure;
}

struct AtlasCmd {
  ModelFlags model;
  OutputFlags output;
  std::uint64_t seed = 1;
  int seeds = 6;
};

int do_atlas(const AtlasCmd& c, std::ostream& out, std::ostream& err) {
  const ModelPtr model = load(c.model);
  const Atlas atlas = build_atlas(model, atlas_seeds(model, c.seed, c.seeds));
  const std::string path = resolve_output(c.output, "atlas_" + model->name() + ".json");
  emit(path, dump_json(atlas.manifest()), out);
  std::ostream& log = path.empty() ? err : out;
  log << "atlas for " << model->name() << ": " << atlas.size() << " strata";
  for (const auto& J : atlas.strata()) {
    log << ' ' << J.to_string();
    if (atlas.stratum_info().at(J).near_boundary) log << "(near boundary)";
  }
  log << "\n";
  return kSuccess;
}

struct LiftCmd {
  ModelFlags model;
  OutputFlags output;
  std::string input;
};

int do_lift(const LiftCmd& c, std::ostream& out, std::ostream& err) {
  const ModelPtr model = load(c.model);
  const SegmentC1 phi = read_segment(c.input, *model);
  const auto J = model->membership(phi);
  if (!J) throw Error(ErrorCode::outside_W, "input segment is not in U");
  const SegmentC1 lifted = lift_to_manifold(*model, phi);
  const double residual = model->on_manifold_residual(lifted);
  const std::string path = resolve_output(c.output, "lifted.json");
  emit(path, dump_json(segment_to_json(lifted)), out);
  std::ostream& log = path.empty() ? err : out;
  log << "stratum " << J->to_string() << "\nresidual " << sci(residual) << "\n";
  return residual <= 1e-10 ? kSuccess : kCheckFailure;
}

struct ChartCmd {
  ModelFlags model;
  OutputFlags output;
  std::string input;
  bool invert = false;
  bool lift = false;
  SolverSettings solver;
};

int do_chart(const ChartCmd& c, std::ostream& out, std::ostream& err) {
  const ModelPtr model = load(c.model);
  SegmentC1 seg = read_segment(c.input, *model);
  const auto J = model->membership(seg);
  if (!J) throw Error(ErrorCode::outside_W, "input segment is not in U");
  std::vector<SegmentC1> seeds{seg};
  if (model->witness()) seeds.push_back(*model->witness());
  AtlasOptions options;
  options.solver = c.solver;
  const Atlas atlas = build_atlas(model, seeds, options);

  json doc;
  doc["model"] = model->name();
  doc["stratum"] = J->to_string();
  std::ostream& log = resolve_output(c.output, "chart.json").empty() ? err : out;
  if (c.invert) {
    require_in_X0(seg);
    const ChartSolve s = atlas.invert(*J, seg);
    doc["mode"] = "invert";
    doc["phi"] = segment_to_json(s.phi);
    doc["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
    doc["iterations"] = s.iterations;
    doc["residual"] = s.residual;
    doc["on_manifold_residual"] = model->on_manifold_residual(s.phi);
    log << "inverse in " << s.iterations << " iterations, residual " << sci(s.residual) << "\n";
  } else {
    if (c.lift) seg = lift_to_manifold(*model, seg);
    const double residual = model->on_manifold_residual(seg);
    if (residual > 1e-8) {
      throw Error(ErrorCode::invalid_argument, "input is not on X_f (residual " + sci(residual) + "); pass --lift");
    }
    const ChartImage img = atlas.chart_for(seg);
    const ChartSolve back = atlas.invert(img.J, img.image);
    doc["mode"] = "project";
    doc["chart"] = img.is_k ? "projection" : "frame";
    doc["image"] = segment_to_json(img.image);
    doc["round_trip"] = norm_c1(back.phi - seg);
    log << "image in X_0 for stratum " << img.J.to_string() << ", round trip " << sci(norm_c1(back.phi - seg)) << "\n";
  }
  emit(resolve_output(c.output, "chart.json"), dump_json(doc), out);
  return kSuccess;
}

struct IntegrateCmd {
  ModelFlags model;
  OutputFlags output;
  std::string input;
  bool lift = false;
  IntegrateOptions options;
  int stride = 1;
};

int do_integrate(const IntegrateCmd& c, std::ostream& out, std::ostream& err) {
  const ModelPtr model = load(c.model);
  SegmentC1 phi0 = [&] {
    if (!c.input.empty()) return read_segment(c.input, *model);
    if (!model->witness()) throw Error(ErrorCode::config, "model has no witness segment; pass --input");
    return lift_to_manifold(*model, *model->witness());
  }();
  if (c.lift) phi0 = lift_to_manifold(*model, phi0);
  const Trajectory traj = integrate(model, phi0, c.options);
  std::ostringstream csv;
  traj.write_csv(csv, c.stride);
  const std::string path = resolve_output(c.output, "trajectory_" + model->name() + ".csv");
  emit(path, csv.str(), out);

  double worst = 0.0;
  for (const auto& d : traj.diagnostics()) worst = std::max(worst, d.midpoint_residual);
  std::ostream& log = path.empty() ? err : out;
  log << "integrated " << model->name() << " to t = " << traj.t_end() << " in " << traj.diagnostics().size()
      << " steps, max residual " << sci(worst) << "\n";
  if (traj.truncated()) {
    log << "truncated: " << traj.truncation_reason() << "\n";
    return kCheckFailure;
  }
  return kSuccess;
}

struct ExportCmd {
  ModelFlags model;
  OutputFlags output;
  std::string kind = "model";
  std::string input;
};

int do_export(const ExportCmd& c, std::ostream& out) {
  const ModelPtr model = load(c.model);
  std::string content, name;
  if (c.kind == "model") {
    json doc = model_document(c.model);
    if (doc.contains("builtin")) {
      for (const auto& info : builtin_registry()) {
        if (info.id != doc["builtin"]) continue;
        json params = info.defaults;
        params.update(doc.value("params", json::object()));
        doc["params"] = params;
      }
    }
    doc["grid"] = model->grid_ptr()->size();
    doc["zero_tol"] = model->zero_tol();
    content = dump_json(doc);
    name = model->name() + "_model.json";
  } else if (c.kind == "witness") {
    if (!model->witness()) throw Error(ErrorCode::config, "model has no witness segment");
    content = dump_json(segment_to_json(lift_to_manifold(*model, *model->witness())));
    name = model->name() + "_witness.json";
  } else {  // csv
    const SegmentC1 seg = c.input.empty() ? lift_to_manifold(*model, model->witness().value())
                                          : read_segment(c.input, *model);
    std::ostringstream s;
    s.precision(17);
    write_segment_csv(s, seg);
    content = s.str();
    name = model->name() + "_segment.csv";
  }
  emit(resolve_output(c.output, name), content, out);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Charts, atlases and integration for state-dependent delay equations", "sdde"};
  app.require_subcommand(1, 1);
  // -h is reserved for the integrator step size
  app.set_help_flag("--help", "print this help message and exit");
  app.set_help_all_flag("--help-all", "expand help for every subcommand");

  VerifyCmd verify;
  auto* v = app.add_subcommand("verify", "run the invariant suite and write a verification report");
  add_model_flags(v, verify.model);
  add_output_flag(v, verify.output, "JSON report path");
  v->add_option("-s,--seed", verify.config.seed, "RNG seed");
  v->add_option("--segments", verify.config.segments, "random segments per check")->check(CLI::PositiveNumber);
  v->add_option("--pairs", verify.config.pairs, "random (w, x) pairs per check")->check(CLI::PositiveNumber);
  v->add_option("--seeds", verify.config.seeds, "random atlas seeds")->check(CLI::NonNegativeNumber);
  v->add_option("-j,--jobs", verify.config.jobs, "checks run concurrently")->check(CLI::PositiveNumber);
  v->add_option("--format", verify.format, "stdout format when no output path is set")
      ->check(CLI::IsMember({"text", "json"}));

  AtlasCmd atlas;
  auto* a = app.add_subcommand("atlas", "build the atlas from the witness and random seeds and write its manifest");
  add_model_flags(a, atlas.model);
  add_output_flag(a, atlas.output, "manifest path");
  a->add_option("-s,--seed", atlas.seed, "RNG seed");
  a->add_option("--seeds", atlas.seeds, "random seeds besides the witness")->check(CLI::NonNegativeNumber);

  LiftCmd lift;
  auto* l = app.add_subcommand("lift", "lift a segment of U onto X_f");
  add_model_flags(l, lift.model);
  add_output_flag(l, lift.output, "lifted segment path");
  l->add_option("-i,--input", lift.input, "segment JSON")->required()->check(CLI::ExistingFile);

  ChartCmd chart;
  auto* c = app.add_subcommand("chart", "map a point of X_f into its chart, or invert a chart at a point of X_0");
  add_model_flags(c, chart.model);
  add_output_flag(c, chart.output, "result path");
  c->add_option("-i,--input", chart.input, "segment JSON")->required()->check(CLI::ExistingFile);
  c->add_flag("--invert", chart.invert, "treat the input as a point of X_0 and solve for its preimage");
  c->add_flag("--lift", chart.lift, "lift the input onto X_f first");
  c->add_option("--tol", chart.solver.tol, "fixed-point tolerance")->check(CLI::PositiveNumber);
  c->add_option("--max-iter", chart.solver.max_iterations, "fixed-point iteration limit")->check(CLI::PositiveNumber);

  IntegrateCmd integ;
  auto* i = app.add_subcommand("integrate", "integrate x'(t) = f(x_t) and write the trajectory CSV");
  add_model_flags(i, integ.model);
  add_output_flag(i, integ.output, "CSV path");
  i->add_option("-i,--input", integ.input, "initial segment JSON (default: lifted witness)")->check(CLI::ExistingFile);
  i->add_flag("--lift", integ.lift, "lift the initial segment onto X_f first");
  i->add_option("--h", integ.options.h, "step size (at most r/4)")->check(CLI::PositiveNumber);
  i->add_option("--T", integ.options.T, "horizon")->check(CLI::NonNegativeNumber);
  i->add_option("--stride", integ.stride, "write every stride-th step")->check(CLI::PositiveNumber);
  i->add_option("--overlap-tol", integ.options.overlap_tol, "within-step iteration tolerance")
      ->check(CLI::PositiveNumber);

  ExportCmd exp;
  auto* e = app.add_subcommand("export", "export the model definition, its witness, or a segment as CSV");
  add_model_flags(e, exp.model);
  add_output_flag(e, exp.output, "output path");
  e->add_option("-k,--kind", exp.kind, "model | witness | csv")->check(CLI::IsMember({"model", "witness", "csv"}));
  e->add_option("-i,--input", exp.input, "segment JSON for --kind csv")->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsageError;
  }

  try {
    if (v->parsed()) return do_verify(verify, out);
    if (a->parsed()) return do_atlas(atlas, out, err);
    if (l->parsed()) return do_lift(lift, out, err);
    if (c->parsed()) return do_chart(chart, out, err);
    if (i->parsed()) return do_integrate(integ, out, err);
    if (e->parsed()) return do_export(exp, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code_for(ex);
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace sdde::cli
