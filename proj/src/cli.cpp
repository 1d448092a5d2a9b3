#include "orthosect/cli.hpp"

#include "orthosect/analysis.hpp"
#include "orthosect/export.hpp"
#include "orthosect/pedal.hpp"
#include "orthosect/scene.hpp"
#include "orthosect/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace orthosect {

using nlohmann::json;

namespace {

json to_json(const Point& p) { return json::array({p.x(), p.y(), p.z()}); }

json to_json(const Tetrahedron& t) {
  json out = json::array();
  for (const auto& v : t.vertices()) out.push_back(to_json(v));
  return out;
}

json to_json(const SphereOrPlane& c) {
  if (c.is_sphere()) return {{"kind", "sphere"}, {"center", to_json(c.sphere().center)}, {"radius", c.sphere().radius}};
  return {{"kind", "plane"}, {"normal", to_json(c.plane().normal)}, {"offset", c.plane().offset}};
}

json to_json(const Eigen::Vector2d& p) { return json::array({p.x(), p.y()}); }

class ReportBuilder {
 public:
  ReportBuilder(const std::string& command, json args) {
    report_["command"] = command;
    report_["args"] = std::move(args);
    report_["results"] = json::object();
    report_["verdicts"] = json::array();
  }

  json& results() { return report_["results"]; }

  void tolerance(const Tolerance& tol) {
    report_["tolerance"] = {{"eps_abs", tol.eps_abs}, {"eps_rel", tol.eps_rel}, {"scene_scale", tol.scene_scale}};
  }

  void verdict(const std::string& name, double value, double limit) {
    report_["verdicts"].push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", value <= limit}});
  }

  void error(const std::string& kind, const std::string& message) {
    report_["error"] = {{"kind", kind}, {"message", message}};
  }

  RunResult finish(int forced_code = -1) {
    bool pass = !report_.contains("error");
    for (const auto& v : report_["verdicts"]) pass = pass && v["pass"].get<bool>();
    report_["pass"] = pass;
    return {report_, forced_code >= 0 ? forced_code : (pass ? kExitOk : kExitVerdict)};
  }

 private:
  json report_ = json::object();
};

std::pair<std::string, std::string> split_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 >= s.size() || s.find(',', comma + 1) != std::string::npos)
    throw GeometryError(ErrorKind::Input, "--pair: expected NAME,NAME, got '" + s + "'");
  return {s.substr(0, comma), s.substr(comma + 1)};
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw GeometryError(ErrorKind::Input, msg);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeometryError(ErrorKind::Input, "cannot write '" + path + "'");
  out << content;
}

json args_json(const std::string& command, const CommandArgs& a) {
  json j = {{"scene", a.scene}};
  if (!a.pair.empty()) j["pair"] = a.pair;
  if (!a.tet.empty()) j["tet"] = a.tet;
  if (!a.out.empty()) j["out"] = a.out;
  if (a.seed) j["seed"] = *a.seed;
  if (command == "verify") j["corollary4"] = a.corollary4;
  if (command == "solve") j["restarts"] = a.restarts;
  if (command == "trace-family") {
    j["start"] = a.start;
    j["steps"] = a.steps;
    j["step"] = a.step;
    j["direction"] = a.direction;
  }
  if (command == "curve") {
    j["face"] = a.face;
    j["grid"] = a.grid;
    if (a.window) j["window"] = *a.window;
    if (a.degree_trials > 0) j["degree_trials"] = a.degree_trials;
  }
  if (command == "sequence") j["n"] = a.n;
  if (command == "export") {
    j["format"] = a.format;
    if (!a.partner.empty()) j["partner"] = a.partner;
    if (a.format == "svg") j["face"] = a.face;
    if (a.format == "obj") j["resolution"] = a.resolution;
  }
  return j;
}

// Acceptance levels of the constructive operations.
constexpr double kSphereCoincidence = 1e-8;
constexpr double kCurveResidual = 1e-6;
constexpr double kFamilyResidual = 1e-9;
constexpr double kSequenceResidual = 1e-6;
constexpr double kCenterCluster = 1e-6;

void cmd_verify(const Scene& scene, const CommandArgs& args, ReportBuilder& rb) {
  const auto [na, nb] = split_pair(args.pair);
  const auto& a = scene.tetrahedron(na);
  const auto& b = scene.tetrahedron(nb);
  const auto tol = scene.tolerance().with_scale(pair_scale(a, b));
  rb.tolerance(tol);

  const auto orth = edge_orthogonality_residuals(a, b);
  std::array<double, 6> gaps{};
  json pairs = json::array();
  for (int e = 0; e < 6; ++e) {
    gaps[static_cast<size_t>(e)] =
        closest_points(a.edge_line(e), b.edge_line(complement(e)), tol).gap / tol.scene_scale;
    pairs.push_back({{"a_edge", edge_label(e)},
                     {"b_edge", edge_label(complement(e))},
                     {"orthogonality", orth[static_cast<size_t>(e)]},
                     {"gap", gaps[static_cast<size_t>(e)]}});
  }
  auto& res = rb.results();
  res["pairings"] = pairs;

  std::array<double, 6> sorted_gaps = gaps;
  std::sort(sorted_gaps.begin(), sorted_gaps.end());
  const double max_orth = *std::max_element(orth.begin(), orth.end());
  const double max_gap = args.corollary4 ? sorted_gaps[4] : sorted_gaps[5];
  const bool orthologic = max_orth <= tol.eps_rel;
  const bool orthosecting = orthologic && max_gap <= tol.eps_rel;
  res["orthologic"] = orthologic;
  res["orthosecting"] = orthosecting;
  res["summary"] = std::string("orthologic: ") + (orthologic ? "yes" : "no") +
                   ", orthosecting: " + (orthosecting ? "yes" : "no");
  rb.verdict("orthogonality", max_orth, tol.eps_rel);
  rb.verdict(args.corollary4 ? "intersection (five smallest gaps)" : "intersection", max_gap, tol.eps_rel);
  if (!orthosecting) return;

  const auto rep = verify_sphere(a, b, tol, args.corollary4);
  json sphere = {{"carrier", to_json(rep.carrier)}, {"points", json::array()}};
  for (size_t k = 0; k < rep.points.size(); ++k)
    sphere["points"].push_back({{"edge", edge_label(rep.edges[k])},
                                {"point", to_json(rep.points[k])},
                                {"residual", rep.residuals[k] / tol.scene_scale}});
  if (rep.center_a) sphere["center_a"] = to_json(*rep.center_a);
  if (rep.center_b) sphere["center_b"] = to_json(*rep.center_b);
  res["sphere"] = sphere;
  rb.verdict("sphere residual", rep.max_residual / tol.scene_scale, tol.eps_rel);
  if (rep.midpoint_gap) {
    res["sphere"]["midpoint_gap"] = *rep.midpoint_gap;
    rb.verdict("midpoint gap", *rep.midpoint_gap, tol.eps_rel);
  }
}

void cmd_solve(Scene scene, const CommandArgs& args, ReportBuilder& rb) {
  require(args.seed.has_value(), "solve: --seed is required");
  require(args.restarts > 0, "solve: --restarts must be positive");
  const auto& a = scene.tetrahedron(args.tet);
  const auto tol = scene.tolerance().with_scale(a.diameter());
  rb.tolerance(tol);
  SolverConfig cfg;
  cfg.seed = *args.seed;
  cfg.restarts = args.restarts;
  const auto result = solve(a, cfg);

  auto& res = rb.results();
  std::map<std::string, int> status;
  for (const auto& d : result.diagnostics) ++status[d.status];
  res["restart_status"] = status;
  res["solutions"] = json::array();
  double worst = 0.0;
  for (size_t k = 0; k < result.solutions.size(); ++k) {
    const std::string name = args.tet + "_s" + std::to_string(k);
    res["solutions"].push_back(
        {{"name", name}, {"vertices", to_json(result.solutions[k])}, {"max_residual", result.max_residuals[k]}});
    worst = std::max(worst, result.max_residuals[k]);
    scene.tetrahedra.emplace(name, result.solutions[k]);
  }
  rb.verdict("solutions missing", result.solutions.empty() ? 1.0 : 0.0, 0.0);
  rb.verdict("max residual", worst, cfg.accept_residual);
  if (!args.out.empty()) save_scene(scene, args.out);
}

void cmd_trace_family(Scene scene, const CommandArgs& args, ReportBuilder& rb) {
  require(args.steps > 0, "trace-family: --steps must be positive");
  require(args.step > 0.0, "trace-family: --step must be positive");
  const auto& a = scene.tetrahedron(args.tet);
  const auto& b0 = scene.tetrahedron(args.start);
  rb.tolerance(scene.tolerance().with_scale(a.diameter()));
  const auto branch = trace_family(a, b0, args.steps, args.step, SolverConfig{}, args.direction >= 0 ? 1 : -1);

  auto& res = rb.results();
  res["samples"] = json::array();
  double worst = 0.0;
  int nullity_dev = 0;
  for (size_t k = 0; k < branch.samples.size(); ++k) {
    res["samples"].push_back({{"vertices", to_json(branch.samples[k])},
                              {"max_residual", branch.max_residuals[k]},
                              {"nullity", branch.nullities[k]},
                              {"singular_ratio", branch.singular_ratios[k]}});
    worst = std::max(worst, branch.max_residuals[k]);
    nullity_dev = std::max(nullity_dev, std::abs(branch.nullities[k] - 1));
    if (k > 0) scene.tetrahedra.emplace(args.start + "_f" + std::to_string(k), branch.samples[k]);
  }
  res["branch_point"] = branch.branch_point;
  res["stop_reason"] = branch.stop_reason;
  rb.verdict("max residual", worst, kFamilyResidual);
  rb.verdict("nullity deviation", nullity_dev, 0.0);
  rb.verdict("steps missing", static_cast<double>(args.steps + 1 - static_cast<int>(branch.samples.size())), 0.0);
  if (!args.out.empty()) save_scene(scene, args.out);
}

void cmd_conjugate(Scene scene, const CommandArgs& args, ReportBuilder& rb) {
  const auto [na, nb] = split_pair(args.pair);
  const auto& a = scene.tetrahedron(na);
  const auto& b = scene.tetrahedron(nb);
  const auto tol = scene.tolerance().with_scale(pair_scale(a, b));
  rb.tolerance(tol);
  const auto conj = conjugate(a, b, tol);
  const auto& c = conj.partner;

  const auto rep_b = verify_sphere(a, b, tol);
  const auto rep_c = verify_sphere(a, c, tol);
  double carrier_gap = 0.0;
  if (rep_b.carrier.is_sphere() && rep_c.carrier.is_sphere()) {
    carrier_gap = std::max((rep_b.carrier.sphere().center - rep_c.carrier.sphere().center).norm(),
                           std::abs(rep_b.carrier.sphere().radius - rep_c.carrier.sphere().radius));
  } else {
    // Mixed kinds or planes: deviation of C's points from B's carrier.
    for (const auto& p : rep_c.points) carrier_gap = std::max(carrier_gap, std::abs(rep_b.carrier.signed_residual(p)));
  }
  auto& res = rb.results();
  const std::string name = nb + "_conj";
  res["partner"] = {{"name", name}, {"vertices", to_json(c)}};
  res["carrier_ab"] = to_json(rep_b.carrier);
  res["carrier_ac"] = to_json(rep_c.carrier);
  res["closure_spread"] = conj.chain.closure_spread / tol.scene_scale;
  const double residual = max_abs(orthosect_residuals(a, c, tol.scene_scale));
  res["partner_residual"] = residual;
  rb.verdict("partner residual", residual, tol.eps_rel);
  rb.verdict("carrier coincidence", carrier_gap / tol.scene_scale, kSphereCoincidence);
  scene.tetrahedra.insert_or_assign(name, c);
  if (!args.out.empty()) save_scene(scene, args.out);
}

std::optional<Window> window_arg(const CommandArgs& args) {
  if (!args.window) return std::nullopt;
  const auto& w = *args.window;
  require(w[2] > w[0] && w[3] > w[1], "--window: expected x0,y0,x1,y1 with x1 > x0 and y1 > y0");
  return Window{{w[0], w[1]}, {w[2], w[3]}};
}

void cmd_curve(const Scene& scene, const CommandArgs& args, ReportBuilder& rb) {
  require(args.face >= 1 && args.face <= 4, "curve: --face must be in 1..4");
  require(args.grid >= 16, "curve: --grid must be at least 16");
  require(args.degree_trials <= 0 || args.seed.has_value(), "curve: --degree-trials requires --seed");
  const auto& a = scene.tetrahedron(args.tet);
  const auto tol = scene.tolerance().with_scale(a.diameter());
  rb.tolerance(tol);
  const int face = args.face - 1;
  const Window window = window_arg(args).value_or(default_window(a, face));
  const auto trace = trace_curve(a, face, window, args.grid, tol);

  auto& res = rb.results();
  res["window"] = {to_json(window.lo), to_json(window.hi)};
  res["frame"] = {{"origin", to_json(trace.frame.origin)},
                  {"e1", to_json(trace.frame.e1)},
                  {"e2", to_json(trace.frame.e2)}};
  res["polylines"] = json::array();
  for (const auto& line : trace.polylines) {
    json pts = json::array();
    for (const auto& p : line.points) pts.push_back(to_json(p));
    res["polylines"].push_back({{"branch", line.branch}, {"closed", line.closed}, {"points", pts}});
  }
  res["vertex_count"] = trace.vertex_count();
  res["residual_bound"] = trace.residual_bound;
  rb.verdict("vertex residual bound", trace.residual_bound, kCurveResidual);

  if (args.degree_trials > 0) {
    const auto est = estimate_degree(trace, args.degree_trials, *args.seed);
    json hist = json::object();
    for (const auto& [count, lines] : est.histogram) hist[std::to_string(count)] = lines;
    int flagged = 0;
    for (const auto& l : est.lines) flagged += l.flagged;
    res["degree"] = {{"histogram", hist},
                     {"max_count", est.max_count},
                     {"flagged_hits", flagged},
                     {"nine_observed", est.nine_observed},
                     {"nine_exceeded", est.nine_exceeded}};
  }

  if (!args.out.empty()) {
    const bool svg = args.out.size() >= 4 && args.out.compare(args.out.size() - 4, 4, ".svg") == 0;
    if (svg) {
      auto diagram = face_diagram(a, face, nullptr, tol);
      diagram.curve = &trace;
      write_file(args.out, render_svg(diagram));
    } else {
      write_file(args.out, res.dump(2) + "\n");
    }
  }
}

void cmd_sequence(const Scene& scene, const CommandArgs& args, ReportBuilder& rb) {
  require(args.n >= 1, "sequence: --n must be positive");
  const auto [n0, n1] = split_pair(args.pair);
  const auto& b0 = scene.tetrahedron(n0);
  const auto& b1 = scene.tetrahedron(n1);
  const auto tol = scene.tolerance().with_scale(pair_scale(b0, b1));
  rb.tolerance(tol);
  const auto run = iterate_sequence(b0, b1, args.n, tol, kCenterCluster);

  auto& res = rb.results();
  res["terms"] = json::array();
  for (const auto& t : run.terms) res["terms"].push_back(to_json(t));
  res["pair_residuals"] = json::array();
  for (const auto& rep : run.pair_reports) res["pair_residuals"].push_back(rep.max_residual / tol.scene_scale);
  if (!run.pair_reports.empty()) res["carrier"] = to_json(run.pair_reports.front().carrier);
  res["shared_residual"] = run.shared_residual / tol.scene_scale;
  res["distinct_centers"] = json::array();
  for (const auto& c : run.distinct_centers) res["distinct_centers"].push_back(to_json(c));
  if (run.failed_step) res["failure"] = {{"step", *run.failed_step}, {"reason", run.failure}};

  rb.verdict("terms missing", static_cast<double>(args.n + 1 - static_cast<int>(run.terms.size())), 0.0);
  rb.verdict("shared sphere residual", run.shared_residual / tol.scene_scale, kSequenceResidual);
  rb.verdict("distinct centers minus two",
             std::abs(static_cast<double>(run.distinct_centers.size()) - 2.0), 0.0);
}

void cmd_export(const Scene& scene, const CommandArgs& args, ReportBuilder& rb) {
  require(!args.out.empty(), "export: --out is required");
  auto& res = rb.results();
  const Tolerance base = scene.tolerance();
  if (args.format == "svg") {
    require(!args.tet.empty(), "export: svg needs a face plane; pass --tet NAME and --face K");
    require(args.face >= 1 && args.face <= 4, "export: --face must be in 1..4");
    const auto& a = scene.tetrahedron(args.tet);
    const Tetrahedron* partner = args.partner.empty() ? nullptr : &scene.tetrahedron(args.partner);
    const auto tol = base.with_scale(partner ? pair_scale(a, *partner) : a.diameter());
    rb.tolerance(tol);
    auto diagram = face_diagram(a, args.face - 1, partner, tol);
    std::optional<CurveTrace> trace;
    if (args.grid > 0) {
      trace = trace_curve(a, args.face - 1, window_arg(args).value_or(default_window(a, args.face - 1)), args.grid,
                          base.with_scale(a.diameter()));
      diagram.curve = &*trace;
      res["vertex_count"] = trace->vertex_count();
    }
    write_file(args.out, render_svg(diagram));
    res["pedal_figures"] = diagram.pedals.size();
  } else if (args.format == "obj") {
    std::optional<std::pair<std::string, std::string>> pair;
    if (!args.pair.empty()) pair = split_pair(args.pair);
    rb.tolerance(base);
    write_file(args.out, render_obj(scene, pair, base, ObjOptions{args.resolution}));
  } else if (args.format == "json") {
    rb.tolerance(base);
    json summary = json::object();
    for (const auto& [name, t] : scene.tetrahedra)
      summary[name] = {{"vertices", to_json(t)}, {"signed_volume", t.signed_volume()}, {"diameter", t.diameter()}};
    res["tetrahedra"] = summary;
    write_file(args.out, json::parse(dump_scene(scene)).dump(2) + "\n");
  } else {
    throw GeometryError(ErrorKind::Input, "export: --format must be svg, obj or json");
  }
  res["written"] = args.out;
}

}  // namespace

RunResult run(const std::string& command, const CommandArgs& args) {
  static const std::map<std::string, std::function<void(const Scene&, const CommandArgs&, ReportBuilder&)>> commands{
      {"verify", cmd_verify},       {"solve", cmd_solve},         {"trace-family", cmd_trace_family},
      {"conjugate", cmd_conjugate}, {"curve", cmd_curve},         {"sequence", cmd_sequence},
      {"export", cmd_export}};
  ReportBuilder rb(command, args_json(command, args));
  const auto it = commands.find(command);
  try {
    require(it != commands.end(), "unknown command '" + command + "'");
    const Scene scene = load_scene(args.scene);
    it->second(scene, args, rb);
  } catch (const GeometryError& e) {
    rb.error(to_string(e.kind()), e.what());
    return rb.finish(e.kind() == ErrorKind::Input ? kExitInput : kExitVerdict);
  }
  return rb.finish();
}

bool verdicts_consistent(const json& report) {
  if (!report.contains("verdicts")) return false;
  bool all = true;
  for (const auto& v : report["verdicts"]) {
    const bool pass = v["value"].get<double>() <= v["limit"].get<double>();
    if (pass != v["pass"].get<bool>()) return false;
    all = all && pass;
  }
  return report["pass"].get<bool>() == (all && !report.contains("error"));
}

}  // namespace orthosect
