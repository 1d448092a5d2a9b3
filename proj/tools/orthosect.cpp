#include "orthosect/cli.hpp"

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  orthosect::CommandArgs args;
  std::string report_path;
  bool timing = false;
  std::string window;

  CLI::App app{"orthosect: orthosecting tetrahedra toolkit"};
  app.require_subcommand(1);
  app.add_option("--report", report_path, "Write the JSON report here instead of stdout");
  app.add_flag("--timing", timing, "Print wall time to stderr");

  const auto scene_opt = [&](CLI::App* c) { c->add_option("--scene", args.scene, "Scene JSON file")->required(); };

  auto* verify = app.add_subcommand("verify", "Check orthology, intersections and the common sphere of a pair");
  scene_opt(verify);
  verify->add_option("--pair", args.pair, "NAME,NAME")->required();
  verify->add_flag("--corollary4", args.corollary4, "Accept five intersecting pairings");

  auto* solve = app.add_subcommand("solve", "Find partners orthosecting a tetrahedron");
  scene_opt(solve);
  solve->add_option("--tet", args.tet)->required();
  solve->add_option("--seed", args.seed)->required();
  solve->add_option("--restarts", args.restarts);
  solve->add_option("--out", args.out, "Save the scene with the solutions added");

  auto* family = app.add_subcommand("trace-family", "Continue a solution along its one-parameter family");
  scene_opt(family);
  family->add_option("--tet", args.tet)->required();
  family->add_option("--start", args.start)->required();
  family->add_option("--steps", args.steps);
  family->add_option("--step", args.step);
  family->add_option("--direction", args.direction)->check(CLI::IsMember({-1, 1}));
  family->add_option("--out", args.out, "Save the scene with the samples added");

  auto* conj = app.add_subcommand("conjugate", "Conjugate partner of an orthosecting pair");
  scene_opt(conj);
  conj->add_option("--pair", args.pair, "HOST,PARTNER")->required();
  conj->add_option("--out", args.out, "Save the scene with the conjugate added");

  auto* curve = app.add_subcommand("curve", "Trace the self-conjugate curve on a face plane");
  scene_opt(curve);
  curve->add_option("--tet", args.tet)->required();
  curve->add_option("--face", args.face)->check(CLI::Range(1, 4));
  curve->add_option("--grid", args.grid);
  curve->add_option("--window", window, "x0,y0,x1,y1 in face coordinates");
  curve->add_option("--out", args.out, "SVG (.svg) or JSON trace");
  curve->add_option("--degree-trials", args.degree_trials);
  curve->add_option("--seed", args.seed);

  auto* seq = app.add_subcommand("sequence", "Iterate conjugation along a sequence of partners");
  scene_opt(seq);
  seq->add_option("--pair", args.pair, "B0,B1")->required();
  seq->add_option("--n", args.n);

  auto* exp = app.add_subcommand("export", "Render a scene as SVG, OBJ or JSON");
  scene_opt(exp);
  exp->add_option("--format", args.format)->required()->check(CLI::IsMember({"svg", "obj", "json"}));
  exp->add_option("--out", args.out)->required();
  exp->add_option("--tet", args.tet, "svg: tetrahedron owning the face");
  exp->add_option("--face", args.face, "svg: face opposite this vertex (1..4)")->check(CLI::Range(1, 4));
  exp->add_option("--partner", args.partner, "svg: draw the pedal figures of this partner");
  exp->add_option("--grid", args.grid, "svg: overlay the curve traced at this grid (0: none)");
  exp->add_option("--window", window, "svg: curve window x0,y0,x1,y1");
  exp->add_option("--pair", args.pair, "obj: add intersection points and carrier of NAME,NAME");
  exp->add_option("--resolution", args.resolution, "obj: sphere latitude bands");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : orthosect::kExitInput;
  }
  if (exp->parsed() && exp->count("--grid") == 0) args.grid = 0;

  if (!window.empty()) {
    std::array<double, 4> w{};
    std::stringstream ss(window);
    std::string item;
    int k = 0;
    while (std::getline(ss, item, ',')) {
      if (k >= 4) break;
      try {
        w[static_cast<size_t>(k)] = std::stod(item);
      } catch (const std::exception&) {
        k = -1;
        break;
      }
      ++k;
    }
    if (k != 4 || std::getline(ss, item, ',')) {
      std::cerr << "--window: expected four comma-separated numbers\n";
      return orthosect::kExitInput;
    }
    args.window = w;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = orthosect::run(command, args);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string text = result.report.dump(2) + "\n";
  if (report_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write report '" << report_path << "'\n";
      return orthosect::kExitInput;
    }
    out << text;
  }
  if (result.report.contains("error")) std::cerr << result.report["error"]["message"].get<std::string>() << "\n";
  if (timing) std::cerr << "wall time: " << elapsed << " s\n";
  return result.exit_code;
}
