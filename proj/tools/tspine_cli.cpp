#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>
#include <json.hpp>

#include "tspine/analysis.hpp"
#include "tspine/error.hpp"
#include "tspine/export.hpp"
#include "tspine/model_io.hpp"
#include "tspine/script.hpp"
#include "tspine/server.hpp"
#include "tspine/session.hpp"

using namespace tspine;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

void report(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("path", "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("path", "cannot write " + path);
  out << j.dump(1) << '\n';
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("path", "cannot write " + path);
  return out;
}

Robot load_robot(const std::string& path) { return load_model(path).robot(); }

Stiffness stiffness_arg(const std::string& s) {
  const auto v = parse_stiffness(s);
  if (!v) throw ParameterError("stiffness", "stiffness must be high, low or a positive number");
  return *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spine-like tensegrity robot: topology, equilibrium, actuation and control"};
  app.require_subcommand(1);

  // generate
  TopologyParams tp;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Build the parametric topology and write a model file");
  gen->add_option("-n", tp.n, "Polygon size (odd, >= 3)")->required();
  gen->add_option("-m", tp.m, "Number of node levels (m = 3p + 3)")->required();
  gen->add_option("--unit-height", tp.unit_height, "Level spacing (mm)");
  gen->add_option("--base-radius", tp.base_radius, "Base ring radius (mm)");
  std::optional<double> twist;
  gen->add_option("--twist", twist, "Twist per level (rad); default pi/n");
  gen->add_option("-o,--output", gen_out, "Model file")->required();

  // formfind
  std::string ff_in, ff_out;
  Materials mats;
  double friction = 0.0, decay_rate = 0.0;
  bool no_settle = false;
  std::vector<std::string> target_lengths;
  auto* ff = app.add_subcommand("formfind", "Solve the prestressed rest state and route the tendons");
  ff->add_option("-i,--input", ff_in, "Model file from generate")->required()->check(CLI::ExistingFile);
  ff->add_option("-o,--output", ff_out, "Form-found model file")->required();
  ff->add_option("--cable-stiffness", mats.cable_stiffness, "Cable EA (N)");
  ff->add_option("--tendon-stiffness", mats.tendon_stiffness, "Tendon EA (N)");
  ff->add_option("--winder-radius", mats.winder_radius, "Winder radius r (mm)");
  ff->add_option("--tendon-pitch", mats.tendon_pitch, "Tendon pitch d (mm); 0 derives it");
  ff->add_option("--stroke", mats.stroke_limit, "Tendon stroke limit (mm)");
  ff->add_option("--low", mats.stiffness.low, "Prestress scale of the low stiffness level");
  ff->add_option("--gravity", mats.gravity, "Gravity along -z (0 disables)");
  ff->add_option("--friction", friction, "Coulomb coefficient at each routing joint");
  ff->add_option("--decay-rate", decay_rate, "Prestress decay rate (1/s)");
  ff->add_option("--target-length", target_lengths, "Adaptive length target MEMBER=LENGTH (repeatable)");
  ff->add_flag("--no-settle", no_settle, "Keep both end rings held");

  // simulate
  std::string sim_in, sim_script, sim_out, obj_dir;
  long obj_every = 1;
  auto* sim = app.add_subcommand("simulate", "Run an actuation script or replay a session log");
  sim->add_option("-i,--input", sim_in, "Form-found model file")->required()->check(CLI::ExistingFile);
  sim->add_option("-s,--script", sim_script, "Script or session log (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", sim_out, "Trajectory CSV")->required();
  sim->add_option("--obj-dir", obj_dir, "Write an OBJ snapshot per row into this directory");
  sim->add_option("--obj-every", obj_every, "Snapshot every k-th row")->check(CLI::PositiveNumber);

  // sweep
  std::string sw_in, sw_out, sw_stiff = "high";
  int per_axis = 5;
  std::optional<double> sw_stroke;
  auto* sw = app.add_subcommand("sweep", "Workspace metrics over a tendon lattice");
  sw->add_option("-i,--input", sw_in, "Form-found model file")->required()->check(CLI::ExistingFile);
  sw->add_option("-o,--output", sw_out, "Metrics CSV")->required();
  sw->add_option("--stiffness", sw_stiff, "high, low or a prestress scale");
  sw->add_option("--per-axis", per_axis, "Lattice points per tendon")->check(CLI::Range(2, 50));
  sw->add_option("--stroke", sw_stroke, "Lattice span (default: stroke limit)");

  // strainmap
  std::string sm_in, sm_out, sm_stiff = "high";
  auto* sm = app.add_subcommand("strainmap", "Tendon strains over a grid of (alpha, beta) poses");
  sm->add_option("-i,--input", sm_in, "Form-found model file")->required()->check(CLI::ExistingFile);
  sm->add_option("-o,--output", sm_out, "Strain map CSV")->required();
  sm->add_option("--stiffness", sm_stiff, "high, low or a prestress scale");

  // explore
  std::string ex_in, ex_script, ex_log, ex_map;
  double cell_size = 10.0;
  auto* ex = app.add_subcommand("explore", "Scripted exploration with the simulated infrared sensor");
  ex->add_option("-i,--input", ex_in, "Form-found model file")->required()->check(CLI::ExistingFile);
  ex->add_option("-s,--script", ex_script, "{environment, poses: [[alpha, beta], ...], safety_distance, dt}")
      ->required()
      ->check(CLI::ExistingFile);
  ex->add_option("--log", ex_log, "Exploration log JSON")->required();
  ex->add_option("--map", ex_map, "Configuration map JSON")->required();
  ex->add_option("--cell-size", cell_size, "Map cell size (mm)")->check(CLI::PositiveNumber);

  // serve
  std::string sv_in, sv_record, sv_options;
  ServerOptions sv;
  sv.port = default_port();
  bool fast = false;
  auto* srv = app.add_subcommand("serve", "Run the live session service");
  srv->add_option("-i,--input", sv_in, "Form-found model file")->required()->check(CLI::ExistingFile);
  srv->add_option("--host", sv.host, "Listen address");
  srv->add_option("--port", sv.port, "Stream port; snapshot on port + 1 (default TSPINE_PORT or 8765)")
      ->check(CLI::Range(1, 65534));
  srv->add_option("--ticks", sv.max_ticks, "Stop after this many ticks");
  srv->add_option("--record", sv_record, "Write the replayable session log here on exit");
  srv->add_option("--session", sv_options, "Session options JSON (tick rate, controller, environment)")
      ->check(CLI::ExistingFile);
  srv->add_flag("--fast", fast, "Do not pace ticks in real time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  try {
    if (*gen) {
      if (twist) tp.twist = *twist;
      else tp.twist = std::numbers::pi / tp.n;
      const StructureModel model = generate_topology(tp);
      save_model(ModelFile::from_topology(model), gen_out);
      const auto c = expected_counts(tp.n, tp.m);
      std::cout << json{{"nodes", model.nodes.size()}, {"members", model.members.size()}, {"h", c.horizontal},
                        {"s", c.saddle}, {"v", c.vertical}, {"d", c.diagonal}, {"struts", c.strut}}
                       .dump()
                << '\n';
    } else if (*ff) {
      const ModelFile in = load_model(ff_in);
      FormFindOptions opt;
      opt.settle = !no_settle;
      for (const auto& t : target_lengths) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParameterError("target", "target must be MEMBER=LENGTH: " + t);
        try {
          opt.targets[std::stoi(t.substr(0, eq))] = Target::length(std::stod(t.substr(eq + 1)));
        } catch (const std::logic_error&) {
          throw ParameterError("target", "target must be MEMBER=LENGTH: " + t);
        }
      }
      Robot robot = form_find(in.model, mats, opt);
      robot.dyn.degradation.friction_mu = friction;
      robot.dyn.degradation.decay_rate = decay_rate;
      check_degradation(robot.dyn.degradation);
      save_model(ModelFile::from_robot(robot), ff_out);
      const auto& g = robot.geometry;
      std::cout << json{{"residual", robot.rest.residual}, {"d", g.d}, {"s", g.s}, {"beta_max", g.beta_max},
                        {"adapt_converged", robot.adapt_converged}}
                       .dump()
                << '\n';
    } else if (*sim) {
      const Robot robot = load_robot(sim_in);
      const SimulationResult res = run_script(robot, read_json(sim_script));
      auto out = open_out(sim_out);
      write_trajectory_csv(out, res.rows);
      if (!obj_dir.empty()) {
        std::filesystem::create_directories(obj_dir);
        for (std::size_t k = 0; k < res.states.size(); k += static_cast<std::size_t>(obj_every)) {
          auto obj = open_out((std::filesystem::path(obj_dir) / ("state_" + std::to_string(k) + ".obj")).string());
          write_obj(obj, robot.dyn.model, res.states[k].positions);
        }
      }
      const auto& tip = res.rows.back().tip;
      std::cout << json{{"rows", res.rows.size()}, {"converged", res.converged}, {"final_tip", to_json(tip)}}.dump()
                << '\n';
      // A replayed session may legitimately end mid-motion; a batch step must settle.
      if (!res.converged && !is_session_log(read_json(sim_script))) {
        report("integration", "some steps did not reach equilibrium; see the residual column");
        return 1;
      }
    } else if (*sw) {
      const Robot robot = load_robot(sw_in);
      const auto grid = lattice_grid(sw_stroke.value_or(robot.dyn.materials.stroke_limit), per_axis);
      const WorkspaceMetrics m = sweep_workspace(robot, stiffness_arg(sw_stiff), grid);
      auto out = open_out(sw_out);
      write_metrics_csv(out, {m});
      std::cout << to_json(m).dump() << '\n';
      if (!m.valid) {
        report("sweep", "fewer than 90% of the samples converged");
        return 1;
      }
    } else if (*sm) {
      const Robot robot = load_robot(sm_in);
      const auto samples =
          strain_map(robot, default_alphas(), default_betas(robot.geometry), stiffness_arg(sm_stiff));
      auto out = open_out(sm_out);
      write_strain_map_csv(out, samples);
      std::cout << json{{"samples", samples.size()}}.dump() << '\n';
    } else if (*ex) {
      const Robot robot = load_robot(ex_in);
      const json s = read_json(ex_script);
      Environment env = s.contains("environment") ? environment_from_json(s["environment"]) : Environment{};
      ExploreOptions opt;
      std::vector<std::pair<double, double>> poses;
      try {
        opt.safety_distance = s.value("safety_distance", opt.safety_distance);
        opt.dt = s.value("dt", opt.dt);
        if (s.contains("stiffness")) opt.stiffness = stiffness_from_json(s["stiffness"]);
        if (s.contains("poses")) {
          for (const auto& p : s["poses"]) poses.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        } else {
          for (double a : default_alphas())
            for (double b : default_betas(robot.geometry)) poses.emplace_back(a, b);
        }
      } catch (const json::exception& e) {
        throw SchemaError(std::string("exploration script: ") + e.what());
      }
      const ExplorationLog log = explore(robot, env, poses, opt);
      json entries = json::array();
      for (const auto& e : log.entries)
        entries.push_back({{"t", e.t},
                           {"alpha", e.pose.alpha},
                           {"beta", e.pose.beta},
                           {"tip", to_json(e.pose.tip)},
                           {"command", to_json(e.command)},
                           {"sensor", to_json(e.sensor)},
                           {"distance_to_trajectory", e.distance_to_trajectory},
                           {"converged", e.converged}});
      write_json({{"entries", entries}}, ex_log);
      const ConfigurationMap map = build_configuration_map({log}, cell_size, opt.safety_distance);
      write_json(to_json(map), ex_map);
      std::cout << json{{"entries", log.entries.size()}, {"cells", map.cells.size()}}.dump() << '\n';
    } else if (*srv) {
      const Robot robot = load_robot(sv_in);
      if (!sv_options.empty()) sv.session = session_options_from_json(read_json(sv_options));
      sv.realtime = !fast;
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      const SessionCore core = serve_session(robot, sv, g_stop, [&] {
        std::cout << json{{"listening", sv.port}, {"snapshot", sv.port + 1}}.dump() << std::endl;
      });
      if (!sv_record.empty()) write_json(core.session_log(), sv_record);
      std::cout << json{{"ticks", core.ticks()}, {"final_tip", to_json(core.tip())}}.dump() << '\n';
    }
  } catch (const ParameterError& e) {
    report(e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    report(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report("internal", e.what());
    return 1;
  }
  return 0;
}
