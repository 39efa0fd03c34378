#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snapjump/beam_lab.hpp"
#include "snapjump/dataset.hpp"
#include "snapjump/inverse.hpp"
#include "snapjump/io.hpp"
#include "snapjump/robot.hpp"
#include "snapjump/surrogate.hpp"

namespace {

using json = nlohmann::json;
using namespace snapjump;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSimFailure = 2;
constexpr int kExitUnreachable = 3;

// Binds CLI options so that values resolve as: defaults < config file <
// explicit command-line flags; collects the resolved set for the echo.
class Binder {
 public:
  Binder(CLI::App* cmd, json cfg) : cmd_(cmd), cfg_(std::move(cfg)) {}

  template <typename T>
  CLI::Option* add(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* opt = cmd_->add_option(flag, var, desc);
    const std::string key = flag.substr(flag.find_first_not_of('-'));
    fixups_.push_back([this, opt, key, &var]() {
      if (opt->count() == 0 && cfg_.contains(key)) var = cfg_.at(key).get<T>();
    });
    echoes_.push_back([key, &var](json& j) { j[key] = var; });
    return opt;
  }

  // Call after parsing: applies config-file values and returns the echo.
  json resolve() {
    for (auto& f : fixups_) f();
    json j;
    for (auto& e : echoes_) e(j);
    return j;
  }

 private:
  CLI::App* cmd_;
  json cfg_;
  std::vector<std::function<void()>> fixups_;
  std::vector<std::function<void(json&)>> echoes_;
};

void echo_config(const std::string& command, const json& resolved) {
  json j;
  j["command"] = command;
  j["config"] = resolved;
  std::cerr << j.dump() << "\n";
}

void emit(const json& result) { std::cout << result.dump(1, '\t') << "\n"; }

json load_config_file(const std::string& path, const std::string& command) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json doc;
  in >> doc;
  // Either a flat object or per-command sections.
  if (doc.contains(command) && doc[command].is_object()) return doc[command];
  return doc;
}

MountingRule rule_for(const std::string& table_path) {
  if (!table_path.empty()) return MountingRule::load_csv(table_path);
  return build_mounting_rule(BeamSpec{});
}

// "0:64,150:256,400:1024" -> {(0,64), (150,256), (400,1024)}.
template <typename Num>
std::vector<std::pair<int, Num>> parse_schedule(const std::string& text,
                                                const std::string& flag) {
  std::vector<std::pair<int, Num>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError(flag, "expected EPOCH:VALUE pairs");
    try {
      const int epoch = std::stoi(item.substr(0, colon));
      if constexpr (std::is_same_v<Num, int>)
        out.emplace_back(epoch, std::stoi(item.substr(colon + 1)));
      else
        out.emplace_back(epoch, std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected EPOCH:VALUE pairs");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Snap-actuated jumping robot: simulation and inverse design"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file with defaults (flat or per-subcommand sections)");

  // Pre-scan for --config so subcommand binders can see it.
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];

  int exit_code = kExitOk;
  std::function<void()> run;

  // ---- snap-static ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "snap-static", "Quasi-static clamp-rotation sweep to the snap fold");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "snap-static"));
    auto eps = std::make_shared<double>(0.2);
    auto nodes = std::make_shared<int>(100);
    auto alpha_step = std::make_shared<double>(1e-2);
    auto alpha_refine = std::make_shared<double>(1e-3);
    auto out = std::make_shared<std::string>();
    binder->add("--eps", *eps, "pre-compression ratio");
    binder->add("--nodes", *nodes, "beam nodes");
    binder->add("--alpha-step", *alpha_step, "coarse continuation step, rad");
    binder->add("--alpha-refine", *alpha_refine, "fold refinement step, rad");
    binder->add("--out", *out, "CSV of (alpha, ybar_mid, ebar)");
    cmd->callback([=]() {
      echo_config("snap-static", binder->resolve());
      BeamSpec spec;
      spec.eps = *eps;
      spec.num_nodes = *nodes;
      StaticSweepOptions opts;
      opts.alpha_step = *alpha_step;
      opts.alpha_refine = *alpha_refine;
      const StaticSweepResult sweep = static_sweep(spec, opts);
      const auto [h1, h2] = critical_heights(sweep);
      if (!out->empty()) {
        CsvTable t;
        t.columns = {"alpha", "ybar_mid", "ebar"};
        for (size_t i = 0; i < sweep.alpha.size(); ++i)
          t.rows.push_back({sweep.alpha[i], sweep.ybar_mid[i], sweep.ebar[i]});
        write_csv(*out, t);
      }
      emit({{"snap_alpha", sweep.snap_alpha},
            {"released_energy", sweep.released_energy},
            {"h1_m", h1},
            {"h2_m", h2},
            {"samples", sweep.alpha.size()}});
    });
  }

  // ---- snap-dynamic -----------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "snap-dynamic", "Dynamic snap-through of the world-clamped beam");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "snap-dynamic"));
    auto eps = std::make_shared<double>(0.2);
    auto dalpha = std::make_shared<double>(0.0);
    auto rate = std::make_shared<double>(20.0);
    auto dt = std::make_shared<double>(2e-5);
    auto nodes = std::make_shared<int>(100);
    auto out = std::make_shared<std::string>();
    auto stride = std::make_shared<int>(10);
    binder->add("--eps", *eps, "pre-compression ratio");
    binder->add("--dalpha", *dalpha, "clamp-angle mismatch, rad");
    binder->add("--rate", *rate, "clamp rotation rate, rad/s");
    binder->add("--dt", *dt, "time step, s");
    binder->add("--nodes", *nodes, "beam nodes");
    binder->add("--out", *out, "CSV of (t, ybar_mid, theta_mid)");
    binder->add("--stride", *stride, "trajectory sampling stride");
    cmd->callback([=]() {
      echo_config("snap-dynamic", binder->resolve());
      BeamSpec spec;
      spec.eps = *eps;
      spec.num_nodes = *nodes;
      DynamicSnapOptions opts;
      opts.mismatch = *dalpha;
      opts.rate = *rate;
      opts.dt = *dt;
      opts.record_stride = out->empty() ? 0 : *stride;
      const DynamicSnapResult r = dynamic_snap(spec, opts);
      if (!out->empty()) {
        CsvTable t;
        t.columns = {"t", "ybar_mid", "theta_mid"};
        for (const auto& st : r.trajectory)
          t.rows.push_back({st.t, midpoint_height_ratio(spec, st.q),
                            midpoint_angle(spec, st.q)});
        write_csv(*out, t);
      }
      emit({{"theta_max", r.theta_max},
            {"snap_time", r.snap_time},
            {"snapped", r.snapped}});
    });
  }

  // ---- jump -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("jump", "Simulate one robot jump");
    cmd->set_help_flag("--help", "print help");  // frees -h for --h below
    auto binder =
        std::make_shared<Binder>(cmd, load_config_file(config_path, "jump"));
    auto eps = std::make_shared<double>(0.2);
    auto dalpha = std::make_shared<double>(0.1);
    auto mu = std::make_shared<double>(0.3);
    auto mbar = std::make_shared<double>(0.768);
    auto h = std::make_shared<double>(-1.0);
    auto dt = std::make_shared<double>(1e-5);
    auto rate = std::make_shared<double>(20.0);
    auto table = std::make_shared<std::string>();
    auto traj = std::make_shared<std::string>();
    auto stride = std::make_shared<int>(50);
    binder->add("--eps", *eps, "pre-compression ratio");
    binder->add("--dalpha", *dalpha, "actuation mismatch, rad");
    binder->add("--mu", *mu, "friction coefficient");
    binder->add("--mbar", *mbar, "normalized mass m g L^2 / EI");
    binder->add("--h", *h, "mounting height, m (default: optimal h1(eps))");
    binder->add("--dt", *dt, "time step, s");
    binder->add("--rate", *rate, "clamp rotation rate, rad/s");
    binder->add("--mount-table", *table, "mounting-rule CSV (else computed)");
    binder->add("--traj", *traj, "CSV of the COM trajectory (t, x, y)");
    binder->add("--stride", *stride, "trajectory sampling stride");
    cmd->callback([=]() {
      echo_config("jump", binder->resolve());
      RobotDesign design;
      design.beam.eps = *eps;
      design.total_mass = mass_from_mbar(design.beam, *mbar);
      design.friction = *mu;
      if (*h > 0.0) {
        design.mounting_height = *h;
      } else if (!table->empty()) {
        design.mounting_height = MountingRule::load_csv(*table).height_for(*eps);
      } else {
        design.mounting_height = critical_heights(design.beam).first;
      }
      ActuationProtocol protocol;
      protocol.mismatch = *dalpha;
      protocol.rate = *rate;
      JumpOptions options;
      options.dt = *dt;
      options.record_stride = traj->empty() ? 0 : *stride;
      const JumpResult r = simulate_jump(design, protocol, ContactModel{},
                                         options);
      if (!traj->empty()) {
        CsvTable t;
        t.columns = {"t", "x", "y"};
        for (const auto& row : r.com_trajectory)
          t.rows.push_back({row[0], row[1], row[2]});
        write_csv(*traj, t);
      }
      emit({{"jumped", r.jumped},
            {"x_c", r.apex_x},
            {"y_c", r.apex_y},
            {"xbar", r.xbar},
            {"ybar", r.ybar},
            {"liftoff_t", r.liftoff_time},
            {"apex_t", r.apex_time},
            {"h_m", design.mounting_height}});
    });
  }

  // ---- mount-table ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "mount-table", "Tabulate the optimal mounting heights h1, h2 vs eps");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "mount-table"));
    auto out = std::make_shared<std::string>();
    auto eps_min = std::make_shared<double>(0.05);
    auto eps_max = std::make_shared<double>(0.35);
    auto count = std::make_shared<int>(31);
    binder->add("--out", *out, "output CSV path")->required();
    binder->add("--eps-min", *eps_min, "lower eps bound");
    binder->add("--eps-max", *eps_max, "upper eps bound");
    binder->add("--count", *count, "table size");
    cmd->callback([=]() {
      echo_config("mount-table", binder->resolve());
      const MountingRule rule =
          build_mounting_rule(BeamSpec{}, *eps_min, *eps_max, *count);
      rule.save_csv(*out);
      emit({{"rows", rule.eps.size()}, {"path", *out}});
    });
  }

  // ---- gen-data ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "gen-data", "Generate the training dataset over the design grid");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "gen-data"));
    auto points = std::make_shared<int>(7);
    auto lhs = std::make_shared<int>(0);
    auto seed = std::make_shared<unsigned>(1u);
    auto out = std::make_shared<std::string>();
    auto jobs = std::make_shared<int>(1);
    auto dt = std::make_shared<double>(5e-5);
    auto table = std::make_shared<std::string>();
    auto ranges = std::make_shared<DesignRanges>();
    binder->add("--points", *points, "grid points per dimension");
    binder->add("--lhs", *lhs, "Latin-hypercube sample count (0 = grid)");
    binder->add("--seed", *seed, "sampling seed (LHS only)");
    binder->add("--out", *out, "output CSV path")->required();
    binder->add("--jobs", *jobs, "worker threads");
    binder->add("--dt", *dt, "simulation time step, s");
    binder->add("--mount-table", *table, "mounting-rule CSV (else computed)");
    binder->add("--dalpha-lo", ranges->dalpha_lo, "clamp-mismatch lower bound");
    binder->add("--dalpha-hi", ranges->dalpha_hi, "clamp-mismatch upper bound");
    binder->add("--eps-lo", ranges->eps_lo, "pre-compression lower bound");
    binder->add("--eps-hi", ranges->eps_hi, "pre-compression upper bound");
    binder->add("--mbar-lo", ranges->mbar_lo, "normalized-mass lower bound");
    binder->add("--mbar-hi", ranges->mbar_hi, "normalized-mass upper bound");
    binder->add("--mu-lo", ranges->mu_lo, "friction lower bound");
    binder->add("--mu-hi", ranges->mu_hi, "friction upper bound");
    cmd->callback([=]() {
      echo_config("gen-data", binder->resolve());
      const MountingRule rule = rule_for(*table);
      const std::vector<NormalizedParams> grid =
          *lhs > 0 ? sample_lhs(*lhs, *seed, *ranges)
                   : sample_grid(*points, *ranges);
      GenerateOptions options;
      options.jump.dt = *dt;
      options.jobs = *jobs;
      options.progress = [](int done, int total) {
        if (done % 25 == 0 || done == total)
          std::cerr << "row " << done << "/" << total << "\n";
      };
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<DatasetRow> rows =
          generate_dataset(grid, *out, rule, options);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      int flagged = 0;
      for (const auto& r : rows) flagged += r.flag != 0;
      emit({{"rows", rows.size()},
            {"flagged", flagged},
            {"path", *out},
            {"seconds", secs}});
    });
  }

  // ---- train ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("train", "Train the apex surrogate");
    auto binder =
        std::make_shared<Binder>(cmd, load_config_file(config_path, "train"));
    auto data = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<unsigned>(7u);
    auto epochs = std::make_shared<int>(200);
    auto hidden = std::make_shared<std::vector<int>>();
    auto lr = std::make_shared<double>(1e-3);
    auto batch_sched = std::make_shared<std::string>();
    auto lr_sched = std::make_shared<std::string>();
    binder->add("--data", *data, "training dataset CSV")->required();
    binder->add("--out", *out, "output model JSON path")->required();
    binder->add("--seed", *seed, "training seed");
    binder->add("--epochs", *epochs, "training epochs");
    binder->add("--hidden", *hidden, "hidden layer widths (default 372x3)");
    binder->add("--lr", *lr, "optimizer step size");
    binder->add("--batch-schedule", *batch_sched,
                "EPOCH:SIZE pairs, e.g. 0:64,150:256,400:1024");
    binder->add("--lr-schedule", *lr_sched,
                "EPOCH:RATE pairs, e.g. 0:1e-3,250:3e-4 (overrides --lr)");
    cmd->callback([=]() {
      echo_config("train", binder->resolve());
      TrainConfig cfg;
      cfg.seed = *seed;
      cfg.epochs = *epochs;
      cfg.learning_rate = *lr;
      if (!hidden->empty()) cfg.hidden = *hidden;
      if (!batch_sched->empty())
        cfg.batch_schedule = parse_schedule<int>(*batch_sched,
                                                 "--batch-schedule");
      if (!lr_sched->empty())
        cfg.lr_schedule = parse_schedule<double>(*lr_sched, "--lr-schedule");
      cfg.on_epoch = [&](int epoch, double mae) {
        if ((epoch + 1) % 10 == 0)
          std::cerr << "epoch " << (epoch + 1) << " mae " << mae << "\n";
      };
      const std::vector<DatasetRow> rows = load_dataset(*data);
      SurrogateModel model;
      const auto t0 = std::chrono::steady_clock::now();
      const TrainReport report = train(model, rows, cfg);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      model.save(*out);
      emit({{"rows", rows.size()},
            {"rows_used", ok_rows(rows).size()},
            {"train_mae", report.train_mae},
            {"validation_mae", report.validation_mae},
            {"epochs", report.epochs},
            {"seconds", secs},
            {"model", *out}});
    });
  }

  // ---- region -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "region", "Predicted reachable apex region for an environment");
    auto binder =
        std::make_shared<Binder>(cmd, load_config_file(config_path, "region"));
    auto model_path = std::make_shared<std::string>();
    auto mbar = std::make_shared<double>(0.768);
    auto mu = std::make_shared<double>(0.3);
    auto grid = std::make_shared<int>(50);
    auto out = std::make_shared<std::string>();
    auto poly_out = std::make_shared<std::string>();
    binder->add("--model", *model_path, "surrogate model JSON")->required();
    binder->add("--mbar", *mbar, "normalized mass");
    binder->add("--mu", *mu, "friction coefficient");
    binder->add("--grid", *grid, "blocks per controllable dimension");
    binder->add("--out", *out, "CSV of grid images (dalpha,eps,xbar,ybar)");
    binder->add("--polygon", *poly_out, "CSV of the boundary polygon");
    cmd->callback([=]() {
      echo_config("region", binder->resolve());
      const SurrogateModel model = SurrogateModel::load(*model_path);
      const ReachableRegion region =
          reachable_region(model, *mbar, *mu, *grid, *grid);
      if (!out->empty()) {
        CsvTable t;
        t.columns = {"dalpha", "eps", "xbar", "ybar"};
        for (int i = 0; i < region.m; ++i)
          for (int j = 0; j < region.n; ++j)
            t.rows.push_back({region.dalpha_at(i), region.eps_at(j),
                              region.pred_x(i, j), region.pred_y(i, j)});
        write_csv(*out, t);
      }
      if (!poly_out->empty()) {
        CsvTable t;
        t.columns = {"xbar", "ybar"};
        for (const auto& v : region.polygon)
          t.rows.push_back({v.x(), v.y()});
        write_csv(*poly_out, t);
      }
      emit({{"simple_boundary", region.polygon_simple},
            {"vertices", region.polygon.size()},
            {"xbar_min", region.pred_x.minCoeff()},
            {"xbar_max", region.pred_x.maxCoeff()},
            {"ybar_min", region.pred_y.minCoeff()},
            {"ybar_max", region.pred_y.maxCoeff()}});
    });
  }

  // ---- inverse ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "inverse", "Recover (dalpha, eps) for a target normalized apex");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "inverse"));
    auto model_path = std::make_shared<std::string>();
    auto x = std::make_shared<double>(0.0);
    auto y = std::make_shared<double>(0.0);
    auto mbar = std::make_shared<double>(0.768);
    auto mu = std::make_shared<double>(0.3);
    auto grid = std::make_shared<int>(50);
    binder->add("--model", *model_path, "surrogate model JSON")->required();
    binder->add("--x", *x, "target xbar")->required();
    binder->add("--y", *y, "target ybar")->required();
    binder->add("--mbar", *mbar, "normalized mass");
    binder->add("--mu", *mu, "friction coefficient");
    binder->add("--grid", *grid, "region blocks per dimension");
    cmd->callback([=, &exit_code]() {
      echo_config("inverse", binder->resolve());
      const SurrogateModel model = SurrogateModel::load(*model_path);
      const ReachableRegion region =
          reachable_region(model, *mbar, *mu, *grid, *grid);
      const InverseSolution sol =
          solve_inverse(Vec2{*x, *y}, *mbar, *mu, model, &region);
      emit({{"reachable", sol.reachable},
            {"dalpha", sol.dalpha},
            {"eps", sol.eps},
            {"pred_x", sol.predicted.x()},
            {"pred_y", sol.predicted.y()},
            {"cost", sol.cost},
            {"iterations", sol.iterations},
            {"time_s", sol.wall_time},
            {"near_boundary_warning", sol.near_boundary_warning}});
      if (!sol.reachable) exit_code = kExitUnreachable;
    });
  }

  // ---- validate ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "validate", "Inverse-design end-to-end check against the simulator");
    auto binder = std::make_shared<Binder>(
        cmd, load_config_file(config_path, "validate"));
    auto model_path = std::make_shared<std::string>();
    auto trials = std::make_shared<int>(20);
    auto seed = std::make_shared<unsigned>(1u);
    auto dt = std::make_shared<double>(5e-5);
    auto table = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    binder->add("--model", *model_path, "surrogate model JSON")->required();
    binder->add("--trials", *trials, "number of random environments");
    binder->add("--seed", *seed, "sampling seed");
    binder->add("--dt", *dt, "validation simulation time step, s");
    binder->add("--mount-table", *table, "mounting-rule CSV (else computed)");
    binder->add("--out", *out, "per-case CSV");
    cmd->callback([=]() {
      echo_config("validate", binder->resolve());
      const SurrogateModel model = SurrogateModel::load(*model_path);
      const MountingRule rule = rule_for(*table);
      JumpOptions sim;
      sim.dt = *dt;
      const ValidationStats stats =
          validate_inverse(*trials, model, rule, sim, *seed);
      if (!out->empty()) {
        CsvTable t;
        t.columns = {"mbar",     "mu",    "target_x", "target_y", "dalpha",
                     "eps",      "sim_x", "sim_y",    "error_m",  "time_s"};
        for (const auto& c : stats.cases)
          t.rows.push_back({c.mbar, c.mu, c.target.x(), c.target.y(),
                            c.solution.dalpha, c.solution.eps,
                            c.simulated.x(), c.simulated.y(), c.apex_error,
                            c.solution.wall_time});
        write_csv(*out, t);
      }
      emit({{"trials", *trials},
            {"completed", stats.cases.size()},
            {"mean_error_m", stats.mean_error},
            {"std_error_m", stats.std_error},
            {"mean_solve_time_s", stats.mean_solve_time}});
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSimFailure;
  }
  return exit_code;
}
