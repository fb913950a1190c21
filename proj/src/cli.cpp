#include "replan/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "replan/advisor.hpp"
#include "replan/baselines.hpp"
#include "replan/error.hpp"
#include "replan/remote_advisor.hpp"
#include "replan/scenario_io.hpp"
#include "replan/trainer.hpp"

namespace replan {

namespace {

using ojson = nlohmann::ordered_json;

struct Common {
  std::optional<std::uint64_t> seed;
  bool json_errors = false;
};

std::unique_ptr<Advisor> make_advisor(const AdvisorSettings& s) {
  if (s.mode == AdvisorMode::Mock) return std::make_unique<MockAdvisor>();
  RemoteConfig rc;
  rc.endpoint = s.endpoint;
  rc.model = s.model;
  rc.cache_path = s.cache;
  rc.max_in_flight = s.max_in_flight;
  rc.api_key = RemoteConfig::api_key_from_env();
  if (rc.api_key.empty()) throw AdvisorError("REPLAN_API_KEY is not set");
  return std::make_unique<RemoteAdvisor>(rc, PromptLibrary::load(s.prompt_dir));
}

AdvisorMode parse_mode(const std::string& text) {
  if (text == "remote") return AdvisorMode::Remote;
  return AdvisorMode::Mock;
}

RunConfig load_config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

Region load_planning_region(const std::string& region_path, const std::string& demands_path,
                            const RunConfig& cfg, const std::string& order) {
  Region region = parse_region(region_path, cfg.planning);
  region.set_demands(load_demands(demands_path));
  region.set_demographics(cfg.demographics);
  apply_planning_order(region, PlanningOrder::parse(order));
  return region;
}

void report_error(std::ostream& err, bool as_json, const char* kind, const std::string& msg,
                  const std::string& raw = {}) {
  if (as_json) {
    ojson j;
    j["error"] = kind;
    j["message"] = msg;
    if (!raw.empty()) j["raw"] = raw;
    err << j.dump() << '\n';
  } else {
    err << "error: " << msg << '\n';
  }
}

ojson baseline_record(const std::string& method, int run, std::uint64_t seed,
                      const BaselineResult& r) {
  ojson j;
  j["method"] = method;
  j["run"] = run;
  j["seed"] = seed;
  j["report"] = to_json(r.report);
  j["evaluations"] = r.evaluations;
  j["advisor_failures"] = r.advisor_failures;
  return j;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Land-use planning with an advised PPO policy", "replan"};
  app.require_subcommand(1, 1);
  Common common;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed overriding the configured one");
  app.add_flag("--json-errors", common.json_errors, "Print errors as single-line JSON");
  app.add_flag("--quiet", [](std::int64_t) { set_warnings_enabled(false); }, "Suppress warnings");

  // gen-scenario
  auto* gen = app.add_subcommand("gen-scenario", "Generate a synthetic region file");
  std::string gen_spec, gen_out;
  gen->add_option("--spec", gen_spec, "Scenario spec (JSON)")->required();
  gen->add_option("--out", gen_out, "Region file to write")->required();

  // objectives
  auto* obj = app.add_subcommand("objectives", "Formulate planning demands with an advisor");
  std::string obj_region, obj_config, obj_out, obj_advisor = "mock";
  obj->add_option("--region", obj_region)->required();
  obj->add_option("--config", obj_config);
  obj->add_option("--advisor", obj_advisor)->check(CLI::IsMember({"mock", "remote"}));
  obj->add_option("--out", obj_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the planning policy");
  std::string tr_region, tr_config, tr_demands, tr_out, tr_order = "file";
  bool tr_no_enhance = false, tr_live = false;
  std::optional<int> tr_episodes, tr_workers;
  tr->add_option("--region", tr_region)->required();
  tr->add_option("--config", tr_config);
  tr->add_option("--demands", tr_demands)->required();
  tr->add_option("--out-dir", tr_out)->required();
  tr->add_option("--episodes", tr_episodes);
  tr->add_option("--workers", tr_workers);
  tr->add_option("--order", tr_order, "file, area-desc or shuffle:<seed>");
  tr->add_flag("--no-enhance", tr_no_enhance, "Ignore advisor recommendations");
  tr->add_flag("--live-satisfaction", tr_live, "Score satisfaction with the configured advisor");

  // plan
  auto* pl = app.add_subcommand("plan", "Plan a region greedily with a trained policy");
  std::string pl_region, pl_ckpt, pl_demands, pl_out, pl_config, pl_order = "file";
  std::string pl_advisor = "mock";
  pl->add_option("--region", pl_region)->required();
  pl->add_option("--checkpoint", pl_ckpt)->required();
  pl->add_option("--demands", pl_demands)->required();
  pl->add_option("--out", pl_out)->required();
  pl->add_option("--config", pl_config);
  pl->add_option("--advisor", pl_advisor)->check(CLI::IsMember({"mock", "remote"}));
  pl->add_option("--order", pl_order);

  // baseline
  auto* bl = app.add_subcommand("baseline", "Run a comparison planner");
  std::string bl_method, bl_region, bl_demands, bl_config, bl_results = "baseline_results.jsonl";
  std::string bl_out, bl_order = "file", bl_advisor = "mock";
  int bl_runs = 1;
  std::optional<double> bl_budget;
  bl->add_option("--method", bl_method)->required()->check(CLI::IsMember({"random", "ga", "sa", "llm"}));
  bl->add_option("--region", bl_region)->required();
  bl->add_option("--demands", bl_demands)->required();
  bl->add_option("--config", bl_config);
  bl->add_option("--runs", bl_runs)->check(CLI::PositiveNumber);
  bl->add_option("--budget-seconds", bl_budget);
  bl->add_option("--results", bl_results, "JSON lines file the runs are appended to");
  bl->add_option("--out", bl_out, "Scheme file for the best run");
  bl->add_option("--order", bl_order);
  bl->add_option("--advisor", bl_advisor)->check(CLI::IsMember({"mock", "remote"}));

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a completed scheme");
  std::string ev_scheme, ev_demands, ev_config, ev_advisor = "mock";
  ev->add_option("--scheme", ev_scheme)->required();
  ev->add_option("--demands", ev_demands)->required();
  ev->add_option("--config", ev_config);
  ev->add_option("--advisor", ev_advisor)->check(CLI::IsMember({"mock", "remote"}));

  // render
  auto* rd = app.add_subcommand("render", "Draw a region or scheme as SVG");
  std::string rd_scheme, rd_out;
  bool rd_no_legend = false;
  rd->add_option("--scheme", rd_scheme)->required();
  rd->add_option("--out", rd_out)->required();
  rd->add_flag("--no-legend", rd_no_legend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    for (int i = 1; i < argc; ++i) {
      if (std::string_view(argv[i]) == "--json-errors") common.json_errors = true;
    }
    report_error(err, common.json_errors, "usage", e.what());
    return kExitUsage;
  }
  if (*seed_opt) common.seed = seed_value;

  try {
    if (*gen) {
      ScenarioSpec spec = scenario_spec_from_json(read_json_file(gen_spec));
      if (common.seed) spec.seed = *common.seed;
      write_text_file(gen_out, gen_scenario(spec).dump(2) + "\n");
      return kExitOk;
    }

    if (*obj) {
      RunConfig cfg = load_config_or_default(obj_config);
      cfg.advisor.mode = parse_mode(obj_advisor);
      const Region region = parse_region(obj_region, cfg.planning);
      auto advisor = make_advisor(cfg.advisor);
      const Demands d = advisor->formulate_objectives(cfg.demographics, summarize(region));
      write_demands(d, obj_out);
      out << demands_to_json(d).dump() << '\n';
      return kExitOk;
    }

    if (*tr) {
      RunConfig cfg = load_config_or_default(tr_config);
      if (common.seed) cfg.planning.seed = *common.seed;
      if (tr_episodes) cfg.planning.episodes = *tr_episodes;
      if (tr_workers) cfg.training.workers = *tr_workers;
      cfg.planning.validate();
      const Region region = load_planning_region(tr_region, tr_demands, cfg, tr_order);
      auto configured = make_advisor(cfg.advisor);
      MockAdvisor mock;
      AdvisorSet advisors{configured.get(), tr_live ? configured.get() : &mock};
      TrainOptions options = cfg.training;
      options.out_dir = tr_out;
      PolicyBundle bundle = make_policy(cfg.planning, !tr_no_enhance, cfg.enhance_mode);
      const TrainResult result = train(std::move(bundle), region, advisors, options);
      ojson summary;
      summary["episodes"] = cfg.planning.episodes;
      summary["checkpoint"] = result.last_checkpoint.string();
      summary["evaluation"] = to_json(result.evaluation);
      write_text_file(std::filesystem::path(tr_out) / "evaluation.json", summary.dump(2) + "\n");
      out << summary.dump() << '\n';
      return kExitOk;
    }

    if (*pl) {
      RunConfig cfg = load_config_or_default(pl_config);
      cfg.advisor.mode = parse_mode(pl_advisor);
      const PolicyBundle bundle = load_checkpoint(pl_ckpt);
      cfg.planning = bundle.config;
      const Region region = load_planning_region(pl_region, pl_demands, cfg, pl_order);
      auto advisor = make_advisor(cfg.advisor);
      MockAdvisor mock;
      AdvisorSet advisors{advisor.get(), &mock};
      Rng rng(common.seed.value_or(bundle.config.seed));
      Region planned;
      const Trajectory t =
          rollout_episode(region, bundle, advisors, rng, ActionSelection::Greedy, &planned);
      write_region(planned, pl_out);
      out << to_json(t.report).dump() << '\n';
      return kExitOk;
    }

    if (*bl) {
      RunConfig cfg = load_config_or_default(bl_config);
      cfg.advisor.mode = parse_mode(bl_advisor);
      if (bl_budget) cfg.search.budget_seconds = *bl_budget;
      const Region region = load_planning_region(bl_region, bl_demands, cfg, bl_order);
      const std::uint64_t base_seed = common.seed.value_or(cfg.planning.seed);
      std::unique_ptr<Advisor> advisor;
      if (bl_method == "llm") advisor = make_advisor(cfg.advisor);

      std::ofstream results(bl_results, std::ios::app);
      if (!results) throw IoError("cannot append to " + bl_results);
      std::optional<BaselineResult> best;
      for (int run = 0; run < bl_runs; ++run) {
        const std::uint64_t seed = mix_seed(base_seed, static_cast<std::uint64_t>(run));
        Rng rng(seed);
        BaselineResult r = bl_method == "random" ? random_scheme(region, rng)
                           : bl_method == "ga"   ? ga_optimize(region, cfg.search, rng)
                           : bl_method == "sa"   ? sa_optimize(region, cfg.search, rng)
                                                 : llm_only_plan(region, *advisor, rng);
        const ojson rec = baseline_record(bl_method, run, seed, r);
        results << rec.dump() << '\n';
        out << rec.dump() << '\n';
        if (!best || r.report.total > best->report.total) best = std::move(r);
      }
      if (!results) throw IoError("failed writing " + bl_results);
      if (!bl_out.empty()) write_region(best->region, bl_out);
      return kExitOk;
    }

    if (*ev) {
      RunConfig cfg = load_config_or_default(ev_config);
      cfg.advisor.mode = parse_mode(ev_advisor);
      const Region scheme = parse_region(ev_scheme, cfg.planning);
      if (!scheme.complete()) {
        std::size_t vacant = 0;
        for (const auto& p : scheme.plots()) vacant += p.status == PlotStatus::Vacant ? 1 : 0;
        throw ValidationError(ev_scheme + ": scheme is incomplete, " + std::to_string(vacant) +
                              " plot(s) still vacant");
      }
      const Demands demands = load_demands(ev_demands);
      auto advisor = make_advisor(cfg.advisor);
      const auto ratings = advisor->score_satisfaction(summarize_scheme(scheme, demands));
      out << to_json(score_scheme(scheme, demands, ratings)).dump(2) << '\n';
      return kExitOk;
    }

    if (*rd) {
      write_svg(parse_region(rd_scheme), rd_out, !rd_no_legend);
      return kExitOk;
    }
  } catch (const AdvisorError& e) {
    report_error(err, common.json_errors, "advisor", e.what(), e.raw());
    return kExitAdvisor;
  } catch (const ValidationError& e) {
    report_error(err, common.json_errors, "validation", e.what());
    return kExitValidation;
  } catch (const IoError& e) {
    report_error(err, common.json_errors, "io", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error(err, common.json_errors, "internal", e.what());
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace replan
