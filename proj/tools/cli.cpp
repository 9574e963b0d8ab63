#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "json_config.hpp"
#include "prefnet/core/errors.hpp"
#include "prefnet/datagen/datagen.hpp"
#include "prefnet/eval/eval.hpp"
#include "prefnet/nn/kernels.hpp"
#include "prefnet/pref/fit.hpp"
#include "prefnet/rl/trainer.hpp"
#ifdef PREFNET_HAVE_SERVER
#include "prefnet/serve/server.hpp"
#endif

namespace prefnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::uint64_t seed = 0;
  std::string out;
};

struct TrainOpts {
  std::string topology;
  std::string dataset;
  std::string task = "as";
  std::size_t steps = 20000;
  std::size_t update_interval = 256;
  std::size_t epochs = 4;
  std::size_t minibatch = 64;
  std::size_t episode_length = 32;
  std::size_t hidden = 32;
  std::size_t ggnn_steps = 3;
  std::size_t validation_interval = 0;
  double lr = 3e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::string optimizer = "adam";
  bool action_mask = false;
  bool no_advantage_norm = false;
};

void add_train_options(CLI::App* app, TrainOpts& o) {
  app->add_option("--topology", o.topology, "Topology JSON")->required()->check(CLI::ExistingFile);
  app->add_option("--dataset", o.dataset, "Dataset directory (gen-data output)")->required()->check(CLI::ExistingDirectory);
  app->add_option("--task", o.task, "as | pm")->check(CLI::IsMember({"as", "pm", "AS", "PM"}))->capture_default_str();
  app->add_option("--steps", o.steps, "Total environment steps")->capture_default_str();
  app->add_option("--update-interval", o.update_interval, "Steps between PPO updates")->capture_default_str();
  app->add_option("--epochs", o.epochs)->capture_default_str();
  app->add_option("--minibatch", o.minibatch)->capture_default_str();
  app->add_option("--episode-length", o.episode_length)->capture_default_str();
  app->add_option("--hidden", o.hidden, "GGNN hidden size d")->capture_default_str();
  app->add_option("--ggnn-steps", o.ggnn_steps, "Message-passing steps")->capture_default_str();
  app->add_option("--validation-interval", o.validation_interval, "Updates between validation runs (0 = off)")
      ->capture_default_str();
  app->add_option("--lr", o.lr)->capture_default_str();
  app->add_option("--gamma", o.gamma)->capture_default_str();
  app->add_option("--gae-lambda", o.gae_lambda)->capture_default_str();
  app->add_option("--clip", o.clip)->capture_default_str();
  app->add_option("--entropy", o.entropy)->capture_default_str();
  app->add_option("--value-coef", o.value_coef)->capture_default_str();
  app->add_option("--max-grad-norm", o.max_grad_norm, "0 disables clipping")->capture_default_str();
  app->add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  app->add_flag("--action-mask", o.action_mask, "Mask scale-in at empty cells");
  app->add_flag("--no-advantage-norm", o.no_advantage_norm);
}

void add_common(CLI::App* app, Common& c, const std::string& default_out) {
  app->add_option("--seed", c.seed, "Master seed")->envname("PREFNET_SEED")->capture_default_str();
  c.out = default_out;
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
}

json options_json(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const CLI::App* app, std::uint64_t seed,
                    const json& outputs) {
  json m{{"command", command},
         {"version", kVersion},
         {"kernels", nn::kernels::active().name},
         {"seed", seed},
         {"options", options_json(app)},
         {"outputs", outputs}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

struct Context {
  sim::Topology topology;
  datagen::Dataset dataset;
};

Context load_context(const std::string& topology, const std::string& dataset) {
  Context c{sim::Topology::load(topology), {}};
  c.dataset = datagen::load_dataset(dataset, c.topology.num_nodes());
  return c;
}

const std::vector<datagen::DatasetRecord>& pick_split(const datagen::Dataset& ds, const std::string& split) {
  if (split == "train") return ds.splits.train;
  if (split == "val") return ds.splits.val;
  if (split == "test") return ds.splits.test;
  throw ConfigError("--split: expected train|val|test");
}

rl::TrainConfig make_train_config(const TrainOpts& o, double sla_ms, std::uint64_t seed) {
  rl::TrainConfig c;
  c.env.task = rl::parse_task(o.task);
  c.env.sla_ms = sla_ms;
  c.env.episode_length = o.episode_length;
  c.env.action_mask = o.action_mask;
  c.model.hidden = o.hidden;
  c.model.steps = o.ggnn_steps;
  c.model.pref_dims = rl::preference_dims(c.env.task);
  c.ppo.learning_rate = o.lr;
  c.ppo.update_interval = o.update_interval;
  c.ppo.total_steps = o.steps;
  c.ppo.clip = o.clip;
  c.ppo.gamma = o.gamma;
  c.ppo.gae_lambda = o.gae_lambda;
  c.ppo.epochs = o.epochs;
  c.ppo.minibatch = o.minibatch;
  c.ppo.entropy_coef = o.entropy;
  c.ppo.value_coef = o.value_coef;
  c.ppo.max_grad_norm = o.max_grad_norm;
  c.ppo.normalize_advantages = !o.no_advantage_norm;
  c.ppo.optimizer = o.optimizer == "sgd" ? rl::OptimizerKind::kSgd : rl::OptimizerKind::kAdam;
  c.ppo.seed = seed;
  c.validation_interval = o.validation_interval;
  rl::validate(c.ppo);
  return c;
}

rl::EnvConfig env_for(const rl::Agent& agent, double sla_ms, std::size_t episode_length) {
  rl::EnvConfig env;
  env.task = agent.meta().task;
  env.sla_ms = sla_ms;
  env.episode_length = episode_length;
  return env;
}

std::string agent_label(const std::string& path) { return fs::path(path).stem().string(); }

// ---- gen-data --------------------------------------------------------------

struct GenOpts {
  std::string topology;
  std::string trace;
  datagen::GenConfig config;
};

int cmd_gen_data(const CLI::App* app, const Common& c, const GenOpts& o, std::ostream& out) {
  const auto topology = sim::Topology::load(o.topology);
  const auto ds = o.trace.empty()
                      ? datagen::generate(topology, c.seed, o.config)
                      : datagen::generate_from(topology, datagen::load_trace(o.trace, topology.num_nodes()), c.seed,
                                               o.config);
  datagen::save_dataset(c.out, ds);
  write_manifest(c.out, "gen-data", app, c.seed, {{"dataset", c.out}});
  out << json{{"command", "gen-data"}, {"out", c.out}, {"meta", datagen::to_json(ds.meta)}}.dump() << '\n';
  return kExitOk;
}

// ---- train / pretrain-grid --------------------------------------------------

struct TrainCmd {
  TrainOpts train;
  std::string dist;
  std::string beta_dist;
};

int cmd_train(const CLI::App* app, const Common& c, const TrainCmd& o, std::ostream& out) {
  auto ctx = load_context(o.train.topology, o.train.dataset);
  auto config = make_train_config(o.train, ctx.dataset.meta.sla_ms, c.seed);
  const bool pm = config.env.task == rl::Task::kPowerManagement;
  if (pm && o.beta_dist.empty()) throw ConfigError("--beta-dist: required for --task pm");
  auto source = rl::PreferenceSource::dynamic(
      pref::PreferenceDistribution::parse(o.dist),
      pm ? std::optional(pref::PreferenceDistribution::parse(o.beta_dist)) : std::nullopt);
  fs::create_directories(c.out);
  std::ofstream log(fs::path(c.out) / "train_log.ndjson", std::ios::binary);
  const fs::path ckpt = fs::path(c.out) / "agent.ckpt";
  try {
    auto result = rl::train(ctx.topology, ctx.dataset.splits.train, ctx.dataset.splits.val, source, config, &log);
    result.agent.save(ckpt);
    write_manifest(c.out, "train", app, c.seed, {{"checkpoint", ckpt.string()}, {"log", (fs::path(c.out) / "train_log.ndjson").string()}});
    double tail = 0.0;
    const std::size_t k = std::min<std::size_t>(result.reward_trace.size(), 256);
    for (std::size_t i = result.reward_trace.size() - k; i < result.reward_trace.size(); ++i) tail += result.reward_trace[i];
    out << json{{"command", "train"}, {"checkpoint", ckpt.string()}, {"steps", result.reward_trace.size()},
                {"final_mean_reward", k ? tail / static_cast<double>(k) : 0.0}}.dump()
        << '\n';
  } catch (const rl::TrainingDiverged& e) {
    e.last_good().save(ckpt);
    throw;
  }
  return kExitOk;
}

std::vector<double> parse_list(const std::string& text, const char* field) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(field) + ": '" + item + "' is not a number");
    }
  }
  if (v.empty()) throw ConfigError(std::string(field) + ": empty list");
  return v;
}

struct GridCmd {
  TrainOpts train;
  std::string alphas;
  std::string betas;
  double alpha = 0.0;
};

int cmd_pretrain_grid(const CLI::App* app, const Common& c, const GridCmd& o, std::ostream& out) {
  auto ctx = load_context(o.train.topology, o.train.dataset);
  auto config = make_train_config(o.train, ctx.dataset.meta.sla_ms, c.seed);
  const bool pm = config.env.task == rl::Task::kPowerManagement;
  if (pm == o.betas.empty()) {
    throw ConfigError(pm ? "--betas: required for --task pm" : "--betas: only valid with --task pm");
  }
  if (!pm && o.alphas.empty()) throw ConfigError("--alphas: required for --task as");
  const std::string param = pm ? "beta" : "alpha";
  const auto values = parse_list(pm ? o.betas : o.alphas, pm ? "--betas" : "--alphas");
  const fs::path dir = fs::path(c.out) / "grid";
  fs::create_directories(dir);
  json entries = json::array();
  for (double v : values) {
    auto source = pm ? rl::PreferenceSource::fixed(o.alpha, v) : rl::PreferenceSource::fixed(v);
    const std::string name = param + "_" + pref::format_number(v);
    std::ofstream log(dir / (name + ".ndjson"), std::ios::binary);
    auto result = rl::train(ctx.topology, ctx.dataset.splits.train, ctx.dataset.splits.val, source, config, &log);
    const fs::path ckpt = dir / (name + ".ckpt");
    result.agent.save(ckpt);
    entries.push_back({{"value", v}, {"checkpoint", ckpt.string()}});
  }
  json grid{{"task", rl::task_name(config.env.task)}, {"param", param}, {"entries", entries}};
  if (pm) grid["alpha"] = o.alpha;
  write_text(fs::path(c.out) / "grid.json", grid.dump(2) + "\n");
  write_manifest(c.out, "pretrain-grid", app, c.seed, {{"grid", (fs::path(c.out) / "grid.json").string()}});
  out << json{{"command", "pretrain-grid"}, {"grid", (fs::path(c.out) / "grid.json").string()},
              {"runs", values.size()}}.dump()
      << '\n';
  return kExitOk;
}

// ---- fit-dist ----------------------------------------------------------------

struct FitCmd {
  std::string grid;
  std::string samples;
  std::string topology;
  std::string dataset;
  std::string split = "val";
  std::string effect;
  bool joint_v_max = false;
};

std::vector<pref::EffectSample> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--samples: cannot open " + path);
  std::vector<pref::EffectSample> samples;
  try {
    for (const auto& s : json::parse(in)) {
      samples.push_back({s.at("preference").get<double>(), s.at("effect").get<double>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("--samples: ") + e.what());
  }
  return samples;
}

int cmd_fit_dist(const CLI::App* app, const Common& c, const FitCmd& o, std::ostream& out) {
  std::vector<pref::EffectSample> samples;
  if (!o.samples.empty()) {
    samples = read_samples(o.samples);
  } else {
    if (o.topology.empty() || o.dataset.empty()) throw ConfigError("--topology/--dataset: required with --grid");
    std::ifstream in(o.grid);
    if (!in) throw ConfigError("--grid: cannot open " + o.grid);
    json grid;
    try {
      grid = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("--grid: ") + e.what());
    }
    std::vector<rl::Agent> agents;
    for (const auto& e : grid.at("entries")) {
      const auto path = e.at("checkpoint").get<std::string>();
      if (!fs::exists(path)) throw ConfigError("missing checkpoint " + path);
      agents.push_back(rl::Agent::load(path));
    }
    auto ctx = load_context(o.topology, o.dataset);
    const std::string effect_name = o.effect.empty() ? (grid.value("param", "alpha") == "beta" ? "power" : "vnf_count") : o.effect;
    const auto kind = eval::parse_effect_kind(effect_name);
    samples = eval::collect_effects(agents, ctx.topology, pick_split(ctx.dataset, o.split),
                                    env_for(agents.front(), ctx.dataset.meta.sla_ms, 32), kind);
  }
  pref::FitOptions options;
  options.joint_v_max = o.joint_v_max;
  const auto fit = pref::fit_exponential(samples, options);
  const auto dist = pref::PreferenceDistribution::exponential(fit.lambda);

  json report = pref::fit_report(fit);
  json quantiles = json::object();
  for (double q : {0.2, 0.4, 0.6, 0.8, 0.99}) {
    std::ostringstream v;
    v << std::fixed << std::setprecision(4) << dist.quantile(q);
    quantiles[pref::format_number(q)] = v.str();
  }
  report["quantiles"] = quantiles;
  report["spec"] = dist.spec();
  json sample_json = json::array();
  for (const auto& s : samples) sample_json.push_back({{"preference", s.preference}, {"effect", s.effect}});
  report["samples"] = sample_json;

  write_text(fs::path(c.out) / "dist.spec", dist.spec() + "\n");
  write_text(fs::path(c.out) / "fit_report.json", report.dump(2) + "\n");
  write_manifest(c.out, "fit-dist", app, c.seed,
                 {{"spec", (fs::path(c.out) / "dist.spec").string()}, {"report", (fs::path(c.out) / "fit_report.json").string()}});
  out << json{{"command", "fit-dist"}, {"spec", dist.spec()}, {"rss", fit.rss}, {"iters", fit.iterations},
              {"quantiles", quantiles}}.dump()
      << '\n';
  return kExitOk;
}

// ---- eval-static / eval-dynamic --------------------------------------------

struct EvalCmd {
  std::vector<std::string> checkpoints;
  std::string topology;
  std::string dataset;
  std::string split = "test";
  std::string alphas;
  double beta = -1.0;
  std::string dist;
  std::string beta_dist;
  std::size_t episode_length = 32;
};

void write_tables(const fs::path& dir, const std::vector<std::string>& agents, const std::vector<std::string>& settings,
                  const std::vector<std::vector<double>>& rewards, json& summary) {
  write_text(dir / "rewards.csv", eval::comparison_csv(agents, settings, rewards));
  if (agents.size() < 2) return;
  std::vector<std::vector<double>> z(agents.size(), std::vector<double>(settings.size(), 0.0));
  json flags = json::array();
  for (std::size_t s = 0; s < settings.size(); ++s) {
    std::vector<double> column;
    for (const auto& row : rewards) column.push_back(row[s]);
    const auto norm = eval::normalize_rewards(column);
    for (std::size_t a = 0; a < agents.size(); ++a) z[a][s] = norm.z[a];
    if (norm.zero_variance) flags.push_back(settings[s]);
  }
  write_text(dir / "normalized.csv", eval::comparison_csv(agents, settings, z));
  summary["zero_variance_settings"] = flags;
}

int cmd_eval_static(const CLI::App* app, const Common& c, const EvalCmd& o, std::ostream& out) {
  auto ctx = load_context(o.topology, o.dataset);
  const auto& records = pick_split(ctx.dataset, o.split);
  std::vector<rl::Agent> agents;
  for (const auto& p : o.checkpoints) agents.push_back(rl::Agent::load(p));
  std::vector<double> alphas = o.alphas.empty() ? std::vector<double>{} : parse_list(o.alphas, "--alphas");
  if (alphas.empty()) alphas.push_back(agents.front().nominal_preference().alpha);

  std::vector<std::string> names, settings;
  for (const auto& p : o.checkpoints) names.push_back(agent_label(p));
  for (double a : alphas) settings.push_back("alpha=" + pref::format_number(a));
  std::vector<std::vector<double>> rewards(agents.size(), std::vector<double>(alphas.size(), 0.0));
  json reports = json::array();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto env = env_for(agents[i], ctx.dataset.meta.sla_ms, o.episode_length);
    for (std::size_t s = 0; s < alphas.size(); ++s) {
      rl::Preference p;
      p.alpha = alphas[s];
      if (env.task == rl::Task::kPowerManagement) {
        p.beta = o.beta >= 0.0 ? o.beta : agents[i].nominal_preference().beta;
      }
      const auto report = eval::eval_static(agents[i], ctx.topology, records, env, p);
      rewards[i][s] = report.mean_reward;
      json j = eval::to_json(report);
      j["agent"] = names[i];
      j["setting"] = settings[s];
      write_text(fs::path(c.out) / "reports" / (names[i] + "@" + settings[s] + ".json"), eval::to_json(report, true).dump(2) + "\n");
      reports.push_back(std::move(j));
    }
  }
  json summary{{"command", "eval-static"}, {"reports", reports}};
  write_tables(c.out, names, settings, rewards, summary);
  write_manifest(c.out, "eval-static", app, c.seed, {{"reports", (fs::path(c.out) / "reports").string()}});
  out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_eval_dynamic(const CLI::App* app, const Common& c, const EvalCmd& o, std::ostream& out) {
  auto ctx = load_context(o.topology, o.dataset);
  const auto& records = pick_split(ctx.dataset, o.split);
  const auto alpha = pref::PreferenceDistribution::parse(o.dist);
  std::optional<pref::PreferenceDistribution> beta;
  if (!o.beta_dist.empty()) beta = pref::PreferenceDistribution::parse(o.beta_dist);
  std::vector<std::string> names;
  std::vector<std::vector<double>> rewards;
  json reports = json::array();
  for (const auto& path : o.checkpoints) {
    const auto agent = rl::Agent::load(path);
    const auto env = env_for(agent, ctx.dataset.meta.sla_ms, o.episode_length);
    if (env.task == rl::Task::kPowerManagement && !beta) throw ConfigError("--beta-dist: required for pm checkpoints");
    const auto report = eval::eval_dynamic(agent, ctx.topology, records, env, alpha, beta ? &*beta : nullptr, c.seed);
    names.push_back(agent_label(path));
    rewards.push_back({report.mean_reward});
    json j = eval::to_json(report);
    j["agent"] = names.back();
    j["setting"] = o.dist;
    write_text(fs::path(c.out) / "reports" / (names.back() + ".json"), eval::to_json(report, true).dump(2) + "\n");
    reports.push_back(std::move(j));
  }
  json summary{{"command", "eval-dynamic"}, {"dist", o.dist}, {"reports", reports}};
  write_tables(c.out, names, {o.dist}, rewards, summary);
  write_manifest(c.out, "eval-dynamic", app, c.seed, {{"reports", (fs::path(c.out) / "reports").string()}});
  out << summary.dump() << '\n';
  return kExitOk;
}

// ---- scenario ----------------------------------------------------------------

struct ScenarioCmd {
  std::string checkpoint;
  std::string scenario;
  std::string topology;
  std::string dataset;
  std::string split = "test";
  double alpha = -1.0;
  double beta = -1.0;
};

int cmd_scenario(const CLI::App* app, const Common& c, const ScenarioCmd& o, std::ostream& out) {
  auto ctx = load_context(o.topology, o.dataset);
  const auto agent = rl::Agent::load(o.checkpoint);
  const auto scenario = eval::load_scenario(o.scenario);
  auto pref0 = agent.nominal_preference();
  if (o.alpha >= 0.0) pref0.alpha = o.alpha;
  if (o.beta >= 0.0) pref0.beta = o.beta;
  const auto trajectory = eval::run_scenario(agent, ctx.topology, pick_split(ctx.dataset, o.split),
                                             env_for(agent, ctx.dataset.meta.sla_ms, 32), scenario, pref0);
  std::ostringstream lines;
  double vnf = 0.0, slav = 0.0;
  for (const auto& p : trajectory) {
    lines << eval::to_json(p).dump() << '\n';
    vnf += p.vnf_total;
    slav += p.slav;
  }
  write_text(fs::path(c.out) / "trajectory.ndjson", lines.str());
  write_manifest(c.out, "scenario", app, c.seed, {{"trajectory", (fs::path(c.out) / "trajectory.ndjson").string()}});
  const double n = trajectory.empty() ? 1.0 : static_cast<double>(trajectory.size());
  out << json{{"command", "scenario"}, {"steps", trajectory.size()}, {"mean_vnf", vnf / n}, {"mean_slav", slav / n},
              {"trajectory", (fs::path(c.out) / "trajectory.ndjson").string()}}.dump()
      << '\n';
  return kExitOk;
}

// ---- serve -------------------------------------------------------------------

std::atomic<bool> g_stop{false};

struct ServeCmd {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
};

int cmd_serve(const ServeCmd& o, std::ostream& out) {
#ifdef PREFNET_HAVE_SERVER
  serve::Server server(o.host, o.port);
  server.start();
  out << json{{"command", "serve"}, {"host", o.host}, {"port", server.port()}}.dump() << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
#else
  (void)o;
  (void)out;
  throw ConfigError("serve: this build has no service support (configure with PREFNET_BUILD_SERVICE=ON)");
#endif
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"prefnet: dynamic-preference VNF scaling toolkit", "prefnet"};
  app.config_formatter(std::make_shared<JsonOrTomlConfig>());
  app.set_config("--config", "", "TOML or JSON config file; flags override it");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a simulation dataset");
  add_common(gen_cmd, common, "dataset");
  gen_cmd->add_option("--topology", gen.topology)->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--trace", gen.trace, "Origin-destination trace instead of the synthetic pattern")
      ->check(CLI::ExistingFile);
  gen_cmd->add_option("--horizon", gen.config.horizon)->capture_default_str();
  gen_cmd->add_option("--mean-flows", gen.config.traffic.mean_flows)->capture_default_str();
  gen_cmd->add_option("--period", gen.config.traffic.period)->capture_default_str();
  gen_cmd->add_option("--bw-low", gen.config.requests.bw_low)->capture_default_str();
  gen_cmd->add_option("--bw-high", gen.config.requests.bw_high)->capture_default_str();
  gen_cmd->add_option("--perturb", gen.config.deployment.perturb_fraction)->capture_default_str();
  gen_cmd->add_flag("--min-one-flow", gen.config.requests.min_one_flow);

  TrainCmd train;
  auto* train_cmd = app.add_subcommand("train", "Dynamic-preference training");
  add_common(train_cmd, common, "run");
  add_train_options(train_cmd, train.train);
  train_cmd->add_option("--dist", train.dist, "alpha distribution, e.g. exp:145.45")->required();
  train_cmd->add_option("--beta-dist", train.beta_dist, "beta distribution (pm)");

  GridCmd grid;
  auto* grid_cmd = app.add_subcommand("pretrain-grid", "Fixed-preference baseline runs over a grid");
  add_common(grid_cmd, common, "grid");
  add_train_options(grid_cmd, grid.train);
  grid_cmd->add_option("--alphas", grid.alphas, "Comma-separated alpha grid");
  grid_cmd->add_option("--betas", grid.betas, "Comma-separated beta grid (pm)");
  grid_cmd->add_option("--alpha", grid.alpha, "Fixed alpha for a beta grid")->capture_default_str();

  FitCmd fit;
  auto* fit_cmd = app.add_subcommand("fit-dist", "Fit the exponential preference distribution");
  add_common(fit_cmd, common, "fit");
  auto* grid_opt = fit_cmd->add_option("--grid", fit.grid, "grid.json from pretrain-grid")->check(CLI::ExistingFile);
  auto* samples_opt = fit_cmd->add_option("--samples", fit.samples, "JSON [{preference, effect}]")->check(CLI::ExistingFile);
  grid_opt->excludes(samples_opt);
  fit_cmd->add_option("--topology", fit.topology)->check(CLI::ExistingFile);
  fit_cmd->add_option("--dataset", fit.dataset)->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--split", fit.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  fit_cmd->add_option("--effect", fit.effect, "vnf_count | power (default from the grid)");
  fit_cmd->add_flag("--joint-vmax", fit.joint_v_max, "Fit V_max jointly with lambda");

  EvalCmd ev;
  auto* static_cmd = app.add_subcommand("eval-static", "Greedy evaluation at fixed preferences");
  add_common(static_cmd, common, "eval");
  static_cmd->add_option("--checkpoint", ev.checkpoints)->required()->check(CLI::ExistingFile);
  static_cmd->add_option("--topology", ev.topology)->required()->check(CLI::ExistingFile);
  static_cmd->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  static_cmd->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  static_cmd->add_option("--alphas", ev.alphas, "Comma-separated alpha settings");
  static_cmd->add_option("--beta", ev.beta, "beta for pm checkpoints");
  static_cmd->add_option("--episode-length", ev.episode_length)->capture_default_str();

  auto* dyn_cmd = app.add_subcommand("eval-dynamic", "Greedy evaluation with per-episode sampled preferences");
  add_common(dyn_cmd, common, "eval");
  dyn_cmd->add_option("--checkpoint", ev.checkpoints)->required()->check(CLI::ExistingFile);
  dyn_cmd->add_option("--topology", ev.topology)->required()->check(CLI::ExistingFile);
  dyn_cmd->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  dyn_cmd->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  dyn_cmd->add_option("--dist", ev.dist)->required();
  dyn_cmd->add_option("--beta-dist", ev.beta_dist);
  dyn_cmd->add_option("--episode-length", ev.episode_length)->capture_default_str();

  ScenarioCmd sc;
  auto* sc_cmd = app.add_subcommand("scenario", "Replay a preference / node-failure scenario");
  add_common(sc_cmd, common, "scenario");
  sc_cmd->add_option("--checkpoint", sc.checkpoint)->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--scenario", sc.scenario)->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--topology", sc.topology)->required()->check(CLI::ExistingFile);
  sc_cmd->add_option("--dataset", sc.dataset)->required()->check(CLI::ExistingDirectory);
  sc_cmd->add_option("--split", sc.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  sc_cmd->add_option("--alpha", sc.alpha, "Initial alpha (default: the agent's nominal)");
  sc_cmd->add_option("--beta", sc.beta, "Initial beta (pm)");

  ServeCmd sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the steering service");
  serve_cmd->add_option("--host", sv.host)->capture_default_str();
  serve_cmd->add_option("--port", sv.port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen_cmd, common, gen, out);
    if (*train_cmd) return cmd_train(train_cmd, common, train, out);
    if (*grid_cmd) return cmd_pretrain_grid(grid_cmd, common, grid, out);
    if (*fit_cmd) {
      if (fit.grid.empty() && fit.samples.empty()) throw ConfigError("fit-dist: one of --grid or --samples is required");
      return cmd_fit_dist(fit_cmd, common, fit, out);
    }
    if (*static_cmd) return cmd_eval_static(static_cmd, common, ev, out);
    if (*dyn_cmd) return cmd_eval_dynamic(dyn_cmd, common, ev, out);
    if (*sc_cmd) return cmd_scenario(sc_cmd, common, sc, out);
    if (*serve_cmd) return cmd_serve(sv, out);
  } catch (const ConfigError& e) {
    err << "prefnet: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "prefnet: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace prefnet::cli
