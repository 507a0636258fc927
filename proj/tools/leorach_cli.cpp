#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "leorach/checkpoint.hpp"
#include "leorach/config.hpp"
#include "leorach/metrics.hpp"
#include "leorach/train.hpp"

namespace fs = std::filesystem;
using namespace leorach;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::string interference;  // "", "on", "off"
  std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Path to a JSON run configuration");
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides the config)");
  cmd->add_option("--seed", opts.seed, "Use this single seed instead of the configured list");
  cmd->add_option("--interference", opts.interference, "Interference on or off")
      ->check(CLI::IsMember({"on", "off"}));
}

RunConfig load_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig::defaults() : RunConfig::load(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (!opts.interference.empty()) cfg.interference = opts.interference == "on";
  if (opts.seed >= 0) cfg.train.seeds = {static_cast<std::uint64_t>(opts.seed)};
  cfg.validate();
  return cfg;
}

TrainInputs make_inputs(const RunConfig& cfg) {
  TrainInputs inputs;
  inputs.env = cfg.make_env_config();
  inputs.agent = cfg.make_agent_config();
  inputs.train = cfg.train;
  inputs.run_id = cfg.run_id;
  inputs.bits_per_element = cfg.bits_per_element;
  return inputs;
}

fs::path out_file(const RunConfig& cfg, const std::string& suffix) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / (cfg.run_id + "_" + suffix);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------- train

int run_train(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  const TrainInputs inputs = make_inputs(cfg);

  std::vector<MetricsRecord> train_history;
  std::vector<MetricsRecord> eval_history;
  for (std::uint64_t seed : cfg.train.seeds) {
    std::cout << "training " << variant_name(cfg.variant) << " seed " << seed << " ("
              << cfg.train.episodes << " episodes)\n";
    const TrainResult result = train_single(inputs, seed);
    train_history.insert(train_history.end(), result.history.begin(), result.history.end());
    eval_history.insert(eval_history.end(), result.eval_history.begin(),
                        result.eval_history.end());

    const fs::path ckpt = out_file(cfg, variant_name(cfg.variant) + "_seed" +
                                            std::to_string(seed) + ".ckpt");
    save_checkpoint(ckpt, result.best_segments);
    std::cout << "  best eval throughput " << result.best_eval_throughput_bps / 1e6
              << " Mbps, checkpoint " << ckpt.string() << "\n";
  }
  const fs::path train_csv = out_file(cfg, "train_metrics.csv");
  write_metrics_csv(train_csv, train_history);
  const fs::path eval_csv = out_file(cfg, "eval_metrics.csv");
  write_metrics_csv(eval_csv, eval_history);
  std::cout << "wrote " << train_csv.string() << " and " << eval_csv.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

int run_eval(const CommonOptions& opts, const std::string& checkpoint_path) {
  const RunConfig cfg = load_config(opts);
  const SegmentMap segments = load_checkpoint(checkpoint_path);
  const ProtocolAgent agent = ProtocolAgent::from_segments(cfg.make_agent_config(), segments);

  const std::uint64_t seed = cfg.train.seeds.front();
  const EvalResult result =
      evaluate_greedy(cfg.make_env_config(), agent, cfg.train.eval_episodes,
                      mix_seed(seed, 0xEEE), cfg.run_id, seed, 0, cfg.bits_per_element);

  write_metrics_csv(out_file(cfg, "eval.csv"), std::vector<MetricsRecord>{result.metrics});
  write_slots_csv(out_file(cfg, "slots.csv"), result.outcomes);
  const auto grid = utilization_grid(result.outcomes, cfg.constellation.num_satellites,
                                     cfg.budget.num_pilots);
  write_grid_csv(out_file(cfg, "grid.csv"), grid);

  std::cout << "eval " << variant_name(cfg.variant) << " seed " << seed << ": throughput "
            << result.metrics.avg_throughput_bps / 1e6 << " Mbps, collisions "
            << result.metrics.collision_pct << " %, signaling "
            << result.metrics.signaling_bits_per_slot << " bits/slot\n";
  std::cout << "wrote " << out_file(cfg, "eval.csv").string() << ", "
            << out_file(cfg, "slots.csv").string() << ", " << out_file(cfg, "grid.csv").string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- compare

int run_compare(const CommonOptions& opts) {
  const RunConfig base = load_config(opts);
  std::vector<MetricsRecord> rows;
  std::cout << "comparing protocols over seeds {";
  for (std::size_t i = 0; i < base.train.seeds.size(); ++i)
    std::cout << (i ? ", " : "") << base.train.seeds[i];
  std::cout << "}, interference " << (base.interference ? "on" : "off") << "\n";

  for (Variant variant : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
    RunConfig cfg = base;
    cfg.variant = variant;
    cfg.train.variant = variant;
    const TrainInputs inputs = make_inputs(cfg);
    for (std::uint64_t seed : cfg.train.seeds) {
      const TrainResult result = train_single(inputs, seed);
      // re-evaluate the best checkpoint on a fresh set of episodes
      const ProtocolAgent best =
          ProtocolAgent::from_segments(cfg.make_agent_config(), result.best_segments);
      EvalResult eval = evaluate_greedy(cfg.make_env_config(), best, cfg.train.eval_episodes,
                                        mix_seed(seed, 0xC04A), cfg.run_id, seed,
                                        cfg.train.episodes, cfg.bits_per_element);
      rows.push_back(eval.metrics);
      std::cout << "  " << variant_name(variant) << " seed " << seed << ": "
                << eval.metrics.avg_throughput_bps / 1e6 << " Mbps, "
                << eval.metrics.collision_pct << " % collisions\n";
    }
  }

  write_metrics_csv(out_file(base, "compare.csv"), rows);

  std::cout << "\nprotocol        median Mbps   median collision %   signaling bits/slot\n";
  for (Variant variant : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
    std::vector<double> tputs, cols;
    double bits = 0.0;
    for (const auto& r : rows)
      if (r.variant == variant) {
        tputs.push_back(r.avg_throughput_bps / 1e6);
        cols.push_back(r.collision_pct);
        bits = r.signaling_bits_per_slot;
      }
    std::printf("%-15s %11.3f   %18.2f   %19.0f\n", variant_name(variant).c_str(),
                median(tputs), median(cols), bits);
  }
  std::cout << "wrote " << out_file(base, "compare.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- sweeps

int run_sweep_users(const CommonOptions& opts, std::vector<int> user_counts) {
  const RunConfig cfg = load_config(opts);
  if (user_counts.empty())
    for (int j = 2; j <= 10; ++j) user_counts.push_back(j);
  const auto rows = sweep_users(cfg.make_cost_model(), user_counts);
  const fs::path path = out_file(cfg, "sweep_users.csv");
  write_sweep_csv(path, rows);
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return 0;
}

int run_sweep_rho(const CommonOptions& opts, std::vector<double> rho_values) {
  const RunConfig base = load_config(opts);
  const double rmax = max_rate(base.constellation, base.budget);
  if (rho_values.empty()) rho_values = {0.25 * rmax, 0.5 * rmax, rmax};

  std::vector<MetricsRecord> rows;
  std::vector<double> rho_of_row;
  for (double rho : rho_values) {
    RunConfig cfg = base;
    cfg.rho = rho;
    const TrainInputs inputs = make_inputs(cfg);
    for (std::uint64_t seed : cfg.train.seeds) {
      const TrainResult result = train_single(inputs, seed);
      const ProtocolAgent best =
          ProtocolAgent::from_segments(cfg.make_agent_config(), result.best_segments);
      EvalResult eval = evaluate_greedy(cfg.make_env_config(), best, cfg.train.eval_episodes,
                                        mix_seed(seed, 0xABCD), cfg.run_id, seed,
                                        cfg.train.episodes, cfg.bits_per_element);
      rows.push_back(eval.metrics);
      rho_of_row.push_back(rho);
      std::cout << "  rho " << rho / 1e6 << "M seed " << seed << ": "
                << eval.metrics.avg_throughput_bps / 1e6 << " Mbps, "
                << eval.metrics.collision_pct << " %\n";
    }
  }

  const fs::path path = out_file(base, "sweep_rho.csv");
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << "rho," << metrics_csv_header() << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", rho_of_row[i]);
    out << buf << ',' << metrics_csv_row(rows[i]) << "\n";
  }
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- validate

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
  return ok;
}

int run_validate(const CommonOptions& opts) {
  const RunConfig cfg = load_config(opts);
  bool all_ok = true;

  // rate formula vs an inline, independently written evaluation
  {
    Rng rng(2025);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
      LinkBudget b;
      b.bandwidth_hz = rng.uniform(0.1, 100.0);
      b.num_pilots = 1 + rng.uniform_int(8);
      b.pathloss_exponent = rng.uniform(2.0, 4.0);
      b.noise_over_power = rng.uniform(1e-6, 2.0);
      const double d = rng.uniform(0.1, 50.0);
      std::vector<double> interferers;
      for (int k = rng.uniform_int(4); k > 0; --k) interferers.push_back(rng.uniform(0.1, 50.0));
      double denom = b.noise_over_power;
      for (double di : interferers) denom += std::pow(di, -b.pathloss_exponent);
      const double expected =
          b.bandwidth_hz / b.num_pilots * std::log2(1.0 + std::pow(d, -b.pathloss_exponent) / denom);
      const double got = link_rate(d, interferers, b);
      ok = std::fabs(got - expected) <= 1e-12 * std::max(1.0, std::fabs(expected));
    }
    all_ok &= check("rate formula matches independent evaluation (1000 samples)", ok);
  }

  // exhaustive collision/interferer brute force
  {
    bool ok = true;
    for (int J = 1; J <= 3 && ok; ++J) {
      for (int K = 1; K <= 2 && ok; ++K) {
        for (int P = 1; P <= 2 && ok; ++P) {
          const int tc = static_cast<int>(std::pow(K + 1, J));
          const int pc = static_cast<int>(std::pow(P, J));
          for (int t = 0; t < tc && ok; ++t) {
            for (int p = 0; p < pc && ok; ++p) {
              std::vector<AccessAction> actions(static_cast<std::size_t>(J));
              int tt = t, pp = p;
              for (int j = 0; j < J; ++j) {
                actions[static_cast<std::size_t>(j)].target = tt % (K + 1);
                tt /= (K + 1);
                actions[static_cast<std::size_t>(j)].pilot =
                    actions[static_cast<std::size_t>(j)].target == 0 ? 0 : 1 + pp % P;
                pp /= P;
              }
              const auto collided = detect_collisions(actions);
              const auto sets = interferer_sets(actions, collided);
              for (int j = 0; j < J && ok; ++j) {
                bool expect_col = false;
                std::vector<int> expect_set;
                if (actions[static_cast<std::size_t>(j)].target != 0) {
                  for (int k = 0; k < J; ++k) {
                    if (k == j) continue;
                    if (actions[static_cast<std::size_t>(k)].target ==
                            actions[static_cast<std::size_t>(j)].target &&
                        actions[static_cast<std::size_t>(k)].pilot ==
                            actions[static_cast<std::size_t>(j)].pilot)
                      expect_col = true;
                  }
                  if (!expect_col) {
                    for (int k = 0; k < J; ++k) {
                      if (k == j || actions[static_cast<std::size_t>(k)].target == 0) continue;
                      bool k_col = false;
                      for (int m = 0; m < J; ++m) {
                        if (m == k) continue;
                        if (actions[static_cast<std::size_t>(m)].target ==
                                actions[static_cast<std::size_t>(k)].target &&
                            actions[static_cast<std::size_t>(m)].pilot ==
                                actions[static_cast<std::size_t>(k)].pilot)
                          k_col = true;
                      }
                      if (!k_col &&
                          actions[static_cast<std::size_t>(k)].target !=
                              actions[static_cast<std::size_t>(j)].target &&
                          actions[static_cast<std::size_t>(k)].pilot ==
                              actions[static_cast<std::size_t>(j)].pilot)
                        expect_set.push_back(actions[static_cast<std::size_t>(k)].target);
                    }
                    std::sort(expect_set.begin(), expect_set.end());
                    expect_set.erase(std::unique(expect_set.begin(), expect_set.end()),
                                     expect_set.end());
                  }
                }
                ok = collided[static_cast<std::size_t>(j)] == expect_col &&
                     sets[static_cast<std::size_t>(j)] == expect_set;
              }
            }
          }
        }
      }
    }
    all_ok &= check("collision and interferer sets match exhaustive brute force", ok);
  }

  // gradient check per variant on a tiny instance
  {
    bool ok = true;
    Rng rng(7);
    const double h = 1e-5;
    for (Variant variant : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
      AgentConfig acfg;
      acfg.variant = variant;
      acfg.num_users = 2;
      acfg.num_satellites = 2;
      acfg.widths.latent_dim = 3;
      acfg.widths.peer_msg_dim = 2;
      acfg.widths.uplink_raw_dim = 4;
      acfg.widths.uplink_code_dim = 2;
      acfg.widths.downlink_dim = 2;
      acfg.widths.downlink_decoded_dim = 4;
      acfg.lower_hidden = {4};
      acfg.upper_hidden = {4};
      acfg.relay_hidden = {4};
      auto agent = ProtocolAgent::init(acfg, 3);

      std::vector<std::vector<double>> obs(2);
      for (auto& o : obs) {
        o.resize(static_cast<std::size_t>(acfg.observation_size()));
        for (double& v : o) v = rng.uniform(-1.0, 1.0);
      }
      std::vector<std::vector<double>> probe(2);
      for (auto& p : probe) {
        p.resize(static_cast<std::size_t>(acfg.num_actions()));
        for (double& v : p) v = rng.uniform(-1.0, 1.0);
      }
      auto loss = [&]() {
        const auto logits = agent.slot_logits(obs);
        double s = 0.0;
        for (std::size_t j = 0; j < logits.size(); ++j)
          for (std::size_t i = 0; i < logits[j].size(); ++i) s += probe[j][i] * logits[j][i];
        return s;
      };
      SlotTrace trace;
      agent.slot_logits(obs, &trace);
      AgentGrads grads = agent.make_grads();
      grads.zero();
      agent.slot_backward(trace, probe, grads);

      auto check_net = [&](DenseNet& net, const DenseGrads& g) {
        for (std::size_t l = 0; l < net.weights.size() && ok; ++l)
          for (std::size_t i = 0; i < net.weights[l].data.size() && ok; ++i) {
            double& p = net.weights[l].data[i];
            const double saved = p;
            p = saved + h;
            const double up = loss();
            p = saved - h;
            const double down = loss();
            p = saved;
            const double fd = (up - down) / (2.0 * h);
            const double a = g.weights[l].data[i];
            ok = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6}) < 1e-5;
          }
      };
      for (int j = 0; j < 2; ++j) {
        check_net(agent.lower(j), grads.lower[static_cast<std::size_t>(j)]);
        check_net(agent.upper(j), grads.upper[static_cast<std::size_t>(j)]);
        if (variant == Variant::Ce2RACH) {
          check_net(agent.uplink_encoder(j), grads.uplink_encoder[static_cast<std::size_t>(j)]);
          check_net(agent.downlink_decoder(j), grads.downlink_decoder[static_cast<std::size_t>(j)]);
        }
      }
      if (variant == Variant::Ce2RACH) check_net(agent.relay(), grads.relay);
    }
    all_ok &= check("analytic gradients match finite differences (all variants)", ok);
  }

  // signaling topology counts and cost-model agreement at J = 5
  {
    bool ok = true;
    Rng rng(11);
    for (Variant variant : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
      AgentConfig acfg = cfg.make_agent_config();
      acfg.variant = variant;
      acfg.num_users = 5;
      auto agent = ProtocolAgent::init(acfg, 5);
      std::vector<std::vector<double>> obs(5);
      for (auto& o : obs) {
        o.resize(static_cast<std::size_t>(acfg.observation_size()));
        for (double& v : o) v = rng.uniform(-1.0, 1.0);
      }
      TrafficRecord traffic;
      agent.slot_logits(obs, nullptr, &traffic);
      const long expected_count =
          variant == Variant::eRACH ? 0 : (variant == Variant::De2RACH ? 20 : 10);
      SignalingCostModel model = cfg.make_cost_model();
      ok = ok && traffic.count() == expected_count &&
           traffic_bits(traffic, model.bits_per_element) == signaling_cost(variant, 5, model);
    }
    all_ok &= check("signaling topology counts 0 / J(J-1) / 2J and cost agreement", ok);
  }

  // reward normalizer endpoints
  {
    Environment env(cfg.make_env_config());
    const double rmax = env.max_rate();
    const double rho = env.rho();
    const bool ok = env.reward_of(0.0, true) == -1.0 && env.reward_of(rmax, false) == 1.0 &&
                    std::fabs(env.normalize_reward((rmax - rho) / 2.0)) < 1e-12;
    all_ok &= check("reward normalizer maps [-rho, R_max] onto [-1, 1]", ok);
  }

  // determinism of a short training run
  {
    TrainInputs inputs = make_inputs(cfg);
    inputs.train.episodes = 3;
    inputs.train.slots_per_episode = 10;
    inputs.train.eval_every = 3;
    inputs.train.eval_episodes = 1;
    const TrainResult a = train_single(inputs, 1);
    const TrainResult b = train_single(inputs, 1);
    bool ok = serialize_checkpoint(a.final_segments) == serialize_checkpoint(b.final_segments);
    for (std::size_t i = 0; i < a.history.size() && ok; ++i)
      ok = a.history[i].avg_throughput_bps == b.history[i].avg_throughput_bps &&
           a.history[i].collision_pct == b.history[i].collision_pct;
    all_ok &= check("seeded training runs are bit-identical", ok);
  }

  std::cout << (all_ok ? "all checks passed\n" : "SELF-CHECK FAILURES\n");
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and trainer for learned random access in downlink LEO constellations"};
  app.require_subcommand(0, 1);

  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults,
               "Print the default run configuration as JSON and exit");

  CommonOptions train_opts, eval_opts, compare_opts, sweep_users_opts, sweep_rho_opts,
      validate_opts;
  std::string checkpoint_path;
  std::vector<int> user_counts;
  std::vector<double> rho_values;

  CLI::App* train_cmd = app.add_subcommand("train", "Train the configured protocol variant");
  add_common(train_cmd, train_opts);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a saved checkpoint");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file to evaluate")
      ->required();

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "Train and evaluate all three variants with shared seeds");
  add_common(compare_cmd, compare_opts);

  CLI::App* sweep_users_cmd =
      app.add_subcommand("sweep-users", "Signaling cost table over user counts");
  add_common(sweep_users_cmd, sweep_users_opts);
  sweep_users_cmd->add_option("--users", user_counts, "User counts to sweep (default 2..10)");

  CLI::App* sweep_rho_cmd =
      app.add_subcommand("sweep-rho", "Throughput/collision trade-off over the penalty weight");
  add_common(sweep_rho_cmd, sweep_rho_opts);
  sweep_rho_cmd->add_option("--rho", rho_values,
                            "Penalty weights to sweep (default 0.25, 0.5, 1.0 of R_max)");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "Run the oracle and gradient self-check suite");
  add_common(validate_cmd, validate_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump_defaults) {
      std::cout << RunConfig::defaults().to_json_text();
      return 0;
    }
    if (train_cmd->parsed()) return run_train(train_opts);
    if (eval_cmd->parsed()) return run_eval(eval_opts, checkpoint_path);
    if (compare_cmd->parsed()) return run_compare(compare_opts);
    if (sweep_users_cmd->parsed()) return run_sweep_users(sweep_users_opts, user_counts);
    if (sweep_rho_cmd->parsed()) return run_sweep_rho(sweep_rho_opts, rho_values);
    if (validate_cmd->parsed()) return run_validate(validate_opts);
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
