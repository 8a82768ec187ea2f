#include "hamflow/runner.hpp"

#include <Eigen/Core>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "hamflow/checkpoint.hpp"
#include "hamflow/csv.hpp"
#include "hamflow/diagnostics.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/hmc.hpp"

namespace hamflow::cli {

namespace fs = std::filesystem;
using ad::Matrix;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kModeRadius = 1.0;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
}

fs::path make_run_dir(const RunConfig& cfg, const RunOptions& options) {
  if (!options.run_dir.empty()) {
    fs::create_directories(options.run_dir);
    return options.run_dir;
  }
  const std::string stem = to_string(cfg.mode) + "-" + config_hash(cfg) + "-" + utc_timestamp();
  fs::path dir = fs::path(cfg.io.out_dir) / stem;
  for (int k = 1; fs::exists(dir); ++k) dir = fs::path(cfg.io.out_dir) / (stem + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

json manifest(const RunConfig& cfg) {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return json{{"manifest_version", 1},
              {"hamflow_version", kVersion},
              {"eigen_version", eigen.str()},
              {"compiler", __VERSION__},
              {"mode", to_string(cfg.mode)},
              {"seed", cfg.seed},
              {"config_hash", config_hash(cfg)},
              {"created", utc_timestamp()},
              {"config", to_json(cfg)}};
}

json column_stats(const Matrix& samples, const std::vector<std::string>& names) {
  json out = json::object();
  if (samples.rows() == 0) return out;
  const ad::RowVector mean = samples.colwise().mean();
  const ad::RowVector sd = ((samples.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (ad::Index c = 0; c < samples.cols(); ++c) {
    out[names[static_cast<std::size_t>(c)]] = {{"mean", mean(c)}, {"std", sd(c)}};
  }
  return out;
}

void write_losses(const fs::path& path, const std::vector<TrainRecord>& records) {
  Matrix m(static_cast<ad::Index>(records.size()), 3);
  for (std::size_t i = 0; i < records.size(); ++i) {
    m(static_cast<ad::Index>(i), 0) = records[i].epoch;
    m(static_cast<ad::Index>(i), 1) = records[i].loss;
    m(static_cast<ad::Index>(i), 2) = records[i].wall_time;
  }
  csv::write(path.string(), {"epoch", "loss", "wall_time"}, m);
}

class Logger {
 public:
  Logger(std::ostream* os, std::string prefix) : os_(os), prefix_(std::move(prefix)) {}
  void operator()(const std::string& msg) const {
    if (os_ == nullptr) return;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    *os_ << prefix_ << msg << std::endl;
  }

 private:
  std::ostream* os_;
  std::string prefix_;
};

std::function<void(const TrainRecord&)> progress(const Logger& log, int epochs, std::vector<TrainRecord>& sink) {
  const int every = std::max(1, epochs / 20);
  return [&log, &sink, epochs, every](const TrainRecord& r) {
    sink.push_back(r);
    if (r.epoch % every == 0 || r.epoch == epochs) {
      std::ostringstream os;
      os << "epoch " << r.epoch << "/" << epochs << " loss " << r.loss << " (" << r.wall_time << " s)";
      log(os.str());
    }
  };
}

struct Context {
  const RunConfig& cfg;
  fs::path dir;
  Logger log;
  int jobs;
};

Checkpoint load_checkpoint_for(const RunConfig& cfg, RunConfig* model_cfg) {
  Checkpoint ck = Checkpoint::read(cfg.io.checkpoint);
  *model_cfg = from_json(ck.config);
  model_cfg->validate(false);
  return ck;
}

void write_grid(const Context& ctx, const diag::GridDump& grid, const std::string& stem) {
  grid.write_csv((ctx.dir / (stem + ".csv")).string());
  if (ctx.cfg.diagnostics.png) diag::write_png_heatmap(grid, (ctx.dir / (stem + ".png")).string());
}

diag::GridBounds grid_bounds(const RunConfig& cfg) {
  return diag::GridBounds{cfg.diagnostics.x_min, cfg.diagnostics.x_max, cfg.diagnostics.y_min, cfg.diagnostics.y_max};
}

// --- modes ------------------------------------------------------------------

json run_gen_data(const Context& ctx) {
  const Matrix data = training_data(ctx.cfg);
  csv::write((ctx.dir / "samples.csv").string(), parameter_names(ctx.cfg), data);
  ctx.log("wrote " + std::to_string(data.rows()) + " samples");
  return json{{"rows", data.rows()}};
}

json run_train_gen(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Matrix data = training_data(cfg);
  auto model = build_generative(cfg);
  std::vector<TrainRecord> records;
  TrainOptions opts;
  opts.epochs = cfg.optimizer.epochs;
  opts.batch_size = cfg.optimizer.batch_size;
  opts.momentum_draws = cfg.optimizer.momentum_draws;
  opts.adam = cfg.adam_options();
  opts.seed = derive_seed(cfg.seed, 2);
  opts.on_epoch = progress(ctx.log, opts.epochs, records);
  GenerativeTrainer trainer(*model, opts);
  const auto save = [&] {
    write_losses(ctx.dir / "losses.csv", records);
    Checkpoint::capture(model->parameters(), trainer.adam(), trainer.rng(), trainer.epochs_done(), to_json(cfg))
        .write((ctx.dir / "checkpoint.json").string());
  };
  try {
    trainer.train(data);
  } catch (const DivergenceError&) {
    save();
    throw;
  }
  save();

  json result{{"epochs", trainer.epochs_done()},
              {"parameter_count", model->flow().parameter_count()},
              {"loss_convention", model->base_prior().normalized()
                                      ? "negative ELBO"
                                      : "negative ELBO, up to an additive constant (unnormalized prior)"}};
  result["final_loss"] = records.empty() ? json(nullptr) : json(records.back().loss);

  if (cfg.sampling.n > 0) {
    const auto s = model->sample(static_cast<std::size_t>(cfg.sampling.n), cfg.sampling.seed,
                                 cfg.sampling.zero_momentum);
    csv::write((ctx.dir / "samples.csv").string(), parameter_names(cfg), s.positions);
    std::vector<std::string> pnames;
    for (int i = 1; i <= cfg.model.dim; ++i) pnames.push_back("p" + std::to_string(i));
    csv::write((ctx.dir / "momenta.csv").string(), pnames, s.momenta);
    if (cfg.target.kind == "mixture") {
      const auto fractions = mode_fractions(make_mixture(cfg.target), s.positions, kModeRadius);
      result["mode_fractions"] = fractions;
      result["min_mode_fraction"] = *std::min_element(fractions.begin(), fractions.end());
    }
  }
  return result;
}

json run_sample(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  RunConfig mc;
  const Checkpoint ck = load_checkpoint_for(cfg, &mc);
  const auto n = static_cast<std::size_t>(cfg.sampling.n);
  if (mc.mode == Mode::TrainBayes) {
    auto model = build_bayes(mc);
    ck.apply(model->parameters());
    const Matrix s = model->posterior_sample(n, cfg.sampling.seed, cfg.sampling.zero_momentum);
    csv::write((ctx.dir / "samples.csv").string(), parameter_names(mc), s);
    return json{{"rows", s.rows()}, {"stats", column_stats(s, parameter_names(mc))}};
  }
  auto model = build_generative(mc);
  ck.apply(model->parameters());
  const auto s = model->sample(n, cfg.sampling.seed, cfg.sampling.zero_momentum);
  csv::write((ctx.dir / "samples.csv").string(), parameter_names(mc), s.positions);
  std::vector<std::string> pnames;
  for (int i = 1; i <= mc.model.dim; ++i) pnames.push_back("p" + std::to_string(i));
  csv::write((ctx.dir / "momenta.csv").string(), pnames, s.momenta);
  return json{{"rows", s.positions.rows()}};
}

json run_train_bayes(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  auto model = build_bayes(cfg);
  std::vector<TrainRecord> records;
  BayesTrainOptions opts;
  opts.epochs = cfg.optimizer.epochs;
  opts.batch_size = cfg.optimizer.batch_size;
  opts.adam = cfg.adam_options();
  opts.objective = objective_from_string(cfg.bayes.objective);
  opts.seed = derive_seed(cfg.seed, 2);
  opts.on_epoch = progress(ctx.log, opts.epochs, records);
  BayesTrainer trainer(*model, opts);
  const auto save = [&] {
    write_losses(ctx.dir / "losses.csv", records);
    Checkpoint::capture(model->parameters(), trainer.adam(), trainer.rng(), trainer.epochs_done(), to_json(cfg))
        .write((ctx.dir / "checkpoint.json").string());
  };
  try {
    trainer.train();
  } catch (const DivergenceError&) {
    save();
    throw;
  }
  save();

  json result{{"epochs", trainer.epochs_done()},
              {"parameter_count", model->flow().parameter_count()},
              {"objective", cfg.bayes.objective}};
  result["final_loss"] = records.empty() ? json(nullptr) : json(records.back().loss);
  if (cfg.sampling.n > 0) {
    const auto names = parameter_names(cfg);
    const Matrix s = model->posterior_sample(static_cast<std::size_t>(cfg.sampling.n), cfg.sampling.seed,
                                             cfg.sampling.zero_momentum);
    csv::write((ctx.dir / "posterior.csv").string(), names, s);
    diag::cumulative_stats(s).write_csv((ctx.dir / "cumulative.csv").string());
    result["stats"] = column_stats(s, names);
  }
  return result;
}

json run_hmc(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto likelihood = build_likelihood(cfg);
  const auto prior = make_prior(cfg.prior, cfg.model.dim);
  const bool logit = cfg.bayes.constraint == "sigmoid";
  const LogTarget target = [&](ad::Graph& g, ad::Var u) {
    ad::Var theta = logit ? ad::sigmoid(u) : u;
    ad::Var lp = prior->log_density(g, theta) + likelihood->log_likelihood(g, theta);
    if (logit) lp = lp + ad::row_sum(ad::log_sigmoid(u) + ad::log_sigmoid(-u));
    return lp;
  };
  ad::RowVector init = ad::RowVector::Constant(cfg.model.dim, logit ? 0.5 : 0.0);
  if (!cfg.hmc.init.empty()) init = Eigen::Map<const ad::RowVector>(cfg.hmc.init.data(), cfg.model.dim);
  if (logit) {
    if (!((init.array() > 0.0).all() && (init.array() < 1.0).all())) {
      throw ConfigError("hmc.init: entries must lie in (0, 1) with the sigmoid constraint");
    }
    init = (init.array() / (1.0 - init.array())).log().matrix();
  }
  HmcConfig hc = cfg.hmc_config();
  hc.seed = derive_seed(cfg.seed, 3);
  const HmcResult r = hmc_sample(target, hc, init);
  const Matrix chain = logit ? sigmoid_rows(r.chain) : r.chain;
  const auto names = parameter_names(cfg);
  csv::write((ctx.dir / "chain.csv").string(), names, chain);
  if (chain.rows() > 0) diag::cumulative_stats(chain).write_csv((ctx.dir / "cumulative.csv").string());
  std::ostringstream os;
  os << "acceptance " << r.acceptance_rate << " (burn-in " << r.burnin_acceptance_rate << "), step " << r.step_size;
  ctx.log(os.str());
  if (r.acceptance_rate < 0.6 || r.acceptance_rate > 0.9) {
    ctx.log("warning: acceptance rate outside [0.6, 0.9]; consider adjusting hmc.step_size");
  }
  return json{{"acceptance_rate", r.acceptance_rate},
              {"burnin_acceptance_rate", r.burnin_acceptance_rate},
              {"step_size", r.step_size},
              {"stats", column_stats(chain, names)}};
}

json run_diagnose(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  RunConfig mc;
  const Checkpoint ck = load_checkpoint_for(cfg, &mc);
  const auto bounds = grid_bounds(cfg);
  const int res = cfg.diagnostics.resolution;
  const double bw = cfg.diagnostics.bandwidth;
  const auto n = static_cast<std::size_t>(std::max(cfg.sampling.n, 2));
  json result = json::object();

  if (mc.mode == Mode::TrainBayes) {
    auto model = build_bayes(mc);
    ck.apply(model->parameters());
    const Matrix s = cfg.io.samples.empty() ? model->posterior_sample(n, cfg.sampling.seed)
                                            : csv::read(cfg.io.samples).values;
    diag::cumulative_stats(s).write_csv((ctx.dir / "cumulative.csv").string());
    if (s.cols() == 2) write_grid(ctx, diag::kde_density_grid(s, bounds, res, bw), "density_q");
    result["stats"] = column_stats(s, parameter_names(mc));
    return result;
  }

  auto model = build_generative(mc);
  ck.apply(model->parameters());
  if (mc.model.dim != 2) throw ConfigError("diagnose: grid dumps need a 2D model (model.dim = 2)");
  write_grid(ctx, diag::potential_grid(model->flow().potential(), bounds, res, false), "potential");
  write_grid(ctx, diag::potential_grid(model->flow().potential(), bounds, res, true), "potential_shifted");
  const auto drawn = model->sample(n, cfg.sampling.seed, cfg.sampling.zero_momentum);
  const Matrix q = cfg.io.samples.empty() ? drawn.positions : csv::read(cfg.io.samples).values;
  write_grid(ctx, diag::kde_density_grid(q, bounds, res, bw), "density_q");
  write_grid(ctx, diag::kde_density_grid(drawn.momenta, bounds, res, bw), "density_p");
  result["grids"] = {"potential", "potential_shifted", "density_q", "density_p"};
  return result;
}

json run_cosmo_sim(const Context& ctx) {
  const auto data = build_supernova_dataset(ctx.cfg);
  cosmo::write_dataset_csv(data, (ctx.dir / "sn.csv").string());
  std::ofstream os(ctx.dir / "covariance.csv");
  os << "# covariance of mu, " << data.size() << " x " << data.size() << '\n';
  for (ad::Index r = 0; r < data.covariance.rows(); ++r) {
    for (ad::Index c = 0; c < data.covariance.cols(); ++c) {
      os << (c ? "," : "") << csv::format_double(data.covariance(r, c));
    }
    os << '\n';
  }
  return json{{"n_sn", data.size()},
              {"truth", {{"omega_m", ctx.cfg.cosmology.omega_m}, {"h", ctx.cfg.cosmology.h}}},
              {"noise_sigma", ctx.cfg.cosmology.noise_sigma}};
}

std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

json run_sweep(const Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  struct Cell {
    RunConfig cfg;
    std::string name;
    diag::SweepRecord record;
    int exit_code = kExitOk;
    std::string message;
  };
  std::vector<Cell> cells;
  for (const auto& k : cfg.sweep.kinetic) {
    for (int h : cfg.sweep.hidden) {
      for (int l : cfg.sweep.steps) {
        for (double t : cfg.sweep.time) {
          Cell c;
          c.cfg = cfg;
          c.cfg.mode = Mode::TrainGen;
          c.cfg.model.kinetic = k;
          c.cfg.model.hidden = h;
          c.cfg.leapfrog.steps = l;
          c.cfg.leapfrog.time = t;
          c.name = k + "-H" + std::to_string(h) + "-L" + std::to_string(l) + "-T" + format_time(t);
          c.record = diag::SweepRecord{k, h, l, t, {}};
          cells.push_back(std::move(c));
        }
      }
    }
  }
  ctx.log(std::to_string(cells.size()) + " sweep cells, " + std::to_string(ctx.jobs) + " job(s)");

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      Cell& c = cells[i];
      RunOptions o;
      o.run_dir = ctx.dir / "cells" / c.name;
      const RunOutcome out = run(c.cfg, o);
      c.exit_code = out.exit_code;
      c.message = out.message;
      if (out.exit_code == kExitOk || out.exit_code == kExitDivergence) {
        const fs::path losses = o.run_dir / "losses.csv";
        if (fs::exists(losses)) {
          const Matrix m = csv::read(losses.string()).values;
          for (ad::Index r = 0; r < m.rows(); ++r) c.record.losses.push_back(m(r, 1));
        }
      }
      ctx.log("cell " + c.name + (c.exit_code == kExitOk ? " done" : " failed: " + c.message));
    }
  };
  const int jobs = std::max(1, std::min<int>(ctx.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<diag::SweepRecord> records;
  json failed = json::array();
  for (const auto& c : cells) {
    if (c.exit_code == kExitOk) {
      records.push_back(c.record);
    } else {
      failed.push_back({{"cell", c.name}, {"exit_code", c.exit_code}, {"message", c.message}});
    }
  }
  std::vector<std::string> warnings;
  const auto rows = diag::sweep_scatter(records, static_cast<std::size_t>(cfg.sweep.window), &warnings);
  for (const auto& w : warnings) ctx.log("warning: " + w);
  diag::write_sweep_csv(rows, (ctx.dir / "sweep.csv").string());
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"kinetic", r.kinetic}, {"H", r.hidden}, {"L", r.steps}, {"T", r.time}, {"final_loss", r.final_loss}});
  }
  return json{{"cells", cells.size()}, {"rows", std::move(table)}, {"failed", std::move(failed)}, {"warnings", warnings}};
}

}  // namespace

// --- public -----------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::unique_ptr<GenerativeNHF> build_generative(const RunConfig& cfg) {
  return std::make_unique<GenerativeNHF>(cfg.flow_config(), make_prior(cfg.prior, cfg.model.dim),
                                         derive_seed(cfg.seed, 1));
}

cosmo::SupernovaDataset build_supernova_dataset(const RunConfig& cfg) {
  const auto& c = cfg.cosmology;
  if (!c.dataset.empty()) return cosmo::read_dataset_csv(c.dataset, c.covariance, c.noise_sigma);
  const ad::Vector z = cosmo::redshift_grid(static_cast<std::size_t>(c.n_sn), c.z_min, c.z_max);
  return cosmo::synthesize_dataset(cosmo::CosmoParams{c.omega_m, c.h}, z, c.noise_sigma, c.data_seed);
}

std::unique_ptr<Likelihood> build_likelihood(const RunConfig& cfg) {
  if (cfg.likelihood.kind == "cosmology") return std::make_unique<CosmologyLikelihood>(build_supernova_dataset(cfg));
  const auto d = static_cast<ad::Index>(cfg.likelihood.observed.size());
  const ad::RowVector observed = Eigen::Map<const ad::RowVector>(cfg.likelihood.observed.data(), d);
  const double var = cfg.likelihood.sigma * cfg.likelihood.sigma;
  return std::make_unique<GaussianLikelihood>(observed, var * Matrix::Identity(d, d));
}

std::unique_ptr<BayesNHF> build_bayes(const RunConfig& cfg) {
  return std::make_unique<BayesNHF>(cfg.flow_config(), make_prior(cfg.prior, cfg.model.dim), build_likelihood(cfg),
                                    std::make_unique<GaussianPrior>(cfg.model.dim, cfg.bayes.momentum_sigma),
                                    constraint_from_string(cfg.bayes.constraint), derive_seed(cfg.seed, 1));
}

Matrix training_data(const RunConfig& cfg) {
  if (cfg.target.kind == "file") {
    Matrix data = csv::read(cfg.io.dataset).values;
    if (data.cols() != cfg.model.dim || data.rows() == 0) {
      throw ConfigError("io.dataset: expected a non-empty table with model.dim columns");
    }
    return data;
  }
  return mixture_sample(make_mixture(cfg.target), static_cast<std::size_t>(cfg.target.n), cfg.seed);
}

std::vector<std::string> parameter_names(const RunConfig& cfg) {
  const bool bayes = cfg.mode == Mode::TrainBayes || cfg.mode == Mode::Hmc;
  if (bayes && cfg.likelihood.kind == "cosmology") return {"omega_m", "h"};
  std::vector<std::string> names;
  for (int i = 1; i <= cfg.model.dim; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

RunOutcome run(const RunConfig& cfg, const RunOptions& options) {
  RunOutcome out;
  try {
    cfg.validate(true);
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
    return out;
  }
  try {
    out.run_dir = make_run_dir(cfg, options);
  } catch (const std::exception& e) {
    out.exit_code = kExitFailure;
    out.message = e.what();
    return out;
  }
  write_json(out.run_dir / "manifest.json", manifest(cfg));
  Context ctx{cfg, out.run_dir, Logger(options.log, "[" + to_string(cfg.mode) + "] "), std::max(1, options.jobs)};
  try {
    switch (cfg.mode) {
      case Mode::GenData: out.result = run_gen_data(ctx); break;
      case Mode::TrainGen: out.result = run_train_gen(ctx); break;
      case Mode::Sample: out.result = run_sample(ctx); break;
      case Mode::TrainBayes: out.result = run_train_bayes(ctx); break;
      case Mode::Hmc: out.result = run_hmc(ctx); break;
      case Mode::Diagnose: out.result = run_diagnose(ctx); break;
      case Mode::Sweep: out.result = run_sweep(ctx); break;
      case Mode::CosmoSim: out.result = run_cosmo_sim(ctx); break;
    }
    out.result["status"] = "ok";
  } catch (const ConfigError& e) {
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const DivergenceError& e) {
    out.exit_code = kExitDivergence;
    out.message = e.what();
  } catch (const IntegrationError& e) {
    out.exit_code = kExitDivergence;
    out.message = e.what();
  } catch (const LossError& e) {
    out.exit_code = kExitDivergence;
    out.message = e.what();
  } catch (const EncodingError& e) {
    out.exit_code = kExitDivergence;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = kExitFailure;
    out.message = e.what();
  }
  if (out.exit_code != kExitOk) {
    out.result["status"] = "failed";
    out.result["exit_code"] = out.exit_code;
    out.result["message"] = out.message;
    std::ofstream(out.run_dir / "FAILED") << out.message << '\n';
  }
  write_json(out.run_dir / "result.json", out.result);
  return out;
}

}  // namespace hamflow::cli
