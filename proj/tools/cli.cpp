#include "cli.hpp"

#include "umps/data.hpp"
#include "umps/errors.hpp"
#include "umps/sampling.hpp"
#include "umps/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace umps::cli {
namespace {

namespace fs = std::filesystem;

struct DataOptions {
  std::string spec;
  std::size_t count = 100;
  std::uint64_t subset_seed = 0;
  double threshold = 0.5;
  std::size_t width = 0;
  std::size_t height = 0;
};

struct TrainOptions {
  TrainConfig cfg;
  std::string trainer = "umps-sd";
  std::size_t init_r_max = 1;
};

struct LoadedData {
  BinaryDataset data;
  std::size_t width = 0;  // 0 when the image shape is unknown
  std::size_t height = 0;
};

// --------------------------------------------------------------- helpers

fs::path out_dir() {
  const char *env = std::getenv("UMPS_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path();
}

fs::path output_path(const std::string &p) {
  fs::path path(p);
  if (path.is_relative() && !out_dir().empty()) path = out_dir() / path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  return path;
}

fs::path input_path(const std::string &p) {
  fs::path path(p);
  if (path.is_relative() && !fs::exists(path) && !out_dir().empty() &&
      fs::exists(out_dir() / path))
    return out_dir() / path;
  return path;
}

std::ofstream open_out(const fs::path &path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

LoadedData load_data(const DataOptions &o) {
  const auto colon = o.spec.find(':');
  if (colon == std::string::npos)
    throw ShapeError("dataset spec '" + o.spec + "' must be bas:N, idx:PATH or file:PATH");
  const std::string kind = o.spec.substr(0, colon);
  const std::string arg = o.spec.substr(colon + 1);
  if (kind == "bas") {
    std::size_t n = 0;
    std::istringstream is(arg);
    if (!(is >> n) || !is.eof() || n < 1)
      throw ShapeError("bas:N needs a positive integer, got '" + arg + "'");
    return {bas_generate(n), n, n};
  }
  if (kind == "idx") {
    const IdxData idx = load_idx(input_path(arg));
    if (idx.images.empty()) throw ShapeError(arg + " is not an IDX image file");
    const std::size_t count = std::min(o.count, idx.images.size());
    BinaryDataset data = idx_subset(idx, count, o.subset_seed, o.threshold);
    return {std::move(data), idx.images.front().width, idx.images.front().height};
  }
  if (kind == "file") {
    BinaryDataset data = load_dataset_text(input_path(arg));
    if (o.width * o.height == data.d) return {std::move(data), o.width, o.height};
    return {std::move(data), 0, 0};
  }
  throw ShapeError("unknown dataset kind '" + kind + "'");
}

/// 1-based comma-separated sites and ranges, e.g. "393-784" or "1,3,5-7".
/// "all" selects every site; "none" or an empty spec selects none.
std::vector<std::size_t> parse_mask(const std::string &spec, std::size_t d) {
  std::vector<std::size_t> sites;
  if (spec == "none") return sites;
  if (spec == "all") {
    sites.resize(d);
    std::iota(sites.begin(), sites.end(), std::size_t{0});
    return sites;
  }
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    std::size_t lo = 0;
    std::size_t hi = 0;
    const auto dash = item.find('-');
    try {
      std::size_t used = 0;
      lo = std::stoul(item.substr(0, dash), &used);
      if (used != item.substr(0, dash).size()) throw std::invalid_argument(item);
      hi = lo;
      if (dash != std::string::npos) {
        hi = std::stoul(item.substr(dash + 1), &used);
        if (used != item.size() - dash - 1) throw std::invalid_argument(item);
      }
    } catch (const std::logic_error &) {
      throw ShapeError("bad mask item '" + item + "'");
    }
    if (lo < 1 || hi > d || lo > hi)
      throw ShapeError("mask range " + item + " outside 1.." + std::to_string(d));
    for (std::size_t s = lo; s <= hi; ++s) sites.push_back(s - 1);
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

std::vector<std::size_t> parse_sizes(const std::string &spec) {
  std::vector<std::size_t> out;
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::size_t used = 0;
    std::size_t v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::logic_error &) {
      used = 0;
    }
    if (used != item.size() || v == 0)
      throw ShapeError("bad dataset size '" + item + "' in --sweep-sizes");
    out.push_back(v);
  }
  if (out.empty()) throw ShapeError("--sweep-sizes is empty");
  return out;
}

std::vector<std::string> header(const std::string &command, const std::string &config,
                                std::uint64_t seed) {
  return {"umps " + std::string(kVersion) + " " + command, "config: " + config,
          "seed: " + std::to_string(seed)};
}

std::string train_config_echo(const DataOptions &d, const TrainOptions &t) {
  std::ostringstream os;
  os << "data=" << d.spec << " trainer=" << t.trainer << " r_max=" << t.cfg.r_max
     << " theta=" << t.cfg.theta << " l_max=" << t.cfg.l_max << " omega=" << t.cfg.omega
     << " log_every=" << t.cfg.log_every << " stop_tol=" << t.cfg.stop_tol
     << " init_r_max=" << t.init_r_max;
  if (d.spec.rfind("idx:", 0) == 0)
    os << " count=" << d.count << " subset_seed=" << d.subset_seed
       << " threshold=" << d.threshold;
  return os.str();
}

void write_pgm_file(const fs::path &path, const std::vector<BitString> &rows,
                    std::size_t width, std::size_t height) {
  if (width * height == 0)
    throw ShapeError("PGM output needs --width and --height matching the model");
  std::vector<BinaryImage> images;
  images.reserve(rows.size());
  for (const auto &r : rows) images.push_back(unflatten(r, width, height));
  auto f = open_out(path, true);
  const auto cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(images.size()))));
  write_pgm(f, images, std::max<std::size_t>(cols, 1));
}

FitResult run_trainer(const TrainOptions &t, const BinaryDataset &data) {
  const std::size_t r0 = t.init_r_max;
  if (r0 > t.cfg.r_max) throw ShapeError("--init-r-max must not exceed --r-max");
  const Mps init = random_init(data.d, r0, t.cfg.seed);
  return t.trainer == "baseline" ? baseline_gd_fit(init, data, t.cfg)
                                 : umps_sd_fit(init, data, t.cfg);
}

// -------------------------------------------------------------- commands

void add_data_options(CLI::App &app, DataOptions &d, bool required) {
  auto *opt = app.add_option("--data", d.spec, "Dataset: bas:N | idx:PATH | file:PATH");
  if (required) opt->required();
  app.add_option("--count", d.count, "Images drawn from an IDX file")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--subset-seed", d.subset_seed, "Seed of the IDX subset selection")
      ->capture_default_str();
  app.add_option("--threshold", d.threshold, "Binarization threshold in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--width", d.width, "Image width for file: datasets");
  app.add_option("--height", d.height, "Image height for file: datasets");
}

void add_train_options(CLI::App &app, TrainOptions &t) {
  app.add_option("--r-max", t.cfg.r_max, "Maximum bond dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--theta", t.cfg.theta, "Learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--l-max", t.cfg.l_max, "Maximum number of loops")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--omega", t.cfg.omega, "Metric weight")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--seed", t.cfg.seed, "Initialization seed")->capture_default_str();
  app.add_option("--init-r-max", t.init_r_max,
                 "Bond bound of the random initial model; bonds grow up to --r-max")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--log-every", t.cfg.log_every, "Updates between trace rows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--stop-tol", t.cfg.stop_tol,
                 "Stop when a loop changes the NLL by less than this (0 disables)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--trainer", t.trainer, "umps-sd | baseline")
      ->check(CLI::IsMember({"umps-sd", "baseline"}))
      ->capture_default_str();
}

int cmd_train(const DataOptions &d, const TrainOptions &t, const std::string &model_out,
              const std::string &trace_out, std::ostream &out) {
  const LoadedData ld = load_data(d);
  const FitResult fit = run_trainer(t, ld.data);

  const fs::path model_path = output_path(model_out);
  save_model(fit.model, model_path);

  const fs::path trace_path = output_path(trace_out);
  {
    auto f = open_out(trace_path);
    for (const auto &h : header("train", train_config_echo(d, t), t.cfg.seed))
      f << "# " << h << '\n';
    fit.trace.write_csv(f);
  }

  const double elapsed = fit.trace.rows.empty() ? 0.0 : fit.trace.rows.back().elapsed_s;
  out.precision(17);
  out << "final_nll=" << fit.final_nll << '\n'
      << "elapsed_s=" << elapsed << '\n'
      << "r_mean=" << fit.model.r_mean() << '\n'
      << "r_max=" << fit.model.r_max() << '\n'
      << "loops=" << fit.loops_run << '\n'
      << "model=" << model_path.string() << '\n'
      << "trace=" << trace_path.string() << '\n';
  return kExitOk;
}

SampleOrder parse_order(const std::string &s) {
  return s == "ltr" ? SampleOrder::LeftToRight : SampleOrder::RightToLeft;
}

int cmd_sample(const std::string &model_in, std::size_t count, std::uint64_t seed,
               const std::string &order, const std::string &samples_out,
               const std::string &pgm_out, std::size_t width, std::size_t height,
               std::ostream &out) {
  const Mps mps = load_model(input_path(model_in));
  SampleRequest req;
  req.count = count;
  req.seed = seed;
  req.order = parse_order(order);
  const auto rows = sample(mps, req);

  const fs::path path = output_path(samples_out);
  {
    auto f = open_out(path);
    std::vector<BitString> entries(rows.begin(), rows.end());
    const auto h = header("sample",
                          "model=" + model_in + " count=" + std::to_string(count) +
                              " order=" + order,
                          seed);
    write_dataset_text(f, entries, h);
  }
  out << "samples=" << path.string() << '\n';
  if (!pgm_out.empty()) {
    if (width * height == 0) {
      // Square images by default.
      const auto side = static_cast<std::size_t>(
          std::llround(std::sqrt(static_cast<double>(mps.length()))));
      if (side * side == mps.length()) width = height = side;
    }
    const fs::path pgm = output_path(pgm_out);
    write_pgm_file(pgm, rows, width, height);
    out << "pgm=" << pgm.string() << '\n';
  }
  return kExitOk;
}

int cmd_reconstruct(const std::string &model_in, const DataOptions &d,
                    const std::string &mask_spec, std::uint64_t seed,
                    const std::string &order, const std::string &recon_out,
                    const std::string &pgm_out, std::ostream &out) {
  const Mps mps = load_model(input_path(model_in));
  const LoadedData ld = load_data(d);
  if (ld.data.d != mps.length())
    throw ShapeError("input strings have length " + std::to_string(ld.data.d) +
                     " but the model has " + std::to_string(mps.length()) + " sites");
  const auto mask = parse_mask(mask_spec, mps.length());

  std::vector<BitString> rows;
  rows.reserve(ld.data.size());
  for (std::size_t i = 0; i < ld.data.size(); ++i) {
    Evidence known;
    for (std::size_t s : mask) known[s] = ld.data.entries[i][s];
    rows.push_back(reconstruct(mps, known, seed, parse_order(order), i));
  }

  const fs::path path = output_path(recon_out);
  {
    auto f = open_out(path);
    const auto h = header("reconstruct",
                          "model=" + model_in + " data=" + d.spec + " mask=" + mask_spec +
                              " order=" + order,
                          seed);
    write_dataset_text(f, rows, h);
  }
  out << "reconstructed=" << path.string() << '\n';
  if (!pgm_out.empty()) {
    const fs::path pgm = output_path(pgm_out);
    write_pgm_file(pgm, rows, ld.width, ld.height);
    out << "pgm=" << pgm.string() << '\n';
  }
  return kExitOk;
}

int cmd_eval(const std::string &model_in, const DataOptions &d, const TrainOptions &t,
             const std::string &sweep_sizes, const std::string &sweep_out,
             std::ostream &out) {
  const LoadedData ld = load_data(d);
  out.precision(17);
  if (!model_in.empty()) {
    const Mps mps = load_model(input_path(model_in));
    out << "nll=" << nll(mps, ld.data, NllForm::Normalized) << '\n'
        << "z=" << partition_function(mps) << '\n'
        << "r_mean=" << mps.r_mean() << '\n'
        << "r_max=" << mps.r_max() << '\n'
        << "bond_dims=";
    const auto bonds = mps.bond_dims();
    for (std::size_t i = 0; i < bonds.size(); ++i) out << (i ? "," : "") << bonds[i];
    out << '\n';
  }
  if (sweep_sizes.empty()) {
    if (model_in.empty()) throw ShapeError("eval needs --model or --sweep-sizes");
    return kExitOk;
  }

  const auto sizes = parse_sizes(sweep_sizes);
  std::vector<std::size_t> order(ld.data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(d.subset_seed);
  std::shuffle(order.begin(), order.end(), rng);

  const fs::path path = output_path(sweep_out);
  auto f = open_out(path);
  for (const auto &h : header("eval", train_config_echo(d, t) + " sweep=" + sweep_sizes,
                              t.cfg.seed))
    f << "# " << h << '\n';
  f << "size,nll,ln_size,loops,elapsed_s\n";
  f.precision(17);
  for (std::size_t n : sizes) {
    if (n > ld.data.size())
      throw ShapeError("sweep size " + std::to_string(n) + " exceeds the " +
                       std::to_string(ld.data.size()) + " available strings");
    std::vector<BitString> subset;
    subset.reserve(n);
    for (std::size_t i = 0; i < n; ++i) subset.push_back(ld.data.entries[order[i]]);
    const BinaryDataset part = make_dataset(std::move(subset), ld.data.source);
    const FitResult fit = run_trainer(t, part);
    const double elapsed =
        fit.trace.rows.empty() ? 0.0 : fit.trace.rows.back().elapsed_s;
    f << n << ',' << fit.final_nll << ',' << std::log(static_cast<double>(n)) << ','
      << fit.loops_run << ',' << elapsed << '\n';
  }
  out << "sweep=" << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Unitary MPS generative modeling with space-decoupled Riemannian training",
               "umps"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  DataOptions data;
  TrainOptions train;
  std::string model_in;
  std::string model_out = "model.umps";
  std::string trace_out = "trace.csv";
  std::string samples_out = "samples.txt";
  std::string recon_out = "reconstructed.txt";
  std::string sweep_out = "sweep.csv";
  std::string pgm_out;
  std::string order = "rtl";
  std::string mask;
  std::string sweep_sizes;
  std::size_t count = 10;
  std::uint64_t sample_seed = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  auto *train_cmd = app.add_subcommand("train", "Train a model and write it with its trace");
  add_data_options(*train_cmd, data, true);
  add_train_options(*train_cmd, train);
  train_cmd->add_option("--model-out", model_out, "Model file")->capture_default_str();
  train_cmd->add_option("--trace", trace_out, "Trace CSV")->capture_default_str();

  auto *sample_cmd = app.add_subcommand("sample", "Draw samples from a model");
  sample_cmd->add_option("--model", model_in, "Model file")->required();
  sample_cmd->add_option("--count", count, "Number of samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Sampling seed")->capture_default_str();
  sample_cmd->add_option("--order", order, "rtl | ltr")
      ->check(CLI::IsMember({"rtl", "ltr"}))
      ->capture_default_str();
  sample_cmd->add_option("--out", samples_out, "Samples text file")->capture_default_str();
  sample_cmd->add_option("--pgm", pgm_out, "Optional PGM grid of the samples");
  sample_cmd->add_option("--width", width, "Image width for --pgm");
  sample_cmd->add_option("--height", height, "Image height for --pgm");

  auto *recon_cmd =
      app.add_subcommand("reconstruct", "Complete images given a mask of known pixels");
  recon_cmd->add_option("--model", model_in, "Model file")->required();
  add_data_options(*recon_cmd, data, true);
  recon_cmd->add_option("--mask", mask,
                        "Known sites, 1-based: e.g. 393-784 or 1,3,5-7; 'all' or 'none'")
      ->required();
  recon_cmd->add_option("--seed", sample_seed, "Sampling seed")->capture_default_str();
  recon_cmd->add_option("--order", order, "rtl | ltr")
      ->check(CLI::IsMember({"rtl", "ltr"}))
      ->capture_default_str();
  recon_cmd->add_option("--out", recon_out, "Completed strings")->capture_default_str();
  recon_cmd->add_option("--pgm", pgm_out, "Optional PGM grid of the completions");

  auto *eval_cmd = app.add_subcommand("eval", "Report NLL, Z and bond dimensions");
  eval_cmd->add_option("--model", model_in, "Model file");
  add_data_options(*eval_cmd, data, true);
  add_train_options(*eval_cmd, train);
  eval_cmd->add_option("--sweep-sizes", sweep_sizes,
                       "Comma-separated |T| values; trains a fresh model for each");
  eval_cmd->add_option("--sweep-out", sweep_out, "Sweep CSV")->capture_default_str();

  std::vector<const char *> argv;
  argv.reserve(args.size());
  for (const auto &a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion &) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: usage: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(data, train, model_out, trace_out, out);
    if (sample_cmd->parsed())
      return cmd_sample(model_in, count, sample_seed, order, samples_out, pgm_out, width,
                        height, out);
    if (recon_cmd->parsed())
      return cmd_reconstruct(model_in, data, mask, sample_seed, order, recon_out,
                             pgm_out, out);
    if (eval_cmd->parsed())
      return cmd_eval(model_in, data, train, sweep_sizes, sweep_out, out);
  } catch (const Error &e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return kExitDomain;
  } catch (const fs::filesystem_error &e) {
    err << "error: io: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception &e) {
    err << "error: internal: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace umps::cli
