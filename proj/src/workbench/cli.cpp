#include "zsl/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "zsl/core/binary_io.hpp"
#include "zsl/dataset.hpp"
#include "zsl/error.hpp"
#include "zsl/inference.hpp"
#include "zsl/synthetic.hpp"
#include "zsl/text_io.hpp"
#include "zsl/trainer.hpp"

namespace zsl {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "flat key = value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "override a config key (key=value), repeatable");
}

/// Every section is read, so an unknown key anywhere fails fast.
struct Settings {
  TrainConfig train;
  GenerationConfig gen;
  SyntheticSpec synth;
  std::vector<std::pair<std::size_t, std::size_t>> ratios{{2, 1}, {1, 1}, {1, 2}, {1, 3}, {1, 4}};
};

Settings resolve_settings(const CommonOptions& opts) {
  KeyValueConfig kv;
  if (!opts.config_path.empty()) kv = KeyValueConfig::load(opts.config_path);
  for (const auto& o : opts.overrides) kv.set_assignment(o);
  Settings s;
  s.train.read(kv);
  s.gen.read(kv);
  s.synth.read(kv);
  if (auto v = kv.get_string("ablate.ratios")) {
    s.ratios.clear();
    for (auto part : split_fields(*v)) s.ratios.push_back(parse_ratio(part));
    if (s.ratios.empty()) throw ConfigError("ablate.ratios is empty");
  }
  kv.require_all_used();
  return s;
}

void write_report(const EvalReport& report, const ZslDataset& ds, const fs::path& prefix) {
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  write_file_atomic(fs::path(prefix.string() + ".txt"), format_report_text(report, &ds));
  write_file_atomic(fs::path(prefix.string() + ".kv"), format_report_kv(report));
}

std::string summary_line(const std::string& label, const EvalReport& r) {
  std::string out = label + "\tU=" + format_double(r.unseen_top1);
  if (r.seen_top1) out += "\tS=" + format_double(*r.seen_top1);
  if (r.harmonic) out += "\tH=" + format_double(*r.harmonic);
  return out;
}

Checkpoint load_checked(const std::string& ckpt_path, const ZslDataset& ds) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  ckpt.require_input_dims(ds.feature_dim(), ds.attribute_dim());
  return ckpt;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Zero-shot learning with Gaussian distribution embeddings"};
  app.require_subcommand(1);

  // synth
  CommonOptions synth_opts;
  std::string synth_out;
  bool synth_binary = false;
  auto* synth = app.add_subcommand("synth", "write a synthetic zero-shot dataset directory");
  synth->add_option("-o,--out", synth_out, "output dataset directory")->required();
  synth->add_flag("--binary-features", synth_binary, "write features.bin instead of features.csv");
  add_config_options(synth, synth_opts);

  // train
  CommonOptions train_opts;
  std::string train_data, train_out, train_log;
  auto* train_cmd = app.add_subcommand("train", "train both encoders");
  train_cmd->add_option("-d,--data", train_data, "dataset directory")->required();
  train_cmd->add_option("-o,--out", train_out, "checkpoint path")->required();
  train_cmd->add_option("--log", train_log, "run log path (default: <out>.runlog.tsv)");
  add_config_options(train_cmd, train_opts);

  // eval
  CommonOptions eval_opts;
  std::string eval_ckpt, eval_data, eval_mode = "zsl", eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("-k,--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("-d,--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("-m,--mode", eval_mode, "zsl | gzsl_nn | gzsl_generated")
      ->check(CLI::IsMember({"zsl", "gzsl_nn", "gzsl_generated"}));
  eval_cmd->add_option("-o,--out", eval_out, "report prefix (writes <prefix>.txt and .kv)")
      ->required();
  add_config_options(eval_cmd, eval_opts);

  // generate
  CommonOptions gen_opts;
  std::string gen_ckpt, gen_data, gen_out;
  auto* gen_cmd = app.add_subcommand("generate", "sample labeled latent features per class");
  gen_cmd->add_option("-k,--checkpoint", gen_ckpt, "checkpoint path")->required();
  gen_cmd->add_option("-d,--data", gen_data, "dataset directory (attributes, class split)")
      ->required();
  gen_cmd->add_option("-o,--out", gen_out, "output CSV (K values then label)")->required();
  add_config_options(gen_cmd, gen_opts);

  // ablate
  CommonOptions ablate_opts;
  std::string ablate_axis, ablate_data, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "sweep one axis, one report per setting");
  ablate->add_option("axis", ablate_axis, "distances | embeddings | ratio")
      ->required()
      ->check(CLI::IsMember({"distances", "embeddings", "ratio"}));
  ablate->add_option("-d,--data", ablate_data, "dataset directory")->required();
  ablate->add_option("-o,--out-dir", ablate_out, "report directory")->required();
  add_config_options(ablate, ablate_opts);

  // export-embeddings
  std::string exp_ckpt, exp_data, exp_out, exp_split = "all";
  auto* exp = app.add_subcommand("export-embeddings", "write latent means of dataset rows");
  exp->add_option("-k,--checkpoint", exp_ckpt, "checkpoint path")->required();
  exp->add_option("-d,--data", exp_data, "dataset directory")->required();
  exp->add_option("-o,--out", exp_out, "output CSV (K means then label)")->required();
  exp->add_option("--split", exp_split, "all | train_seen | test_seen | test_unseen")
      ->check(CLI::IsMember({"all", "train_seen", "test_seen", "test_unseen"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      const Settings s = resolve_settings(synth_opts);
      s.synth.validate();
      const SyntheticDataset sd = make_synthetic(s.synth);
      save_dataset(sd.dataset, synth_out, synth_binary);
      std::cout << "wrote " << sd.dataset.features.rows() << " rows, "
                << sd.dataset.num_classes() << " classes to " << synth_out << "\n";
    } else if (*train_cmd) {
      const Settings s = resolve_settings(train_opts);
      s.train.validate();
      const ZslDataset ds = load_dataset(train_data);
      TrainResult result = train(ds, s.train);
      save_checkpoint(result.visual, result.semantic, s.train, train_out);
      const std::string log_path = train_log.empty() ? train_out + ".runlog.tsv" : train_log;
      write_file_atomic(log_path, result.log.to_text());
      const auto& last = result.log.steps.back();
      std::cout << "trained " << result.log.steps.size() << " steps; final loss "
                << last.loss << ", violated " << last.violated_fraction << "\n";
    } else if (*eval_cmd) {
      const Settings s = resolve_settings(eval_opts);
      s.gen.validate();
      const EvalMode mode = parse_eval_mode(eval_mode);
      const ZslDataset ds = load_dataset(eval_data);
      const Checkpoint ckpt = load_checked(eval_ckpt, ds);
      const EvalReport report =
          evaluate(ckpt.visual, ckpt.semantic, ds, mode, ckpt.config.distance, &s.gen);
      write_report(report, ds, eval_out);
      std::cout << summary_line(std::string(to_string(mode)), report) << "\n";
    } else if (*gen_cmd) {
      const Settings s = resolve_settings(gen_opts);
      s.gen.validate();
      const ZslDataset ds = load_dataset(gen_data);
      const Checkpoint ckpt = load_checked(gen_ckpt, ds);
      Rng rng(s.gen.seed);
      const LatentDataset latent = generate_latent_dataset(
          ckpt.semantic, ds.attributes, ds.seen_classes(), ds.unseen_classes(), s.gen, rng);
      std::string text;
      for (std::size_t r = 0; r < latent.samples.rows(); ++r) {
        for (double v : latent.samples.row(r)) text += format_double(v) + ",";
        text += std::to_string(latent.labels[r]) + "\n";
      }
      write_file_atomic(gen_out, text);
      std::cout << "wrote " << latent.samples.rows() << " latent samples to " << gen_out << "\n";
    } else if (*ablate) {
      const Settings s = resolve_settings(ablate_opts);
      s.train.validate();
      s.gen.validate();
      const ZslDataset ds = load_dataset(ablate_data);
      fs::create_directories(ablate_out);
      const fs::path dir(ablate_out);
      std::string summary;
      auto run = [&](const std::string& label, TrainConfig cfg, EvalMode mode,
                     const GenerationConfig& gen) {
        const TrainResult r = train(ds, cfg);
        const EvalReport report = evaluate(r.visual, r.semantic, ds, mode, cfg.distance, &gen);
        write_report(report, ds, dir / label);
        summary += summary_line(label, report) + "\n";
        std::cout << summary_line(label, report) << "\n";
      };
      if (ablate_axis == "distances") {
        for (auto kind : {DistanceKind::kWasserstein2, DistanceKind::kKullbackLeibler,
                          DistanceKind::kBhattacharyya}) {
          TrainConfig cfg = s.train;
          cfg.distance = kind;
          run("distance_" + std::string(to_string(kind)), cfg, EvalMode::kZsl, s.gen);
        }
      } else if (ablate_axis == "embeddings") {
        TrainConfig cfg = s.train;
        cfg.distance = DistanceKind::kWasserstein2;
        run("embeddings_distribution", cfg, EvalMode::kGzslNearest, s.gen);
        cfg.distance = DistanceKind::kEuclideanMeans;
        run("embeddings_vector", cfg, EvalMode::kGzslNearest, s.gen);
      } else {
        const TrainResult r = train(ds, s.train);
        for (const auto& [rs, ru] : s.ratios) {
          GenerationConfig gen = s.gen;
          gen.ratio_seen = rs;
          gen.ratio_unseen = ru;
          const EvalReport report = evaluate(r.visual, r.semantic, ds, EvalMode::kGzslGenerated,
                                             s.train.distance, &gen);
          const std::string label = "ratio_" + std::to_string(rs) + "-" + std::to_string(ru);
          write_report(report, ds, dir / label);
          summary += summary_line(label, report) + "\n";
          std::cout << summary_line(label, report) << "\n";
        }
      }
      write_file_atomic(dir / "summary.tsv", summary);
    } else if (*exp) {
      const ZslDataset ds = load_dataset(exp_data);
      const Checkpoint ckpt = load_checked(exp_ckpt, ds);
      std::vector<std::size_t> rows;
      if (exp_split == "all") {
        rows.resize(ds.features.rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      } else {
        rows = ds.rows_with(parse_split(exp_split));
      }
      std::vector<int> labels;
      for (auto r : rows) labels.push_back(ds.labels[r]);
      write_file_atomic(exp_out,
                        export_embeddings(ckpt.visual, ds.features.gather_rows(rows), labels));
      std::cout << "wrote " << rows.size() << " embeddings to " << exp_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("zsl");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(storage.size()), argv.data());
}

}  // namespace zsl
