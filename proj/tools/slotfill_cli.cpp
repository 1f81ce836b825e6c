#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slotfill/experiments.hpp"
#include "slotfill/kernels.hpp"

namespace fs = std::filesystem;
using namespace slotfill;

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out = "out";
  bool full_scale = false;
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double lr = 0.001;
  std::size_t dev_period = 200;
  bool serial = false;
};

void apply_scale(CommonOpts& opts, TrainConfig& cfg) {
  cfg.steps = opts.full_scale ? 50000 : opts.steps;
  cfg.batch_size = opts.full_scale ? 100 : opts.batch;
  cfg.optimizer.learning_rate = opts.lr;
  cfg.seed = opts.seed;
  cfg.dev_period = opts.dev_period;
  cfg.parallel_batch = !opts.serial;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

/// Loads every domain in a directory laid out as <name>.schema.json plus
/// optional <name>.train.jsonl / <name>.test.jsonl.
std::map<std::string, DomainDataset> load_suite(const std::string& dir) {
  std::map<std::string, DomainDataset> suite;
  if (!fs::is_directory(dir)) throw DataError("data dir not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    const std::string suffix = ".schema.json";
    if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix)
      continue;
    std::string stem = name.substr(0, name.size() - suffix.size());
    DomainDataset ds;
    ds.schema = load_schema(entry.path().string());
    fs::path train = fs::path(dir) / (stem + ".train.jsonl");
    fs::path test = fs::path(dir) / (stem + ".test.jsonl");
    if (fs::exists(train)) ds.train = parse_dataset(train.string(), ds.schema);
    if (fs::exists(test)) ds.test = parse_dataset(test.string(), ds.schema);
    suite[ds.schema.domain] = std::move(ds);
  }
  if (suite.empty()) throw DataError("no *.schema.json files in " + dir);
  return suite;
}

void check_fingerprint(const ModelCheckpoint& ckpt, const std::string& embeddings_path,
                       bool force) {
  if (ckpt.embedding_fingerprint.empty()) return;
  std::string fp = file_fingerprint(embeddings_path);
  if (fp != ckpt.embedding_fingerprint) {
    std::cerr << "warning: embedding table fingerprint " << fp
              << " does not match checkpoint fingerprint " << ckpt.embedding_fingerprint << "\n";
    if (!force)
      throw DataError("embedding table mismatch; pass --force to override");
  }
}

int run(int argc, char** argv) {
  CLI::App app{"slot-filling toolkit: single-task, multi-task and description-conditioned taggers"};
  app.require_subcommand(1);

  CommonOpts opts;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic tagged corpus from grammars");
  std::string synth_suite, synth_grammar, synth_schema;
  std::size_t synth_train_n = 200, synth_test_n = 100;
  std::size_t embed_dim = 50;
  bool emit_embeddings = false;
  synth->add_option("--suite-dir", synth_suite,
                    "directory of <name>.schema.json + <name>.grammar.json pairs");
  synth->add_option("--grammar", synth_grammar, "single grammar file");
  synth->add_option("--schema", synth_schema, "single schema file");
  synth->add_option("--train-n", synth_train_n, "training utterances per domain");
  synth->add_option("--test-n", synth_test_n, "test utterances per domain");
  synth->add_flag("--emit-embeddings", emit_embeddings,
                  "also write a deterministic embeddings.txt covering the vocabulary");
  synth->add_option("--embed-dim", embed_dim, "embedding width for --emit-embeddings");
  synth->add_option("--seed", opts.seed, "generation seed");
  synth->add_option("--out", opts.out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string data_dir, embeddings_path, kind_str = "st", target;
  tr->add_option("--data-dir", data_dir, "domain suite directory")->required();
  tr->add_option("--embeddings", embeddings_path, "embedding table")->required();
  tr->add_option("--kind", kind_str, "st|mt|ct");
  tr->add_option("--target", target, "train on this domain only (default: all domains)");
  tr->add_option("--steps", opts.steps);
  tr->add_option("--batch", opts.batch);
  tr->add_option("--lr", opts.lr);
  tr->add_option("--dev-period", opts.dev_period);
  tr->add_option("--seed", opts.seed);
  tr->add_option("--out", opts.out);
  tr->add_flag("--full-scale", opts.full_scale, "full-scale settings: 50000 steps, batch 100");
  tr->add_flag("--serial", opts.serial, "disable OpenMP batch parallelism");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a test set");
  std::string ckpt_path, schema_path, test_path;
  bool force = false;
  ev->add_option("--ckpt", ckpt_path)->required();
  ev->add_option("--schema", schema_path)->required();
  ev->add_option("--test", test_path)->required();
  ev->add_option("--embeddings", embeddings_path)->required();
  ev->add_option("--out", opts.out);
  ev->add_flag("--force", force, "ignore embedding fingerprint mismatch");

  // tag
  auto* tag = app.add_subcommand("tag", "tag one utterance");
  std::string tag_text;
  tag->add_option("--ckpt", ckpt_path)->required();
  tag->add_option("--schema", schema_path)->required();
  tag->add_option("--embeddings", embeddings_path)->required();
  tag->add_option("--text", tag_text)->required();
  tag->add_flag("--force", force);

  // curve
  auto* curve = app.add_subcommand("curve", "learning-curve experiment for one target domain");
  std::vector<std::size_t> curve_points = {0, 5, 20, 100, 1000};
  std::size_t curve_runs = 10;
  std::vector<std::string> curve_kinds = {"st", "mt", "ct"};
  curve->add_option("--data-dir", data_dir)->required();
  curve->add_option("--embeddings", embeddings_path)->required();
  curve->add_option("--target", target)->required();
  curve->add_option("--points", curve_points, "target train sizes");
  curve->add_option("--runs", curve_runs);
  curve->add_option("--kinds", curve_kinds);
  curve->add_option("--steps", opts.steps);
  curve->add_option("--batch", opts.batch);
  curve->add_option("--lr", opts.lr);
  curve->add_option("--dev-period", opts.dev_period);
  curve->add_option("--seed", opts.seed);
  curve->add_option("--out", opts.out);
  curve->add_flag("--full-scale", opts.full_scale);
  curve->add_flag("--serial", opts.serial);

  // zeroshot
  auto* zs = app.add_subcommand("zeroshot", "train on all other domains, evaluate on the target");
  zs->add_option("--data-dir", data_dir)->required();
  zs->add_option("--embeddings", embeddings_path)->required();
  zs->add_option("--target", target)->required();
  std::string zs_kind = "ct";
  zs->add_option("--kind", zs_kind, "model kind (only ct supports 0 samples)");
  zs->add_option("--steps", opts.steps);
  zs->add_option("--batch", opts.batch);
  zs->add_option("--lr", opts.lr);
  zs->add_option("--dev-period", opts.dev_period);
  zs->add_option("--seed", opts.seed);
  zs->add_option("--out", opts.out);
  zs->add_flag("--full-scale", opts.full_scale);
  zs->add_flag("--serial", opts.serial);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every primitive");
  std::size_t gc_seeds = 10;
  gc->add_option("--seeds", gc_seeds, "random seeds per primitive");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // --help is not an error
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  if (*synth) {
    fs::create_directories(opts.out);
    std::vector<std::pair<std::string, std::string>> pairs;  // (schema, grammar)
    if (!synth_suite.empty()) {
      for (const auto& entry : fs::directory_iterator(synth_suite)) {
        std::string name = entry.path().filename().string();
        const std::string suffix = ".schema.json";
        if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix)
          continue;
        std::string stem = name.substr(0, name.size() - suffix.size());
        pairs.emplace_back(entry.path().string(),
                           (fs::path(synth_suite) / (stem + ".grammar.json")).string());
      }
      if (pairs.empty()) throw DataError("no *.schema.json files in " + synth_suite);
    } else if (!synth_grammar.empty() && !synth_schema.empty()) {
      pairs.emplace_back(synth_schema, synth_grammar);
    } else {
      std::cerr << "error: usage: synth needs --suite-dir or both --schema and --grammar\n";
      return 1;
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<std::string> vocab_all;
    for (const auto& [schema_file, grammar_file] : pairs) {
      DomainSchema schema = load_schema(schema_file);
      SynthGrammar grammar = load_grammar(grammar_file);
      auto train = synth_generate(grammar, schema, opts.seed ^ fnv1a64(schema.domain), synth_train_n);
      auto test =
          synth_generate(grammar, schema, (opts.seed + 1) ^ fnv1a64(schema.domain), synth_test_n);
      save_dataset(train, (fs::path(opts.out) / (schema.domain + ".train.jsonl")).string());
      save_dataset(test, (fs::path(opts.out) / (schema.domain + ".test.jsonl")).string());
      save_schema(schema, (fs::path(opts.out) / (schema.domain + ".schema.json")).string());
      auto vocab = grammar_vocabulary(grammar, schema);
      vocab_all.insert(vocab_all.end(), vocab.begin(), vocab.end());
      std::cout << schema.domain << ": " << train.size() << " train, " << test.size()
                << " test utterances\n";
    }
    if (emit_embeddings) {
      EmbeddingTable table = make_random_table(vocab_all, embed_dim, opts.seed);
      save_embeddings(table, (fs::path(opts.out) / "embeddings.txt").string());
      std::cout << "embeddings: " << table.entries.size() << " tokens, dim " << embed_dim << "\n";
    }
    std::cout << "seed: " << opts.seed << "\n";
    return 0;
  }

  if (*tr) {
    auto suite = load_suite(data_dir);
    EmbeddingTable table = load_embeddings(embeddings_path);
    TrainConfig cfg;
    cfg.kind = kind_from_name(kind_str);
    apply_scale(opts, cfg);

    std::map<std::string, DomainTrainData> data;
    for (const auto& [domain, ds] : suite) {
      if (!target.empty() && domain != target) continue;
      DevSplit split = split_dev(ds.train);
      data[domain] = DomainTrainData{ds.schema, split.train_part, split.dev_part};
    }
    if (data.empty()) throw DataError("no training domains selected");

    TrainResult result = train(data, table, cfg);
    result.checkpoint.embedding_fingerprint = file_fingerprint(embeddings_path);

    fs::create_directories(opts.out);
    save_checkpoint(result.checkpoint, (fs::path(opts.out) / "checkpoint.json").string());
    nlohmann::json jlog;
    jlog["loss"] = result.log.loss;
    jlog["dev_scores"] = result.log.dev_scores;
    jlog["best_dev"] = result.log.best_dev;
    jlog["best_step"] = result.log.best_step;
    jlog["seed"] = cfg.seed;
    write_file(fs::path(opts.out) / "train_log.json", jlog.dump(2) + "\n");
    std::cout << "seed: " << cfg.seed << "\n";
    if (result.log.best_dev >= 0)
      std::cout << "best dev weighted F1: " << result.log.best_dev << " at step "
                << result.log.best_step << "\n";
    std::cout << "checkpoint: " << (fs::path(opts.out) / "checkpoint.json").string() << "\n";
    return 0;
  }

  if (*ev || *tag) {
    ModelCheckpoint ckpt = load_checkpoint(ckpt_path);
    check_fingerprint(ckpt, embeddings_path, force);
    EmbeddingTable table = load_embeddings(embeddings_path);
    LoadedModel model = model_from_checkpoint(ckpt);
    DomainSchema schema = load_schema(schema_path);

    if (*tag) {
      auto tokens = preprocess(tag_text);
      if (tokens.empty()) throw DataError("tag: no tokens after preprocessing");
      TaggedUtterance result;
      if (model.kind == ModelKind::ConceptTagger) {
        result = ct_tag_frame(*model.ct, tokens, schema, table);
      } else {
        std::vector<Tensor> embedded = lookup(tokens, table);
        std::vector<Tensor> dists;
        const LabelSpace* labels;
        if (model.kind == ModelKind::SingleTask) {
          dists = model.st->distributions(embedded);
          labels = &model.st->labels();
        } else {
          dists = model.mt->distributions(schema.domain, embedded);
          labels = &model.mt->labels(schema.domain);
        }
        result.tokens = tokens;
        result.tags = decode_tags(dists, *labels);
      }
      for (std::size_t i = 0; i < result.tokens.size(); ++i)
        std::cout << result.tokens[i] << '\t' << result.tags[i] << '\n';
      return 0;
    }

    auto test = parse_dataset(test_path, schema);
    MetricsReport report;
    if (model.kind == ModelKind::SingleTask)
      report = evaluate_st(*model.st, test, table);
    else if (model.kind == ModelKind::MultiTask)
      report = evaluate_mt(*model.mt, schema.domain, test, table);
    else
      report = evaluate_ct(*model.ct, schema, test, table);
    fs::create_directories(opts.out);
    write_file(fs::path(opts.out) / "report.json", metrics_to_json(report) + "\n");
    std::string text = render_metrics_text(report);
    write_file(fs::path(opts.out) / "report.txt", text);
    std::cout << text;
    return 0;
  }

  if (*curve) {
    auto suite = load_suite(data_dir);
    EmbeddingTable table = load_embeddings(embeddings_path);
    TrainConfig cfg;
    apply_scale(opts, cfg);
    std::set<ModelKind> kinds;
    for (const auto& k : curve_kinds) kinds.insert(kind_from_name(k));
    CurveTable result = learning_curve(target, suite, table, cfg, curve_points, curve_runs, kinds);
    fs::create_directories(opts.out);
    write_file(fs::path(opts.out) / "curve.json", curve_to_json(result) + "\n");
    std::string text = render_curve_text(result);
    write_file(fs::path(opts.out) / "curve.txt", text);
    std::cout << "seed: " << cfg.seed << "\n" << text;
    return 0;
  }

  if (*zs) {
    auto suite = load_suite(data_dir);
    EmbeddingTable table = load_embeddings(embeddings_path);
    TrainConfig cfg;
    cfg.kind = kind_from_name(zs_kind);
    apply_scale(opts, cfg);
    MetricsReport report = zero_shot_eval(target, suite, table, cfg);
    fs::create_directories(opts.out);
    write_file(fs::path(opts.out) / "report.json", metrics_to_json(report) + "\n");
    std::string text = render_metrics_text(report);
    write_file(fs::path(opts.out) / "report.txt", text);
    std::cout << "seed: " << cfg.seed << "\n" << text;
    return 0;
  }

  if (*gc) {
    double worst = 0.0;
    auto report = [&](const std::string& name, double err) {
      std::cout << name << ": max relative error " << err << "\n";
      worst = std::max(worst, err);
    };
    const double step = 1e-4;
    for (std::uint64_t s = 0; s < gc_seeds; ++s) {
      Rng rng(s);
      {
        ParameterStore ps;
        Parameter& x = ps.create("x", {5});
        Parameter& W = ps.create("W", {5, 4});
        Parameter& b = ps.create("b", {4});
        init_glorot(x.value, 5, 5, rng);
        init_glorot(W.value, 5, 4, rng);
        init_glorot(b.value, 4, 4, rng);
        double err = grad_check(
            ps,
            [&](Tape& t) {
              return t.mean(t.tanh_(t.affine(t.param(x), t.param(W), t.param(b))));
            },
            step);
        if (s == gc_seeds - 1) report("affine+tanh", err);
        worst = std::max(worst, err);
      }
      {
        ParameterStore ps;
        LstmCellParams cell = make_lstm_cell(ps, "cell", 3, 4, rng);
        Parameter& x = ps.create("x", {3});
        init_glorot(x.value, 3, 3, rng);
        double err = grad_check(
            ps,
            [&](Tape& t) {
              LstmState st{t.constant(Tensor::zeros({4})), t.constant(Tensor::zeros({4}))};
              LstmState out = lstm_cell(t, t.param(x), st, cell);
              return t.mean(t.concat(out.h, out.c));
            },
            step);
        if (s == gc_seeds - 1) report("lstm_cell", err);
        worst = std::max(worst, err);
      }
      {
        ParameterStore ps;
        LstmCellParams f = make_lstm_cell(ps, "f", 3, 2, rng);
        LstmCellParams b = make_lstm_cell(ps, "b", 3, 2, rng);
        std::vector<Parameter*> xs;
        for (int i = 0; i < 3; ++i) {
          xs.push_back(&ps.create("x" + std::to_string(i), {3}));
          init_glorot(xs.back()->value, 3, 3, rng);
        }
        double err = grad_check(
            ps,
            [&](Tape& t) {
              std::vector<NodeRef> seq;
              for (auto* x : xs) seq.push_back(t.param(*x));
              auto out = bilstm(t, seq, f, b);
              NodeRef sum = out[0];
              for (std::size_t i = 1; i < out.size(); ++i) sum = t.add(sum, out[i]);
              return t.mean(sum);
            },
            step);
        if (s == gc_seeds - 1) report("bilstm", err);
        worst = std::max(worst, err);
      }
      {
        ParameterStore ps;
        Parameter& logits = ps.create("logits", {4});
        init_glorot(logits.value, 2, 2, rng);
        double err = grad_check(
            ps, [&](Tape& t) { return t.softmax_xent(t.param(logits), s % 4).loss; }, step);
        if (s == gc_seeds - 1) report("softmax_xent", err);
        worst = std::max(worst, err);
      }
    }
    std::cout << (worst < 1e-3 ? "PASS" : "FAIL") << " (worst " << worst << ", threshold 1e-3)\n";
    return worst < 1e-3 ? 0 : 3;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 3;
  } catch (const DimensionError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  }
}
