// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <fmt/format.h>

#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "cli_support.hpp"
#include "reflex/errors.hpp"
#include "reflex/error_analysis.hpp"
#include "reflex/latent_lab.hpp"
#include "reflex/metrics.hpp"
#include "reflex/phylo.hpp"
#include "reflex/reports.hpp"
#include "reflex/synthetic.hpp"
#include "reflex/training.hpp"

namespace reflex::cli {
namespace {

struct ModelFlags {
  std::string mode = "dense";
  std::size_t lang_dim = 128;
  std::size_t emb_dim = 128;
  std::size_t hidden = 256;
  std::size_t max_len = 64;
};

struct TrainFlags {
  std::size_t epochs = 200;
  std::size_t batch = 256;
  double lr = 1e-3;
  double clip = 0.0;
  std::uint64_t seed = 0;
  bool quiet = false;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--mode", f.mode, "Embedding mode: dense, sigmoid or st");
  sub->add_option("--lang-dim", f.lang_dim, "Language embedding width")->check(CLI::PositiveNumber);
  sub->add_option("--emb-dim", f.emb_dim, "Fused input embedding width")->check(CLI::PositiveNumber);
  sub->add_option("--hidden", f.hidden, "LSTM hidden width (even)")->check(CLI::PositiveNumber);
  sub->add_option("--max-len", f.max_len, "Decode length cap")->check(CLI::PositiveNumber);
}

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--epochs", f.epochs, "Training epochs")->check(CLI::PositiveNumber);
  sub->add_option("--batch", f.batch, "Minibatch size")->check(CLI::PositiveNumber);
  sub->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--clip", f.clip, "Gradient norm clip, 0 disables")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_flag("--quiet", f.quiet, "No progress on stderr");
}

ModelConfig model_config(const ModelFlags& f, std::uint64_t seed) {
  ModelConfig c;
  c.mode = parse_embedding_mode(f.mode);
  c.lang_dim = f.lang_dim;
  c.emb_dim = f.emb_dim;
  c.hidden_dim = f.hidden;
  c.max_decode_len = f.max_len;
  c.seed = seed;
  c.validate();
  return c;
}

TrainConfig train_config(const TrainFlags& f) {
  TrainConfig c;
  c.epochs = f.epochs;
  c.batch_size = f.batch;
  c.learning_rate = f.lr;
  c.clip_norm = f.clip;
  c.seed = f.seed;
  return c;
}

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

CLI::Option* add_out(CLI::App* sub, std::string& out) {
  out = default_out_dir();
  return sub->add_option("--out", out, fmt::format("Output directory (default ${} or ./reflex-out)", kOutDirEnv));
}

std::filesystem::path begin(const CLI::App* sub, const std::string& out) {
  auto dir = prepare_out_dir(out);
  write_manifest(*sub, dir);
  return dir;
}

// --------------------------------------------------------------------------

Command synth_command(CLI::App& app) {
  struct Opts {
    std::string rules, lexicon, out;
    std::size_t words = 500;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synth", "Generate a synthetic corpus from per-language rewrite rules");
  sub->add_option("--rules", o->rules, "Rule file with [language] sections")->required();
  sub->add_option("--lexicon", o->lexicon, "Proto words, one per line (default: random lexicon)");
  sub->add_option("--words", o->words, "Random lexicon size")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Seed for the lexicon and pair order");
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto rules = load_rule_file(o->rules);
            const auto lexicon = o->lexicon.empty() ? random_lexicon(LexiconSpec{}, o->words, derive_seed(o->seed, 1))
                                                    : load_lexicon(o->lexicon);
            const auto corpus = generate_synthetic(lexicon, rules, derive_seed(o->seed, 2));
            auto out = open_output(dir, "corpus.tsv");
            write_corpus(out, corpus);
            fmt::print("{} pairs, {} languages -> {}\n", corpus.size(), corpus.languages().size(),
                       (dir / "corpus.tsv").string());
          }};
}

Command train_command(CLI::App& app) {
  struct Opts {
    std::string corpus, out;
    ModelFlags model;
    TrainFlags train;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("train", "Train one model on a whole corpus");
  sub->add_option("--corpus", o->corpus, "Corpus TSV")->required();
  add_model_flags(sub, o->model);
  add_train_flags(sub, o->train);
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto corpus = load_corpus(o->corpus);
            const auto mc = model_config(o->model, derive_seed(o->train.seed, 1));
            auto tc = train_config(o->train);
            tc.seed = derive_seed(o->train.seed, 2);
            tc.train_on_all = true;
            std::vector<EpochStats> history;
            auto model = train(corpus, mc, tc, [&](const EpochStats& s) {
              history.push_back(s);
              if (!o->train.quiet && (s.epoch % 10 == 0 || s.epoch == 1)) {
                fmt::print(stderr, "epoch {} loss {:.6f}\n", s.epoch, s.loss_per_token);
              }
            });
            save_model(model, dir / "model.ckpt");
            auto loss = open_output(dir, "loss.tsv");
            loss << "epoch\tloss\n";
            for (const auto& s : history) loss << s.epoch << '\t' << fmt::format("{:.9f}", s.loss_per_token) << '\n';
          }};
}

Command kfold_command(CLI::App& app) {
  struct Opts {
    std::string corpus, out;
    ModelFlags model;
    TrainFlags train;
    std::size_t k = 10;
    std::size_t jobs = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("kfold", "Stratified K-fold cross-validation");
  sub->add_option("--corpus", o->corpus, "Corpus TSV")->required();
  add_model_flags(sub, o->model);
  add_train_flags(sub, o->train);
  sub->add_option("--k", o->k, "Number of folds (>= 2)")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  sub->add_option("--jobs", o->jobs, "Folds trained in parallel")->check(CLI::PositiveNumber);
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto corpus = load_corpus(o->corpus);
            const auto mc = model_config(o->model, 0);
            auto tc = train_config(o->train);
            tc.folds = o->k;
            std::map<std::pair<std::size_t, std::size_t>, double> losses;
            const auto result = run_kfold(corpus, mc, tc, o->jobs, [&](std::size_t fold, const EpochStats& s) {
              losses[{fold, s.epoch}] = s.loss_per_token;
              if (!o->train.quiet && s.epoch % 10 == 0) {
                fmt::print(stderr, "fold {} epoch {} loss {:.6f}\n", fold, s.epoch, s.loss_per_token);
              }
            });
            {
              auto out = open_output(dir, "folds.tsv");
              write_fold_metrics(out, result, corpus.languages());
            }
            {
              auto out = open_output(dir, "metrics.tsv");
              write_aggregate_metrics(out, result.aggregate, corpus.languages());
            }
            {
              auto out = open_output(dir, "decoded.tsv");
              write_decoded(out, corpus, result);
            }
            auto out = open_output(dir, "loss.tsv");
            out << "fold\tepoch\tloss\n";
            for (const auto& [key, v] : losses) out << key.first << '\t' << key.second << '\t' << fmt::format("{:.9f}", v) << '\n';
            fmt::print("WER {} PER {} over {} pairs\n", fixed(result.aggregate.overall.wer),
                       fixed(result.aggregate.overall.per), result.aggregate.overall.count);
          }};
}

Command decode_command(CLI::App& app) {
  struct Opts {
    std::string model, input, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("decode", "Greedy-decode etyma with a trained model");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--input", o->input, "language<TAB>etymon[<TAB>gold] lines")->required();
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto model = load_model(o->model);
            std::ifstream in(o->input);
            if (!in) throw IoError(fmt::format("cannot open {}", o->input));
            auto out = open_output(dir, "decoded.tsv");
            out << "language\tetymon\tgold\tpredicted\tcorrect\n";
            std::vector<EvalRecord> records;
            bool all_gold = true;
            std::string line;
            std::size_t number = 0;
            while (std::getline(in, line)) {
              ++number;
              if (!line.empty() && line.back() == '\r') line.pop_back();
              if (line.empty() || line[0] == '#') continue;
              std::vector<std::string> f;
              std::stringstream ls(line);
              for (std::string field; std::getline(ls, field, '\t');) f.push_back(field);
              if (f.size() < 2 || f.size() > 3) {
                throw ParseError(fmt::format("{}:{}: expected language<TAB>etymon[<TAB>gold]", o->input, number), number);
              }
              const auto lang = model.language_id(f[0]);
              const auto x = encode_input(model, f[1]);
              const auto y = greedy_decode(model, x, lang);
              const auto predicted = model.output_vocab().render(y);
              if (f.size() == 3) {
                SegmentSeq gold;
                if (!f[2].empty()) {
                  for (const auto& s : split_segments(f[2])) gold.push_back(model.output_vocab().id(s));
                }
                out << f[0] << '\t' << f[1] << '\t' << f[2] << '\t' << predicted << '\t' << (gold == y ? 1 : 0) << '\n';
                records.push_back({lang, gold, y});
              } else {
                all_gold = false;
                out << f[0] << '\t' << f[1] << "\t\t" << predicted << "\t\n";
              }
            }
            if (all_gold && !records.empty()) {
              auto m = open_output(dir, "metrics.tsv");
              write_aggregate_metrics(m, error_rates(records), model.languages());
            }
          }};
}

Command errors_command(CLI::App& app) {
  struct Opts {
    std::vector<std::string> models, names;
    std::string corpus, test, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("errors", "Rule inventories, SL/OL/U error classes and cross-model agreement");
  sub->add_option("--model", o->models, "Checkpoints (repeatable)")->required();
  sub->add_option("--name", o->names, "Display names, one per model (default: file stem)");
  sub->add_option("--corpus", o->corpus, "Gold corpus the rule inventories are read from")
      ->required();
  sub->add_option("--test", o->test, "Pairs to predict and classify (default: --corpus)");
  add_out(sub, o->out);
  return {sub, [sub, o] {
            if (!o->names.empty() && o->names.size() != o->models.size()) {
              throw ArgumentError("--name must be given once per --model");
            }
            const auto dir = begin(sub, o->out);
            const auto corpus = load_corpus(o->corpus);
            const auto test = o->test.empty() ? load_corpus(o->corpus) : load_corpus(o->test);
            std::vector<BreakdownRow> rows;
            std::vector<std::set<std::size_t>> wrong;
            std::vector<std::string> labels;
            for (std::size_t m = 0; m < o->models.size(); ++m) {
              const auto model = load_model(o->models[m]);
              const auto name = o->names.empty() ? std::filesystem::path(o->models[m]).stem().string() : o->names[m];
              labels.push_back(name);
              const auto gold = pairs_for_model(corpus, model);
              const auto inventory = extract_rules(model, gold);
              {
                auto out = open_output(dir, fmt::format("rules_{}.tsv", name));
                write_rules(out, model, inventory);
              }
              const auto pairs = pairs_for_model(test, model);
              std::vector<SegmentSeq> predictions;
              std::set<std::size_t> errors;
              for (std::size_t i = 0; i < pairs.size(); ++i) {
                predictions.push_back(greedy_decode(model, pairs[i].etymon, pairs[i].language));
                if (predictions.back() != pairs[i].reflex) errors.insert(i);
              }
              wrong.push_back(std::move(errors));
              for (std::size_t l = 0; l < model.languages().size(); ++l) {
                std::vector<CognatePair> sub_pairs;
                std::vector<SegmentSeq> sub_pred;
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                  if (pairs[i].language != static_cast<LanguageId>(l)) continue;
                  sub_pairs.push_back(pairs[i]);
                  sub_pred.push_back(predictions[i]);
                }
                if (sub_pairs.empty()) continue;
                rows.push_back({name, model.languages()[l], classify_errors(model, inventory, sub_pairs, sub_pred)});
              }
              rows.push_back({name, "ALL", classify_errors(model, inventory, pairs, predictions)});
            }
            {
              auto out = open_output(dir, "breakdown.tsv");
              write_breakdowns(out, rows);
            }
            auto out = open_output(dir, "agreement.tsv");
            write_agreement(out, labels, error_agreement(wrong));
          }};
}

Command tree_command(CLI::App& app) {
  struct Opts {
    std::string model, reference, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("tree", "Neighbor-joined tree from cosine distances between language embeddings");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--reference", o->reference, "Reference Newick tree for the quartet distance");
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto model = load_model(o->model);
            std::vector<std::pair<std::string, std::vector<double>>> embeddings;
            for (std::size_t l = 0; l < model.languages().size(); ++l) {
              const auto embedding = read_language_embedding(model, static_cast<LanguageId>(l));
              const auto z = embedding.values();
              embeddings.emplace_back(model.languages()[l], std::vector<double>(z.begin(), z.end()));
            }
            const auto d = cosine_distance_matrix(embeddings);
            {
              auto out = open_output(dir, "distances.tsv");
              write_distance_matrix(out, d);
            }
            const auto tree = neighbor_join(d);
            {
              auto out = open_output(dir, "tree.nwk");
              out << emit_newick(tree) << '\n';
            }
            if (!o->reference.empty()) {
              std::ifstream in(o->reference);
              if (!in) throw IoError(fmt::format("cannot open {}", o->reference));
              std::stringstream text;
              text << in.rdbuf();
              const auto reference = parse_newick(text.str());
              const auto q = quartet_counts(tree, reference);
              auto out = open_output(dir, "gqd.tsv");
              out << "differing\tresolved_reference\ttotal\tGQD\n"
                  << q.differing << '\t' << q.resolved_reference << '\t' << q.total << '\t' << fixed(q.distance()) << '\n';
              fmt::print("GQD {}\n", fixed(q.distance()));
            }
            fmt::print("{}\n", emit_newick(tree, false));
          }};
}

Command heatmap_command(CLI::App& app) {
  struct Opts {
    std::string model, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("heatmap", "0/1 activity matrix of straight-through language embeddings");
  sub->add_option("--model", o->model, "Checkpoint (st mode)")->required();
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto h = activity_heatmap(load_model(o->model));
            auto out = open_output(dir, "heatmap.tsv");
            write_heatmap(out, h);
            for (std::size_t l = 0; l < h.languages.size(); ++l) {
              fmt::print("{}\t{} active\n", h.languages[l], h.active_per_language[l]);
            }
            fmt::print("{} of {} dimensions inactive in every language\n", h.inactive_dims, h.dims);
          }};
}

Command neighbors_command(CLI::App& app) {
  struct Opts {
    std::string model, language, etymon, out;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("neighbors", "Decode an etymon under every single-bit flip of a language embedding");
  sub->add_option("--model", o->model, "Checkpoint (st mode)")->required();
  sub->add_option("--language", o->language, "Language name")->required();
  sub->add_option("--etymon", o->etymon, "Space-separated segments")->required();
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto model = load_model(o->model);
            const auto report = nearest_neighbors(model, model.language_id(o->language), encode_input(model, o->etymon));
            auto out = open_output(dir, "neighbors.tsv");
            write_perturbation(out, model, report);
            fmt::print("{} unique outputs over {} flips\n", report.unique_outputs, report.flips.size());
          }};
}

std::vector<std::string> default_regimes(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::kDense:
      return {"gaussian:0.01", "gaussian:0.1", "gaussian:1", "gaussian:10"};
    case EmbeddingMode::kSigmoid:
      return {"beta:0.01", "beta:0.1", "beta:1", "beta:10"};
    case EmbeddingMode::kStraightThrough:
      break;
  }
  return {"binomial:0.2", "binomial:0.4", "binomial:0.6", "binomial:0.8"};
}

Command sample_command(CLI::App& app) {
  struct Opts {
    std::string model, etyma, corpus, out;
    std::vector<std::string> regimes;
    std::size_t count = 100;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("sample", "Decode etyma under randomly sampled language embeddings");
  sub->add_option("--model", o->model, "Checkpoint")->required();
  sub->add_option("--regime", o->regimes, "family:value[:samples], e.g. binomial:0.2 (default: four per mode)");
  auto* etyma = sub->add_option("--etyma", o->etyma, "Etyma, one per line");
  sub->add_option("--corpus", o->corpus, "Draw --count distinct etyma from this corpus")->excludes(etyma);
  sub->add_option("--count", o->count, "Etyma drawn from --corpus")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Seed for etymon choice and samples");
  add_out(sub, o->out);
  return {sub, [sub, o] {
            if (o->etyma.empty() == o->corpus.empty()) throw ArgumentError("give exactly one of --etyma or --corpus");
            const auto dir = begin(sub, o->out);
            const auto model = load_model(o->model);
            std::vector<SegmentSeq> etyma;
            if (!o->etyma.empty()) {
              std::ifstream in(o->etyma);
              if (!in) throw IoError(fmt::format("cannot open {}", o->etyma));
              for (std::string line; std::getline(in, line);) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || line[0] == '#') continue;
                etyma.push_back(encode_input(model, line));
              }
            } else {
              const auto corpus = load_corpus(o->corpus);
              std::set<SegmentSeq> seen;
              std::vector<SegmentSeq> pool;
              for (const auto& p : pairs_for_model(corpus, model)) {
                if (seen.insert(p.etymon).second) pool.push_back(p.etymon);
              }
              Rng rng(derive_seed(o->seed, 1));
              rng.shuffle(pool);
              pool.resize(std::min(pool.size(), o->count));
              etyma = std::move(pool);
            }
            const auto regimes = o->regimes.empty() ? default_regimes(model.mode()) : o->regimes;
            auto summary = open_output(dir, "samples.tsv");
            summary << "regime\tmean_unique\tunterminated\n";
            for (std::size_t r = 0; r < regimes.size(); ++r) {
              const auto regime = SamplingRegime::parse(regimes[r]);
              const auto report = sample_latent(model, regime, etyma, derive_seed(o->seed, 100 + r));
              auto out = open_output(dir, fmt::format("samples_{}.tsv", r));
              write_sample_report(out, model, report);
              summary << regime.to_string() << '\t' << fixed(report.mean_unique) << '\t' << report.unterminated << '\n';
              fmt::print("{}\tmean unique {}\n", regime.to_string(), fixed(report.mean_unique));
            }
          }};
}

Command echo_command(CLI::App& app) {
  struct Opts {
    std::string model, cohorts, out;
    std::vector<double> p{0.2, 0.4, 0.6, 0.8};
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("echo", "Final-segment agreement of echo-form cohorts under sampled binary embeddings");
  sub->add_option("--model", o->model, "Checkpoint (st mode)")->required();
  sub->add_option("--cohorts", o->cohorts, "base<TAB>substitutes[<TAB>exclude regex] lines")
      ->required();
  sub->add_option("--p", o->p, "Bernoulli probabilities")->capture_default_str();
  sub->add_option("--seed", o->seed, "Sampling seed");
  add_out(sub, o->out);
  return {sub, [sub, o] {
            const auto dir = begin(sub, o->out);
            const auto model = load_model(o->model);
            const auto report = echo_experiment(model, load_cohorts(o->cohorts), o->p, o->seed);
            {
              auto out = open_output(dir, "echo.tsv");
              write_echo_report(out, report);
            }
            auto out = open_output(dir, "echo_ratios.tsv");
            out << "p\tpair\tratio\n";
            for (const auto& r : report.regimes) {
              for (std::size_t i = 0; i < r.ratios.size(); ++i) out << fixed(r.p) << '\t' << i << '\t' << fixed(r.ratios[i]) << '\n';
              fmt::print("p={} proportion {} ({} pairs)\n", fixed(r.p), fixed(r.proportion), r.pairs);
            }
            if (report.skipped_cohorts > 0) {
              fmt::print(stderr, "warning: {} cohort(s) had fewer than two members and were skipped\n",
                         report.skipped_cohorts);
            }
          }};
}

}  // namespace

std::vector<Command> register_commands(CLI::App& app) {
  return {train_command(app),   kfold_command(app),     decode_command(app), errors_command(app),
          tree_command(app),    heatmap_command(app),   neighbors_command(app), sample_command(app),
          echo_command(app),    synth_command(app)};
}

}  // namespace reflex::cli
