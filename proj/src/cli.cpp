#include "rse/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rse/error.hpp"
#include "rse/evaluation.hpp"
#include "rse/io.hpp"
#include "rse/training.hpp"

namespace rse {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_link_report(std::ostream& out, const EvalReport& r) {
  auto row = [&](const std::string& scope, const EvalReport& rep) {
    out << scope << '\t' << format_decimal(*rep.mrr) << '\t' << format_decimal(rep.hits_at.at(1))
        << '\t' << format_decimal(rep.hits_at.at(3)) << '\t' << format_decimal(rep.hits_at.at(10))
        << '\t' << rep.count << '\n';
  };
  out << "scope\tmrr\thits@1\thits@3\thits@10\tcount\n";
  row("all", r);
  for (const auto& [rel, sub] : r.per_relation) row(rel, sub);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failure on " + path.string());
}

ScoreWeights all_relations(const RelationTable& table) {
  std::vector<std::pair<std::string, double>> w;
  for (const auto& n : table.names()) w.emplace_back(n, 1.0);
  return ScoreWeights(std::move(w));
}

struct TrainArgs {
  std::string triples, relations, dev_pairs, dev_linkpred, dev_weights, out, config, log;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto names = split_list(a.relations);
  if (names.empty()) throw Error(ErrorKind::Config, "--relations needs at least one name");
  TrainConfig cfg;
  if (!a.config.empty()) cfg = read_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  validate(cfg);

  const auto triples = ingest_triples(a.triples, names);
  Model model = init_model(triples, names, cfg);

  DevEval dev;
  std::string metric_name = "none";
  if (!a.dev_pairs.empty()) {
    auto pairs = read_scored_pairs(a.dev_pairs);
    std::optional<ScoreWeights> weights;
    if (!a.dev_weights.empty()) weights = parse_weights(a.dev_weights);
    dev = [pairs = std::move(pairs), weights](const Model& m) {
      return *score_pairs(pairs, m, weights ? *weights : all_relations(m.relations)).spearman;
    };
    metric_name = "spearman";
  } else if (!a.dev_linkpred.empty()) {
    const auto dev_triples = ingest_triples(a.dev_linkpred, names);
    dev = [pools = build_candidate_pools(dev_triples)](const Model& m) {
      return *link_prediction_eval(pools, m).mrr;
    };
    metric_name = "mrr";
  }

  const auto result = train(triples, std::move(model), cfg, dev);
  save_model(ModelArtifact{kModelFormatVersion, result.model, cfg}, a.out);
  if (!a.log.empty()) {
    std::ostringstream log;
    write_train_log(log, result.log);
    write_text(a.log, log.str());
  }
  out << "steps\t" << (result.log.empty() ? 0 : result.log.back().step) << '\n';
  if (!result.log.empty()) out << "final_loss\t" << format_decimal(result.log.back().loss) << '\n';
  if (result.best_step) {
    out << "best_step\t" << *result.best_step << '\n';
    out << "best_" << metric_name << '\t' << format_decimal(*result.best_metric) << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relational sentence embedding: train, score and evaluate", "rse"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write the best checkpoint");
  train_cmd->add_option("--triples", ta.triples, "JSONL training triples")->required();
  train_cmd->add_option("--relations", ta.relations, "Comma-separated relation names")->required();
  auto* dev_pairs = train_cmd->add_option("--dev-pairs", ta.dev_pairs, "TSV dev pairs (Spearman)");
  auto* dev_link = train_cmd->add_option("--dev-linkpred", ta.dev_linkpred, "JSONL dev triples (MRR)");
  dev_pairs->excludes(dev_link);
  train_cmd->add_option("--dev-weights", ta.dev_weights, "Weights for --dev-pairs scoring")->needs(dev_pairs);
  train_cmd->add_option("--out", ta.out, "Output model path")->required();
  train_cmd->add_option("--config", ta.config, "key=value TrainConfig file");
  train_cmd->add_option("--seed", ta.seed, "Overrides the config seed");
  train_cmd->add_option("--log", ta.log, "Write the JSONL training log here");

  std::string model_path, relation, weights, s1, s2;
  auto* score_cmd = app.add_subcommand("score", "Relational or weighted score of two sentences");
  score_cmd->add_option("--model", model_path)->required();
  auto* rel_opt = score_cmd->add_option("--relation", relation);
  auto* w_opt = score_cmd->add_option("--weights", weights, "name=w,name=w");
  rel_opt->excludes(w_opt);
  score_cmd->add_option("--s1", s1)->required();
  score_cmd->add_option("--s2", s2)->required();

  std::string pairs_path;
  auto* ep_cmd = app.add_subcommand("eval-pairs", "Spearman correlation on a scored-pair TSV");
  ep_cmd->add_option("--model", model_path)->required();
  ep_cmd->add_option("--pairs", pairs_path)->required();
  ep_cmd->add_option("--weights", weights)->required();

  std::string triples_path;
  auto* el_cmd = app.add_subcommand("eval-linkpred", "MRR and Hits@{1,3,10} on JSONL triples");
  el_cmd->add_option("--model", model_path)->required();
  el_cmd->add_option("--triples", triples_path)->required();

  auto* rs_cmd = app.add_subcommand("rel-sim", "Relation-embedding cosine matrix as TSV");
  rs_cmd->add_option("--model", model_path)->required();

  std::vector<std::string> tasks;
  auto* sel_cmd = app.add_subcommand("rel-select", "Per-task metric under every single relation");
  sel_cmd->add_option("--model", model_path)->required();
  sel_cmd->add_option("--task", tasks, "name=path (.tsv pairs or .jsonl triples)")->required();

  std::string in_path, out_path;
  auto* em_cmd = app.add_subcommand("embed", "One embedding per input line");
  em_cmd->add_option("--model", model_path)->required();
  em_cmd->add_option("--in", in_path)->required();
  em_cmd->add_option("--out", out_path)->required();

  std::string out_dir;
  std::uint64_t synth_seed = 7;
  auto* sy_cmd = app.add_subcommand("synth", "Write the synthetic relation world");
  sy_cmd->add_option("--out-dir", out_dir)->required();
  sy_cmd->add_option("--seed", synth_seed);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "rse: " << e.what() << '\n';
    return 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(ta, out);

    if (score_cmd->parsed()) {
      const auto art = load_model(model_path);
      const auto& m = art.model;
      const auto a = embed(m, s1);
      const auto b = embed(m, s2);
      double v = 0.0;
      if (!relation.empty()) {
        v = relational_score(a, b, m.relations.id(relation), m.relations);
      } else if (!weights.empty()) {
        v = weighted_relational_score(a, b, parse_weights(weights), m.relations);
      } else {
        throw Error(ErrorKind::Config, "score needs --relation or --weights");
      }
      out << format_decimal(v) << '\n';
      return 0;
    }

    if (ep_cmd->parsed()) {
      const auto art = load_model(model_path);
      const auto pairs = read_scored_pairs(pairs_path);
      const auto r = score_pairs(pairs, art.model, parse_weights(weights));
      out << "spearman\t" << format_decimal(*r.spearman) << '\n';
      return 0;
    }

    if (el_cmd->parsed()) {
      const auto art = load_model(model_path);
      const auto triples = ingest_triples(triples_path, art.model.relations.names());
      print_link_report(out, link_prediction_eval(triples, art.model));
      return 0;
    }

    if (rs_cmd->parsed()) {
      const auto art = load_model(model_path);
      const auto& names = art.model.relations.names();
      const auto sim = relation_similarity_matrix(art.model.relations);
      out << "relation";
      for (const auto& n : names) out << '\t' << n;
      out << '\n';
      for (std::size_t a = 0; a < names.size(); ++a) {
        out << names[a];
        for (std::size_t b = 0; b < names.size(); ++b) out << '\t' << format_decimal(sim(a, b));
        out << '\n';
      }
      return 0;
    }

    if (sel_cmd->parsed()) {
      const auto art = load_model(model_path);
      std::vector<std::pair<std::string, EvalTask>> loaded;
      for (const auto& t : tasks) {
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "--task expects name=path");
        const fs::path p = t.substr(eq + 1);
        if (p.extension() == ".tsv") {
          loaded.emplace_back(t.substr(0, eq), read_scored_pairs(p));
        } else {
          const auto triples = ingest_triples(p, art.model.relations.names());
          loaded.emplace_back(t.substr(0, eq), build_candidate_pools(triples));
        }
      }
      const auto rep = relation_selection_report(loaded, art.model);
      out << "task";
      for (const auto& n : rep.relations) out << '\t' << n;
      out << "\tbest\n";
      for (std::size_t i = 0; i < rep.tasks.size(); ++i) {
        out << rep.tasks[i];
        for (std::size_t r = 0; r < rep.relations.size(); ++r) out << '\t' << format_decimal(rep.values(i, r));
        out << '\t' << rep.best_relation[i] << '\n';
      }
      return 0;
    }

    if (em_cmd->parsed()) {
      const auto art = load_model(model_path);
      std::ifstream in(in_path);
      if (!in) throw Error(ErrorKind::Io, "cannot open " + in_path);
      std::ostringstream buf;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        DenseVector v;
        try {
          v = embed(art.model, line);
        } catch (const Error& e) {
          throw Error(e.kind(), in_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        for (std::size_t k = 0; k < v.size(); ++k) buf << (k ? " " : "") << format_decimal(v[k]);
        buf << '\n';
      }
      write_file_atomic(out_path, buf.str());
      return 0;
    }

    if (sy_cmd->parsed()) {
      SeededRng rng(synth_seed);
      const auto world = generate_synthetic_world(SyntheticConfig{}, rng);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      std::ostringstream train_s, test_s, pools_s, pairs_s;
      write_triples_jsonl(train_s, world.train);
      write_triples_jsonl(test_s, world.test);
      write_link_queries_jsonl(pools_s, world.pools);
      // Graded pairs over test heads: own B-tail 2, own C-tail 1, next head's B-tail 0.
      std::vector<ScoredPair> pairs;
      for (std::size_t i = 0; i + 1 < world.test.size(); i += 2) {
        const auto& b = world.test[i];
        const auto& c = world.test[i + 1];
        const auto& other = world.test[(i + 2) % world.test.size()];
        pairs.push_back({b.head, b.tail, 2.0});
        pairs.push_back({c.head, c.tail, 1.0});
        pairs.push_back({b.head, other.tail, 0.0});
      }
      write_scored_pairs(pairs_s, pairs);
      write_text(dir / "train.jsonl", train_s.str());
      write_text(dir / "test.jsonl", test_s.str());
      write_text(dir / "pools.jsonl", pools_s.str());
      write_text(dir / "pairs.tsv", pairs_s.str());
      out << "train\t" << world.train.size() << "\ntest\t" << world.test.size() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "rse: " << msg << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rse
