#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "dtlog/autodiff.hpp"
#include "dtlog/compiler.hpp"
#include "dtlog/error.hpp"
#include "dtlog/factor_graph.hpp"
#include "dtlog/grid.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/learner.hpp"
#include "dtlog/oracle.hpp"
#include "dtlog/parser.hpp"
#include "dtlog/runtime.hpp"

namespace dtlog::cli {

std::string format_score(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw Error("cannot write " + path);
}

Target parse_target(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) throw Error("target '" + text + "' must look like pred/io");
  return Target{text.substr(0, slash), parse_mode(text.substr(slash + 1))};
}

struct ProgramFiles {
  std::string rules;
  std::string facts;
  int max_depth = 10;

  void add_to(CLI::App* app) {
    app->add_option("--rules", rules, "rules file")->required();
    app->add_option("--facts", facts, "facts file (TAB separated)")->required();
    app->add_option("--max-depth", max_depth, "recursion bound")->check(CLI::NonNegativeNumber);
  }

  Program load(std::ostream& err) const {
    Program p = prepare_program(read_file(rules), load_facts(read_file(facts)), rules);
    for (const auto& d : p.warnings) err << d.format(rules) << "\n";
    return p;
  }
};

std::vector<Target> default_targets(const Theory& theory) {
  if (!theory.targets.empty()) return theory.targets;
  std::vector<Target> out;
  for (const auto& p : theory.predicates()) out.push_back({p, Mode::io});
  return out;
}

void print_ranked(std::ostream& out, const KnowledgeBase& kb, const SparseVector& v, int top) {
  int shown = 0;
  for (const auto& e : ranked(v)) {
    if (top > 0 && shown++ >= top) break;
    out << kb.symbols().name(e.id) << '\t' << format_score(e.value) << '\n';
  }
}

FunctionRegistry compile_for(const Program& p, std::vector<Target> targets, int max_depth) {
  return compile_program(p.theory, p.kb, targets, max_depth);
}

std::vector<Target> targets_of(std::span<const Example> examples) {
  std::vector<Target> out;
  for (const auto& ex : examples) {
    Target t{ex.query.predicate, ex.query.mode};
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"compile and train weighted Datalog programs", "dtlog"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "random seed");

  ProgramFiles compile_files;
  std::vector<std::string> compile_targets;
  bool keep_any = false;
  bool show_graphs = false;
  auto* compile = app.add_subcommand("compile", "print compiled op listings");
  compile_files.add_to(compile);
  compile->add_option("--target", compile_targets, "pred/io or pred/oi (repeatable)");
  compile->add_flag("--keep-any", keep_any, "do not eliminate any-products");
  compile->add_flag("--graphs", show_graphs, "also print the clause factor graphs");

  ProgramFiles query_files;
  std::string query_text;
  bool unnormalized = false;
  int top = 0;
  auto* query = app.add_subcommand("query", "answer pred(c,Y) or pred(Y,c)");
  query_files.add_to(query);
  query->add_option("--query", query_text, "query, e.g. uncle(joe,Y)")->required();
  query->add_flag("--unnormalized", unnormalized, "print g instead of the distribution");
  query->add_option("--top", top, "print at most K answers")->check(CLI::NonNegativeNumber);

  ProgramFiles train_files;
  std::string train_path;
  std::string train_test_path;
  std::string train_out;
  TrainConfig config;
  std::string trainable;
  auto* train_cmd = app.add_subcommand("train", "fit fact weights by gradient descent");
  train_files.add_to(train_cmd);
  train_cmd->add_option("--train", train_path, "training examples")->required();
  train_cmd->add_option("--test", train_test_path, "held-out examples, scored after training");
  train_cmd->add_option("--epochs", config.epochs, "epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", config.learning_rate, "learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--trainable", trainable, "comma-separated trainable predicates");
  train_cmd->add_flag("--train-all", config.train_all, "train every fact");
  train_cmd->add_option("--out", train_out, "where to write the trained facts")->required();

  ProgramFiles eval_files;
  std::string eval_path;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy on an examples file");
  eval_files.add_to(eval_cmd);
  eval_cmd->add_option("--test", eval_path, "examples")->required();

  ProgramFiles grad_files;
  std::string grad_target;
  std::string grad_input;
  int samples = 20;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare gradients with finite differences");
  grad_files.add_to(grad_cmd);
  grad_cmd->add_option("--target", grad_target, "pred/io or pred/oi")->required();
  grad_cmd->add_option("--samples", samples, "parameters checked per input")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--input", grad_input, "input constant (default: every constant)");

  ProgramFiles oracle_files;
  std::string oracle_query;
  std::string semantics = "proofsum";
  std::vector<double> clause_weights;
  auto* oracle_cmd = app.add_subcommand("oracle", "score a query by explicit proof search");
  oracle_files.add_to(oracle_cmd);
  oracle_cmd->add_option("--query", oracle_query, "query, e.g. status(eve,Y)")->required();
  oracle_cmd->add_option("--semantics", semantics, "proofsum, tupind or slp")
      ->check(CLI::IsMember({"proofsum", "tupind", "slp"}));
  oracle_cmd->add_option("--clause-weights", clause_weights, "slp clause weights (default 1)")
      ->delimiter(',');

  int grid_n = 16;
  std::string grid_out;
  GridSpec grid_spec;
  auto* grid_cmd = app.add_subcommand("gridgen", "write the grid path-learning task");
  grid_cmd->add_option("--n", grid_n, "grid side")->check(CLI::Range(2, 4096));
  grid_cmd->add_option("--out", grid_out, "output directory")->required();
  grid_cmd->add_option("--weight", grid_spec.base_weight, "initial edge weight")->check(CLI::PositiveNumber);
  grid_cmd->add_option("--jitter", grid_spec.jitter, "half-width of the uniform weight jitter")
      ->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (compile->parsed()) {
      Program p = compile_files.load(err);
      std::vector<Target> targets;
      for (const auto& t : compile_targets) targets.push_back(parse_target(t));
      if (targets.empty()) targets = default_targets(p.theory);
      if (show_graphs) {
        for (const auto& t : targets) {
          for (std::size_t idx : p.theory.clauses_for(t.predicate)) {
            out << dump_graph(clause_graph(p.theory.clauses()[idx], t.mode)) << "\n";
          }
        }
      }
      FunctionRegistry registry = compile_program(p.theory, p.kb, targets, compile_files.max_depth,
                                                  CompileOptions{.eliminate_any = !keep_any});
      bool first = true;
      for (const auto& [key, fn] : registry.functions()) {
        out << (first ? "" : "\n") << format_function(fn);
        first = false;
      }
    } else if (query->parsed()) {
      Program p = query_files.load(err);
      Query q = parse_query(query_text);
      FunctionRegistry registry = compile_for(p, {{q.predicate, q.mode}}, query_files.max_depth);
      QueryResponse r = respond(registry, p.kb, q);
      print_ranked(out, p.kb, unnormalized ? r.unnormalized : r.distribution, top);
    } else if (train_cmd->parsed()) {
      Program p = train_files.load(err);
      std::vector<Example> train_set = load_examples(read_file(train_path));
      std::stringstream names(trainable);
      for (std::string name; std::getline(names, name, ',');) {
        if (!name.empty()) config.trainable.push_back(name);
      }
      std::vector<Example> test_set;
      if (!train_test_path.empty()) test_set = load_examples(read_file(train_test_path));
      std::vector<Target> targets = targets_of(train_set);
      for (const auto& t : targets_of(test_set)) {
        if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
      }
      FunctionRegistry registry = compile_for(p, targets, train_files.max_depth);
      TrainResult result = train(registry, p.kb, train_set, config, [&](const EpochLog& e) {
        out << "epoch " << e.epoch << "\tloss " << format_score(e.loss) << "\ttrain_accuracy "
            << format_score(e.accuracy) << '\n';
      });
      out << "final\ttrain_accuracy " << format_score(evaluate_accuracy(registry, result.kb, train_set))
          << '\n';
      if (!test_set.empty()) {
        out << "final\ttest_accuracy " << format_score(evaluate_accuracy(registry, result.kb, test_set))
            << '\n';
      }
      write_file(train_out, serialize_facts(result.kb));
    } else if (eval_cmd->parsed()) {
      Program p = eval_files.load(err);
      std::vector<Example> test_set = load_examples(read_file(eval_path));
      FunctionRegistry registry = compile_for(p, targets_of(test_set), eval_files.max_depth);
      out << format_score(evaluate_accuracy(registry, p.kb, test_set)) << '\n';
    } else if (grad_cmd->parsed()) {
      Program p = grad_files.load(err);
      Target t = parse_target(grad_target);
      FunctionRegistry registry = compile_for(p, {t}, grad_files.max_depth);
      std::vector<ConstantId> inputs;
      if (!grad_input.empty()) {
        inputs.push_back(p.kb.constant_id(grad_input));
      } else {
        for (std::size_t c = 0; c < p.kb.dim(); ++c) inputs.push_back(static_cast<ConstantId>(c));
      }
      double worst = 0.0;
      for (ConstantId c : inputs) {
        GradCheckOptions opts{.directions = samples, .step = 1e-6, .seed = seed + static_cast<std::uint64_t>(c)};
        worst = std::max(worst, grad_check(registry, p.kb, FunctionKey{t.predicate, t.mode, 0},
                                           SparseVector::one_hot(p.kb.dim(), c), opts));
      }
      out << format_score(worst) << '\n';
    } else if (oracle_cmd->parsed()) {
      Program p = oracle_files.load(err);
      Query q = parse_query(oracle_query);
      const int depth = oracle_files.max_depth;
      SparseVector scores;
      if (semantics == "proofsum") {
        scores = oracle::score_proof_sum(oracle::enumerate_proofs(p.theory, p.kb, q, depth), p.kb);
      } else if (semantics == "tupind") {
        scores = oracle::score_tuple_independence(p.theory, p.kb, q, depth);
      } else {
        if (clause_weights.empty()) clause_weights.assign(p.theory.clauses().size(), 1.0);
        scores = oracle::score_slp(p.theory, p.kb, q, depth, clause_weights);
      }
      print_ranked(out, p.kb, scores, 0);
    } else if (grid_cmd->parsed()) {
      if (grid_spec.jitter >= grid_spec.base_weight) throw Error("--jitter must be below --weight");
      grid_spec.n = grid_n;
      grid_spec.seed = seed;
      GridData data = generate_grid(grid_spec);
      write_grid(data, grid_out);
      out << "wrote " << grid_n * grid_n << " cells, " << grid_edge_count(grid_n) << " edges, "
          << data.train.size() << " train / " << data.test.size() << " test examples to " << grid_out
          << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dtlog::cli
