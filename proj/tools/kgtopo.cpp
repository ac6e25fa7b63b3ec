// kgtopo: command-line front end for the pipeline stages.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "kgtopo/http_backend.hpp"
#include "kgtopo/kgtopo.hpp"

using namespace kgtopo;

namespace {

struct Flags {
  std::string config_path;
  RunConfig cfg;
  std::vector<std::string> binds;
  std::string relation;
  std::string compare;
  std::string csv;
  std::size_t limit = 0;
  bool dedupe = false;
  std::vector<std::string> files;
};

// Options that exist both as flags and as config keys: the flag wins when given.
struct Overrides {
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> entries;

  template <class T>
  void add(CLI::App* app, const std::string& name, const std::string& help, T RunConfig::*field,
           T* storage) {
    auto* opt = app->add_option(name, *storage, help);
    entries.emplace_back(opt, [field, storage](RunConfig& c) { c.*field = *storage; });
  }

  void apply(RunConfig& c) const {
    for (const auto& [opt, set] : entries) {
      if (opt->count() > 0) set(c);
    }
  }
};

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend.kind == "mock") {
    require_file(cfg.backend.mock_script, "mock script");
    return std::make_unique<MockBackend>(load_mock_script(cfg.backend.mock_script));
  }
  if (cfg.backend.kind == "http") {
    HttpBackendConfig h;
    h.base_url = cfg.backend.base_url;
    h.api_key = api_key_from_env();
    if (h.api_key.empty()) throw Error(Errc::Config, "set KGTOPO_API_KEY (or OPENAI_API_KEY) for the http backend");
    return std::make_unique<HttpBackend>(std::move(h));
  }
  throw Error(Errc::Config, "backend kind must be 'mock' or 'http', got '" + cfg.backend.kind + "'");
}

std::unique_ptr<ResponseCache> make_cache(const RunConfig& cfg) {
  if (cfg.cache_dir.empty()) return nullptr;
  return std::make_unique<ResponseCache>(cfg.cache_dir);
}

KnowledgeGraph load_graphs(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error(Errc::Config, "no --graph given");
  KnowledgeGraph g;
  for (const auto& p : paths) {
    require_file(p, "graph");
    g = g.empty() ? load_triples(p) : merge(g, load_triples(p));
  }
  return g;
}

std::vector<std::string> manifest_inputs(const RunConfig& cfg, bool with_test, bool with_ontology) {
  std::vector<std::string> in = cfg.graphs;
  if (with_test && !cfg.test.empty()) in.push_back(cfg.test);
  if (with_ontology && !cfg.ontology.empty()) in.push_back(cfg.ontology);
  if (cfg.backend.kind == "mock" && !cfg.backend.mock_script.empty()) in.push_back(cfg.backend.mock_script);
  return in;
}

std::string summary_line(const KnowledgeGraph& g) {
  return text::with_thousands(g.num_nodes()) + " nodes, " + text::with_thousands(g.num_relations()) +
         " relations, " + text::with_thousands(g.num_triples()) + " triples";
}

int cmd_ingest(const Flags& f) {
  const auto policy = f.dedupe ? DuplicatePolicy::Dedupe : DuplicatePolicy::Keep;
  if (f.files.size() == 1) {
    std::cout << summary_line(load_triples(f.files[0], policy)) << "\n";
    return 0;
  }
  KnowledgeGraph all;
  for (const auto& p : f.files) {
    const auto g = load_triples(p, policy);
    std::cout << p << ": " << summary_line(g) << "\n";
    all = all.empty() ? g : merge(all, g);
  }
  std::cout << "merged: " << summary_line(all) << "\n";
  return 0;
}

int cmd_build_ontology(const Flags& f) {
  const RunConfig& cfg = f.cfg;
  if (cfg.out.empty()) throw Error(Errc::Config, "--out is required");
  const auto g = load_graphs(cfg.graphs);
  auto backend = make_backend(cfg);
  auto cache = make_cache(cfg);
  Gateway gw(*backend, cache.get(), {RetryPolicy{}, cfg.max_in_flight});
  const CompletionFn complete = [&](const std::string& prompt) {
    return gw.complete(cfg.model.request(prompt)).text;
  };
  const auto o = build_ontology(complete, g, cfg.n_samples, cfg.seed);
  const auto report = verify_ontology(o);
  for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
  save_ontology(o, cfg.out);
  write_manifest({"build-ontology", run_config_to_json(cfg), manifest_inputs(cfg, false, false),
                  {cfg.out}, cfg.seed, gw.backend_calls(), gw.cache_hits()},
                 cfg.out);
  std::cout << text::with_thousands(o.categories.size()) << " categories, "
            << text::with_thousands(o.edges.size()) << " edges, "
            << report.violations.size() << " violations\n";
  return report.ok() ? 0 : 1;
}

int cmd_paths(const Flags& f) {
  const RunConfig& cfg = f.cfg;
  require_file(cfg.ontology, "ontology");
  const auto o = load_ontology(cfg.ontology);
  std::vector<std::string> relations;
  if (!f.relation.empty()) {
    if (!o.relation_map.contains(f.relation)) throw Error(Errc::UnknownRelation, f.relation);
    relations.push_back(f.relation);
  } else {
    for (const auto& [r, _] : o.relation_map) relations.push_back(r);
  }
  std::ostringstream out;
  for (const auto& r : relations) {
    const auto& pair = o.relation_map.at(r);
    const auto found = enumerate_ontology_paths(o, pair.head, pair.tail, r, cfg.paths);
    out << pair.head << text::kArrow << r << text::kArrow << pair.tail << "\n";
    for (const auto& p : found.paths) out << "  " << format_ontology_path(p) << "\n";
    if (found.truncated) out << "  (truncated at " << cfg.paths.max_paths << ")\n";
  }
  std::cout << out.str();
  if (!cfg.out.empty()) {
    std::ofstream file(cfg.out, std::ios::binary | std::ios::trunc);
    file << out.str();
    if (!file) throw Error(Errc::Io, "cannot write '" + cfg.out + "'");
    file.close();
    write_manifest({"paths", run_config_to_json(cfg), {cfg.ontology}, {cfg.out}, cfg.seed, 0, 0}, cfg.out);
  }
  return 0;
}

int cmd_predict(const Flags& f) {
  const RunConfig& cfg = f.cfg;
  if (cfg.out.empty()) throw Error(Errc::Config, "--out is required");
  const PromptVariant variant = parse_variant(cfg.variant);
  std::set<PredictionMode> modes;
  for (const auto& m : cfg.modes) modes.insert(parse_prediction_mode(m));
  if (modes.empty()) throw Error(Errc::Config, "no prediction mode given");
  cfg.tournament.validate();
  require_file(cfg.test, "test");
  if (needs_ontology(variant)) require_file(cfg.ontology, "ontology");

  KnowledgeGraph g = load_graphs(cfg.graphs);
  std::optional<Ontology> o;
  if (!cfg.ontology.empty()) {
    o = load_ontology(cfg.ontology);
    if (const auto report = verify_ontology(*o); !report.ok()) {
      throw Error(Errc::Config, "ontology fails verification: " + report.violations.front());
    }
    if (uses_candidates(variant)) g = assign_node_categories(g, *o);
  }
  check_variant_resources(variant, g, o ? &*o : nullptr);

  auto test = load_triples(cfg.test, DuplicatePolicy::Keep).triples();
  if (f.limit > 0 && test.size() > f.limit) test.resize(f.limit);
  const bool tails = modes.contains(PredictionMode::Tail);
  const bool heads = modes.contains(PredictionMode::DirectHead) || modes.contains(PredictionMode::InverseHead);
  const auto tasks = tasks_from_triples(test, tails, heads);

  auto backend = make_backend(cfg);
  auto cache = make_cache(cfg);
  Gateway gw(*backend, cache.get(), {RetryPolicy{}, cfg.max_in_flight});
  PredictorContext ctx{g, o ? &*o : nullptr, gw, cfg.model, cfg.tournament, cfg.paths, cfg.max_grounded};
  const auto records = run_experiment(ctx, tasks, variant, modes);

  {
    std::ofstream out(cfg.out, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write '" + cfg.out + "'");
    write_records(out, records);
  }
  write_manifest({"predict", run_config_to_json(cfg), manifest_inputs(cfg, true, true), {cfg.out},
                  cfg.seed, gw.backend_calls(), gw.cache_hits()},
                 cfg.out);
  std::size_t failed = 0;
  for (const auto& r : records) failed += !r.ok();
  std::cout << records.size() << " records, " << failed << " failed, " << gw.backend_calls()
            << " backend calls, " << gw.cache_hits() << " cache hits\n";
  return 0;
}

std::vector<PredictionRecord> read_run(const std::string& path) {
  require_file(path, "run");
  std::ifstream in(path, std::ios::binary);
  try {
    return read_records(in);
  } catch (const Error& e) {
    throw e.with_context(path);
  }
}

int cmd_eval(const Flags& f) {
  if (f.files.empty()) throw Error(Errc::Config, "eval needs a run file");
  const auto run = read_run(f.files[0]);
  const auto report = evaluate_run(run);
  std::cout << render_report_table(report);
  std::string csv = render_report_csv(report);
  std::vector<std::string> inputs{f.files[0]};
  if (!f.compare.empty()) {
    const auto other = read_run(f.compare);
    const auto cmp = compare_head_modes(run, other);
    std::cout << "\n" << render_comparison_table(cmp);
    csv += "\n" + render_comparison_csv(cmp);
    inputs.push_back(f.compare);
  }
  if (!f.csv.empty()) {
    std::ofstream out(f.csv, std::ios::binary | std::ios::trunc);
    out << csv;
    if (!out) throw Error(Errc::Io, "cannot write '" + f.csv + "'");
    out.close();
    nlohmann::json config = {{"run", f.files[0]}, {"compare", f.compare}};
    write_manifest({"eval", config, inputs, {f.csv}, 0, 0, 0}, f.csv);
  }
  return 0;
}

int cmd_render(const Flags& f) {
  const PromptVariant variant = parse_variant(f.cfg.variant);
  if (f.binds.empty()) {
    std::cout << prompt_template(variant).text << "\n";
    return 0;
  }
  Bindings b;
  for (const auto& kv : f.binds) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(Errc::Config, "--bind expects name=value, got '" + kv + "'");
    b[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  std::cout << render_prompt(variant, b) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgtopo: knowledge graph completion with ontology and path hints"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Flags f;
  RunConfig flag_values;
  std::string tournament_mode;
  Overrides ov;
  app.add_option("--config", f.config_path, "JSON run configuration; flags override its keys");

  auto add_common = [&](CLI::App* sub) {
    ov.add(sub, "--graph", "Triple file (repeatable, merged in order)", &RunConfig::graphs, &flag_values.graphs);
    ov.add(sub, "--out", "Output path", &RunConfig::out, &flag_values.out);
    ov.add(sub, "--cache", "Response cache directory", &RunConfig::cache_dir, &flag_values.cache_dir);
    ov.add(sub, "--seed", "Sampling seed", &RunConfig::seed, &flag_values.seed);
    ov.add(sub, "--max-in-flight", "Concurrent backend requests", &RunConfig::max_in_flight,
           &flag_values.max_in_flight);
    auto* kind = sub->add_option("--backend", flag_values.backend.kind, "mock | http");
    auto* script = sub->add_option("--mock-script", flag_values.backend.mock_script, "Mock script (JSON)");
    auto* url = sub->add_option("--base-url", flag_values.backend.base_url, "Chat completions base URL");
    auto* model = sub->add_option("--model", flag_values.model.model_id, "Model id");
    ov.entries.emplace_back(kind, [&](RunConfig& c) { c.backend.kind = flag_values.backend.kind; });
    ov.entries.emplace_back(script, [&](RunConfig& c) { c.backend.mock_script = flag_values.backend.mock_script; });
    ov.entries.emplace_back(url, [&](RunConfig& c) { c.backend.base_url = flag_values.backend.base_url; });
    ov.entries.emplace_back(model, [&](RunConfig& c) { c.model.model_id = flag_values.model.model_id; });
  };

  auto* ingest = app.add_subcommand("ingest", "Load triple files and print counts");
  ingest->add_option("files", f.files, "Triple files")->required();
  ingest->add_flag("--dedupe", f.dedupe, "Drop duplicate triples before counting");

  auto* build = app.add_subcommand("build-ontology", "Induce the relation ontology");
  add_common(build);
  ov.add(build, "--samples", "Sample pairs per relation", &RunConfig::n_samples, &flag_values.n_samples);

  auto* paths = app.add_subcommand("paths", "List alternate ontology paths per relation");
  ov.add(paths, "--ontology", "Ontology JSON", &RunConfig::ontology, &flag_values.ontology);
  ov.add(paths, "--out", "Also write the listing here", &RunConfig::out, &flag_values.out);
  paths->add_option("--relation", f.relation, "Only this relation");
  auto* hops = paths->add_option("--max-hops", flag_values.paths.max_hops, "Longest path");
  ov.entries.emplace_back(hops, [&](RunConfig& c) { c.paths.max_hops = flag_values.paths.max_hops; });

  auto* predict = app.add_subcommand("predict", "Run predictions for a test file");
  add_common(predict);
  ov.add(predict, "--test", "Test triple file", &RunConfig::test, &flag_values.test);
  ov.add(predict, "--ontology", "Ontology JSON", &RunConfig::ontology, &flag_values.ontology);
  ov.add(predict, "--variant", "Prompt variant", &RunConfig::variant, &flag_values.variant);
  ov.add(predict, "--mode", "tail | head-direct | head-inverse (repeatable)", &RunConfig::modes,
         &flag_values.modes);
  ov.add(predict, "--max-grounded", "Grounded paths per prompt", &RunConfig::max_grounded,
         &flag_values.max_grounded);
  predict->add_option("--limit", f.limit, "Only the first N test triples");
  auto* bs = predict->add_option("--batch-size", flag_values.tournament.batch_size, "Tournament batch size");
  auto* wpb = predict->add_option("--winners-per-batch", flag_values.tournament.winners_per_batch,
                                  "Tournament winners per batch");
  auto* cap = predict->add_option("--shortlist-cap", flag_values.tournament.shortlist_cap, "Shortlist cap");
  auto* tm = predict->add_option("--tournament-mode", tournament_mode, "single | multi");
  ov.entries.emplace_back(bs, [&](RunConfig& c) { c.tournament.batch_size = flag_values.tournament.batch_size; });
  ov.entries.emplace_back(wpb, [&](RunConfig& c) {
    c.tournament.winners_per_batch = flag_values.tournament.winners_per_batch;
  });
  ov.entries.emplace_back(cap, [&](RunConfig& c) { c.tournament.shortlist_cap = flag_values.tournament.shortlist_cap; });
  ov.entries.emplace_back(tm, [&](RunConfig& c) { c.tournament.mode = parse_tournament_mode(tournament_mode); });
  auto* ph = predict->add_option("--max-hops", flag_values.paths.max_hops, "Longest ontology path");
  ov.entries.emplace_back(ph, [&](RunConfig& c) { c.paths.max_hops = flag_values.paths.max_hops; });

  auto* eval = app.add_subcommand("eval", "Score a prediction run");
  eval->add_option("run", f.files, "Prediction JSONL")->required();
  eval->add_option("--compare", f.compare, "Second run (head-inverse) to compare against");
  eval->add_option("--csv", f.csv, "Write CSV here");

  auto* render = app.add_subcommand("render", "Print a prompt template or render it");
  ov.add(render, "--variant", "Prompt variant", &RunConfig::variant, &flag_values.variant);
  render->add_option("--bind", f.binds, "name=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!f.config_path.empty()) f.cfg = load_run_config(f.config_path);
    ov.apply(f.cfg);
    if (ingest->parsed()) return cmd_ingest(f);
    if (build->parsed()) return cmd_build_ontology(f);
    if (paths->parsed()) return cmd_paths(f);
    if (predict->parsed()) return cmd_predict(f);
    if (eval->parsed()) return cmd_eval(f);
    if (render->parsed()) return cmd_render(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
