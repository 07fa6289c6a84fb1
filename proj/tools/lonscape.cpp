// lonscape: sample local optima networks, build them, and report on them.
//
//   lonscape sample  --config cfg.json --out runs/direct
//   lonscape build   runs/direct
//   lonscape metrics runs/direct/lon.json runs/lsystem/lon.json --out tables
//   lonscape compare runs/*/lon.json --out tables
//   lonscape export  runs/*/lon.json --format graphml --out graphs

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lonscape/lonscape.hpp"

namespace fs = std::filesystem;
using namespace lonscape;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kBackendFailure = 3, kSchemaMismatch = 4 };

Json read_json_file(const fs::path& path, ErrorCode on_parse_error) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(on_parse_error, path.string() + ": " + e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

std::string run_file_name(int run_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03d.jsonl", run_id);
  return buf;
}

struct SampleOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string encoding;
  std::string evaluator;
  std::string external_cmd;
  std::optional<unsigned> jobs;
};

ExperimentConfig resolve_config(const SampleOptions& o) {
  ExperimentConfig cfg;
  bool rates_given = false;
  if (!o.config_path.empty()) {
    const Json j = read_json_file(o.config_path, ErrorCode::ConfigInvalid);
    cfg = config_from_json(j);
    rates_given = j.contains("ils") && j.at("ils").contains("rates");
  }
  if (!o.encoding.empty()) {
    const auto enc = parse_encoding(o.encoding);
    if (!enc) throw Error(ErrorCode::ConfigInvalid, "unknown encoding '" + o.encoding + "'");
    cfg.ils.encoding = *enc;
    if (!rates_given) cfg.ils.rates = default_rates(*enc);
  }
  if (o.seed) cfg.ils.base_seed = *o.seed;
  if (o.runs) cfg.ils.runs = *o.runs;
  if (!o.evaluator.empty())
    cfg.evaluator.kind = o.evaluator == "external" ? EvaluatorKind::External : EvaluatorKind::Surrogate;
  if (!o.external_cmd.empty()) cfg.evaluator.external_command = o.external_cmd;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  validate(cfg);
  return cfg;
}

int cmd_sample(const SampleOptions& o) {
  const ExperimentConfig cfg = resolve_config(o);
  std::vector<RunLog> logs;
  if (cfg.evaluator.kind == EvaluatorKind::Surrogate)
    logs = sample_runs(cfg.ils, [&] { return SurrogateEvaluator(cfg.evaluator); }, cfg.jobs);
  else
    logs = sample_runs(cfg.ils, [&] { return ExternalEvaluator(cfg.evaluator); }, cfg.jobs);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  Json files = Json::array();
  for (const RunLog& log : logs) {
    const std::string name = run_file_name(log.run_id);
    auto out = open_output(dir / name);
    write_run_log(out, log);
    files.push_back(name);
  }
  const Json manifest{{"schema", kSchemaVersion},
                      {"type", "manifest"},
                      {"config", to_json(cfg)},
                      {"config_digest", config_digest(cfg)},
                      {"files", std::move(files)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << logs.size() << " run logs to " << dir.string() << "\n";
  return kOk;
}

int cmd_build(const std::string& log_dir, std::string out) {
  const fs::path dir = log_dir;
  const Json manifest = read_json_file(dir / "manifest.json", ErrorCode::SchemaMismatch);
  std::vector<RunLog> logs;
  std::string digest;
  detail::parse_guard("manifest", [&] {
    if (manifest.at("schema") != kSchemaVersion || manifest.at("type") != "manifest")
      throw Error(ErrorCode::SchemaMismatch, "not a schema-1 manifest");
    digest = manifest.at("config_digest").get<std::string>();
    for (const Json& f : manifest.at("files")) {
      std::ifstream in(dir / f.get<std::string>());
      if (!in) throw Error(ErrorCode::Io, "missing run log " + f.get<std::string>());
      logs.push_back(read_run_log(in));
    }
    return 0;
  });
  const Lon lon = build_lon(logs, digest);
  const fs::path target = out.empty() ? dir / "lon.json" : fs::path(out);
  write_text(target, to_json(lon).dump() + "\n");
  std::cout << "LON " << lon.encoding << ": " << lon.nodes.size() << " nodes, " << lon.edges.size() << " edges";
  if (lon.shared_nodes) std::cout << " (" << lon.shared_nodes << " genotypes shared across runs)";
  std::cout << " -> " << target.string() << "\n";
  return kOk;
}

std::vector<Lon> load_lons(const std::vector<std::string>& paths) {
  std::vector<Lon> lons;
  for (const auto& p : paths) lons.push_back(lon_from_json(read_json_file(p, ErrorCode::SchemaMismatch)));
  return lons;
}

/// Column labels: the encoding name, suffixed when the same encoding repeats.
std::vector<std::string> labels_for(const std::vector<Lon>& lons) {
  std::map<std::string, int> seen;
  for (const Lon& l : lons) ++seen[l.encoding];
  std::map<std::string, int> counter;
  std::vector<std::string> labels;
  for (const Lon& l : lons) {
    if (seen[l.encoding] == 1)
      labels.push_back(l.encoding);
    else
      labels.push_back(l.encoding + "_" + std::to_string(counter[l.encoding]++));
  }
  return labels;
}

fs::path default_out(const std::vector<std::string>& inputs, const std::string& out) {
  if (!out.empty()) return out;
  const fs::path first = inputs.front();
  return first.has_parent_path() ? first.parent_path() : fs::path(".");
}

int cmd_metrics(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<Lon> lons = load_lons(inputs);
  const auto labels = labels_for(lons);
  for (std::size_t i = 0; i < lons.size(); ++i) lons[i].encoding = labels[i];
  const fs::path dir = default_out(inputs, out);

  std::ostringstream run_csv, lon_csv;
  write_run_stats_csv(run_csv, lons);
  write_lon_stats_csv(lon_csv, lons);
  write_text(dir / "run_stats.csv", run_csv.str());
  write_text(dir / "lon_stats.csv", lon_csv.str());

  Json summary = Json::array();
  for (const Lon& l : lons) {
    const LonSummary s = lon_summary(l);
    summary.push_back({{"label", l.encoding},
                       {"config_digest", l.config_digest},
                       {"nodes", s.nodes},
                       {"edges", s.edges},
                       {"components", s.components},
                       {"path_length", s.path_length ? Json(*s.path_length) : Json(nullptr)},
                       {"degree", s.degree},
                       {"infeasible_pct", s.infeasible_pct},
                       {"shared_nodes", l.shared_nodes},
                       {"mutation_acceptance_pct", l.run_statistics.mutation_acceptance_pct},
                       {"design_acceptance_pct", l.run_statistics.design_acceptance_pct},
                       {"unique_designs", l.run_statistics.unique_designs},
                       {"attempted_mutations", l.run_statistics.attempted_mutations}});
  }
  write_text(dir / "summary.json", Json{{"schema", kSchemaVersion}, {"lons", std::move(summary)}}.dump(2) + "\n");
  std::cout << lon_csv.str() << run_csv.str();
  return kOk;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& out) {
  if (inputs.size() < 2) throw Error(ErrorCode::ConfigInvalid, "compare needs at least two LON files");
  const std::vector<Lon> lons = load_lons(inputs);
  const auto labels = labels_for(lons);

  std::map<std::string, std::vector<LabelledSample>> by_metric;
  const std::vector<std::string> order{"fitness", "max_fitness", "evaluations", "fitness_delta", "chain_length"};
  for (std::size_t i = 0; i < lons.size(); ++i) {
    const Lon& l = lons[i];
    LabelledSample fitness{labels[i], {}}, max_fit{labels[i], {}}, evals{labels[i], {}}, chains{labels[i], {}};
    for (const LonNode& n : l.nodes) fitness.values.push_back(n.fitness.value);
    for (const RunSummary& r : l.runs) {
      max_fit.values.push_back(r.max_fitness);
      evals.values.push_back(static_cast<double>(r.evaluations));
      chains.values.push_back(static_cast<double>(r.chain_length));
    }
    by_metric["fitness"].push_back(std::move(fitness));
    by_metric["max_fitness"].push_back(std::move(max_fit));
    by_metric["evaluations"].push_back(std::move(evals));
    by_metric["fitness_delta"].push_back({labels[i], fitness_deltas(l)});
    by_metric["chain_length"].push_back(std::move(chains));
  }
  std::vector<ComparisonRow> rows;
  for (const auto& metric : order) {
    const auto& samples = by_metric[metric];
    const bool all_present = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return !s.values.empty(); });
    if (!all_present) {
      std::cerr << "skipping " << metric << ": a sample is empty\n";
      continue;
    }
    for (auto& r : compare_encodings(metric, samples)) rows.push_back(std::move(r));
  }
  std::ostringstream csv;
  write_comparison_csv(csv, rows);
  write_text(default_out(inputs, out) / "utest.csv", csv.str());
  std::cout << csv.str();
  return kOk;
}

int cmd_export(const std::vector<std::string>& inputs, const std::string& format, const std::string& out) {
  std::vector<Lon> lons = load_lons(inputs);
  std::vector<Lon*> all;
  for (Lon& l : lons) all.push_back(&l);
  const QuartileThresholds q = classify_quartiles(all);
  const auto labels = labels_for(lons);
  const fs::path dir = default_out(inputs, out);
  for (std::size_t i = 0; i < lons.size(); ++i) {
    const fs::path stem = dir / ("lon_" + labels[i]);
    std::ostringstream text;
    if (format == "graphml") {
      write_graphml(text, lons[i]);
      write_text(stem.string() + ".graphml", text.str());
    } else if (format == "dot") {
      write_dot(text, lons[i]);
      write_text(stem.string() + ".dot", text.str());
    } else {
      write_nodes_csv(text, lons[i]);
      write_text(stem.string() + ".nodes.csv", text.str());
      std::ostringstream edges;
      write_edges_csv(edges, lons[i]);
      write_text(stem.string() + ".edges.csv", edges.str());
    }
  }
  std::cout << "quartiles Q1=" << format_real(q.q1, 4) << " Q3=" << format_real(q.q3, 4) << "; wrote " << lons.size()
            << " " << format << " export(s) to " << dir.string() << "\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  if (e.is_backend_failure()) return kBackendFailure;
  switch (e.code()) {
    case ErrorCode::ConfigInvalid: return kConfigError;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::DanglingTransition: return kSchemaMismatch;
    default: return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local optima network sampling and analysis for morpho-evolution encodings"};
  app.require_subcommand(1);

  SampleOptions sample_opts;
  auto* sample = app.add_subcommand("sample", "Run ILS and write one log file per run plus a manifest");
  sample->add_option("--config", sample_opts.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  sample->add_option("--out", sample_opts.out_dir, "Output directory");
  sample->add_option("--seed", sample_opts.seed, "Base seed; run i uses seed + i");
  sample->add_option("--runs", sample_opts.runs, "Number of ILS runs");
  sample->add_option("--encoding", sample_opts.encoding, "Genotype encoding")
      ->check(CLI::IsMember({"direct", "lsystem", "cppn"}));
  sample->add_option("--evaluator", sample_opts.evaluator, "Fitness backend")
      ->check(CLI::IsMember({"surrogate", "external"}));
  sample->add_option("--external-cmd", sample_opts.external_cmd, "Shell command starting an external evaluator");
  sample->add_option("--jobs", sample_opts.jobs, "Worker threads (0: one per processor)");

  std::string build_dir, build_out;
  auto* build = app.add_subcommand("build", "Merge the run logs of a sample directory into a LON file");
  build->add_option("logs", build_dir, "Directory written by 'sample'")->required()->check(CLI::ExistingDirectory);
  build->add_option("--out", build_out, "LON file (default: <logs>/lon.json)");

  std::vector<std::string> metric_inputs;
  std::string metric_out;
  auto* metrics = app.add_subcommand("metrics", "Write the run-statistics and LON-statistics tables");
  metrics->add_option("lons", metric_inputs, "LON files")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", metric_out, "Output directory");

  std::vector<std::string> compare_inputs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Pairwise Mann-Whitney U tests between LONs");
  compare->add_option("lons", compare_inputs, "Two or more LON files")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", compare_out, "Output directory");

  std::vector<std::string> export_inputs;
  std::string export_out;
  std::string export_format = "graphml";
  auto* exporter = app.add_subcommand("export", "Export LONs as annotated graphs (quartiles pooled over inputs)");
  exporter->add_option("lons", export_inputs, "LON files")->required()->check(CLI::ExistingFile);
  exporter->add_option("--format", export_format, "Output format")->check(CLI::IsMember({"graphml", "dot", "csv"}));
  exporter->add_option("--out", export_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sample) return cmd_sample(sample_opts);
    if (*build) return cmd_build(build_dir, build_out);
    if (*metrics) return cmd_metrics(metric_inputs, metric_out);
    if (*compare) return cmd_compare(compare_inputs, compare_out);
    if (*exporter) return cmd_export(export_inputs, export_format, export_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
