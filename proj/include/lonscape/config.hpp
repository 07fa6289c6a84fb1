#pragma once

// Experiment configuration file (JSON, schema 1).

#include <cstdint>
#include <string>

#include "lonscape/evaluate.hpp"
#include "lonscape/json_io.hpp"
#include "lonscape/sampler.hpp"

namespace lonscape {

struct ExperimentConfig {
  IlsConfig ils{};
  EvaluatorConfig evaluator{};
  std::string output_dir = "runs";
  unsigned jobs = 0;  // 0: one worker per processor

  bool operator==(const ExperimentConfig&) const = default;

  Encoding encoding() const noexcept { return ils.encoding; }
};

inline std::string_view to_string(EvaluatorKind k) { return k == EvaluatorKind::Surrogate ? "surrogate" : "external"; }

inline Json to_json(const ExperimentConfig& c) {
  const IlsConfig& i = c.ils;
  const EvaluatorConfig& e = c.evaluator;
  return Json{{"schema", kSchemaVersion},
              {"encoding", std::string(to_string(i.encoding))},
              {"ils",
               {{"runs", i.runs},
                {"ls_stall_budget", i.ls_stall_budget},
                {"perturbation_strength", i.perturbation_strength},
                {"run_stall_limit", i.run_stall_limit},
                {"run_iteration_limit", i.run_iteration_limit},
                {"base_seed", i.base_seed},
                {"fitness_equality_tolerance", i.fitness_equality_tolerance},
                {"rates",
                 {{"controller_rate", i.rates.controller_rate},
                  {"design_rate", i.rates.design_rate},
                  {"gaussian_sigma", i.rates.gaussian_sigma}}}}},
              {"evaluator",
               {{"kind", std::string(to_string(e.kind))},
                {"kill_speed", e.kill_speed},
                {"scale", e.scale},
                {"external_command", e.external_command},
                {"timeout_seconds", e.timeout_seconds}}},
              {"output_dir", c.output_dir},
              {"jobs", c.jobs}};
}

/// Missing fields keep their defaults; mutation rates default to the tuned
/// values of the chosen encoding.
inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  if (j.contains("schema") && j.at("schema") != kSchemaVersion)
    throw Error(ErrorCode::SchemaMismatch, "config: expected schema 1");
  try {
    ExperimentConfig c;
    if (j.contains("encoding")) {
      const auto enc = parse_encoding(j.at("encoding").get<std::string>());
      if (!enc) throw Error(ErrorCode::ConfigInvalid, "unknown encoding " + j.at("encoding").dump());
      c.ils = IlsConfig::for_encoding(*enc);
    }
    if (j.contains("ils")) {
      const Json& i = j.at("ils");
      IlsConfig& o = c.ils;
      o.runs = i.value("runs", o.runs);
      o.ls_stall_budget = i.value("ls_stall_budget", o.ls_stall_budget);
      o.perturbation_strength = i.value("perturbation_strength", o.perturbation_strength);
      o.run_stall_limit = i.value("run_stall_limit", o.run_stall_limit);
      o.run_iteration_limit = i.value("run_iteration_limit", o.run_iteration_limit);
      o.base_seed = i.value("base_seed", o.base_seed);
      o.fitness_equality_tolerance = i.value("fitness_equality_tolerance", o.fitness_equality_tolerance);
      if (i.contains("rates")) {
        const Json& r = i.at("rates");
        o.rates.controller_rate = r.value("controller_rate", o.rates.controller_rate);
        o.rates.design_rate = r.value("design_rate", o.rates.design_rate);
        o.rates.gaussian_sigma = r.value("gaussian_sigma", o.rates.gaussian_sigma);
      }
    }
    if (j.contains("evaluator")) {
      const Json& e = j.at("evaluator");
      EvaluatorConfig& o = c.evaluator;
      const std::string kind = e.value("kind", std::string("surrogate"));
      if (kind == "surrogate")
        o.kind = EvaluatorKind::Surrogate;
      else if (kind == "external")
        o.kind = EvaluatorKind::External;
      else
        throw Error(ErrorCode::ConfigInvalid, "unknown evaluator kind '" + kind + "'");
      o.kill_speed = e.value("kill_speed", o.kill_speed);
      o.scale = e.value("scale", o.scale);
      o.external_command = e.value("external_command", o.external_command);
      o.timeout_seconds = e.value("timeout_seconds", o.timeout_seconds);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.jobs = j.value("jobs", c.jobs);
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
}

inline void validate(const ExperimentConfig& c) {
  if (!c.ils.valid()) throw Error(ErrorCode::ConfigInvalid, "ILS budgets must be positive and rates in [0, 1]");
  if (!c.evaluator.valid())
    throw Error(ErrorCode::ConfigInvalid, "evaluator needs kill_speed > 0, scale > 0 and a command when external");
}

/// FNV-1a over the compact JSON form; output_dir and jobs do not affect results
/// and are left out.
inline std::string config_digest(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output_dir");
  j.erase("jobs");
  return hash_to_hex(fnv1a64(j.dump()));
}

}  // namespace lonscape
