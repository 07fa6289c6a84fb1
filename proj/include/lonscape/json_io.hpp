#pragma once

// JSON forms (schema 1) of modules, phenotype trees and genotypes.

#include <string>

#include "json.hpp"
#include "lonscape/core.hpp"
#include "lonscape/encodings.hpp"
#include "lonscape/error.hpp"

namespace lonscape {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void require_schema(const Json& j, const char* what) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != kSchemaVersion)
    throw Error(ErrorCode::SchemaMismatch, std::string(what) + ": expected schema 1");
}

template <class F>
auto parse_guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string(what) + ": " + e.what());
  }
}

inline Json optional_index(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::optional<int> read_optional_index(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace detail

inline Json to_json(const ControllerParams& c) {
  return Json{{"amplitude", c.amplitude}, {"frequency", c.frequency}, {"phase", c.phase}, {"offset", c.offset}};
}

inline ControllerParams controller_from_json(const Json& j) {
  return {j.at("amplitude").get<double>(), j.at("frequency").get<double>(), j.at("phase").get<double>(),
          j.at("offset").get<double>()};
}

inline Json to_json(const Module& m) {
  return Json{{"kind", std::string(to_string(m.kind))},
              {"width", m.width},
              {"height", m.height},
              {"radius", m.radius},
              {"connection_angle", m.connection_angle},
              {"controller", to_json(m.controller)}};
}

inline Module module_from_json(const Json& j) {
  Module m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "circle")
    m.kind = ModuleKind::Circle;
  else if (kind == "rectangle")
    m.kind = ModuleKind::Rectangle;
  else
    throw Error(ErrorCode::SchemaMismatch, "unknown module kind '" + kind + "'");
  m.width = j.at("width").get<double>();
  m.height = j.at("height").get<double>();
  m.radius = j.at("radius").get<double>();
  m.connection_angle = j.at("connection_angle").get<double>();
  m.controller = controller_from_json(j.at("controller"));
  return m;
}

inline Json to_json(const ModuleList& list) {
  Json arr = Json::array();
  for (const Module& m : list) arr.push_back(to_json(m));
  return arr;
}

inline ModuleList module_list_from_json(const Json& j) {
  if (!j.is_array() || j.size() != kModuleCount)
    throw Error(ErrorCode::SchemaMismatch, "module_list must hold exactly 8 modules");
  ModuleList list{};
  for (std::size_t i = 0; i < list.size(); ++i) list[i] = module_from_json(j[i]);
  return list;
}

inline Json to_json(const PhenotypeTree& tree) {
  Json nodes = Json::array();
  for (const auto& n : tree.nodes) {
    Json jn = to_json(n.module);
    jn["node_index"] = n.node_index;
    jn["module_index"] = n.module_index;
    jn["parent_index"] = detail::optional_index(n.parent_index);
    jn["site"] = n.site;
    jn["depth"] = n.depth;
    nodes.push_back(std::move(jn));
  }
  return Json{{"schema", kSchemaVersion}, {"nodes", std::move(nodes)}};
}

inline PhenotypeTree phenotype_from_json(const Json& j) {
  detail::require_schema(j, "phenotype");
  return detail::parse_guard("phenotype", [&] {
    PhenotypeTree tree;
    for (const Json& jn : j.at("nodes")) {
      PhenotypeNode n;
      n.module = module_from_json(jn);
      n.node_index = jn.at("node_index").get<int>();
      n.module_index = jn.at("module_index").get<int>();
      n.parent_index = detail::read_optional_index(jn.at("parent_index"));
      n.site = jn.at("site").get<int>();
      n.depth = jn.at("depth").get<int>();
      tree.nodes.push_back(n);
    }
    return tree;
  });
}

inline Json to_json(const Genotype& g) {
  Json j{{"schema", kSchemaVersion}, {"encoding", std::string(to_string(encoding_of(g)))}};
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DirectGenotype>) {
          Json nodes = Json::array();
          for (const auto& n : x.nodes)
            nodes.push_back({{"module_index", n.module_index},
                             {"parent_index", detail::optional_index(n.parent_index)},
                             {"site", n.site}});
          j["nodes"] = std::move(nodes);
        } else if constexpr (std::is_same_v<T, LSystemGenotype>) {
          j["axiom"] = x.axiom;
          Json rules = Json::array();
          for (const Rule& r : x.rules) {
            Json slots = Json::array();
            for (const RuleSlot& s : r) slots.push_back(detail::optional_index(s));
            rules.push_back(std::move(slots));
          }
          j["rules"] = std::move(rules);
        } else {
          Json nodes = Json::array();
          for (const auto& n : x.nodes)
            nodes.push_back({{"id", n.id},
                             {"role", std::string(to_string(n.role))},
                             {"activation", std::string(to_string(n.activation))},
                             {"bias", n.bias}});
          Json conns = Json::array();
          for (const auto& c : x.connections)
            conns.push_back({{"from", c.from}, {"to", c.to}, {"weight", c.weight}, {"enabled", c.enabled}});
          j["nodes"] = std::move(nodes);
          j["connections"] = std::move(conns);
        }
        j["module_list"] = to_json(x.module_list);
      },
      g);
  return j;
}

namespace detail {

inline NodeRole role_from_string(const std::string& s) {
  if (s == "input") return NodeRole::Input;
  if (s == "hidden") return NodeRole::Hidden;
  if (s == "output") return NodeRole::Output;
  throw Error(ErrorCode::SchemaMismatch, "unknown CPPN node role '" + s + "'");
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "gaussian") return Activation::Gaussian;
  if (s == "sine") return Activation::Sine;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw Error(ErrorCode::SchemaMismatch, "unknown activation '" + s + "'");
}

}  // namespace detail

inline Genotype genotype_from_json(const Json& j) {
  detail::require_schema(j, "genotype");
  return detail::parse_guard("genotype", [&]() -> Genotype {
    const auto enc = parse_encoding(j.at("encoding").get<std::string>());
    if (!enc) throw Error(ErrorCode::SchemaMismatch, "unknown encoding in genotype");
    const ModuleList list = module_list_from_json(j.at("module_list"));
    switch (*enc) {
      case Encoding::Direct: {
        DirectGenotype g;
        g.module_list = list;
        for (const Json& n : j.at("nodes"))
          g.nodes.push_back({n.at("module_index").get<int>(), detail::read_optional_index(n.at("parent_index")),
                             n.at("site").get<int>()});
        return g;
      }
      case Encoding::LSystem: {
        LSystemGenotype g;
        g.module_list = list;
        g.axiom = j.at("axiom").get<int>();
        const Json& rules = j.at("rules");
        if (!rules.is_array() || rules.size() != kModuleCount)
          throw Error(ErrorCode::SchemaMismatch, "L-System genotype needs 8 rules");
        for (std::size_t s = 0; s < g.rules.size(); ++s) {
          if (!rules[s].is_array() || rules[s].size() != kSitesPerNode)
            throw Error(ErrorCode::SchemaMismatch, "L-System rule needs 3 slots");
          for (std::size_t k = 0; k < kSitesPerNode; ++k) g.rules[s][k] = detail::read_optional_index(rules[s][k]);
        }
        return g;
      }
      case Encoding::Cppn: {
        CppnGenotype g;
        g.module_list = list;
        for (const Json& n : j.at("nodes"))
          g.nodes.push_back({n.at("id").get<int>(), detail::role_from_string(n.at("role").get<std::string>()),
                             detail::activation_from_string(n.at("activation").get<std::string>()),
                             n.at("bias").get<double>()});
        for (const Json& c : j.at("connections"))
          g.connections.push_back(
              {c.at("from").get<int>(), c.at("to").get<int>(), c.at("weight").get<double>(), c.at("enabled").get<bool>()});
        return g;
      }
    }
    throw Error(ErrorCode::SchemaMismatch, "unknown encoding in genotype");
  });
}

}  // namespace lonscape
