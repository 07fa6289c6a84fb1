#pragma once

// Graph exports (GraphML, DOT, CSV) and the tabular CSV outputs.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lonscape/lon.hpp"
#include "lonscape/stats.hpp"

namespace lonscape {

inline std::string format_real(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double x) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Pale, light and dark purple for low, middle and high fitness.
constexpr std::string_view fill_color(QuartileClass q) {
  switch (q) {
    case QuartileClass::Low: return "#ECE4F5";
    case QuartileClass::Mid: return "#B39DDB";
    case QuartileClass::High: return "#4A148C";
  }
  return "#FFFFFF";
}

/// Node size proportional to fitness.
inline double node_size(const LonNode& n) { return n.fitness.value / 10.0; }

inline std::string join_runs(const std::set<int>& runs) {
  std::string s;
  for (int r : runs) {
    if (!s.empty()) s.push_back(';');
    s += std::to_string(r);
  }
  return s;
}

inline void write_graphml(std::ostream& os, const Lon& lon) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        "  <key id=\"fitness\" for=\"node\" attr.name=\"fitness\" attr.type=\"double\"/>\n"
        "  <key id=\"killed\" for=\"node\" attr.name=\"killed\" attr.type=\"boolean\"/>\n"
        "  <key id=\"quartile_class\" for=\"node\" attr.name=\"quartile_class\" attr.type=\"string\"/>\n"
        "  <key id=\"fill_color\" for=\"node\" attr.name=\"fill_color\" attr.type=\"string\"/>\n"
        "  <key id=\"size\" for=\"node\" attr.name=\"size\" attr.type=\"double\"/>\n"
        "  <key id=\"runs\" for=\"node\" attr.name=\"runs\" attr.type=\"string\"/>\n"
        "  <key id=\"phenotype_hash\" for=\"node\" attr.name=\"phenotype_hash\" attr.type=\"string\"/>\n"
        "  <key id=\"design_hash\" for=\"node\" attr.name=\"design_hash\" attr.type=\"string\"/>\n"
        "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
     << "  <graph id=\"lon_" << lon.encoding << "\" edgedefault=\"directed\">\n";
  for (const LonNode& n : lon.nodes) {
    os << "    <node id=\"" << hash_to_hex(n.id) << "\">\n"
       << "      <data key=\"fitness\">" << format_exact(n.fitness.value) << "</data>\n"
       << "      <data key=\"killed\">" << (n.fitness.killed ? "true" : "false") << "</data>\n"
       << "      <data key=\"quartile_class\">" << to_string(n.quartile_class) << "</data>\n"
       << "      <data key=\"fill_color\">" << fill_color(n.quartile_class) << "</data>\n"
       << "      <data key=\"size\">" << format_exact(node_size(n)) << "</data>\n"
       << "      <data key=\"runs\">" << join_runs(n.runs) << "</data>\n"
       << "      <data key=\"phenotype_hash\">" << hash_to_hex(n.phenotype_hash) << "</data>\n"
       << "      <data key=\"design_hash\">" << hash_to_hex(n.design_hash) << "</data>\n"
       << "    </node>\n";
  }
  std::size_t k = 0;
  for (const LonEdge& e : lon.edges) {
    os << "    <edge id=\"e" << k++ << "\" source=\"" << hash_to_hex(e.src) << "\" target=\"" << hash_to_hex(e.dst)
       << "\">\n"
       << "      <data key=\"weight\">" << e.weight << "</data>\n"
       << "    </edge>\n";
  }
  os << "  </graph>\n</graphml>\n";
}

inline void write_dot(std::ostream& os, const Lon& lon) {
  os << "digraph lon_" << lon.encoding << " {\n"
     << "  node [shape=circle, style=filled, label=\"\"];\n";
  for (const LonNode& n : lon.nodes) {
    os << "  \"" << hash_to_hex(n.id) << "\" [fitness=" << format_exact(n.fitness.value)
       << ", killed=" << (n.fitness.killed ? "true" : "false") << ", quartile_class=\"" << to_string(n.quartile_class)
       << "\", fillcolor=\"" << fill_color(n.quartile_class) << "\", width=" << format_exact(std::max(0.01, n.fitness.value / 25.0))
       << ", runs=\"" << join_runs(n.runs) << "\"];\n";
  }
  for (const LonEdge& e : lon.edges)
    os << "  \"" << hash_to_hex(e.src) << "\" -> \"" << hash_to_hex(e.dst) << "\" [weight=" << e.weight << "];\n";
  os << "}\n";
}

inline void write_nodes_csv(std::ostream& os, const Lon& lon) {
  os << "id,fitness,killed,quartile_class,fill_color,size,runs,phenotype_hash,design_hash\n";
  for (const LonNode& n : lon.nodes)
    os << hash_to_hex(n.id) << ',' << format_exact(n.fitness.value) << ',' << (n.fitness.killed ? "true" : "false")
       << ',' << to_string(n.quartile_class) << ',' << fill_color(n.quartile_class) << ','
       << format_exact(node_size(n)) << ',' << join_runs(n.runs) << ',' << hash_to_hex(n.phenotype_hash) << ','
       << hash_to_hex(n.design_hash) << '\n';
}

inline void write_edges_csv(std::ostream& os, const Lon& lon) {
  os << "src,dst,weight\n";
  for (const LonEdge& e : lon.edges) os << hash_to_hex(e.src) << ',' << hash_to_hex(e.dst) << ',' << e.weight << '\n';
}

// ---------------------------------------------------------------------------
// Tables: first column is the metric, then one column per LON.
// ---------------------------------------------------------------------------

inline void write_run_stats_csv(std::ostream& os, std::span<const Lon> lons) {
  os << "metric";
  for (const Lon& l : lons) os << ',' << l.encoding;
  os << "\nmutation acceptance";
  for (const Lon& l : lons) os << ',' << format_real(l.run_statistics.mutation_acceptance_pct, 4);
  os << "\ndesign acceptance";
  for (const Lon& l : lons) os << ',' << format_real(l.run_statistics.design_acceptance_pct, 4);
  os << "\nunique designs";
  for (const Lon& l : lons) os << ',' << l.run_statistics.unique_designs;
  os << "\nattempted mutations";
  for (const Lon& l : lons) os << ',' << l.run_statistics.attempted_mutations;
  os << '\n';
}

inline void write_lon_stats_csv(std::ostream& os, std::span<const Lon> lons) {
  std::vector<LonSummary> rows;
  for (const Lon& l : lons) rows.push_back(lon_summary(l));
  os << "metric";
  for (const Lon& l : lons) os << ',' << l.encoding;
  os << "\nnodes";
  for (const auto& s : rows) os << ',' << s.nodes;
  os << "\nedges";
  for (const auto& s : rows) os << ',' << s.edges;
  os << "\ncomponents";
  for (const auto& s : rows) os << ',' << s.components;
  os << "\npath length";
  for (const auto& s : rows) os << ',' << (s.path_length ? format_real(*s.path_length, 4) : std::string("NA"));
  os << "\ndegree";
  for (const auto& s : rows) os << ',' << format_real(s.degree, 4);
  os << "\ninfeasible";
  for (const auto& s : rows) os << ',' << format_real(s.infeasible_pct, 4);
  os << '\n';
}

inline void write_comparison_csv(std::ostream& os, std::span<const ComparisonRow> rows) {
  os << "metric,first,second,u,p_value,stars\n";
  for (const auto& r : rows)
    os << r.metric << ',' << r.first << ',' << r.second << ',' << format_exact(r.result.u_statistic) << ','
       << format_exact(r.result.p_value) << ',' << to_string(r.result.stars) << '\n';
}

}  // namespace lonscape
