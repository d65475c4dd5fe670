#include "chainflow/export.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "chainflow/error.hpp"

namespace chainflow {

namespace {

std::string node_id(const NodeRef& r) { return std::string(to_string(r.type)) + ":" + r.key; }

const char* colour(BNodeType t) {
  switch (t) {
    case BNodeType::Action: return "#ff0000";
    case BNodeType::User: return "#007dff";
    case BNodeType::Nft: return "#7b3f00";
    case BNodeType::VirtualUser: return "#7f7f7f";
  }
  return "#000000";
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string action_label(const std::string& uuid, const BehaviourGraph* bg) {
  if (bg) {
    if (const auto* a = bg->find_action(uuid)) {
      std::string label;
      for (const auto& e : a->events) label += (label.empty() ? "" : "+") + e;
      return label;
    }
  }
  return uuid.substr(0, 8);
}

ExportEdge convert(const BehaviourEdge& e, std::optional<int> cluster) {
  return ExportEdge{e.type, e.src, e.dst, e.order, e.timestamp, e.cluster ? e.cluster : cluster};
}

}  // namespace

ExportFormat parse_export_format(std::string_view text) {
  if (text == "dot") return ExportFormat::Dot;
  if (text == "graphml") return ExportFormat::GraphML;
  if (text == "csv") return ExportFormat::Csv;
  throw Error(ErrorKind::UnsupportedFormat, "unsupported export format '" + std::string(text) + "'");
}

const char* extension(ExportFormat format) {
  switch (format) {
    case ExportFormat::Dot: return ".dot";
    case ExportFormat::GraphML: return ".graphml";
    case ExportFormat::Csv: return ".csv";
  }
  return "";
}

ExportGraph export_flow(const FlowGraph& flow, const BehaviourGraph* bg) {
  ExportGraph g;
  g.name = "flow_" + flow.address;
  if (flow.edges.empty() && flow.address.empty()) return g;
  g.nodes.push_back({{BNodeType::User, flow.address}, flow.address});
  for (const auto& a : flow.actions) g.nodes.push_back({{BNodeType::Action, a}, action_label(a, bg)});
  for (const auto& n : flow.nfts) g.nodes.push_back({{BNodeType::Nft, n}, n});
  for (const auto& e : flow.edges) g.edges.push_back(convert(e, std::nullopt));
  return g;
}

ExportGraph export_general_flow(const GeneralFlow& gf, const BehaviourGraph* bg) {
  ExportGraph g;
  g.name = "general_flow_" + std::to_string(gf.cluster_id);
  const auto vu = virtual_user_key(gf.cluster_id);
  g.nodes.push_back({{BNodeType::VirtualUser, vu}, vu});
  for (const auto& a : gf.actions) g.nodes.push_back({{BNodeType::Action, a}, action_label(a, bg)});
  for (const auto& n : gf.nfts) g.nodes.push_back({{BNodeType::Nft, n}, n});
  for (const auto& e : gf.edges) g.edges.push_back(convert(e, gf.cluster_id));
  return g;
}

ExportGraph export_cluster(const std::vector<FlowGraph>& flows, int cluster_id,
                           const BehaviourGraph* bg) {
  ExportGraph g;
  g.name = "cluster_" + std::to_string(cluster_id);
  std::set<std::string> users, seen_actions, nfts;
  std::vector<std::string> actions;
  for (const auto& f : flows) {
    users.insert(f.address);
    for (const auto& a : f.actions) {
      if (seen_actions.insert(a).second) actions.push_back(a);
    }
    nfts.insert(f.nfts.begin(), f.nfts.end());
  }
  for (const auto& u : users) g.nodes.push_back({{BNodeType::User, u}, u});
  for (const auto& a : actions) g.nodes.push_back({{BNodeType::Action, a}, action_label(a, bg)});
  for (const auto& n : nfts) g.nodes.push_back({{BNodeType::Nft, n}, n});
  for (const auto& f : flows) {
    for (const auto& e : f.edges) g.edges.push_back(convert(e, cluster_id));
  }
  return g;
}

std::string to_dot(const ExportGraph& g) {
  std::ostringstream out;
  out << "digraph " << dot_quote(g.name) << " {\n";
  for (const auto& n : g.nodes) {
    out << "  " << dot_quote(node_id(n.ref)) << " [label=" << dot_quote(n.label)
        << ", kind=" << dot_quote(to_string(n.ref.type))
        << ", style=filled, fillcolor=\"" << colour(n.ref.type) << "\"];\n";
  }
  for (const auto& e : g.edges) {
    out << "  " << dot_quote(node_id(e.src)) << " -> " << dot_quote(node_id(e.dst))
        << " [label=" << dot_quote(to_string(e.type)) << ", order=" << e.order
        << ", timestamp=" << e.timestamp;
    if (e.cluster) out << ", cluster=" << *e.cluster;
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_graphml(const ExportGraph& g) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
      << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
      << "  <key id=\"type\" for=\"edge\" attr.name=\"type\" attr.type=\"string\"/>\n"
      << "  <key id=\"order\" for=\"edge\" attr.name=\"order\" attr.type=\"int\"/>\n"
      << "  <key id=\"timestamp\" for=\"edge\" attr.name=\"timestamp\" attr.type=\"long\"/>\n"
      << "  <key id=\"cluster\" for=\"edge\" attr.name=\"cluster\" attr.type=\"int\"/>\n"
      << "  <graph id=\"" << xml_escape(g.name) << "\" edgedefault=\"directed\">\n";
  for (const auto& n : g.nodes) {
    out << "    <node id=\"" << xml_escape(node_id(n.ref)) << "\">"
        << "<data key=\"kind\">" << to_string(n.ref.type) << "</data>"
        << "<data key=\"label\">" << xml_escape(n.label) << "</data></node>\n";
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    out << "    <edge id=\"e" << i << "\" source=\"" << xml_escape(node_id(e.src)) << "\" target=\""
        << xml_escape(node_id(e.dst)) << "\">"
        << "<data key=\"type\">" << to_string(e.type) << "</data>"
        << "<data key=\"order\">" << e.order << "</data>"
        << "<data key=\"timestamp\">" << e.timestamp << "</data>";
    if (e.cluster) out << "<data key=\"cluster\">" << *e.cluster << "</data>";
    out << "</edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

std::string to_csv(const ExportGraph& g) {
  std::ostringstream out;
  out << "record,id,kind,label,src,dst,order,timestamp,cluster\n";
  for (const auto& n : g.nodes) {
    out << "node," << csv_cell(node_id(n.ref)) << ',' << to_string(n.ref.type) << ','
        << csv_cell(n.label) << ",,,,,\n";
  }
  for (const auto& e : g.edges) {
    out << "edge,," << to_string(e.type) << ",," << csv_cell(node_id(e.src)) << ','
        << csv_cell(node_id(e.dst)) << ',' << e.order << ',' << e.timestamp << ',';
    if (e.cluster) out << *e.cluster;
    out << '\n';
  }
  return out.str();
}

std::string render(const ExportGraph& g, ExportFormat format) {
  switch (format) {
    case ExportFormat::Dot: return to_dot(g);
    case ExportFormat::GraphML: return to_graphml(g);
    case ExportFormat::Csv: return to_csv(g);
  }
  throw Error(ErrorKind::UnsupportedFormat, "unsupported export format");
}

void export_graph(const ExportGraph& g, ExportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << render(g, format);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace chainflow
