#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainflow/action.hpp"
#include "chainflow/flow.hpp"

namespace chainflow {

struct ExportNode {
  NodeRef ref;
  std::string label;
};

struct ExportEdge {
  BEdgeType type = BEdgeType::NextStep;
  NodeRef src;
  NodeRef dst;
  std::uint32_t order = 0;
  std::int64_t timestamp = 0;
  std::optional<int> cluster;
};

/// Renderable graph with a fixed node and edge order.
struct ExportGraph {
  std::string name;
  std::vector<ExportNode> nodes;
  std::vector<ExportEdge> edges;
};

enum class ExportFormat { Dot, GraphML, Csv };

/// Throws Error{UnsupportedFormat}.
ExportFormat parse_export_format(std::string_view text);
const char* extension(ExportFormat format);

/// `bg` supplies action labels (event names); uuids are used without it.
ExportGraph export_flow(const FlowGraph& flow, const BehaviourGraph* bg = nullptr);
ExportGraph export_general_flow(const GeneralFlow& gf, const BehaviourGraph* bg = nullptr);
/// Union of the members' flows, every edge tagged with the cluster id.
ExportGraph export_cluster(const std::vector<FlowGraph>& flows, int cluster_id,
                           const BehaviourGraph* bg = nullptr);

std::string to_dot(const ExportGraph& g);
std::string to_graphml(const ExportGraph& g);
std::string to_csv(const ExportGraph& g);
std::string render(const ExportGraph& g, ExportFormat format);

void export_graph(const ExportGraph& g, ExportFormat format, const std::filesystem::path& path);

}  // namespace chainflow
