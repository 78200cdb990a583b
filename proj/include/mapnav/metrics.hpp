#ifndef MAPNAV_METRICS_HPP_
#define MAPNAV_METRICS_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mapnav/trajectory.hpp"

namespace mapnav {

struct AgentSummary {
  int agent_id = 0;
  AgentStatus status = AgentStatus::Active;
  double travel_time_s = 0.0;
  double path_length_m = 0.0;
  // Start to terminal position for arrived agents: the straight run that
  // the lower bound on travel time is measured against.
  double straight_line_dist_m = 0.0;
};

struct EpisodeSummary {
  std::vector<AgentSummary> agents;
  double success_rate = 0.0;
  double stuck_rate = 0.0;
  double collision_rate = 0.0;
  std::optional<double> extra_time_s;  // empty when nobody arrived
  std::optional<double> avg_speed_mps;  // empty when no agent moved for > 0 s
};

/// Throws InputError on an empty set or a non-terminal agent.
EpisodeSummary compute_metrics(const std::vector<Trajectory>& trajectories, double v_max);

/// Pools several episodes into one summary (rates over all agents).
EpisodeSummary merge_summaries(const std::vector<EpisodeSummary>& episodes, double v_max);

inline constexpr const char* kMetricsCsvHeader =
    "seed,n_agents,success_rate,stuck_rate,collision_rate,extra_time_s,avg_speed_mps";

std::string metrics_csv_row(const std::string& seed_label, const EpisodeSummary& summary);

struct MetricsTableColumn {
  int n_agents = 0;
  EpisodeSummary summary;
};

struct MetricsTableMethod {
  std::string method;
  std::vector<MetricsTableColumn> columns;
};

/// Markdown table: one block of rows per metric, one row per method, one
/// column per agent count.
std::string metrics_markdown(const std::string& benchmark, const std::vector<MetricsTableMethod>& methods);

}  // namespace mapnav

#endif  // MAPNAV_METRICS_HPP_
