#include "mapnav/metrics.hpp"

#include <sstream>

#include "mapnav/errors.hpp"

namespace mapnav {

namespace {

EpisodeSummary summarize(std::vector<AgentSummary> agents, double v_max) {
  if (agents.empty()) throw InputError("metrics: zero agents");
  if (!(v_max > 0.0)) throw InputError("metrics: v_max must be > 0");
  EpisodeSummary s;
  s.agents = std::move(agents);
  const double n = static_cast<double>(s.agents.size());
  int arrived = 0, stuck = 0, collided = 0;
  double travel_sum = 0.0, bound_sum = 0.0;
  double speed_sum = 0.0;
  int speed_count = 0;
  for (const AgentSummary& a : s.agents) {
    switch (a.status) {
      case AgentStatus::Arrived:
        ++arrived;
        travel_sum += a.travel_time_s;
        bound_sum += a.straight_line_dist_m / v_max;
        break;
      case AgentStatus::Stuck: ++stuck; break;
      case AgentStatus::Collided: ++collided; break;
      case AgentStatus::Active: throw InputError("metrics: agent " + std::to_string(a.agent_id) + " is not terminal");
    }
    if (a.travel_time_s > 0.0) {
      speed_sum += a.path_length_m / a.travel_time_s;
      ++speed_count;
    }
  }
  s.success_rate = arrived / n;
  s.stuck_rate = stuck / n;
  s.collision_rate = collided / n;
  if (arrived > 0) s.extra_time_s = travel_sum / arrived - bound_sum / arrived;
  if (speed_count > 0) s.avg_speed_mps = speed_sum / speed_count;
  return s;
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

}  // namespace

EpisodeSummary compute_metrics(const std::vector<Trajectory>& trajectories, double v_max) {
  std::vector<AgentSummary> agents;
  agents.reserve(trajectories.size());
  for (const Trajectory& tr : trajectories) {
    if (tr.records.empty()) throw InputError("metrics: agent " + std::to_string(tr.agent_id) + " has no records");
    AgentSummary a;
    a.agent_id = tr.agent_id;
    const TrajectoryRecord& first = tr.records.front();
    const TrajectoryRecord& last = tr.records.back();
    a.status = last.status;
    a.travel_time_s = last.t - first.t;
    for (std::size_t k = 1; k < tr.records.size(); ++k)
      a.path_length_m += distance(tr.records[k].position, tr.records[k - 1].position);
    a.straight_line_dist_m = distance(last.position, first.position);
    agents.push_back(a);
  }
  return summarize(std::move(agents), v_max);
}

EpisodeSummary merge_summaries(const std::vector<EpisodeSummary>& episodes, double v_max) {
  std::vector<AgentSummary> agents;
  for (const EpisodeSummary& e : episodes) agents.insert(agents.end(), e.agents.begin(), e.agents.end());
  return summarize(std::move(agents), v_max);
}

std::string metrics_csv_row(const std::string& seed_label, const EpisodeSummary& s) {
  std::ostringstream out;
  out << seed_label << ',' << s.agents.size() << ',' << format_double(s.success_rate) << ','
      << format_double(s.stuck_rate) << ',' << format_double(s.collision_rate) << ','
      << opt_field(s.extra_time_s) << ',' << opt_field(s.avg_speed_mps);
  return out.str();
}

std::string metrics_markdown(const std::string& benchmark, const std::vector<MetricsTableMethod>& methods) {
  std::ostringstream out;
  std::vector<int> counts;
  if (!methods.empty())
    for (const MetricsTableColumn& c : methods.front().columns) counts.push_back(c.n_agents);

  out << "| " << benchmark << " | Method |";
  for (int n : counts) out << ' ' << n << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < counts.size(); ++i) out << "---|";
  out << '\n';

  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };
  struct Row {
    const char* name;
    std::string (*cell)(const EpisodeSummary&, decltype(fmt)&);
  };
  const Row rows[] = {
      {"Success Rate", [](const EpisodeSummary& s, decltype(fmt)& f) { return f(s.success_rate); }},
      {"Collision/Stuck Rate",
       [](const EpisodeSummary& s, decltype(fmt)& f) { return f(s.collision_rate) + "/" + f(s.stuck_rate); }},
      {"Extra Time",
       [](const EpisodeSummary& s, decltype(fmt)& f) { return s.extra_time_s ? f(*s.extra_time_s) : std::string("-"); }},
      {"Average Speed",
       [](const EpisodeSummary& s, decltype(fmt)& f) { return s.avg_speed_mps ? f(*s.avg_speed_mps) : std::string("-"); }},
  };
  for (const Row& row : rows) {
    for (const MetricsTableMethod& m : methods) {
      out << "| " << row.name << " | " << m.method << " |";
      for (const MetricsTableColumn& c : m.columns) out << ' ' << row.cell(c.summary, fmt) << " |";
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace mapnav
