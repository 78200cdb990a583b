#include "mapnav/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mapnav/errors.hpp"

namespace mapnav {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trajectories_csv(const std::vector<Trajectory>& trajectories, std::ostream& out) {
  out << "t,agent_id,x,y,heading,v,omega,reward,status\n";
  std::size_t longest = 0;
  for (const Trajectory& tr : trajectories) longest = std::max(longest, tr.records.size());
  for (std::size_t k = 0; k < longest; ++k) {
    for (const Trajectory& tr : trajectories) {
      if (k >= tr.records.size()) continue;
      const TrajectoryRecord& r = tr.records[k];
      out << format_double(r.t) << ',' << tr.agent_id << ',' << format_double(r.position.x) << ','
          << format_double(r.position.y) << ',' << format_double(r.heading) << ','
          << format_double(r.action.v) << ',' << format_double(r.action.omega) << ','
          << format_double(r.reward) << ',' << to_string(r.status) << '\n';
    }
  }
}

void write_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_trajectories_csv(trajectories, out);
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw InputError("trajectory csv line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

std::vector<Trajectory> read_trajectories_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "t,agent_id,x,y,heading,v,omega,reward,status")
    throw InputError("trajectory csv: missing or unexpected header");
  std::map<int, Trajectory> by_agent;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 9)
      throw InputError("trajectory csv line " + std::to_string(line_no) + ": expected 9 fields");
    TrajectoryRecord r;
    r.t = parse_double(fields[0], line_no);
    const int id = static_cast<int>(parse_double(fields[1], line_no));
    r.position = {parse_double(fields[2], line_no), parse_double(fields[3], line_no)};
    r.heading = parse_double(fields[4], line_no);
    r.action = {parse_double(fields[5], line_no), parse_double(fields[6], line_no)};
    r.reward = parse_double(fields[7], line_no);
    r.status = parse_status(fields[8]);
    Trajectory& tr = by_agent[id];
    tr.agent_id = id;
    tr.records.push_back(r);
  }
  std::vector<Trajectory> out;
  for (auto& [id, tr] : by_agent) out.push_back(std::move(tr));
  return out;
}

std::vector<Trajectory> read_trajectories_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open trajectory file " + path);
  return read_trajectories_csv(in);
}

}  // namespace mapnav
