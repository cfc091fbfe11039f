#include "sixsim/topology.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sixsim {

double distance_m(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::string Topology::serialize() const {
  std::ostringstream out;
  out.precision(17);
  out << "L=" << side_length << '\n';
  for (std::size_t i = 0; i < positions.size(); ++i)
    out << i << ' ' << positions[i].x << ' ' << positions[i].y << '\n';
  return out.str();
}

Topology Topology::parse(std::istream& in) {
  Topology t;
  std::string line;
  if (!std::getline(in, line) || line.rfind("L=", 0) != 0)
    throw std::invalid_argument("topology: missing L= header");
  t.side_length = std::stod(line.substr(2));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t id = 0;
    Position p;
    if (!(row >> id >> p.x >> p.y))
      throw std::invalid_argument("topology: bad node line: " + line);
    if (id != t.positions.size())
      throw std::invalid_argument("topology: node ids must be consecutive");
    t.positions.push_back(p);
  }
  return t;
}

Topology generate_linear(int node_count, double side_length) {
  if (node_count < 2)
    throw std::invalid_argument("generate_linear: need at least 2 nodes");
  if (side_length <= 0.0)
    throw std::invalid_argument("generate_linear: side_length must be positive");

  const int m = node_count - 1;  // grid nodes; the root sits at the center
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
  int rows = (m + cols - 1) / cols;
  const Position root{side_length / 2.0, side_length / 2.0};

  for (;;) {
    const int capacity = rows * cols;
    // Cell centers in row-major order; spacing L/cols and L/rows per axis.
    std::vector<Position> cells;
    cells.reserve(static_cast<std::size_t>(capacity));
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < cols; ++i)
        cells.push_back({(i + 0.5) * side_length / cols,
                         (j + 0.5) * side_length / rows});

    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < capacity; ++k) {
      const double d = distance_m(cells[static_cast<std::size_t>(k)], root);
      if (d < best) {
        best = d;
        nearest = k;
      }
    }

    if (capacity == m) {
      const auto& c = cells[static_cast<std::size_t>(nearest)];
      if (c.x == root.x && c.y == root.y) {
        // A grid point falls exactly on the root; grow the grid so that
        // cell can stay vacant.
        ++rows;
        continue;
      }
      Topology t;
      t.side_length = side_length;
      t.positions.push_back(root);
      t.positions.insert(t.positions.end(), cells.begin(), cells.end());
      return t;
    }

    // Spare capacity: leave the cell nearest the center vacant.
    Topology t;
    t.side_length = side_length;
    t.positions.push_back(root);
    for (int k = 0; k < capacity && static_cast<int>(t.positions.size()) < node_count;
         ++k) {
      if (k == nearest) continue;
      t.positions.push_back(cells[static_cast<std::size_t>(k)]);
    }
    return t;
  }
}

namespace {

bool reaches_any(const Position& candidate, const std::vector<Position>& placed,
                 const BandConfig& band, double threshold_dbm) {
  for (const auto& other : placed) {
    const double d = distance_m(candidate, other);
    if (d <= 0.0) continue;  // coincident points have no defined path loss
    const double rssi =
        band.tx_power_dbm - friis_path_loss_db(d, band.center_frequency_hz);
    if (rssi >= threshold_dbm) return true;
  }
  return false;
}

}  // namespace

Topology generate_random(int node_count, double side_length, RngStream& rng,
                         const BandConfig& band, double connect_threshold_dbm,
                         int resample_budget) {
  if (node_count < 2)
    throw std::invalid_argument("generate_random: need at least 2 nodes");
  if (side_length <= 0.0)
    throw std::invalid_argument("generate_random: side_length must be positive");
  if (resample_budget < 1)
    throw std::invalid_argument("generate_random: resample_budget must be >= 1");

  Topology t;
  t.side_length = side_length;
  t.positions.push_back({side_length / 2.0, side_length / 2.0});
  for (NodeId id = 1; id < node_count; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < resample_budget; ++attempt) {
      const Position candidate{rng.uniform(0.0, side_length),
                               rng.uniform(0.0, side_length)};
      if (reaches_any(candidate, t.positions, band, connect_threshold_dbm)) {
        t.positions.push_back(candidate);
        placed = true;
        break;
      }
    }
    if (!placed)
      throw std::runtime_error(
          "generate_random: node " + std::to_string(id) +
          " found no reachable neighbor within the resample budget");
  }
  return t;
}

std::vector<double> connectivity_report(const Topology& topology,
                                        const BandConfig& band) {
  const auto n = topology.positions.size();
  std::vector<double> best(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = distance_m(topology.positions[i], topology.positions[j]);
      if (d <= 0.0) continue;
      const double rssi =
          band.tx_power_dbm - friis_path_loss_db(d, band.center_frequency_hz);
      if (rssi > best[i]) best[i] = rssi;
    }
  }
  return best;
}

std::vector<NodeId> isolated_nodes(const Topology& topology,
                                   const BandConfig& band,
                                   double connect_threshold_dbm) {
  const auto report = connectivity_report(topology, band);
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < report.size(); ++i)
    if (report[i] < connect_threshold_dbm) out.push_back(static_cast<NodeId>(i));
  return out;
}

}  // namespace sixsim
