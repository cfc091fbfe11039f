#pragma once
// Node placement in a square area with the DAG root at the center, either on
// a uniform grid ("linear" deployments) or uniformly at random with a
// connectivity constraint.

#include <iosfwd>
#include <string>
#include <vector>

#include "sixsim/core.hpp"
#include "sixsim/propagation.hpp"
#include "sixsim/rng.hpp"

namespace sixsim {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct Topology {
  double side_length = 0.0;          // meters
  std::vector<Position> positions;   // index = node id, [0] is the root

  int node_count() const { return static_cast<int>(positions.size()); }

  // Text format: header "L=<meters>" then one "<node_id> <x> <y>" per line.
  std::string serialize() const;
  static Topology parse(std::istream& in);
};

double distance_m(const Position& a, const Position& b);

// Grid deployment: root at (L/2, L/2); the n-1 other nodes fill a
// ceil(sqrt(n-1))-column grid of cell centers covering the area, with equal
// nearest-neighbor spacing along each axis. When the grid has spare cells
// the cell nearest the center stays vacant (the root sits there); a grid
// cell that would coincide exactly with the root forces a row to be added
// so it can be skipped. Throws std::invalid_argument on n < 2 or L <= 0.
Topology generate_linear(int node_count, double side_length);

// Random deployment: root at the center, every other node uniform in the
// square, resampled until it has at least one already-placed neighbor whose
// best-case (Friis-only) RSSI reaches connect_threshold_dbm. Pure function
// of the rng stream. Throws std::runtime_error when a node exhausts its
// resample budget (unsatisfiable threshold / too-sparse area).
Topology generate_random(int node_count, double side_length, RngStream& rng,
                         const BandConfig& band, double connect_threshold_dbm,
                         int resample_budget = 1000);

// Per-node maximum best-case (Friis-only) RSSI to any other node, in dBm.
std::vector<double> connectivity_report(const Topology& topology,
                                        const BandConfig& band);

// Nodes whose best-case RSSI stays below the threshold (never reachable).
std::vector<NodeId> isolated_nodes(const Topology& topology,
                                   const BandConfig& band,
                                   double connect_threshold_dbm);

}  // namespace sixsim
