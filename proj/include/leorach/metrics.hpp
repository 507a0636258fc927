#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leorach/env.hpp"
#include "leorach/protocol.hpp"

namespace leorach {

struct MetricsRecord {
  std::string run_id;
  Variant variant = Variant::eRACH;
  std::uint64_t seed = 0;
  long episode = 0;
  double avg_throughput_bps = 0.0;
  double collision_pct = 0.0;
  double signaling_bits_per_slot = 0.0;
};

// Average network throughput (sum of per-user rates, averaged over slots) and
// collision probability in percent, counted per non-backoff attempt. A run
// with no attempts reports 0% by convention. Throws on an empty stream.
std::pair<double, double> throughput_and_collision(std::span<const SlotOutcome> outcomes);

struct SignalingCostModel {
  int bits_per_element = 32;
  ProtocolWidths widths;
};

// Closed-form signaling cost in bits per slot:
//   eRACH 0, De2RACH J(J-1) * D_m * B, Ce2RACH J * (D_code + D_dn) * B.
long signaling_cost(Variant variant, int num_users, const SignalingCostModel& model);

// Bits actually carried by a recorded slot of message traffic.
long traffic_bits(const TrafficRecord& traffic, int bits_per_element);

// -------- utilization grid --------

enum class CellStatus { Idle, Success, Collision };

struct GridCell {
  long slot = 0;
  int satellite = 0;  // 1-based
  int pilot = 0;      // 1-based
  CellStatus status = CellStatus::Idle;
  int user = -1;      // owning user for Success cells
  int num_users = 0;  // users transmitting on this (satellite, pilot)
};

// Exact per-slot occupancy of every (satellite, pilot) resource.
std::vector<GridCell> utilization_grid(std::span<const SlotOutcome> outcomes, int num_satellites,
                                       int num_pilots);

void write_grid_csv(const std::filesystem::path& path, std::span<const GridCell> cells);

// -------- users sweep (cost-vs-J curves) --------

struct SweepRow {
  Variant variant = Variant::eRACH;
  int num_users = 0;
  long links = 0;
  long bits_per_slot = 0;
};

// Cost table over user counts for all three variants. Verifies the closed
// forms: Ce2RACH exactly linear in J, De2RACH exactly J(J-1).
std::vector<SweepRow> sweep_users(const SignalingCostModel& model,
                                  std::span<const int> user_counts);

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

// -------- CSV I/O --------

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& record);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Per-slot outcome export; doubles are printed with enough digits to
// round-trip bit-exactly.
void write_slots_csv(const std::filesystem::path& path, std::span<const SlotOutcome> outcomes);
std::vector<SlotOutcome> read_slots_csv(const std::filesystem::path& path);

}  // namespace leorach
