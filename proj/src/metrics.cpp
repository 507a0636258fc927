#include "leorach/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace leorach {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for write");
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::Idle: return "idle";
    case CellStatus::Success: return "success";
    case CellStatus::Collision: return "collision";
  }
  return "?";
}

}  // namespace

std::pair<double, double> throughput_and_collision(std::span<const SlotOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("throughput_and_collision: empty stream");
  double rate_sum = 0.0;
  long attempts = 0;
  long collisions = 0;
  for (const auto& slot : outcomes) {
    for (const auto& u : slot.users) {
      rate_sum += u.rate_bps;
      if (u.target != 0) {
        ++attempts;
        if (u.collided) ++collisions;
      }
    }
  }
  const double throughput = rate_sum / static_cast<double>(outcomes.size());
  const double collision_pct =
      attempts == 0 ? 0.0 : 100.0 * static_cast<double>(collisions) / static_cast<double>(attempts);
  return {throughput, collision_pct};
}

long signaling_cost(Variant variant, int num_users, const SignalingCostModel& model) {
  if (num_users < 1) throw std::invalid_argument("signaling_cost: num_users must be >= 1");
  const long J = num_users;
  const long B = model.bits_per_element;
  switch (variant) {
    case Variant::eRACH:
      return 0;
    case Variant::De2RACH:
      return J * (J - 1) * model.widths.peer_msg_dim * B;
    case Variant::Ce2RACH:
      return J * (model.widths.uplink_code_dim + model.widths.downlink_dim) * B;
  }
  throw std::invalid_argument("signaling_cost: unknown variant");
}

long traffic_bits(const TrafficRecord& traffic, int bits_per_element) {
  return traffic.total_elements() * static_cast<long>(bits_per_element);
}

std::vector<GridCell> utilization_grid(std::span<const SlotOutcome> outcomes, int num_satellites,
                                       int num_pilots) {
  std::vector<GridCell> cells;
  cells.reserve(outcomes.size() * static_cast<std::size_t>(num_satellites * num_pilots));
  for (const auto& slot : outcomes) {
    // occupancy count and (single) occupant per resource
    std::map<std::pair<int, int>, std::pair<int, int>> occupancy;  // (sat,pilot) -> (count, user)
    for (std::size_t j = 0; j < slot.users.size(); ++j) {
      const auto& u = slot.users[j];
      if (u.target == 0) continue;
      auto& entry = occupancy[{u.target, u.pilot}];
      ++entry.first;
      entry.second = static_cast<int>(j);
    }
    for (int sat = 1; sat <= num_satellites; ++sat) {
      for (int pilot = 1; pilot <= num_pilots; ++pilot) {
        GridCell cell;
        cell.slot = slot.slot;
        cell.satellite = sat;
        cell.pilot = pilot;
        auto it = occupancy.find({sat, pilot});
        if (it == occupancy.end()) {
          cell.status = CellStatus::Idle;
        } else if (it->second.first == 1) {
          cell.status = CellStatus::Success;
          cell.user = it->second.second;
          cell.num_users = 1;
        } else {
          cell.status = CellStatus::Collision;
          cell.num_users = it->second.first;
        }
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

void write_grid_csv(const std::filesystem::path& path, std::span<const GridCell> cells) {
  std::ofstream out = open_for_write(path);
  out << "slot,satellite,pilot,status,user,num_users\n";
  for (const auto& c : cells)
    out << c.slot << ',' << c.satellite << ',' << c.pilot << ',' << status_name(c.status) << ','
        << c.user << ',' << c.num_users << '\n';
}

std::vector<SweepRow> sweep_users(const SignalingCostModel& model,
                                  std::span<const int> user_counts) {
  if (user_counts.empty()) throw std::invalid_argument("sweep_users: empty user count list");
  std::vector<SweepRow> rows;
  for (Variant v : {Variant::eRACH, Variant::De2RACH, Variant::Ce2RACH}) {
    for (int J : user_counts) {
      SweepRow row;
      row.variant = v;
      row.num_users = J;
      switch (v) {
        case Variant::eRACH: row.links = 0; break;
        case Variant::De2RACH: row.links = static_cast<long>(J) * (J - 1); break;
        case Variant::Ce2RACH: row.links = 2L * J; break;
      }
      row.bits_per_slot = signaling_cost(v, J, model);
      rows.push_back(row);
    }
  }

  // growth-law checks on consecutive user counts
  for (std::size_t i = 0; i + 2 < user_counts.size(); ++i) {
    if (user_counts[i + 1] - user_counts[i] != user_counts[i + 2] - user_counts[i + 1]) return rows;
  }
  auto bits_of = [&](Variant v, std::size_t idx) {
    std::size_t base = 0;
    if (v == Variant::De2RACH) base = user_counts.size();
    if (v == Variant::Ce2RACH) base = 2 * user_counts.size();
    return rows[base + idx].bits_per_slot;
  };
  for (std::size_t i = 0; i + 2 < user_counts.size(); ++i) {
    const long ce_d1 = bits_of(Variant::Ce2RACH, i + 1) - bits_of(Variant::Ce2RACH, i);
    const long ce_d2 = bits_of(Variant::Ce2RACH, i + 2) - bits_of(Variant::Ce2RACH, i + 1);
    if (ce_d1 != ce_d2)
      throw std::logic_error("sweep_users: Ce2RACH cost is not linear in the user count");
    const long de_dd = (bits_of(Variant::De2RACH, i + 2) - bits_of(Variant::De2RACH, i + 1)) -
                       (bits_of(Variant::De2RACH, i + 1) - bits_of(Variant::De2RACH, i));
    if (de_dd <= 0)
      throw std::logic_error("sweep_users: De2RACH cost is not strictly quadratic");
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
  std::ofstream out = open_for_write(path);
  out << "variant,num_users,links,bits_per_slot\n";
  for (const auto& r : rows)
    out << variant_name(r.variant) << ',' << r.num_users << ',' << r.links << ','
        << r.bits_per_slot << '\n';
}

std::string metrics_csv_header() {
  return "run_id,variant,seed,episode,avg_throughput_bps,collision_pct,signaling_bits_per_slot";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream out;
  out << r.run_id << ',' << variant_name(r.variant) << ',' << r.seed << ',' << r.episode << ','
      << fmt_double(r.avg_throughput_bps) << ',' << fmt_double(r.collision_pct) << ','
      << fmt_double(r.signaling_bits_per_slot);
  return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRecord> records) {
  std::ofstream out = open_for_write(path);
  out << metrics_csv_header() << '\n';
  for (const auto& r : records) out << metrics_csv_row(r) << '\n';
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != metrics_csv_header())
    throw std::runtime_error("metrics csv: missing or unexpected header in '" + path.string() + "'");
  std::vector<MetricsRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 7)
      throw std::runtime_error("metrics csv: bad row '" + lines[i] + "'");
    MetricsRecord r;
    r.run_id = fields[0];
    r.variant = parse_variant(fields[1]);
    r.seed = std::stoull(fields[2]);
    r.episode = std::stol(fields[3]);
    r.avg_throughput_bps = std::stod(fields[4]);
    r.collision_pct = std::stod(fields[5]);
    r.signaling_bits_per_slot = std::stod(fields[6]);
    records.push_back(std::move(r));
  }
  return records;
}

void write_slots_csv(const std::filesystem::path& path, std::span<const SlotOutcome> outcomes) {
  std::ofstream out = open_for_write(path);
  out << "slot,user,target,pilot,collided,rate_bps,reward,interferers\n";
  for (const auto& slot : outcomes) {
    for (std::size_t j = 0; j < slot.users.size(); ++j) {
      const auto& u = slot.users[j];
      out << slot.slot << ',' << j << ',' << u.target << ',' << u.pilot << ','
          << (u.collided ? 1 : 0) << ',' << fmt_double(u.rate_bps) << ',' << fmt_double(u.reward)
          << ',';
      for (std::size_t i = 0; i < u.interferers.size(); ++i) {
        if (i) out << ';';
        out << u.interferers[i];
      }
      out << '\n';
    }
  }
}

std::vector<SlotOutcome> read_slots_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines[0] != "slot,user,target,pilot,collided,rate_bps,reward,interferers")
    throw std::runtime_error("slots csv: missing or unexpected header in '" + path.string() + "'");
  std::vector<SlotOutcome> outcomes;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() < 7 || fields.size() > 8)
      throw std::runtime_error("slots csv: bad row '" + lines[i] + "'");
    const long slot = std::stol(fields[0]);
    const std::size_t user = std::stoul(fields[1]);
    if (outcomes.empty() || outcomes.back().slot != slot) {
      outcomes.emplace_back();
      outcomes.back().slot = slot;
    }
    auto& record = outcomes.back();
    if (record.users.size() != user)
      throw std::runtime_error("slots csv: users out of order at row '" + lines[i] + "'");
    UserOutcome u;
    u.target = std::stoi(fields[2]);
    u.pilot = std::stoi(fields[3]);
    u.collided = fields[4] == "1";
    u.rate_bps = std::stod(fields[5]);
    u.reward = std::stod(fields[6]);
    if (fields.size() == 8 && !fields[7].empty()) {
      std::istringstream in(fields[7]);
      std::string tok;
      while (std::getline(in, tok, ';')) u.interferers.push_back(std::stoi(tok));
    }
    record.users.push_back(std::move(u));
  }
  return outcomes;
}

}  // namespace leorach
