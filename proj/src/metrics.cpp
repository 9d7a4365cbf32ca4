#include "miab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "miab/errors.hpp"

namespace miab {

void CountHistogram::merge(const CountHistogram& o) {
  for (const auto& [k, n] : o.counts_) counts_[k] += n;
}

std::uint64_t CountHistogram::total() const {
  std::uint64_t t = 0;
  for (const auto& [k, n] : counts_) t += n;
  return t;
}

std::int64_t CountHistogram::quantile(double q) const {
  const std::uint64_t t = total();
  if (t == 0) return 0;
  const double need = q * static_cast<double>(t);
  std::uint64_t acc = 0;
  for (const auto& [k, n] : counts_) {
    acc += n;
    if (static_cast<double>(acc) >= need - 1e-9) return k;
  }
  return counts_.rbegin()->first;
}

double CountHistogram::fraction_at_most(std::int64_t key) const {
  const std::uint64_t t = total();
  if (t == 0) return 0.0;
  std::uint64_t acc = 0;
  for (const auto& [k, n] : counts_) {
    if (k > key) break;
    acc += n;
  }
  return static_cast<double>(acc) / static_cast<double>(t);
}

double CountHistogram::fraction_below(std::int64_t key) const { return fraction_at_most(key - 1); }

std::uint64_t McsHistogram::total() const {
  std::uint64_t t = 0;
  for (auto v : success) t += v;
  for (auto v : error) t += v;
  return t;
}

nlohmann::json AuditCounters::to_json() const {
  return {{"half_duplex", half_duplex},
          {"attachment_optimality", attachment_optimality},
          {"mt_non_donor", mt_non_donor},
          {"scheduler_rule", scheduler_rule},
          {"conservation", conservation},
          {"double_delivery", double_delivery},
          {"latency_bound", latency_bound}};
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0" || s.find_first_not_of("-0.") == std::string::npos) {
    if (s[0] == '-') s.erase(0, 1);
  }
  return s;
}

MetricStore::MetricStore(const Scenario& s, std::int64_t warmup, int mcs_levels)
    : scenario_(&s), warmup_(warmup), mcs_levels_(mcs_levels), ue_index_(s.size(), -1) {
  for (NodeId id : s.ues) {
    ue_index_[id.value] = static_cast<int>(ues_.size());
    UeRecord r;
    r.id = id;
    r.kind = s.node(id).kind;
    ues_.push_back(r);
  }
}

void MetricStore::on_generated(const Packet& p) {
  const int d = dir_index(p.direction);
  generated_bits[d] += p.size_bits;
  ++generated_packets[d];
}

void MetricStore::on_delivered(Packet& p, std::int64_t slot, bool two_hop) {
  if (p.delivered_slot >= 0) {
    ++audits.double_delivery;
    throw DoubleDelivery("packet " + std::to_string(p.id) + " delivered twice");
  }
  p.delivered_slot = slot;
  const int d = dir_index(p.direction);
  delivered_bits[d] += p.size_bits;
  ++delivered_packets[d];
  const std::int64_t latency = slot - p.created_slot;
  if (latency < 1 || (two_hop && latency < 2)) ++audits.latency_bound;
  const NodeId ue = p.direction == Direction::Dl ? p.destination : p.source;
  UeRecord& r = ues_[ue_index_[ue.value]];
  if (p.created_slot >= warmup_) {
    r.window_bits[d] += p.size_bits;
    ++r.delivered_packets[d];
    r.latency_slots[d].add(latency);
    if (two_hop && !p.delayed) r.max_two_hop_latency[d] = std::max(r.max_two_hop_latency[d], latency);
  }
}

void MetricStore::on_dropped(const Packet& p) { dropped_bits[dir_index(p.direction)] += p.size_bits; }

void MetricStore::on_censored(const Packet& p) {
  if (p.created_slot < warmup_) return;
  const NodeId ue = p.direction == Direction::Dl ? p.destination : p.source;
  ++ues_[ue_index_[ue.value]].censored_packets[dir_index(p.direction)];
}

void MetricStore::on_transmission(const std::string& cls, Direction d, int mcs, TxOutcome outcome, std::int64_t slot) {
  if (!in_window(slot)) return;
  auto& h = mcs_[dir_index(d)][cls];
  if (h.success.empty()) {
    h.success.assign(mcs_levels_ + 1, 0);
    h.error.assign(mcs_levels_ + 1, 0);
  }
  (outcome == TxOutcome::Success ? h.success : h.error).at(mcs) += 1;
}

void MetricStore::on_sinr(const std::string& cls, double sinr, double snr, std::int64_t slot) {
  if (!in_window(slot)) return;
  auto& h = sinr_[cls];
  h.sinr.add(quantize_db(sinr));
  h.snr.add(quantize_db(snr));
}

namespace {
int mt_effect_slot(NodeKind k, bool active) { return (k == NodeKind::Passenger ? 2 : 0) + (active ? 1 : 0); }
}  // namespace

void MetricStore::on_mt_effect(NodeKind k, bool active, double sinr, std::int64_t slot) {
  if (!in_window(slot)) return;
  mt_effect_[mt_effect_slot(k, active)].add(quantize_db(sinr));
}

const CountHistogram& MetricStore::mt_effect(NodeKind k, bool active) const {
  return mt_effect_[mt_effect_slot(k, active)];
}

void MetricStore::on_donor_profile(const DonorLinkProfile& p, std::int64_t slot) {
  if (!in_window(slot)) return;
  donor_total_.add(p.total());
  donor_backhaul_.add(p.backhaul_served_ues);
  donor_direct_.add(p.direct_ues);
  if (p.total() > 0) {
    access_fraction_sum_ += p.access_fraction();
    ++access_fraction_n_;
  }
}

void MetricStore::on_role(const std::string& row, bool dl, bool ul) {
  auto& r = roles_[row];
  ++r.slots;
  r.dl += dl;
  r.ul += ul;
}

double MetricStore::mean_access_fraction() const {
  return access_fraction_n_ ? access_fraction_sum_ / static_cast<double>(access_fraction_n_) : 0.0;
}

double MetricStore::window_s() const {
  return static_cast<double>(scenario_->config.duration_slots - warmup_) * scenario_->config.slot_s;
}

double MetricStore::throughput_bps(NodeId ue, Direction d) const {
  const double w = window_s();
  return w > 0 ? static_cast<double>(this->ue(ue).window_bits[dir_index(d)]) / w : 0.0;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

using GroupedHistograms = std::map<std::vector<std::string>, CountHistogram>;

// Rows: group columns, value, count, cumulative fraction within the group.
void write_cdf(const std::filesystem::path& path, const std::vector<std::string>& group_cols,
               const std::string& value_col, const GroupedHistograms& groups, double scale, int decimals) {
  auto out = open_out(path);
  for (const auto& c : group_cols) out << c << ',';
  out << value_col << ",count,cdf\n";
  for (const auto& [g, h] : groups) {
    const double total = static_cast<double>(h.total());
    std::uint64_t acc = 0;
    for (const auto& [k, n] : h.counts()) {
      acc += n;
      for (const auto& v : g) out << v << ',';
      out << format_double(static_cast<double>(k) * scale, decimals) << ',' << n << ','
          << format_double(static_cast<double>(acc) / total, 9) << '\n';
    }
  }
}

std::string ue_class(NodeKind k) { return k == NodeKind::Passenger ? "passenger" : "pedestrian"; }

}  // namespace

void MetricStore::export_to(const std::filesystem::path& dir, const nlohmann::json& manifest) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto out = open_out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  const double slot_ms = scenario_->config.slot_s * 1e3;
  {
    auto out = open_out(dir / "ue_summary.csv");
    out << "id,kind,direction,throughput_mbps,p50_latency_ms,p95_latency_ms,delivered_packets,censored_packets\n";
    for (const auto& r : ues_)
      for (Direction d : {Direction::Dl, Direction::Ul}) {
        const int i = dir_index(d);
        const auto& lat = r.latency_slots[i];
        out << r.id.value << ',' << to_string(r.kind) << ',' << to_string(d) << ','
            << format_double(throughput_bps(r.id, d) / 1e6, 6) << ','
            << (lat.empty() ? std::string("") : format_double(lat.quantile(0.5) * slot_ms, 4)) << ','
            << (lat.empty() ? std::string("") : format_double(lat.quantile(0.95) * slot_ms, 4)) << ','
            << r.delivered_packets[i] << ',' << r.censored_packets[i] << '\n';
      }
  }
  for (Direction d : {Direction::Dl, Direction::Ul}) {
    const int i = dir_index(d);
    GroupedHistograms thr, lat;
    thr[{"pedestrian"}];
    thr[{"passenger"}];
    for (const auto& r : ues_) {
      if (r.kind == NodeKind::Passenger && scenario_->config.num_passengers() == 0) continue;
      thr[{ue_class(r.kind)}].add(std::llround(throughput_bps(r.id, d)));
      lat[{ue_class(r.kind)}].merge(r.latency_slots[i]);
    }
    write_cdf(dir / ("cdf_throughput_" + std::string(to_string(d)) + ".csv"), {"class"}, "value_mbps", thr, 1e-6, 6);
    write_cdf(dir / ("cdf_latency_" + std::string(to_string(d)) + ".csv"), {"class"}, "value_ms", lat, slot_ms, 4);
    for (const auto& [cls, h] : mcs_[i]) {
      auto out = open_out(dir / ("mcs_hist_" + cls + "_" + std::string(to_string(d)) + ".csv"));
      out << "mcs,success,error\n";
      for (int m = 1; m <= mcs_levels_; ++m) out << m << ',' << h.success[m] << ',' << h.error[m] << '\n';
    }
  }
  for (const auto& [cls, h] : sinr_) {
    GroupedHistograms g;
    g[{"sinr"}] = h.sinr;
    g[{"snr"}] = h.snr;
    write_cdf(dir / ("cdf_sinr_snr_" + cls + ".csv"), {"metric"}, "value_db", g, 0.1, 1);
  }
  {
    GroupedHistograms g;
    for (NodeKind k : {NodeKind::Pedestrian, NodeKind::Passenger})
      for (bool active : {false, true})
        if (!mt_effect(k, active).empty())
          g[{ue_class(k), active ? "mt_transmitting" : "mt_silent"}] = mt_effect(k, active);
    write_cdf(dir / "cdf_sinr_mt_effect.csv", {"class", "mt_state"}, "value_db", g, 0.1, 1);
  }
  {
    auto out = open_out(dir / "donor_profile.csv");
    out << "links,total_count,backhaul_count,direct_count\n";
    std::set<std::int64_t> keys;
    for (const auto* h : {&donor_total_, &donor_backhaul_, &donor_direct_})
      for (const auto& [k, n] : h->counts()) keys.insert(k);
    auto count = [](const CountHistogram& h, std::int64_t k) {
      auto it = h.counts().find(k);
      return it == h.counts().end() ? std::uint64_t{0} : it->second;
    };
    for (auto k : keys)
      out << k << ',' << count(donor_total_, k) << ',' << count(donor_backhaul_, k) << ','
          << count(donor_direct_, k) << '\n';
  }
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  CsvTable t;
  std::string line;
  if (std::getline(in, line)) t.header = split_csv(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv(line));
  return t;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + p.string() + ": " + e.what());
  }
}

void merge_cdf_file(const std::vector<std::filesystem::path>& files, const std::filesystem::path& out_path) {
  // Group columns precede value, count, cdf.
  std::vector<std::string> header;
  std::map<std::vector<std::string>, std::map<double, std::pair<std::string, std::uint64_t>>> groups;
  for (const auto& f : files) {
    const CsvTable t = read_csv(f);
    if (header.empty()) header = t.header;
    if (t.header != header) throw IncompatibleRuns("column mismatch in " + f.string());
    const std::size_t n = header.size();
    for (const auto& row : t.rows) {
      if (row.size() != n) throw IoError("malformed row in " + f.string());
      std::vector<std::string> g(row.begin(), row.begin() + static_cast<long>(n - 3));
      auto& slot = groups[g][std::stod(row[n - 3])];
      slot.first = row[n - 3];
      slot.second += std::stoull(row[n - 2]);
    }
  }
  auto out = open_out(out_path);
  for (std::size_t i = 0; i < header.size(); ++i) out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& [g, values] : groups) {
    std::uint64_t total = 0, acc = 0;
    for (const auto& [v, e] : values) total += e.second;
    for (const auto& [v, e] : values) {
      acc += e.second;
      for (const auto& c : g) out << c << ',';
      out << e.first << ',' << e.second << ',' << format_double(static_cast<double>(acc) / total, 9) << '\n';
    }
  }
}

// First column is the key, the remaining columns are summed.
void merge_count_file(const std::vector<std::filesystem::path>& files, const std::filesystem::path& out_path) {
  std::vector<std::string> header;
  std::map<std::int64_t, std::vector<std::uint64_t>> rows;
  for (const auto& f : files) {
    const CsvTable t = read_csv(f);
    if (header.empty()) header = t.header;
    if (t.header != header) throw IncompatibleRuns("column mismatch in " + f.string());
    for (const auto& row : t.rows) {
      auto& acc = rows[std::stoll(row.at(0))];
      acc.resize(row.size() - 1, 0);
      for (std::size_t i = 1; i < row.size(); ++i) acc[i - 1] += std::stoull(row[i]);
    }
  }
  auto out = open_out(out_path);
  for (std::size_t i = 0; i < header.size(); ++i) out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& [k, v] : rows) {
    out << k;
    for (auto x : v) out << ',' << x;
    out << '\n';
  }
}

}  // namespace

void merge_runs(const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out) {
  if (dirs.empty()) throw IncompatibleRuns("nothing to merge");
  std::vector<nlohmann::json> manifests;
  for (const auto& d : dirs) manifests.push_back(read_json(d / "manifest.json"));
  auto strip = [](nlohmann::json m) {
    m["config"].erase("seed");
    return nlohmann::json{{"config", m["config"]}, {"options", m["options"]}};
  };
  const auto ref = strip(manifests[0]);
  for (std::size_t i = 1; i < manifests.size(); ++i)
    if (strip(manifests[i]) != ref)
      throw IncompatibleRuns("run " + dirs[i].string() + " differs from " + dirs[0].string() + " beyond the seed");

  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string());

  std::set<std::string> names;
  for (const auto& d : dirs)
    for (const auto& e : std::filesystem::directory_iterator(d))
      if (e.is_regular_file()) names.insert(e.path().filename().string());
  for (const auto& name : names) {
    std::vector<std::filesystem::path> files;
    for (const auto& d : dirs)
      if (std::filesystem::exists(d / name)) files.push_back(d / name);
    if (name.rfind("cdf_", 0) == 0)
      merge_cdf_file(files, out / name);
    else if (name.rfind("mcs_hist_", 0) == 0 || name == "donor_profile.csv")
      merge_count_file(files, out / name);
  }
  nlohmann::json merged = manifests[0];
  merged["merged_runs"] = dirs.size();
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& m : manifests) seeds.push_back(m["config"]["seed"]);
  merged["merged_seeds"] = seeds;
  auto o = open_out(out / "manifest.json");
  o << merged.dump(2) << '\n';
}

}  // namespace miab
