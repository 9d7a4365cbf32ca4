#include "miab/phy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "miab/errors.hpp"

namespace miab {

McsTable::McsTable(std::vector<McsEntry> entries, std::string version)
    : entries_(std::move(entries)), version_(std::move(version)) {
  if (entries_.empty()) throw ParseError("MCS table is empty");
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    const auto& a = entries_[i - 1];
    const auto& b = entries_[i];
    if (b.index != a.index + 1) throw ParseError("MCS indices must be consecutive");
    if (!(b.efficiency > a.efficiency) || !(b.threshold_db > a.threshold_db))
      throw ParseError("MCS table must be strictly increasing in efficiency and threshold");
  }
}

McsTable McsTable::standard() {
  // Same content as data/mcs_table.csv.
  return McsTable({{1, 0.1523, -7.5335},
                   {2, 0.3770, -3.2485},
                   {3, 0.8770, 1.2249},
                   {4, 1.4766, 4.5113},
                   {5, 1.9141, 6.4229},
                   {6, 2.4063, 8.3358},
                   {7, 2.7305, 9.5104},
                   {8, 3.3223, 11.5437},
                   {9, 3.9023, 13.4465},
                   {10, 4.5234, 15.4237},
                   {11, 5.1152, 17.2711},
                   {12, 5.5547, 18.6279},
                   {13, 6.2266, 20.6855},
                   {14, 6.9141, 22.7774},
                   {15, 7.4063, 24.2695}},
                  "miab mcs table v1");
}

McsTable McsTable::parse(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line, version = "custom";
  std::vector<McsEntry> entries;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (version == "custom") {
        version = line.substr(line.find_first_not_of("# "));
        version = version.substr(0, version.find(':'));
      }
      continue;
    }
    if (!header) {
      if (line.rfind("index", 0) != 0) throw ParseError("MCS table header must start with 'index'");
      header = true;
      continue;
    }
    McsEntry e;
    char c1 = 0, c2 = 0;
    std::istringstream ls(line);
    if (!(ls >> e.index >> c1 >> e.efficiency >> c2 >> e.threshold_db) || c1 != ',' || c2 != ',')
      throw ParseError("malformed MCS table row: " + line);
    entries.push_back(e);
  }
  return McsTable(std::move(entries), version);
}

McsTable McsTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open MCS table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const McsEntry& McsTable::entry(int mcs) const {
  const int i = mcs - lowest();
  if (i < 0 || i >= static_cast<int>(entries_.size())) throw RangeError("MCS index out of range");
  return entries_[i];
}

int McsTable::select(double est_sinr_db, double offset_db) const {
  const double x = est_sinr_db + offset_db;
  int best = lowest();
  for (const auto& e : entries_)
    if (e.threshold_db <= x) best = e.index;
  return best;
}

double noise_per_rb_dbm(double scs_hz, double noise_figure_db) {
  return -174.0 + 10.0 * std::log10(12.0 * scs_hz) + noise_figure_db;
}

double bler(double margin_db) {
  const double alpha = std::log(10.0) / kBlerSlopeDbPerDecade;
  const double odds = (1.0 - kTargetBler) / kTargetBler;
  const double e = odds * std::exp(alpha * margin_db);
  if (!std::isfinite(e)) return 0.0;
  return 1.0 / (1.0 + e);
}

TxOutcome realize_transmission(const McsTable& table, int mcs, double actual_sinr_db, Rng& rng) {
  return rng.uniform() < bler(actual_sinr_db - table.threshold_db(mcs)) ? TxOutcome::Error : TxOutcome::Success;
}

double update_outer_loop(double offset_db, TxOutcome outcome) {
  return offset_db + (outcome == TxOutcome::Error ? kOuterLoopErrorStepDb : kOuterLoopSuccessStepDb);
}

double OuterLoop::offset(const OuterLoopKey& k) const {
  auto it = offsets_.find(k);
  return it == offsets_.end() ? 0.0 : it->second;
}

double OuterLoop::update(const OuterLoopKey& k, TxOutcome outcome) {
  double& v = offsets_[k];
  v = std::clamp(update_outer_loop(v, outcome), min_db_, max_db_);
  return v;
}

SinrSample sinr_db(double signal_mw, double noise_mw, std::span<const double> interferers_mw) {
  const double i = std::accumulate(interferers_mw.begin(), interferers_mw.end(), 0.0);
  return {10.0 * std::log10(signal_mw / (noise_mw + i)), 10.0 * std::log10(signal_mw / noise_mw)};
}

double effective_sinr_db(std::span<const double> sinr) {
  if (sinr.empty()) return -std::numeric_limits<double>::infinity();
  double acc = 0;
  for (double s : sinr) acc += std::log2(1.0 + s);
  return 10.0 * std::log10(std::exp2(acc / sinr.size()) - 1.0);
}

int bits_per_rb(double efficiency) { return static_cast<int>(std::floor(12.0 * 14.0 * efficiency + 1e-9)); }

long long tb_bits(double efficiency, int num_rbs, int streams) {
  return static_cast<long long>(bits_per_rb(efficiency)) * num_rbs * streams;
}

StreamSet select_streams(std::span<const double> gains, double power_mw, double noise_mw, const McsTable& table,
                         double offset_db, int max_streams) {
  StreamSet out;
  for (double g : gains) out.singular_values.push_back(std::sqrt(std::max(g, 0.0)));
  const double top = gains.empty() ? 0.0 : gains[0];
  int k = 0;
  while (k < static_cast<int>(gains.size()) && k < max_streams && gains[k] > top * 1e-12 && gains[k] > 0) ++k;
  // Equal split over the k strongest streams, for every k whose streams all
  // clear the lowest MCS; the k with the most bits per RB wins (fewer on ties).
  long long best_bits = 0;
  for (int n = 1; n <= k; ++n) {
    std::vector<double> sinr(n);
    std::vector<int> mcs(n);
    long long bits = 0;
    bool usable = true;
    for (int i = 0; i < n && usable; ++i) {
      sinr[i] = 10.0 * std::log10(gains[i] * power_mw / n / noise_mw);
      mcs[i] = table.select(sinr[i], offset_db);
      usable = mcs[i] > table.lowest();
      bits += bits_per_rb(table.efficiency(mcs[i]));
    }
    if (usable && bits > best_bits) {
      best_bits = bits;
      out.sinr_db = std::move(sinr);
      out.mcs = std::move(mcs);
    }
  }
  if (best_bits > 0) return out;
  out.degenerate = true;
  out.mcs = {table.lowest()};
  out.sinr_db = {top > 0 ? 10.0 * std::log10(top * power_mw / noise_mw) : -std::numeric_limits<double>::infinity()};
  return out;
}

StreamSet backhaul_streams(const Eigen::MatrixXcd& h, double power_mw, double noise_mw, const McsTable& table,
                           double offset_db, int max_streams) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(h);
  const Eigen::VectorXd sv = svd.singularValues();
  std::vector<double> gains(sv.size());
  for (int i = 0; i < sv.size(); ++i) gains[i] = sv[i] * sv[i];
  return select_streams(gains, power_mw, noise_mw, table, offset_db, max_streams);
}

Eigen::MatrixXcd rician_matrix(int rows, int cols, double k, Rng& rng) {
  Eigen::MatrixXcd h(rows, cols);
  const double a = std::sqrt(k / (k + 1.0)), b = std::sqrt(1.0 / (k + 1.0));
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) h(r, c) = a + b * rng.complex_normal();
  return h;
}

const std::vector<std::vector<double>>& backhaul_gain_bank(bool los) {
  auto build = [](bool l) {
    Rng rng(0x62616E6BULL, l ? 1 : 2);
    const double k = l ? std::pow(10.0, 1.0) : 0.0;
    std::vector<std::vector<double>> bank;
    for (int i = 0; i < kBackhaulBankSize; ++i) {
      Eigen::BDCSVD<Eigen::MatrixXcd> svd(rician_matrix(64, 64, k, rng));
      const Eigen::VectorXd sv = svd.singularValues();
      std::vector<double> g;
      for (int s = 0; s < kMaxBackhaulStreams; ++s) g.push_back(sv[s] * sv[s]);
      bank.push_back(std::move(g));
    }
    return bank;
  };
  static const std::vector<std::vector<double>> los_bank = build(true);
  static const std::vector<std::vector<double>> nlos_bank = build(false);
  return los ? los_bank : nlos_bank;
}

}  // namespace miab
