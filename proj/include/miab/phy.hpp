#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "miab/rng.hpp"
#include "miab/types.hpp"

namespace miab {

struct McsEntry {
  int index{0};
  double efficiency{0};  // bits per resource element
  double threshold_db{0};
};

inline constexpr double kTargetBler = 0.10;
inline constexpr double kBlerSlopeDbPerDecade = 1.5;

class McsTable {
 public:
  McsTable() = default;
  explicit McsTable(std::vector<McsEntry> entries, std::string version = "custom");

  static McsTable standard();
  static McsTable parse(std::string_view csv);
  static McsTable load(const std::filesystem::path& path);

  const McsEntry& entry(int mcs) const;
  double efficiency(int mcs) const { return entry(mcs).efficiency; }
  double threshold_db(int mcs) const { return entry(mcs).threshold_db; }
  int lowest() const { return entries_.front().index; }
  int highest() const { return entries_.back().index; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<McsEntry>& entries() const { return entries_; }
  const std::string& version() const { return version_; }

  // Highest index whose threshold <= est + offset, floored at the lowest index.
  int select(double est_sinr_db, double offset_db = 0.0) const;

 private:
  std::vector<McsEntry> entries_;
  std::string version_;
};

// Thermal noise over one resource block: -174 dBm/Hz + 9 dB noise figure.
double noise_per_rb_dbm(double scs_hz, double noise_figure_db = 9.0);

// Block error probability for a margin (actual SINR minus threshold) in dB:
// logistic, 0.10 at zero margin, one decade per 1.5 dB.
double bler(double margin_db);

enum class TxOutcome { Success, Error };
TxOutcome realize_transmission(const McsTable& table, int mcs, double actual_sinr_db, Rng& rng);

inline constexpr double kOuterLoopErrorStepDb = -1.0;
inline constexpr double kOuterLoopSuccessStepDb = 0.1;
double update_outer_loop(double offset_db, TxOutcome outcome);

struct OuterLoopKey {
  NodeId cell;
  NodeId node;
  Direction dir{Direction::Dl};
  auto operator<=>(const OuterLoopKey&) const = default;
};

// Offsets per link, clamped so a link saturated at the top MCS cannot grow
// an unbounded positive margin.
class OuterLoop {
 public:
  explicit OuterLoop(double min_db = -10.0, double max_db = 10.0) : min_db_(min_db), max_db_(max_db) {}
  double offset(const OuterLoopKey& k) const;
  double update(const OuterLoopKey& k, TxOutcome outcome);

 private:
  double min_db_, max_db_;
  std::map<OuterLoopKey, double> offsets_;
};

struct SinrSample {
  double sinr_db{0};
  double snr_db{0};
};
// Linear-domain combination; powers in mW.
SinrSample sinr_db(double signal_mw, double noise_mw, std::span<const double> interferers_mw);

// Mutual-information-style effective SINR over resource blocks (linear in, dB out).
double effective_sinr_db(std::span<const double> sinr_linear);

// Bits carried by one resource block (12 subcarriers x 14 symbols) and one stream.
int bits_per_rb(double efficiency);
long long tb_bits(double efficiency, int num_rbs, int streams);

struct StreamSet {
  std::vector<double> singular_values;  // descending
  std::vector<double> sinr_db;          // per kept stream
  std::vector<int> mcs;                 // per kept stream
  bool degenerate{false};
  int streams() const { return static_cast<int>(mcs.size()); }
};

inline constexpr int kMaxBackhaulStreams = 8;

// Equal power over the kept (strongest) streams. No kept stream may sit at the
// lowest MCS; among the stream counts that qualify, the one carrying the most
// bits per RB is chosen. `stream_gains` are
// the squared singular values (linear power gains), descending.
StreamSet select_streams(std::span<const double> stream_gains, double power_mw, double noise_mw,
                         const McsTable& table, double offset_db = 0.0, int max_streams = kMaxBackhaulStreams);
StreamSet backhaul_streams(const Eigen::MatrixXcd& h, double power_mw, double noise_mw, const McsTable& table,
                           double offset_db = 0.0, int max_streams = kMaxBackhaulStreams);

// Rician MIMO matrix with unit mean entry power: rank-one all-ones mean plus
// i.i.d. complex Gaussian scatter.
Eigen::MatrixXcd rician_matrix(int rows, int cols, double k_linear, Rng& rng);

// Squared top singular values of a fixed-seed bank of 64x64 Rician matrices.
const std::vector<std::vector<double>>& backhaul_gain_bank(bool los);
inline constexpr int kBackhaulBankSize = 64;

}  // namespace miab
