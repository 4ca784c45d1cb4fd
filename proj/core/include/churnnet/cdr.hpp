#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace churnnet {

using NodeIndex = std::uint32_t;
inline constexpr NodeIndex kInvalidNode = static_cast<NodeIndex>(-1);

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kDaysPerMonth = 30;
inline constexpr std::int64_t kSecondsPerMonth = kSecondsPerDay * kDaysPerMonth;
inline constexpr std::int64_t kSecondsPerWeek = kSecondsPerDay * 7;
inline constexpr int kMonthCount = 6;
inline constexpr std::uint32_t kDefaultMinCallSeconds = 4;
inline constexpr int kChurnGapDays = 30;

// Interns customer identifiers to dense node indices.
class IdTable {
 public:
  NodeIndex intern(std::string_view id);
  NodeIndex find(std::string_view id) const;  // kInvalidNode if unknown
  const std::string& name(NodeIndex i) const { return names_[i]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeIndex> index_;
};

struct CdrRecord {
  NodeIndex caller;
  NodeIndex callee;
  std::int64_t start;      // UTC seconds
  std::uint32_t duration;  // seconds
};

struct TimeInterval {
  std::int64_t begin;  // inclusive
  std::int64_t end;    // exclusive
  std::int64_t length() const { return end - begin; }
  bool contains(std::int64_t t) const { return t >= begin && t < end; }
};

// Inclusive month range, months numbered 1..6.
struct MonthRange {
  int first;
  int last;
};

// Immutable, time-sorted collection of call records partitioned into the six
// 30-day observation months M1..M6 counted from `epoch`.
class CdrStore {
 public:
  CdrStore(IdTable ids, std::vector<CdrRecord> records, std::int64_t epoch);

  std::span<const CdrRecord> records() const { return records_; }
  std::span<const CdrRecord> month(int m) const;
  std::span<const CdrRecord> months(MonthRange range) const;

  TimeInterval month_span(int m) const;
  TimeInterval span(MonthRange range) const;
  TimeInterval observation_window() const {
    return {epoch_, epoch_ + kMonthCount * kSecondsPerMonth};
  }

  // Month (1..6) containing the timestamp; throws std::out_of_range outside.
  int month_of(std::int64_t ts) const;

  const IdTable& ids() const { return ids_; }
  std::size_t node_count() const { return ids_.size(); }
  std::int64_t epoch() const { return epoch_; }

 private:
  IdTable ids_;
  std::vector<CdrRecord> records_;
  std::int64_t epoch_;
  std::array<std::size_t, kMonthCount + 1> month_offsets_{};
};

struct CsvSchema {
  std::string caller = "caller";
  std::string callee = "callee";
  std::string timestamp = "timestamp";
  std::string duration = "duration";
};

struct ParseResult {
  CdrStore store;
  std::size_t malformed_rows = 0;
  std::vector<std::string> row_errors;  // capped at 100 messages
};

// Parses a CDR CSV stream. Missing required columns throw
// std::invalid_argument; malformed rows (bad numbers, caller == callee,
// timestamp outside the observation window) are counted and skipped.
ParseResult parse_cdr(std::istream& in, const CsvSchema& schema,
                      std::int64_t epoch);

void write_cdr_csv(const CdrStore& store, std::ostream& out);

// Retains records with duration >= min_duration.
CdrStore filter_short_calls(const CdrStore& store,
                            std::uint32_t min_duration = kDefaultMinCallSeconds);

struct ChurnLabels {
  std::vector<std::uint8_t> churner;     // by node index
  std::vector<std::int64_t> churndate;   // first inactive day; valid iff churner
  TimeInterval window;

  bool is_churner(NodeIndex i) const { return churner[i] != 0; }
  // Churn event inside [iv.begin, iv.end)
  bool churned_in(NodeIndex i, TimeInterval iv) const {
    return churner[i] != 0 && iv.contains(churndate[i]);
  }
  bool churned_before(NodeIndex i, std::int64_t ts) const {
    return churner[i] != 0 && churndate[i] < ts;
  }
};

// A customer is a churner iff a run of >= 30 consecutive inactive days starts
// inside `window`; the churndate is the first day of the first such run.
// Activity is any appearance as caller or callee. Customers with no activity
// at all churn at window start. Throws std::invalid_argument when the window
// is shorter than 30 days.
ChurnLabels label_churn(const CdrStore& store, TimeInterval window);

void write_labels_csv(const CdrStore& store, const ChurnLabels& labels,
                      std::ostream& out);
ChurnLabels read_labels_csv(const CdrStore& store, std::istream& in);

}  // namespace churnnet
