#include "churnnet/cdr.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "churnnet/csv.hpp"

namespace churnnet {

NodeIndex IdTable::intern(std::string_view id) {
  auto it = index_.find(std::string(id));
  if (it != index_.end()) return it->second;
  NodeIndex idx = static_cast<NodeIndex>(names_.size());
  names_.emplace_back(id);
  index_.emplace(names_.back(), idx);
  return idx;
}

NodeIndex IdTable::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? kInvalidNode : it->second;
}

CdrStore::CdrStore(IdTable ids, std::vector<CdrRecord> records,
                   std::int64_t epoch)
    : ids_(std::move(ids)), records_(std::move(records)), epoch_(epoch) {
  std::sort(records_.begin(), records_.end(),
            [](const CdrRecord& a, const CdrRecord& b) {
              if (a.start != b.start) return a.start < b.start;
              if (a.caller != b.caller) return a.caller < b.caller;
              if (a.callee != b.callee) return a.callee < b.callee;
              return a.duration < b.duration;
            });
  TimeInterval window = observation_window();
  for (const CdrRecord& r : records_) {
    if (!window.contains(r.start)) {
      throw std::out_of_range("CdrStore: record outside months M1..M6");
    }
    if (r.caller == r.callee) {
      throw std::invalid_argument("CdrStore: caller == callee");
    }
  }
  std::size_t pos = 0;
  for (int m = 0; m <= kMonthCount; ++m) {
    std::int64_t bound = epoch_ + m * kSecondsPerMonth;
    while (pos < records_.size() && records_[pos].start < bound) ++pos;
    month_offsets_[m] = m == 0 ? 0 : pos;
  }
  month_offsets_[kMonthCount] = records_.size();
}

std::span<const CdrRecord> CdrStore::month(int m) const {
  return months({m, m});
}

std::span<const CdrRecord> CdrStore::months(MonthRange range) const {
  if (range.first < 1 || range.last > kMonthCount || range.first > range.last) {
    throw std::out_of_range("CdrStore: month range outside M1..M6");
  }
  std::size_t b = month_offsets_[range.first - 1];
  std::size_t e = month_offsets_[range.last];
  return std::span<const CdrRecord>(records_.data() + b, e - b);
}

TimeInterval CdrStore::month_span(int m) const { return span({m, m}); }

TimeInterval CdrStore::span(MonthRange range) const {
  if (range.first < 1 || range.last > kMonthCount || range.first > range.last) {
    throw std::out_of_range("CdrStore: month range outside M1..M6");
  }
  return {epoch_ + (range.first - 1) * kSecondsPerMonth,
          epoch_ + range.last * kSecondsPerMonth};
}

int CdrStore::month_of(std::int64_t ts) const {
  if (!observation_window().contains(ts)) {
    throw std::out_of_range("CdrStore: timestamp outside months M1..M6");
  }
  return static_cast<int>((ts - epoch_) / kSecondsPerMonth) + 1;
}

namespace {

bool parse_i64(const std::string& s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && !s.empty();
}

}  // namespace

ParseResult parse_cdr(std::istream& in, const CsvSchema& schema,
                      std::int64_t epoch) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw std::invalid_argument("parse_cdr: empty input, no header");

  int caller_col = -1, callee_col = -1, ts_col = -1, dur_col = -1;
  for (std::size_t i = 0; i < header->size(); ++i) {
    const std::string& h = (*header)[i];
    if (h == schema.caller) caller_col = static_cast<int>(i);
    else if (h == schema.callee) callee_col = static_cast<int>(i);
    else if (h == schema.timestamp) ts_col = static_cast<int>(i);
    else if (h == schema.duration) dur_col = static_cast<int>(i);
  }
  if (caller_col < 0 || callee_col < 0 || ts_col < 0 || dur_col < 0) {
    throw std::invalid_argument("parse_cdr: header is missing a required column");
  }

  IdTable ids;
  std::vector<CdrRecord> records;
  std::size_t malformed = 0;
  std::vector<std::string> errors;
  TimeInterval window{epoch, epoch + kMonthCount * kSecondsPerMonth};
  std::size_t lineno = 1;

  auto reject = [&](const std::string& why) {
    ++malformed;
    if (errors.size() < 100) {
      errors.push_back("row " + std::to_string(lineno) + ": " + why);
    }
  };

  while (auto row = reader.next()) {
    ++lineno;
    std::size_t need = static_cast<std::size_t>(
        std::max(std::max(caller_col, callee_col), std::max(ts_col, dur_col)));
    if (row->size() <= need) {
      reject("too few fields");
      continue;
    }
    const std::string& caller = (*row)[caller_col];
    const std::string& callee = (*row)[callee_col];
    std::int64_t ts = 0, dur = 0;
    if (caller.empty() || callee.empty()) {
      reject("empty customer id");
      continue;
    }
    if (caller == callee) {
      reject("caller equals callee");
      continue;
    }
    if (!parse_i64((*row)[ts_col], ts)) {
      reject("unparseable timestamp");
      continue;
    }
    if (!parse_i64((*row)[dur_col], dur) || dur < 0) {
      reject("bad duration");
      continue;
    }
    if (!window.contains(ts)) {
      reject("timestamp outside observation window");
      continue;
    }
    records.push_back(CdrRecord{ids.intern(caller), ids.intern(callee), ts,
                                static_cast<std::uint32_t>(dur)});
  }

  return ParseResult{CdrStore(std::move(ids), std::move(records), epoch),
                     malformed, std::move(errors)};
}

void write_cdr_csv(const CdrStore& store, std::ostream& out) {
  out << "caller,callee,timestamp,duration\n";
  for (const CdrRecord& r : store.records()) {
    out << csv::escape(store.ids().name(r.caller)) << ','
        << csv::escape(store.ids().name(r.callee)) << ',' << r.start << ','
        << r.duration << '\n';
  }
}

CdrStore filter_short_calls(const CdrStore& store, std::uint32_t min_duration) {
  IdTable ids = store.ids();
  std::vector<CdrRecord> kept;
  kept.reserve(store.records().size());
  for (const CdrRecord& r : store.records()) {
    if (r.duration >= min_duration) kept.push_back(r);
  }
  return CdrStore(std::move(ids), std::move(kept), store.epoch());
}

ChurnLabels label_churn(const CdrStore& store, TimeInterval window) {
  std::int64_t days = window.length() / kSecondsPerDay;
  if (days < kChurnGapDays) {
    throw std::invalid_argument("label_churn: window shorter than 30 days");
  }
  std::size_t n = store.node_count();
  std::size_t d = static_cast<std::size_t>(days);

  // day-level activity bitmap, n x d
  std::vector<std::uint8_t> active(n * d, 0);
  for (const CdrRecord& r : store.records()) {
    if (!window.contains(r.start)) continue;
    std::size_t day = static_cast<std::size_t>(
        (r.start - window.begin) / kSecondsPerDay);
    active[r.caller * d + day] = 1;
    active[r.callee * d + day] = 1;
  }

  ChurnLabels labels;
  labels.window = window;
  labels.churner.assign(n, 0);
  labels.churndate.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* row = active.data() + i * d;
    std::size_t gap_start = 0;
    std::size_t gap_len = 0;
    for (std::size_t day = 0; day <= d; ++day) {
      bool is_active = day < d && row[day] != 0;
      if (!is_active && day < d) {
        if (gap_len == 0) gap_start = day;
        ++gap_len;
      }
      if ((is_active || day == d) && gap_len > 0) {
        if (gap_len >= static_cast<std::size_t>(kChurnGapDays)) {
          labels.churner[i] = 1;
          labels.churndate[i] =
              window.begin + static_cast<std::int64_t>(gap_start) * kSecondsPerDay;
          break;
        }
        gap_len = 0;
      }
    }
  }
  return labels;
}

void write_labels_csv(const CdrStore& store, const ChurnLabels& labels,
                      std::ostream& out) {
  out << "customer,churner,churndate\n";
  for (NodeIndex i = 0; i < store.node_count(); ++i) {
    out << csv::escape(store.ids().name(i)) << ','
        << (labels.churner[i] ? 1 : 0) << ','
        << (labels.churner[i] ? labels.churndate[i] : 0) << '\n';
  }
}

ChurnLabels read_labels_csv(const CdrStore& store, std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->size() < 3 || (*header)[0] != "customer") {
    throw std::invalid_argument("labels csv: bad header");
  }
  ChurnLabels labels;
  labels.window = store.observation_window();
  labels.churner.assign(store.node_count(), 0);
  labels.churndate.assign(store.node_count(), 0);
  while (auto row = reader.next()) {
    if (row->size() < 3) throw std::invalid_argument("labels csv: short row");
    NodeIndex i = store.ids().find((*row)[0]);
    if (i == kInvalidNode) continue;  // label for a customer we never saw
    labels.churner[i] = static_cast<std::uint8_t>((*row)[1] == "1");
    labels.churndate[i] = std::stoll((*row)[2]);
  }
  return labels;
}

}  // namespace churnnet
