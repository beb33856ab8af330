#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerial_twin/kpm.hpp"

struct sqlite3;
struct sqlite3_stmt;

namespace aerial_twin::ric {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoredRow {
    KpmRecord record;
    uint32_t sub_id = 0;
    int64_t ingest_wall_ms = 0;
};

/// Header of the CSV written by dump_csv().
inline constexpr const char* kKpmCsvHeader =
    "t_ms,ue_id,dl_thp_kbps,rb_count,sdu_latency_us,pos_x_cm,pos_y_cm,pos_z_cm,cqi,mcs,sub_id";

/// Single-file table `kpm`. Each append is one transaction, so readers never
/// see part of an indication. Safe to call from several threads.
class MetricStore {
public:
    enum class Mode { Create, ReadOnly };
    using Clock = std::function<int64_t()>;

    /// Create truncates any existing file. The clock stamps ingest time
    /// (defaults to wall-clock milliseconds since the epoch).
    MetricStore(const std::filesystem::path& path, Mode mode, Clock clock = {});
    ~MetricStore();
    MetricStore(const MetricStore&) = delete;
    MetricStore& operator=(const MetricStore&) = delete;

    void append(uint32_t sub_id, std::span<const KpmRecord> records);

    /// Rows with t_ms in [t_begin_ms, t_end_ms), ordered by t_ms then insertion.
    /// An inverted range yields no rows.
    std::vector<StoredRow> query_rows(std::optional<uint32_t> ue_id, uint64_t t_begin_ms,
                                      uint64_t t_end_ms) const;

    /// Every row in insertion order.
    std::vector<StoredRow> all_rows() const;

    size_t row_count() const;

    const std::filesystem::path& path() const { return path_; }

private:
    std::vector<StoredRow> run_query(const std::string& sql,
                                     const std::function<void(sqlite3_stmt*)>& bind) const;

    std::filesystem::path path_;
    sqlite3* db_ = nullptr;
    Clock clock_;
    mutable std::mutex mu_;
};

std::vector<KpmRecord> query_metrics(const MetricStore& store, std::optional<uint32_t> ue_id,
                                     uint64_t t_begin_ms, uint64_t t_end_ms);

/// Writes the `kpm` table, insertion order, under kKpmCsvHeader.
void dump_csv(const MetricStore& store, const std::filesystem::path& out);

std::string format_kpm_csv(std::span<const StoredRow> rows);

}  // namespace aerial_twin::ric
