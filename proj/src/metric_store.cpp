#include "aerial_twin/metric_store.hpp"

#include <sqlite3.h>

#include <chrono>
#include <fstream>
#include <limits>
#include <sstream>

namespace aerial_twin::ric {

namespace {

constexpr const char* kSchema =
    "CREATE TABLE kpm ("
    " t_ms INTEGER NOT NULL, ue_id INTEGER NOT NULL, dl_thp_kbps INTEGER NOT NULL,"
    " rb_count INTEGER NOT NULL, sdu_latency_us INTEGER,"
    " pos_x_cm INTEGER NOT NULL, pos_y_cm INTEGER NOT NULL, pos_z_cm INTEGER NOT NULL,"
    " cqi INTEGER NOT NULL, mcs INTEGER NOT NULL, sub_id INTEGER NOT NULL,"
    " ingest_wall_ms INTEGER NOT NULL);"
    "CREATE INDEX kpm_ue_t ON kpm(ue_id, t_ms);";

constexpr const char* kSelectColumns =
    "SELECT t_ms, ue_id, dl_thp_kbps, rb_count, sdu_latency_us, pos_x_cm, pos_y_cm, pos_z_cm,"
    " cqi, mcs, sub_id, ingest_wall_ms FROM kpm";

int64_t wall_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

class Statement {
public:
    Statement(sqlite3* db, const std::string& sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) {
            throw StoreError(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    sqlite3_stmt* get() const { return stmt_; }

    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError(std::string("sqlite step: ") + sqlite3_errmsg(db_));
    }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StoreError(std::string("sqlite: ") + msg);
    }
}

}  // namespace

MetricStore::MetricStore(const std::filesystem::path& path, Mode mode, Clock clock)
    : path_(path), clock_(clock ? std::move(clock) : Clock(wall_clock_ms)) {
    if (mode == Mode::Create) {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
    const int flags = mode == Mode::Create ? (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE)
                                           : SQLITE_OPEN_READONLY;
    if (sqlite3_open_v2(path.string().c_str(), &db_, flags | SQLITE_OPEN_FULLMUTEX, nullptr) !=
        SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StoreError("cannot open metric store '" + path.string() + "': " + msg);
    }
    if (mode == Mode::Create) {
        exec(db_, "PRAGMA journal_mode=MEMORY; PRAGMA synchronous=OFF;");
        exec(db_, kSchema);
    } else {
        // fails early on files that are not metric stores
        Statement probe(db_, "SELECT count(*) FROM kpm");
        probe.step();
    }
}

MetricStore::~MetricStore() {
    if (db_) sqlite3_close(db_);
}

void MetricStore::append(uint32_t sub_id, std::span<const KpmRecord> records) {
    std::lock_guard lock(mu_);
    const int64_t now = clock_();
    exec(db_, "BEGIN");
    try {
        Statement ins(db_,
                      "INSERT INTO kpm VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)");
        for (const auto& r : records) {
            sqlite3_stmt* s = ins.get();
            sqlite3_reset(s);
            sqlite3_bind_int64(s, 1, static_cast<sqlite3_int64>(r.t_ms));
            sqlite3_bind_int64(s, 2, r.ue_id);
            sqlite3_bind_int64(s, 3, r.dl_thp_kbps);
            sqlite3_bind_int64(s, 4, r.rb_count);
            if (r.sdu_latency_us) {
                sqlite3_bind_int64(s, 5, *r.sdu_latency_us);
            } else {
                sqlite3_bind_null(s, 5);
            }
            sqlite3_bind_int64(s, 6, r.pos_x_cm);
            sqlite3_bind_int64(s, 7, r.pos_y_cm);
            sqlite3_bind_int64(s, 8, r.pos_z_cm);
            sqlite3_bind_int64(s, 9, r.cqi);
            sqlite3_bind_int64(s, 10, r.mcs);
            sqlite3_bind_int64(s, 11, sub_id);
            sqlite3_bind_int64(s, 12, now);
            ins.step();
        }
        exec(db_, "COMMIT");
    } catch (...) {
        sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
}

std::vector<StoredRow> MetricStore::run_query(
    const std::string& sql, const std::function<void(sqlite3_stmt*)>& bind) const {
    std::lock_guard lock(mu_);
    Statement q(db_, sql);
    bind(q.get());
    std::vector<StoredRow> rows;
    while (q.step()) {
        sqlite3_stmt* s = q.get();
        StoredRow row;
        auto& r = row.record;
        r.t_ms = static_cast<uint64_t>(sqlite3_column_int64(s, 0));
        r.ue_id = static_cast<uint32_t>(sqlite3_column_int64(s, 1));
        r.dl_thp_kbps = static_cast<uint32_t>(sqlite3_column_int64(s, 2));
        r.rb_count = static_cast<uint32_t>(sqlite3_column_int64(s, 3));
        if (sqlite3_column_type(s, 4) != SQLITE_NULL) {
            r.sdu_latency_us = static_cast<uint32_t>(sqlite3_column_int64(s, 4));
        }
        r.pos_x_cm = static_cast<int32_t>(sqlite3_column_int64(s, 5));
        r.pos_y_cm = static_cast<int32_t>(sqlite3_column_int64(s, 6));
        r.pos_z_cm = static_cast<int32_t>(sqlite3_column_int64(s, 7));
        r.cqi = static_cast<uint8_t>(sqlite3_column_int64(s, 8));
        r.mcs = static_cast<uint8_t>(sqlite3_column_int64(s, 9));
        row.sub_id = static_cast<uint32_t>(sqlite3_column_int64(s, 10));
        row.ingest_wall_ms = sqlite3_column_int64(s, 11);
        rows.push_back(row);
    }
    return rows;
}

std::vector<StoredRow> MetricStore::query_rows(std::optional<uint32_t> ue_id, uint64_t t_begin_ms,
                                               uint64_t t_end_ms) const {
    if (t_end_ms <= t_begin_ms) return {};
    constexpr auto kMax = static_cast<uint64_t>(std::numeric_limits<sqlite3_int64>::max());
    const auto begin = static_cast<sqlite3_int64>(std::min(t_begin_ms, kMax));
    const auto end = static_cast<sqlite3_int64>(std::min(t_end_ms, kMax));
    std::string sql = std::string(kSelectColumns) + " WHERE t_ms >= ?1 AND t_ms < ?2";
    if (ue_id) sql += " AND ue_id = ?3";
    sql += " ORDER BY t_ms, rowid";
    return run_query(sql, [&](sqlite3_stmt* s) {
        sqlite3_bind_int64(s, 1, begin);
        sqlite3_bind_int64(s, 2, end);
        if (ue_id) sqlite3_bind_int64(s, 3, *ue_id);
    });
}

std::vector<StoredRow> MetricStore::all_rows() const {
    return run_query(std::string(kSelectColumns) + " ORDER BY rowid", [](sqlite3_stmt*) {});
}

size_t MetricStore::row_count() const {
    std::lock_guard lock(mu_);
    Statement q(db_, "SELECT count(*) FROM kpm");
    q.step();
    return static_cast<size_t>(sqlite3_column_int64(q.get(), 0));
}

std::vector<KpmRecord> query_metrics(const MetricStore& store, std::optional<uint32_t> ue_id,
                                     uint64_t t_begin_ms, uint64_t t_end_ms) {
    std::vector<KpmRecord> out;
    for (auto& row : store.query_rows(ue_id, t_begin_ms, t_end_ms)) out.push_back(row.record);
    return out;
}

std::string format_kpm_csv(std::span<const StoredRow> rows) {
    std::ostringstream os;
    os << kKpmCsvHeader << '\n';
    for (const auto& row : rows) {
        const auto& r = row.record;
        os << r.t_ms << ',' << r.ue_id << ',' << r.dl_thp_kbps << ',' << r.rb_count << ',';
        if (r.sdu_latency_us) os << *r.sdu_latency_us;
        os << ',' << r.pos_x_cm << ',' << r.pos_y_cm << ',' << r.pos_z_cm << ','
           << static_cast<int>(r.cqi) << ',' << static_cast<int>(r.mcs) << ',' << row.sub_id << '\n';
    }
    return os.str();
}

void dump_csv(const MetricStore& store, const std::filesystem::path& out) {
    const auto rows = store.all_rows();
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw StoreError("cannot write '" + out.string() + "'");
    f << format_kpm_csv(rows);
    if (!f) throw StoreError("write failed for '" + out.string() + "'");
}

}  // namespace aerial_twin::ric
