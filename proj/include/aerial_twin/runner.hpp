#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerial_twin/kpm_xapp.hpp"
#include "aerial_twin/scenario.hpp"

namespace aerial_twin::expcli {

/// E2 setup, subscription or transport failed during a run.
class ProtocolFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output files could not be created or written.
class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitProtocol = 3;
inline constexpr int kExitIo = 4;

struct RunOptions {
    std::optional<uint64_t> seed;
    std::optional<TransportKind> transport;
};

struct UeSummary {
    uint32_t ue_id = 0;
    ran::AttachType type = ran::AttachType::Aerial;
    double offered_mbps = 0.0;
    size_t points = 0;
    double mean_thp_mbps = 0.0;
    double min_thp_mbps = 0.0;
    double max_thp_mbps = 0.0;
    std::optional<double> mean_latency_ms;
    uint64_t rb_total = 0;
};

struct RunSummary {
    std::vector<UeSummary> ues;
    double bin_m = 0.0;
    std::vector<xapp::DistanceBin> bins;
};

struct RunArtifacts {
    std::filesystem::path store;
    std::filesystem::path kpm_csv;
    std::filesystem::path series_csv;
    std::filesystem::path summary_txt;
    std::filesystem::path manifest;
    /// One throughput-vs-distance curve per aerial UE (datagen input).
    std::vector<std::filesystem::path> curves;
    std::vector<xapp::SeriesPoint> series;
    RunSummary summary;
    uint64_t indications = 0;
};

/// Per-UE statistics over the xApp series; UEs without points get zero rows.
RunSummary summarize(std::span<const xapp::SeriesPoint> series, const Scenario& scenario);
std::string format_summary(const RunSummary& summary, const Scenario& scenario);

/// setup -> subscription -> slot loop -> indications -> storage, then exports.
/// Writes metrics.db, kpm.csv, series.csv, summary.txt, curve_ue<id>.csv and
/// manifest.txt into out_dir. Throws ConfigError, ProtocolFailure (after
/// writing whatever was produced, flagged in the manifest) or IoFailure.
RunArtifacts run(Scenario scenario, const std::filesystem::path& out_dir, const RunOptions& options = {});

std::string sha256_hex(const std::filesystem::path& file);

/// Plain text: a status line, then "<sha256>  <file name>" per file.
void write_manifest(const std::filesystem::path& manifest, std::span<const std::filesystem::path> files,
                    const std::string& status);

/// Static SVG charts of a series: throughput and RBs vs distance, throughput
/// and latency vs time. Returns the files written.
std::vector<std::filesystem::path> plot_series(std::span<const xapp::SeriesPoint> series,
                                               const std::filesystem::path& out_dir);

}  // namespace aerial_twin::expcli
