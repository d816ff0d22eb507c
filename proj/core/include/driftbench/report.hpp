#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "driftbench/objectives.hpp"
#include "driftbench/probe.hpp"

namespace driftbench {

constexpr int kLogSchemaVersion = 1;

// Configuration echo written once per run: every effective setting, defaults
// included, so each run is reproducible from the log alone.
struct RunMeta {
    std::string dataset;
    std::string split;
    Method method = Method::seqft;
    long seed = 0;
    std::vector<std::pair<std::string, std::string>> config; // sorted by key
};

// Log-friendly projection of a ProbeReport: scalars and norms, not the raw
// gradient vectors.
struct ProbeSummary {
    std::string dataset;
    std::string split;
    Method method = Method::seqft;
    long seed = 0;
    int phase_k = 0;
    int phase_t = 0;
    double cosine = 0.0;
    std::optional<double> lambda_star;
    std::string lambda_star_reason;
    std::vector<std::pair<double, double>> h_at;
    double grad_k_norm = 0.0;
    double grad_t_norm = 0.0;
    double grad_hist_norm = 0.0;
    std::optional<double> buffer_grad_norm;
    std::optional<double> deviation;
    std::optional<std::uint64_t> capacity;
    double grad_bound = 0.0;
};

ProbeSummary make_probe_summary(const ProbeReport& report, const std::string& dataset,
                                const std::string& split, Method method, long seed);

// One self-describing line of the structured log.
struct LogRecord {
    int schema_version = kLogSchemaVersion;
    std::variant<PhaseRecord, ProbeSummary, RunMeta> payload;

    static LogRecord phase(PhaseRecord r);
    static LogRecord probe(ProbeSummary s);
    static LogRecord meta(RunMeta m);
};

const char* record_type(const LogRecord& r);

std::string to_json_line(const LogRecord& r);
// Throws DataFormatError on malformed lines or an unknown schema_version.
LogRecord parse_log_line(const std::string& line);

// Single designated writer for one log file. Appends are line-atomic and
// flushed before returning; concurrent callers serialize on a mutex.
class LogWriter {
  public:
    explicit LogWriter(std::filesystem::path path);
    ~LogWriter();
    LogWriter(const LogWriter&) = delete;
    LogWriter& operator=(const LogWriter&) = delete;

    void append(const LogRecord& record);
    void append_batch(std::span<const LogRecord> records);
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    std::mutex mu_;
};

// One-shot append without keeping a writer around.
void append_record(const std::filesystem::path& path, const LogRecord& record);

std::vector<LogRecord> read_log(const std::filesystem::path& path);

std::vector<PhaseRecord> phase_records(std::span<const LogRecord> records);

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct CellStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

struct MethodCells {
    bool present = false;
    CellStats init;
    CellStats final;
    CellStats forgetting;
};

struct PhaseTableRow {
    int phase = 0;
    std::map<Method, MethodCells> cells;
};

// Per-phase init/final/forgetting, mean +- stddev over seeds. Accuracy values
// are scaled to percentage points.
struct PhaseTable {
    std::string dataset;
    std::string split;
    Metric metric = Metric::accuracy;
    std::vector<Method> methods; // methods present in the log
    std::vector<PhaseTableRow> rows;
};

PhaseTable table_per_phase(std::span<const LogRecord> records, const std::string& dataset,
                           const std::string& split);

struct AvgForgettingRow {
    std::string dataset;
    std::string split;
    Method method = Method::seqft;
    Metric metric = Metric::accuracy;
    CellStats avg; // pooled over phases and seeds; accuracy in points
};

std::vector<AvgForgettingRow> table_avg_forgetting(std::span<const LogRecord> records);

std::string render_text(const PhaseTable& table);
std::string render_tsv(const PhaseTable& table);
std::string render_text(std::span<const AvgForgettingRow> rows);
std::string render_tsv(std::span<const AvgForgettingRow> rows);

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

enum class FigureKind { per_phase_accuracy, per_phase_mse, forgetting_summary };

const char* to_string(FigureKind f);
FigureKind figure_from_string(const std::string& s); // unknown tag -> ConfigError

// 4-column text (x, series, value, error), tab-separated, one header line.
// Per-phase figures need the scenario; when dataset/split are empty and the
// log holds exactly one matching scenario it is picked automatically.
std::string emit_plot_data(std::span<const LogRecord> records, FigureKind figure,
                           const std::string& dataset = "", const std::string& split = "");

// Scenarios present in the log, as (dataset, split, metric).
std::vector<std::tuple<std::string, std::string, Metric>> log_scenarios(
    std::span<const LogRecord> records);

} // namespace driftbench
