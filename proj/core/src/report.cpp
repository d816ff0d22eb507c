#include "driftbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "driftbench/errors.hpp"

namespace driftbench {

using nlohmann::json;

ProbeSummary make_probe_summary(const ProbeReport& report, const std::string& dataset,
                                const std::string& split, Method method, long seed) {
    ProbeSummary s;
    s.dataset = dataset;
    s.split = split;
    s.method = method;
    s.seed = seed;
    s.phase_k = report.phase_k;
    s.phase_t = report.phase_t;
    s.cosine = report.cosine_kt;
    if (report.lambda_star.defined()) s.lambda_star = report.lambda_star.value;
    s.lambda_star_reason = to_string(report.lambda_star.reason);
    s.h_at = report.h_at;
    s.grad_k_norm = report.grad_k.norm;
    s.grad_t_norm = report.grad_t.norm;
    s.grad_hist_norm = report.grad_hist.norm;
    if (report.buffer_grad) s.buffer_grad_norm = report.buffer_grad->norm;
    s.deviation = report.deviation;
    if (report.buffer_capacity) s.capacity = static_cast<std::uint64_t>(*report.buffer_capacity);
    s.grad_bound = report.grad_bound;
    return s;
}

LogRecord LogRecord::phase(PhaseRecord r) {
    LogRecord rec;
    rec.payload = std::move(r);
    return rec;
}

LogRecord LogRecord::probe(ProbeSummary s) {
    LogRecord rec;
    rec.payload = std::move(s);
    return rec;
}

LogRecord LogRecord::meta(RunMeta m) {
    LogRecord rec;
    rec.payload = std::move(m);
    return rec;
}

const char* record_type(const LogRecord& r) {
    if (std::holds_alternative<PhaseRecord>(r.payload)) return "phase";
    if (std::holds_alternative<ProbeSummary>(r.payload)) return "probe";
    return "run_meta";
}

std::string to_json_line(const LogRecord& r) {
    json j;
    j["schema_version"] = r.schema_version;
    j["record_type"] = record_type(r);
    if (const PhaseRecord* p = std::get_if<PhaseRecord>(&r.payload)) {
        j["dataset"] = p->dataset;
        j["split"] = p->split;
        j["task"] = to_string(p->task);
        j["metric"] = to_string(p->metric);
        j["method"] = to_string(p->method);
        j["seed"] = p->seed;
        j["phase"] = p->phase;
        j["init"] = p->init;
        j["final"] = p->final;
        j["forgetting"] = p->forgetting;
    } else if (const ProbeSummary* s = std::get_if<ProbeSummary>(&r.payload)) {
        j["dataset"] = s->dataset;
        j["split"] = s->split;
        j["method"] = to_string(s->method);
        j["seed"] = s->seed;
        j["phase_k"] = s->phase_k;
        j["phase_t"] = s->phase_t;
        j["cosine"] = s->cosine;
        j["lambda_star"] = s->lambda_star ? json(*s->lambda_star) : json(nullptr);
        j["lambda_star_reason"] = s->lambda_star_reason;
        json h = json::array();
        for (const auto& [l, v] : s->h_at) h.push_back(json::array({l, v}));
        j["h_at"] = std::move(h);
        j["grad_k_norm"] = s->grad_k_norm;
        j["grad_t_norm"] = s->grad_t_norm;
        j["grad_hist_norm"] = s->grad_hist_norm;
        j["buffer_grad_norm"] = s->buffer_grad_norm ? json(*s->buffer_grad_norm) : json(nullptr);
        j["deviation"] = s->deviation ? json(*s->deviation) : json(nullptr);
        j["capacity"] = s->capacity ? json(*s->capacity) : json(nullptr);
        j["grad_bound"] = s->grad_bound;
    } else {
        const RunMeta& m = std::get<RunMeta>(r.payload);
        j["dataset"] = m.dataset;
        j["split"] = m.split;
        j["method"] = to_string(m.method);
        j["seed"] = m.seed;
        json cfg = json::object();
        for (const auto& [k, v] : m.config) cfg[k] = v;
        j["config"] = std::move(cfg);
    }
    return j.dump();
}

LogRecord parse_log_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataFormatError(std::string("log: malformed record: ") + e.what());
    }
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw DataFormatError("log: record without schema_version");
    }
    const int version = j["schema_version"].get<int>();
    if (version != kLogSchemaVersion) {
        throw DataFormatError("log: unknown schema_version " + std::to_string(version));
    }
    if (!j.contains("record_type")) throw DataFormatError("log: record without record_type");
    const std::string type = j["record_type"].get<std::string>();
    try {
        if (type == "phase") {
            PhaseRecord p;
            p.dataset = j.at("dataset").get<std::string>();
            p.split = j.at("split").get<std::string>();
            p.task = task_type_from_string(j.at("task").get<std::string>());
            p.metric = metric_from_string(j.at("metric").get<std::string>());
            p.method = method_from_string(j.at("method").get<std::string>());
            p.seed = j.at("seed").get<long>();
            p.phase = j.at("phase").get<int>();
            p.init = j.at("init").get<double>();
            p.final = j.at("final").get<double>();
            p.forgetting = j.at("forgetting").get<double>();
            return LogRecord::phase(std::move(p));
        }
        if (type == "probe") {
            ProbeSummary s;
            s.dataset = j.at("dataset").get<std::string>();
            s.split = j.at("split").get<std::string>();
            s.method = method_from_string(j.at("method").get<std::string>());
            s.seed = j.at("seed").get<long>();
            s.phase_k = j.at("phase_k").get<int>();
            s.phase_t = j.at("phase_t").get<int>();
            s.cosine = j.at("cosine").get<double>();
            if (!j.at("lambda_star").is_null()) s.lambda_star = j["lambda_star"].get<double>();
            s.lambda_star_reason = j.at("lambda_star_reason").get<std::string>();
            for (const auto& pair : j.at("h_at")) {
                s.h_at.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
            }
            s.grad_k_norm = j.at("grad_k_norm").get<double>();
            s.grad_t_norm = j.at("grad_t_norm").get<double>();
            s.grad_hist_norm = j.at("grad_hist_norm").get<double>();
            if (!j.at("buffer_grad_norm").is_null()) {
                s.buffer_grad_norm = j["buffer_grad_norm"].get<double>();
            }
            if (!j.at("deviation").is_null()) s.deviation = j["deviation"].get<double>();
            if (!j.at("capacity").is_null()) s.capacity = j["capacity"].get<std::uint64_t>();
            s.grad_bound = j.at("grad_bound").get<double>();
            return LogRecord::probe(std::move(s));
        }
        if (type == "run_meta") {
            RunMeta m;
            m.dataset = j.at("dataset").get<std::string>();
            m.split = j.at("split").get<std::string>();
            m.method = method_from_string(j.at("method").get<std::string>());
            m.seed = j.at("seed").get<long>();
            for (const auto& [k, v] : j.at("config").items()) {
                m.config.emplace_back(k, v.get<std::string>());
            }
            return LogRecord::meta(std::move(m));
        }
    } catch (const json::exception& e) {
        throw DataFormatError(std::string("log: bad ") + type + " record: " + e.what());
    }
    throw DataFormatError("log: unknown record_type: " + type);
}

LogWriter::LogWriter(std::filesystem::path path) : path_(std::move(path)) {
    file_ = std::fopen(path_.string().c_str(), "ab");
    if (!file_) throw ConfigError("cannot open log for append: " + path_.string());
}

LogWriter::~LogWriter() {
    if (file_) std::fclose(file_);
}

void LogWriter::append(const LogRecord& record) {
    append_batch(std::span<const LogRecord>(&record, 1));
}

void LogWriter::append_batch(std::span<const LogRecord> records) {
    std::scoped_lock lock(mu_);
    for (const LogRecord& r : records) {
        const std::string line = to_json_line(r);
        if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
            std::fputc('\n', file_) == EOF) {
            throw ConfigError("log append failed: " + path_.string());
        }
    }
    if (std::fflush(file_) != 0) {
        throw ConfigError("log flush failed: " + path_.string());
    }
}

void append_record(const std::filesystem::path& path, const LogRecord& record) {
    LogWriter writer(path);
    writer.append(record);
}

std::vector<LogRecord> read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open log: " + path.string());
    std::vector<LogRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back(parse_log_line(line));
    }
    return out;
}

std::vector<PhaseRecord> phase_records(std::span<const LogRecord> records) {
    std::vector<PhaseRecord> out;
    for (const LogRecord& r : records) {
        if (const PhaseRecord* p = std::get_if<PhaseRecord>(&r.payload)) out.push_back(*p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

CellStats to_cell(const ForgettingStats& s) { return CellStats{s.mean, s.stddev, s.n}; }

CellStats stats_of(std::span<const double> values) { return to_cell(mean_stddev(values)); }

double metric_scale(Metric m) { return m == Metric::accuracy ? 100.0 : 1.0; }

} // namespace

PhaseTable table_per_phase(std::span<const LogRecord> records, const std::string& dataset,
                           const std::string& split) {
    std::vector<PhaseRecord> phases;
    for (const PhaseRecord& p : phase_records(records)) {
        if (p.dataset == dataset && p.split == split) phases.push_back(p);
    }
    if (phases.empty()) {
        throw ConfigError("table_per_phase: no phase records for " + dataset + "." + split);
    }
    PhaseTable table;
    table.dataset = dataset;
    table.split = split;
    table.metric = phases.front().metric;
    const double scale = metric_scale(table.metric);

    std::set<Method> methods;
    std::set<int> phase_ids;
    for (const PhaseRecord& p : phases) {
        methods.insert(p.method);
        phase_ids.insert(p.phase);
    }
    table.methods.assign(methods.begin(), methods.end());

    for (int phase : phase_ids) {
        PhaseTableRow row;
        row.phase = phase;
        for (Method m : table.methods) {
            std::vector<double> init, fin, forget;
            for (const PhaseRecord& p : phases) {
                if (p.phase != phase || p.method != m) continue;
                init.push_back(p.init * scale);
                fin.push_back(p.final * scale);
                forget.push_back(p.forgetting * scale);
            }
            MethodCells cells;
            if (!init.empty()) {
                cells.present = true;
                cells.init = stats_of(init);
                cells.final = stats_of(fin);
                cells.forgetting = stats_of(forget);
            }
            row.cells[m] = cells;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::vector<AvgForgettingRow> table_avg_forgetting(std::span<const LogRecord> records) {
    const std::vector<PhaseRecord> phases = phase_records(records);
    if (phases.empty()) throw ConfigError("table_avg_forgetting: no phase records");
    std::vector<AvgForgettingRow> out;
    for (const ForgettingGroup& g : aggregate_forgetting(phases)) {
        AvgForgettingRow row;
        row.dataset = g.dataset;
        row.split = g.split;
        row.method = g.method;
        row.metric = g.metric;
        const double scale = metric_scale(g.metric);
        row.avg = CellStats{g.stats.mean * scale, g.stats.stddev * scale, g.stats.n};
        out.push_back(std::move(row));
    }
    return out;
}

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string fmt_cell(const CellStats& c) { return fmt_num(c.mean) + " +- " + fmt_num(c.stddev); }

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void pad(std::string& s, std::size_t width) {
    while (s.size() < width) s.push_back(' ');
}

std::string render_grid(const std::vector<std::vector<std::string>>& grid) {
    std::vector<std::size_t> widths;
    for (const auto& row : grid) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    }
    std::string out;
    for (const auto& row : grid) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string cell = row[i];
            pad(cell, widths[i]);
            line += cell;
            if (i + 1 < row.size()) line += "  ";
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line;
        out += '\n';
    }
    return out;
}

} // namespace

std::string render_text(const PhaseTable& table) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"phase"};
    for (Method m : table.methods) {
        const std::string name = to_string(m);
        header.push_back(name + ".init");
        header.push_back(name + ".final");
        header.push_back(name + ".F");
    }
    grid.push_back(std::move(header));
    for (const PhaseTableRow& row : table.rows) {
        std::vector<std::string> line{std::to_string(row.phase)};
        for (Method m : table.methods) {
            const MethodCells& c = row.cells.at(m);
            if (c.present) {
                line.push_back(fmt_cell(c.init));
                line.push_back(fmt_cell(c.final));
                line.push_back(fmt_cell(c.forgetting));
            } else {
                line.push_back("--");
                line.push_back("--");
                line.push_back("--");
            }
        }
        grid.push_back(std::move(line));
    }
    std::string title = "# " + table.dataset + "." + table.split + " (" +
                        to_string(table.metric) + (table.metric == Metric::accuracy ? ", %" : "") +
                        ")\n";
    return title + render_grid(grid);
}

std::string render_tsv(const PhaseTable& table) {
    std::ostringstream os;
    os << "phase";
    for (Method m : table.methods) {
        const std::string name = to_string(m);
        os << "\t" << name << ".init.mean\t" << name << ".init.sd\t" << name << ".final.mean\t"
           << name << ".final.sd\t" << name << ".F.mean\t" << name << ".F.sd";
    }
    os << "\n";
    for (const PhaseTableRow& row : table.rows) {
        os << row.phase;
        for (Method m : table.methods) {
            const MethodCells& c = row.cells.at(m);
            if (c.present) {
                os << "\t" << fmt_full(c.init.mean) << "\t" << fmt_full(c.init.stddev) << "\t"
                   << fmt_full(c.final.mean) << "\t" << fmt_full(c.final.stddev) << "\t"
                   << fmt_full(c.forgetting.mean) << "\t" << fmt_full(c.forgetting.stddev);
            } else {
                os << "\t--\t--\t--\t--\t--\t--";
            }
        }
        os << "\n";
    }
    return os.str();
}

std::string render_text(std::span<const AvgForgettingRow> rows) {
    std::vector<std::vector<std::string>> grid;
    grid.push_back({"dataset", "split", "method", "avg_forgetting"});
    for (const AvgForgettingRow& r : rows) {
        grid.push_back({r.dataset, r.split, to_string(r.method), fmt_cell(r.avg)});
    }
    return render_grid(grid);
}

std::string render_tsv(std::span<const AvgForgettingRow> rows) {
    std::ostringstream os;
    os << "dataset\tsplit\tmethod\tF.mean\tF.sd\tn\n";
    for (const AvgForgettingRow& r : rows) {
        os << r.dataset << "\t" << r.split << "\t" << to_string(r.method) << "\t"
           << fmt_full(r.avg.mean) << "\t" << fmt_full(r.avg.stddev) << "\t" << r.avg.n << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Plot data
// ---------------------------------------------------------------------------

const char* to_string(FigureKind f) {
    switch (f) {
        case FigureKind::per_phase_accuracy: return "per_phase_accuracy";
        case FigureKind::per_phase_mse: return "per_phase_mse";
        case FigureKind::forgetting_summary: return "forgetting_summary";
    }
    return "?";
}

FigureKind figure_from_string(const std::string& s) {
    if (s == "per_phase_accuracy") return FigureKind::per_phase_accuracy;
    if (s == "per_phase_mse") return FigureKind::per_phase_mse;
    if (s == "forgetting_summary") return FigureKind::forgetting_summary;
    throw ConfigError("unknown figure: " + s);
}

std::vector<std::tuple<std::string, std::string, Metric>> log_scenarios(
    std::span<const LogRecord> records) {
    std::set<std::tuple<std::string, std::string, Metric>> seen;
    for (const PhaseRecord& p : phase_records(records)) {
        seen.insert({p.dataset, p.split, p.metric});
    }
    return {seen.begin(), seen.end()};
}

std::string emit_plot_data(std::span<const LogRecord> records, FigureKind figure,
                           const std::string& dataset, const std::string& split) {
    std::ostringstream os;
    if (figure == FigureKind::forgetting_summary) {
        os << "# phase\tseries\tvalue\terror\n";
        for (const AvgForgettingRow& r : table_avg_forgetting(records)) {
            os << r.dataset << "." << r.split << "\t" << to_string(r.method) << "\t"
               << fmt_full(r.avg.mean) << "\t" << fmt_full(r.avg.stddev) << "\n";
        }
        return os.str();
    }

    const Metric wanted =
        figure == FigureKind::per_phase_accuracy ? Metric::accuracy : Metric::mse;
    std::string ds = dataset;
    std::string sp = split;
    if (ds.empty() || sp.empty()) {
        std::vector<std::tuple<std::string, std::string, Metric>> matching;
        for (const auto& sc : log_scenarios(records)) {
            if (std::get<2>(sc) == wanted) matching.push_back(sc);
        }
        if (matching.empty()) {
            throw ConfigError(std::string("no ") + to_string(wanted) + " scenario in log");
        }
        if (matching.size() > 1) {
            throw ConfigError("multiple scenarios in log; specify dataset and split");
        }
        ds = std::get<0>(matching.front());
        sp = std::get<1>(matching.front());
    }
    const PhaseTable table = table_per_phase(records, ds, sp);
    if (table.metric != wanted) {
        throw ConfigError(std::string("scenario ") + ds + "." + sp + " uses metric " +
                          to_string(table.metric) + ", not " + to_string(wanted));
    }
    os << "# phase\tseries\tvalue\terror\n";
    for (const PhaseTableRow& row : table.rows) {
        for (Method m : table.methods) {
            const MethodCells& c = row.cells.at(m);
            if (!c.present) continue;
            os << row.phase << "\t" << to_string(m) << ".init\t" << fmt_full(c.init.mean) << "\t"
               << fmt_full(c.init.stddev) << "\n";
            os << row.phase << "\t" << to_string(m) << ".final\t" << fmt_full(c.final.mean) << "\t"
               << fmt_full(c.final.stddev) << "\n";
        }
    }
    return os.str();
}

} // namespace driftbench
