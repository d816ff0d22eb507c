#include "driftbench/streams.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "driftbench/errors.hpp"

namespace driftbench {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

const char* to_string(DatasetId d) {
    switch (d) {
        case DatasetId::rotmnist: return "rotmnist";
        case DatasetId::electricity: return "electricity";
        case DatasetId::airlines: return "airlines";
        case DatasetId::synth: return "synth";
    }
    return "?";
}

const char* to_string(SplitId s) {
    switch (s) {
        case SplitId::digits_pairs: return "digits_pairs";
        case SplitId::time: return "time";
        case SplitId::meters: return "meters";
        case SplitId::airline_group: return "airline_group";
        case SplitId::synth_pairs: return "synth_pairs";
        case SplitId::synth_drift: return "synth_drift";
    }
    return "?";
}

DatasetId dataset_from_string(const std::string& s) {
    if (s == "rotmnist") return DatasetId::rotmnist;
    if (s == "electricity") return DatasetId::electricity;
    if (s == "airlines") return DatasetId::airlines;
    if (s == "synth") return DatasetId::synth;
    throw ConfigError("unknown dataset: " + s);
}

SplitId split_from_string(const std::string& s) {
    if (s == "digits_pairs") return SplitId::digits_pairs;
    if (s == "time") return SplitId::time;
    if (s == "meters") return SplitId::meters;
    if (s == "airline_group") return SplitId::airline_group;
    if (s == "synth_pairs") return SplitId::synth_pairs;
    if (s == "synth_drift") return SplitId::synth_drift;
    throw ConfigError("unknown split: " + s);
}

bool split_compatible(DatasetId d, SplitId s) {
    switch (d) {
        case DatasetId::rotmnist: return s == SplitId::digits_pairs;
        case DatasetId::electricity: return s == SplitId::time || s == SplitId::meters;
        case DatasetId::airlines: return s == SplitId::time || s == SplitId::airline_group;
        case DatasetId::synth: return s == SplitId::synth_pairs || s == SplitId::synth_drift;
    }
    return false;
}

const char* to_string(TaskChoice t) {
    switch (t) {
        case TaskChoice::automatic: return "auto";
        case TaskChoice::classification: return "classification";
        case TaskChoice::reconstruction: return "reconstruction";
        case TaskChoice::forecasting: return "forecasting";
    }
    return "?";
}

TaskChoice task_choice_from_string(const std::string& s) {
    if (s == "auto") return TaskChoice::automatic;
    if (s == "classification") return TaskChoice::classification;
    if (s == "reconstruction") return TaskChoice::reconstruction;
    if (s == "forecasting") return TaskChoice::forecasting;
    throw ConfigError("unknown task choice: " + s);
}

// ---------------------------------------------------------------------------
// StreamSpec
// ---------------------------------------------------------------------------

void validate(const StreamSpec& spec) {
    if (spec.num_phases < 2) throw ConfigError("stream: num_phases must be >= 2");
    if (!(spec.val_fraction > 0.0 && spec.val_fraction < 1.0)) {
        throw ConfigError("stream: val_fraction must lie in (0,1)");
    }
    if (spec.window_len < 1) throw ConfigError("stream: window_len must be >= 1");
    if (!split_compatible(spec.dataset, spec.split)) {
        throw ConfigError(std::string("stream: split ") + to_string(spec.split) +
                          " is not defined for dataset " + to_string(spec.dataset));
    }
    if (spec.examples_per_phase < 4) throw ConfigError("stream: examples_per_phase too small");
    if (spec.feature_dim < 1) throw ConfigError("stream: feature_dim must be positive");
    if (!(spec.separation > 0.0)) throw ConfigError("stream: separation must be positive");
    if (spec.drift_step < 0.0) throw ConfigError("stream: drift_step must be >= 0");
    if (spec.task == TaskChoice::reconstruction && spec.dataset != DatasetId::rotmnist) {
        throw ConfigError("stream: reconstruction is only defined for rotmnist");
    }
    if (spec.task == TaskChoice::forecasting && spec.dataset != DatasetId::electricity) {
        throw ConfigError("stream: forecasting is only defined for electricity");
    }
    if (spec.task == TaskChoice::classification && spec.dataset == DatasetId::electricity) {
        throw ConfigError("stream: electricity is a forecasting dataset");
    }
}

std::string scenario_name(const StreamSpec& spec) {
    std::string name = std::string(to_string(spec.dataset)) + "." + to_string(spec.split);
    if (spec.task != TaskChoice::automatic) {
        name += std::string(".") + to_string(spec.task);
    }
    return name;
}

std::string serialize(const StreamSpec& spec) {
    std::ostringstream os;
    os << "dataset = " << to_string(spec.dataset) << "\n";
    os << "split = " << to_string(spec.split) << "\n";
    os << "task = " << to_string(spec.task) << "\n";
    os << "num_phases = " << spec.num_phases << "\n";
    os << "val_fraction = " << fmt_double(spec.val_fraction) << "\n";
    os << "window_len = " << spec.window_len << "\n";
    os << "seed = " << spec.seed << "\n";
    os << "examples_per_phase = " << spec.examples_per_phase << "\n";
    os << "feature_dim = " << spec.feature_dim << "\n";
    os << "separation = " << fmt_double(spec.separation) << "\n";
    os << "drift_step = " << fmt_double(spec.drift_step) << "\n";
    return os.str();
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long parse_long(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        long out = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("stream spec: bad integer for " + key + ": '" + v + "'");
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError("stream spec: bad number for " + key + ": '" + v + "'");
    }
}

} // namespace

StreamSpec parse_stream_spec(const std::string& text) {
    StreamSpec spec;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("stream spec: expected 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "dataset") spec.dataset = dataset_from_string(value);
        else if (key == "split") spec.split = split_from_string(value);
        else if (key == "task") spec.task = task_choice_from_string(value);
        else if (key == "num_phases") spec.num_phases = static_cast<int>(parse_long(value, key));
        else if (key == "val_fraction") spec.val_fraction = parse_double(value, key);
        else if (key == "window_len") spec.window_len = static_cast<int>(parse_long(value, key));
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(parse_long(value, key));
        else if (key == "examples_per_phase") spec.examples_per_phase = static_cast<int>(parse_long(value, key));
        else if (key == "feature_dim") spec.feature_dim = static_cast<int>(parse_long(value, key));
        else if (key == "separation") spec.separation = parse_double(value, key);
        else if (key == "drift_step") spec.drift_step = parse_double(value, key);
        else throw ConfigError("stream spec: unknown key: " + key);
    }
    return spec;
}

StreamSpec load_stream_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open stream spec: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_stream_spec(os.str());
}

void save_stream_spec(const std::filesystem::path& path, const StreamSpec& spec) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write stream spec: " + path.string());
    out << serialize(spec);
}

StreamSpec spec_from_scenario(const std::string& name) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = name.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(name.substr(start));
            break;
        }
        parts.push_back(name.substr(start, dot - start));
        start = dot + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) {
        throw ConfigError("scenario must be dataset.split or dataset.split.task: " + name);
    }
    StreamSpec spec;
    spec.dataset = dataset_from_string(parts[0]);
    spec.split = split_from_string(parts[1]);
    spec.task = parts.size() == 3 ? task_choice_from_string(parts[2]) : TaskChoice::automatic;
    validate(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803u;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801u;

std::uint32_t read_be32(std::istream& in, std::size_t offset, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) {
        throw DataFormatError(path + ": truncated at offset " + std::to_string(offset));
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

IdxImages load_idx_images(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open IDX image file: " + path.string());
    const std::string name = path.string();
    const std::uint32_t magic = read_be32(in, 0, name);
    if (magic != kIdxImageMagic) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "0x%08x", magic);
        throw DataFormatError(name + ": bad image magic " + buf + " at offset 0");
    }
    const std::uint32_t count = read_be32(in, 4, name);
    const std::uint32_t rows = read_be32(in, 8, name);
    const std::uint32_t cols = read_be32(in, 12, name);
    IdxImages out;
    out.rows = static_cast<int>(rows);
    out.cols = static_cast<int>(cols);
    out.images.reserve(count);
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> raw(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
        if (static_cast<std::size_t>(in.gcount()) != pixels) {
            throw DataFormatError(name + ": truncated at offset " +
                                  std::to_string(16 + static_cast<std::size_t>(i) * pixels +
                                                 static_cast<std::size_t>(in.gcount())));
        }
        std::vector<double> img(pixels);
        for (std::size_t p = 0; p < pixels; ++p) img[p] = static_cast<double>(raw[p]) / 255.0;
        out.images.push_back(std::move(img));
    }
    return out;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("cannot open IDX label file: " + path.string());
    const std::string name = path.string();
    const std::uint32_t magic = read_be32(in, 0, name);
    if (magic != kIdxLabelMagic) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "0x%08x", magic);
        throw DataFormatError(name + ": bad label magic " + buf + " at offset 0");
    }
    const std::uint32_t count = read_be32(in, 4, name);
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::uint32_t>(in.gcount()) != count) {
        throw DataFormatError(name + ": truncated at offset " +
                              std::to_string(8 + static_cast<std::size_t>(in.gcount())));
    }
    return std::vector<int>(raw.begin(), raw.end());
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot write IDX image file: " + path.string());
    write_be32(out, kIdxImageMagic);
    write_be32(out, static_cast<std::uint32_t>(images.images.size()));
    write_be32(out, static_cast<std::uint32_t>(images.rows));
    write_be32(out, static_cast<std::uint32_t>(images.cols));
    for (const auto& img : images.images) {
        for (double v : img) {
            const double clamped = std::min(1.0, std::max(0.0, v));
            const unsigned char byte = static_cast<unsigned char>(std::lround(clamped * 255.0));
            out.put(static_cast<char>(byte));
        }
    }
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("cannot write IDX label file: " + path.string());
    write_be32(out, kIdxLabelMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) out.put(static_cast<char>(static_cast<unsigned char>(l)));
}

LabelledImages load_idx_pair(const std::filesystem::path& image_path,
                             const std::filesystem::path& label_path) {
    LabelledImages out;
    out.images = load_idx_images(image_path);
    out.labels = load_idx_labels(label_path);
    if (out.images.images.size() != out.labels.size()) {
        throw DataFormatError("IDX count mismatch: " + std::to_string(out.images.images.size()) +
                              " images vs " + std::to_string(out.labels.size()) + " labels (" +
                              image_path.string() + ", " + label_path.string() + ")");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rotation
// ---------------------------------------------------------------------------

std::vector<double> rotate_image(std::span<const double> image, int rows, int cols,
                                 double angle_rad) {
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != image.size()) {
        throw ConfigError("rotate: grid size mismatch");
    }
    const double cy = (rows - 1) / 2.0;
    const double cx = (cols - 1) / 2.0;
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    std::vector<double> out(image.size(), 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int col = 0; col < cols; ++col) {
            // inverse map: rotate the destination point back by -angle
            const double dy = r - cy;
            const double dx = col - cx;
            const double sy = cy + c * dy - s * dx;
            const double sx = cx + s * dy + c * dx;
            const int r0 = static_cast<int>(std::floor(sy));
            const int c0 = static_cast<int>(std::floor(sx));
            const double fy = sy - r0;
            const double fx = sx - c0;
            double acc = 0.0;
            for (int a = 0; a <= 1; ++a) {
                for (int b = 0; b <= 1; ++b) {
                    const int rr = r0 + a;
                    const int cc = c0 + b;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const double w = (a ? fy : 1.0 - fy) * (b ? fx : 1.0 - fx);
                    acc += w * image[static_cast<std::size_t>(rr) * cols + cc];
                }
            }
            out[static_cast<std::size_t>(r) * cols + col] = acc;
        }
    }
    return out;
}

std::vector<std::vector<double>> rotate_dataset(std::span<const std::vector<double>> images,
                                                int rows, int cols, Rng& rng,
                                                double max_angle_deg) {
    const double max_rad = max_angle_deg * 3.14159265358979323846 / 180.0;
    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        const double angle = rng.uniform(-max_rad, max_rad);
        out.push_back(rotate_image(img, rows, cols, angle));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> default_digit_pairs() {
    return {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}};
}

namespace {

void stamp_phase(std::vector<Example>& examples, int phase_id) {
    for (Example& e : examples) e.phase_origin = phase_id;
}

PhaseDataset finalize_split_phase(int phase_id, std::vector<Example> bucket, const TaskKind& task,
                                  double val_fraction) {
    stamp_phase(bucket, phase_id);
    PhaseDataset phase = finalize_phase(phase_id, std::move(bucket), task, val_fraction);
    validate(phase);
    return phase;
}

} // namespace

std::vector<PhaseDataset> split_label_pairs(std::span<const Example> examples,
                                            std::span<const std::pair<int, int>> pairs,
                                            const TaskKind& task, double val_fraction) {
    std::map<int, int> label_to_phase; // label -> 1-based phase
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        for (int label : {pairs[t].first, pairs[t].second}) {
            if (!label_to_phase.emplace(label, static_cast<int>(t) + 1).second) {
                throw ConfigError("split_label_pairs: label " + std::to_string(label) +
                                  " appears in more than one pair");
            }
        }
    }
    std::vector<std::vector<Example>> buckets(pairs.size());
    for (const Example& e : examples) {
        const auto it = label_to_phase.find(e.label);
        if (it == label_to_phase.end()) {
            throw ConfigError("split_label_pairs: label " + std::to_string(e.label) +
                              " not covered by any pair");
        }
        buckets[static_cast<std::size_t>(it->second - 1)].push_back(e);
    }
    std::vector<PhaseDataset> phases;
    phases.reserve(pairs.size());
    for (std::size_t t = 0; t < buckets.size(); ++t) {
        if (buckets[t].empty()) {
            throw ConfigError("split_label_pairs: no examples for pair {" +
                              std::to_string(pairs[t].first) + "," +
                              std::to_string(pairs[t].second) + "}");
        }
        phases.push_back(finalize_split_phase(static_cast<int>(t) + 1, std::move(buckets[t]), task,
                                              val_fraction));
    }
    return phases;
}

std::vector<PhaseDataset> split_time(std::span<const Example> examples, int num_phases,
                                     const TaskKind& task, double val_fraction) {
    if (num_phases < 1) throw ConfigError("split_time: num_phases must be positive");
    const std::size_t n = examples.size();
    if (n < static_cast<std::size_t>(num_phases)) {
        throw ConfigError("split_time: fewer examples (" + std::to_string(n) + ") than phases (" +
                          std::to_string(num_phases) + ")");
    }
    const std::size_t base = n / static_cast<std::size_t>(num_phases);
    const std::size_t rem = n % static_cast<std::size_t>(num_phases);
    std::vector<PhaseDataset> phases;
    phases.reserve(static_cast<std::size_t>(num_phases));
    std::size_t pos = 0;
    for (int t = 0; t < num_phases; ++t) {
        const std::size_t len = base + (static_cast<std::size_t>(t) < rem ? 1 : 0);
        std::vector<Example> bucket(examples.begin() + static_cast<std::ptrdiff_t>(pos),
                                    examples.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
        phases.push_back(finalize_split_phase(t + 1, std::move(bucket), task, val_fraction));
    }
    return phases;
}

std::vector<PhaseDataset> split_group(std::span<const Example> examples,
                                      const std::function<int(const Example&)>& group_of,
                                      int num_phases, const TaskKind& task, double val_fraction) {
    if (num_phases < 1) throw ConfigError("split_group: num_phases must be positive");
    std::vector<std::vector<Example>> buckets(static_cast<std::size_t>(num_phases));
    for (const Example& e : examples) {
        const int g = group_of(e);
        if (g < 1 || g > num_phases) {
            throw ConfigError("split_group: group id " + std::to_string(g) + " outside 1.." +
                              std::to_string(num_phases));
        }
        buckets[static_cast<std::size_t>(g - 1)].push_back(e);
    }
    std::vector<PhaseDataset> phases;
    phases.reserve(buckets.size());
    for (int t = 0; t < num_phases; ++t) {
        if (buckets[static_cast<std::size_t>(t)].empty()) {
            throw ConfigError("split_group: group " + std::to_string(t + 1) + " is empty");
        }
        phases.push_back(finalize_split_phase(t + 1, std::move(buckets[static_cast<std::size_t>(t)]),
                                              task, val_fraction));
    }
    return phases;
}

int hash_group(const std::string& entity_key, int num_groups) {
    if (num_groups < 1) throw ConfigError("hash_group: num_groups must be positive");
    std::uint64_t h = 14695981039346656037ull; // FNV-1a
    for (unsigned char c : entity_key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return static_cast<int>(h % static_cast<std::uint64_t>(num_groups)) + 1;
}

// ---------------------------------------------------------------------------
// Forecasting series
// ---------------------------------------------------------------------------

void zscore_normalize(Series& series, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("zscore: train_fraction must lie in (0,1]");
    }
    const std::size_t n = series.values.size();
    if (n == 0) return;
    std::size_t span = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    if (span < 1) span = 1;
    double mean = 0.0;
    for (std::size_t i = 0; i < span; ++i) mean += series.values[i];
    mean /= static_cast<double>(span);
    double var = 0.0;
    for (std::size_t i = 0; i < span; ++i) {
        var += (series.values[i] - mean) * (series.values[i] - mean);
    }
    var /= static_cast<double>(span);
    if (var <= 0.0) {
        std::fill(series.values.begin(), series.values.end(), 0.0);
        return;
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& v : series.values) v = (v - mean) * inv_sd;
}

std::vector<Example> make_windows(std::span<const Series> series, int window_len) {
    if (window_len < 1) throw ConfigError("make_windows: window_len must be >= 1");
    std::vector<Example> out;
    for (const Series& s : series) {
        const std::size_t len = s.values.size();
        if (len <= static_cast<std::size_t>(window_len)) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(window_len) < len; ++i) {
            Example e;
            e.x.assign(s.values.begin() + static_cast<std::ptrdiff_t>(i),
                       s.values.begin() + static_cast<std::ptrdiff_t>(i + window_len));
            e.target = {s.values[i + static_cast<std::size_t>(window_len)]};
            out.push_back(std::move(e));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic streams
// ---------------------------------------------------------------------------

namespace {

std::vector<double> gaussian_vector(Rng& rng, int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.normal();
    return v;
}

std::vector<double> normalized(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n <= 0.0) {
        v.assign(v.size(), 0.0);
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= n;
    return v;
}

double mean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// Draws `count` class means and rescales them so the minimum pairwise
// distance equals `separation` (noise sigma is 1, so separation is in
// sigmas). Consumes a fixed number of rng draws for a given (count, dim).
std::vector<std::vector<double>> draw_separated_means(Rng& rng, int count, int dim,
                                                      double separation) {
    std::vector<std::vector<double>> means;
    means.reserve(static_cast<std::size_t>(count));
    for (int c = 0; c < count; ++c) means.push_back(gaussian_vector(rng, dim));
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            min_dist = std::min(min_dist, mean_distance(means[i], means[j]));
        }
    }
    if (!(min_dist > 0.0)) min_dist = 1.0;
    const double scale = separation / min_dist;
    for (auto& m : means) {
        for (double& x : m) x *= scale;
    }
    return means;
}

} // namespace

GaussianMixture synth_pairs_mixture(const StreamSpec& spec) {
    Rng rng(spec.seed);
    GaussianMixture mix;
    mix.sigma = 1.0;
    mix.means = draw_separated_means(rng, 2 * spec.num_phases, spec.feature_dim, spec.separation);
    return mix;
}

std::vector<PhaseDataset> synth_stream(const StreamSpec& spec) {
    validate(spec);
    if (spec.dataset != DatasetId::synth) {
        throw ConfigError("synth_stream: dataset must be synth");
    }
    Rng rng(spec.seed);
    std::vector<PhaseDataset> phases;
    phases.reserve(static_cast<std::size_t>(spec.num_phases));

    if (spec.split == SplitId::synth_pairs) {
        const int num_classes = 2 * spec.num_phases;
        const auto means = draw_separated_means(rng, num_classes, spec.feature_dim, spec.separation);
        const TaskKind task = TaskKind::classification(num_classes);
        for (int t = 1; t <= spec.num_phases; ++t) {
            std::vector<Example> bucket;
            bucket.reserve(static_cast<std::size_t>(spec.examples_per_phase));
            for (int i = 0; i < spec.examples_per_phase; ++i) {
                const int cls = 2 * (t - 1) + (i % 2);
                Example e;
                e.label = cls;
                e.phase_origin = t;
                e.x.resize(static_cast<std::size_t>(spec.feature_dim));
                for (int d = 0; d < spec.feature_dim; ++d) {
                    e.x[static_cast<std::size_t>(d)] =
                        means[static_cast<std::size_t>(cls)][static_cast<std::size_t>(d)] +
                        rng.normal();
                }
                bucket.push_back(std::move(e));
            }
            phases.push_back(finalize_phase(t, std::move(bucket), task, spec.val_fraction));
        }
        return phases;
    }

    // synth_drift: one binary task, both class means translate per phase.
    const TaskKind task = TaskKind::classification(2);
    const std::vector<double> axis = normalized(gaussian_vector(rng, spec.feature_dim));
    const std::vector<double> drift_dir = normalized(gaussian_vector(rng, spec.feature_dim));
    for (int t = 1; t <= spec.num_phases; ++t) {
        const double shift = spec.drift_step * static_cast<double>(t - 1);
        std::vector<Example> bucket;
        bucket.reserve(static_cast<std::size_t>(spec.examples_per_phase));
        for (int i = 0; i < spec.examples_per_phase; ++i) {
            const int cls = i % 2;
            const double side = cls == 0 ? -0.5 : 0.5;
            Example e;
            e.label = cls;
            e.phase_origin = t;
            e.x.resize(static_cast<std::size_t>(spec.feature_dim));
            for (int d = 0; d < spec.feature_dim; ++d) {
                e.x[static_cast<std::size_t>(d)] =
                    side * spec.separation * axis[static_cast<std::size_t>(d)] +
                    shift * drift_dir[static_cast<std::size_t>(d)] + rng.normal();
            }
            bucket.push_back(std::move(e));
        }
        phases.push_back(finalize_phase(t, std::move(bucket), task, spec.val_fraction));
    }
    return phases;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

const char* to_string(ColumnRole r) {
    switch (r) {
        case ColumnRole::feature_numeric: return "feature_numeric";
        case ColumnRole::feature_categorical: return "feature_categorical";
        case ColumnRole::label: return "label";
        case ColumnRole::timestamp: return "timestamp";
        case ColumnRole::entity_id: return "entity_id";
    }
    return "?";
}

ColumnRole column_role_from_string(const std::string& s) {
    if (s == "feature_numeric") return ColumnRole::feature_numeric;
    if (s == "feature_categorical") return ColumnRole::feature_categorical;
    if (s == "label") return ColumnRole::label;
    if (s == "timestamp") return ColumnRole::timestamp;
    if (s == "entity_id") return ColumnRole::entity_id;
    throw ConfigError("unknown column role: " + s);
}

CsvSchema parse_schema(const std::string& text) {
    CsvSchema schema;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("schema: expected 'column = role': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "delimiter") {
            if (value == "comma") schema.delimiter = ',';
            else if (value == "semicolon") schema.delimiter = ';';
            else if (value == "tab") schema.delimiter = '\t';
            else throw ConfigError("schema: unknown delimiter: " + value);
        } else if (key == "max_vocab") {
            schema.max_vocab = static_cast<int>(parse_long(value, key));
            if (schema.max_vocab < 2) throw ConfigError("schema: max_vocab must be >= 2");
        } else {
            schema.columns.emplace_back(key, column_role_from_string(value));
        }
    }
    if (schema.columns.empty()) throw ConfigError("schema: no columns declared");
    return schema;
}

CsvSchema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_schema(os.str());
}

int Vocabulary::lookup(const std::string& token) const {
    const auto it = index.find(token);
    return it == index.end() ? 0 : it->second;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write vocabulary: " + path.string());
    out << "#size\t" << vocab.size << "\n";
    // stable order: by index
    std::vector<std::pair<int, std::string>> byidx;
    byidx.reserve(vocab.index.size());
    for (const auto& [tok, idx] : vocab.index) byidx.emplace_back(idx, tok);
    std::sort(byidx.begin(), byidx.end());
    for (const auto& [idx, tok] : byidx) out << tok << "\t" << idx << "\n";
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open vocabulary: " + path.string());
    Vocabulary vocab;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.rfind('\t');
        if (tab == std::string::npos) throw DataFormatError("vocabulary: malformed line: " + line);
        const std::string tok = line.substr(0, tab);
        const int idx = static_cast<int>(parse_long(line.substr(tab + 1), "vocab index"));
        if (first && tok == "#size") {
            vocab.size = idx;
        } else {
            vocab.index[tok] = idx;
        }
        first = false;
    }
    if (vocab.size < 1) throw DataFormatError("vocabulary: missing size header");
    return vocab;
}

namespace {

std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

} // namespace

CsvTable load_csv_table(const std::filesystem::path& path, const CsvSchema& schema,
                        const std::map<std::string, Vocabulary>* fixed_vocabularies) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataFormatError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_row(line, schema.delimiter);

    // map schema columns to file positions
    std::vector<std::pair<std::size_t, ColumnRole>> positions; // (cell index, role)
    std::vector<std::string> names;
    for (const auto& [name, role] : schema.columns) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataFormatError(path.string() + ": missing column '" + name + "' in header");
        }
        positions.emplace_back(static_cast<std::size_t>(it - header.begin()), role);
        names.push_back(name);
    }

    // first pass: collect rows as raw cells
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells = split_row(line, schema.delimiter);
        if (cells.size() < header.size()) {
            throw DataFormatError(path.string() + ": row " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        }
        rows.push_back(std::move(cells));
    }

    CsvTable table;

    // build vocabularies for categorical columns (most frequent first, ties by
    // first occurrence; index 0 reserved for unknown)
    for (std::size_t ci = 0; ci < positions.size(); ++ci) {
        if (positions[ci].second != ColumnRole::feature_categorical) continue;
        const std::string& name = names[ci];
        if (fixed_vocabularies) {
            const auto it = fixed_vocabularies->find(name);
            if (it == fixed_vocabularies->end()) {
                throw ConfigError("no fixed vocabulary supplied for column '" + name + "'");
            }
            table.vocabularies[name] = it->second;
            continue;
        }
        std::map<std::string, std::pair<std::size_t, std::size_t>> counts; // token -> (count, first row)
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const std::string& tok = rows[r][positions[ci].first];
            auto it = counts.find(tok);
            if (it == counts.end()) {
                counts.emplace(tok, std::make_pair(std::size_t{1}, r));
            } else {
                ++it->second.first;
            }
        }
        std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(
            counts.begin(), counts.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second.first != b.second.first) return a.second.first > b.second.first;
            return a.second.second < b.second.second;
        });
        Vocabulary vocab;
        int next = 1;
        for (const auto& [tok, stat] : ranked) {
            if (next >= schema.max_vocab) break;
            vocab.index[tok] = next++;
        }
        vocab.size = next;
        table.vocabularies[name] = std::move(vocab);
    }

    // second pass: encode
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Example e;
        std::string entity;
        double ts = 0.0;
        bool has_entity = false;
        bool has_ts = false;
        for (std::size_t ci = 0; ci < positions.size(); ++ci) {
            const std::string& cell = rows[r][positions[ci].first];
            const std::string& name = names[ci];
            const std::size_t rowno = r + 2; // 1-based, after header
            switch (positions[ci].second) {
                case ColumnRole::feature_numeric: {
                    try {
                        std::size_t pos = 0;
                        const double v = std::stod(cell, &pos);
                        if (pos != cell.size()) throw std::invalid_argument(cell);
                        e.x.push_back(v);
                    } catch (const std::exception&) {
                        throw DataFormatError(path.string() + ": row " + std::to_string(rowno) +
                                              ", column '" + name + "': unparsable numeric '" +
                                              cell + "'");
                    }
                    break;
                }
                case ColumnRole::feature_categorical: {
                    const Vocabulary& vocab = table.vocabularies.at(name);
                    const int idx = vocab.lookup(cell);
                    const std::size_t base = e.x.size();
                    e.x.resize(base + static_cast<std::size_t>(vocab.size), 0.0);
                    e.x[base + static_cast<std::size_t>(idx)] = 1.0;
                    break;
                }
                case ColumnRole::label: {
                    try {
                        std::size_t pos = 0;
                        const long v = std::stol(cell, &pos);
                        if (pos != cell.size() || v < 0) throw std::invalid_argument(cell);
                        e.label = static_cast<int>(v);
                    } catch (const std::exception&) {
                        throw DataFormatError(path.string() + ": row " + std::to_string(rowno) +
                                              ", column '" + name + "': unparsable label '" + cell +
                                              "'");
                    }
                    break;
                }
                case ColumnRole::timestamp: {
                    try {
                        std::size_t pos = 0;
                        ts = std::stod(cell, &pos);
                        if (pos != cell.size()) throw std::invalid_argument(cell);
                        has_ts = true;
                    } catch (const std::exception&) {
                        throw DataFormatError(path.string() + ": row " + std::to_string(rowno) +
                                              ", column '" + name + "': unparsable timestamp '" +
                                              cell + "'");
                    }
                    break;
                }
                case ColumnRole::entity_id: {
                    entity = cell;
                    has_entity = true;
                    break;
                }
            }
        }
        table.examples.push_back(std::move(e));
        if (has_entity) table.entity.push_back(entity);
        if (has_ts) table.timestamp.push_back(ts);
    }

    table.feature_dim =
        table.examples.empty() ? 0 : static_cast<int>(table.examples.front().x.size());
    return table;
}

std::vector<Series> load_series_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    int numeric_cols = 0;
    bool has_entity = false;
    bool has_ts = false;
    for (const auto& [name, role] : schema.columns) {
        if (role == ColumnRole::feature_numeric) ++numeric_cols;
        if (role == ColumnRole::entity_id) has_entity = true;
        if (role == ColumnRole::timestamp) has_ts = true;
    }
    if (numeric_cols != 1 || !has_entity || !has_ts) {
        throw ConfigError("series schema needs entity_id, timestamp and exactly one "
                          "feature_numeric column");
    }
    CsvTable table = load_csv_table(path, schema);
    // group by entity in first-appearance order, sort by timestamp within
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> grouped;
    for (std::size_t i = 0; i < table.examples.size(); ++i) {
        const std::string& ent = table.entity[i];
        if (grouped.find(ent) == grouped.end()) order.push_back(ent);
        grouped[ent].emplace_back(table.timestamp[i], table.examples[i].x.front());
    }
    std::vector<Series> out;
    out.reserve(order.size());
    for (const std::string& ent : order) {
        auto& pts = grouped[ent];
        std::stable_sort(pts.begin(), pts.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Series s;
        s.entity = ent;
        s.values.reserve(pts.size());
        for (const auto& [ts, v] : pts) s.values.push_back(v);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Top-level builder
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path require_file(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) {
        throw ConfigError("missing data file: " + p.string());
    }
    return p;
}

std::vector<PhaseDataset> build_rotmnist(const StreamSpec& spec,
                                         const std::filesystem::path& data_root) {
    const std::filesystem::path dir = data_root / "rotmnist";
    const std::filesystem::path image_path = require_file(dir / "train-images-idx3-ubyte");
    const std::filesystem::path label_path = require_file(dir / "train-labels-idx1-ubyte");
    const LabelledImages raw = load_idx_pair(image_path, label_path);
    Rng rot_rng(derive_seed(spec.seed, 1));
    const auto rotated = rotate_dataset(raw.images.images, raw.images.rows, raw.images.cols,
                                        rot_rng);
    const bool recon = spec.task == TaskChoice::reconstruction;
    const int dim = raw.images.rows * raw.images.cols;
    const TaskKind task = recon ? TaskKind::reconstruction(dim) : TaskKind::classification(10);
    std::vector<Example> examples;
    examples.reserve(rotated.size());
    for (std::size_t i = 0; i < rotated.size(); ++i) {
        Example e;
        e.x = rotated[i];
        e.label = raw.labels[i];
        if (recon) e.target = e.x;
        examples.push_back(std::move(e));
    }
    const auto pairs = default_digit_pairs();
    if (spec.num_phases != static_cast<int>(pairs.size())) {
        throw ConfigError("rotmnist digits_pairs uses exactly " + std::to_string(pairs.size()) +
                          " phases");
    }
    // label needed for the pair split even in reconstruction mode
    return split_label_pairs(examples, pairs, task, spec.val_fraction);
}

std::vector<PhaseDataset> build_electricity(const StreamSpec& spec,
                                            const std::filesystem::path& data_root) {
    const std::filesystem::path dir = data_root / "electricity";
    const CsvSchema schema = load_schema(require_file(dir / "schema.conf"));
    std::vector<Series> series = load_series_csv(require_file(dir / "data.csv"), schema);
    for (Series& s : series) zscore_normalize(s, 1.0 - spec.val_fraction);
    const TaskKind task = TaskKind::forecasting(1);

    if (spec.split == SplitId::meters) {
        std::vector<Example> examples;
        for (const Series& s : series) {
            const int group = hash_group(s.entity, spec.num_phases);
            std::vector<Example> ws = make_windows(std::span<const Series>(&s, 1), spec.window_len);
            for (Example& e : ws) {
                e.phase_origin = group; // temporary: group id consumed by split_group
                examples.push_back(std::move(e));
            }
        }
        return split_group(
            examples, [](const Example& e) { return e.phase_origin; }, spec.num_phases, task,
            spec.val_fraction);
    }

    // time split: order windows globally by their end position
    std::vector<std::pair<std::size_t, Example>> keyed;
    for (const Series& s : series) {
        std::vector<Example> ws = make_windows(std::span<const Series>(&s, 1), spec.window_len);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            keyed.emplace_back(i + static_cast<std::size_t>(spec.window_len), std::move(ws[i]));
        }
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Example> examples;
    examples.reserve(keyed.size());
    for (auto& [key, e] : keyed) examples.push_back(std::move(e));
    return split_time(examples, spec.num_phases, task, spec.val_fraction);
}

std::vector<PhaseDataset> build_airlines(const StreamSpec& spec,
                                         const std::filesystem::path& data_root) {
    const std::filesystem::path dir = data_root / "airlines";
    const CsvSchema schema = load_schema(require_file(dir / "schema.conf"));
    CsvTable table = load_csv_table(require_file(dir / "data.csv"), schema);
    const TaskKind task = TaskKind::classification(2);

    if (spec.split == SplitId::airline_group) {
        if (table.entity.size() != table.examples.size()) {
            throw ConfigError("airlines airline_group needs an entity_id (carrier) column");
        }
        for (std::size_t i = 0; i < table.examples.size(); ++i) {
            table.examples[i].phase_origin = hash_group(table.entity[i], spec.num_phases);
        }
        return split_group(
            table.examples, [](const Example& e) { return e.phase_origin; }, spec.num_phases, task,
            spec.val_fraction);
    }

    // time split: stable order by timestamp when present, else file order
    if (table.timestamp.size() == table.examples.size()) {
        std::vector<std::size_t> idx(table.examples.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return table.timestamp[a] < table.timestamp[b];
        });
        std::vector<Example> ordered;
        ordered.reserve(idx.size());
        for (std::size_t i : idx) ordered.push_back(std::move(table.examples[i]));
        return split_time(ordered, spec.num_phases, task, spec.val_fraction);
    }
    return split_time(table.examples, spec.num_phases, task, spec.val_fraction);
}

} // namespace

std::vector<PhaseDataset> build_stream(const StreamSpec& spec,
                                       const std::filesystem::path& data_root) {
    validate(spec);
    switch (spec.dataset) {
        case DatasetId::synth: return synth_stream(spec);
        case DatasetId::rotmnist: return build_rotmnist(spec, data_root);
        case DatasetId::electricity: return build_electricity(spec, data_root);
        case DatasetId::airlines: return build_airlines(spec, data_root);
    }
    throw ConfigError("build_stream: unhandled dataset");
}

std::vector<std::filesystem::path> required_data_files(const StreamSpec& spec,
                                                       const std::filesystem::path& data_root) {
    switch (spec.dataset) {
        case DatasetId::synth: return {};
        case DatasetId::rotmnist:
            return {data_root / "rotmnist" / "train-images-idx3-ubyte",
                    data_root / "rotmnist" / "train-labels-idx1-ubyte"};
        case DatasetId::electricity:
            return {data_root / "electricity" / "schema.conf",
                    data_root / "electricity" / "data.csv"};
        case DatasetId::airlines:
            return {data_root / "airlines" / "schema.conf", data_root / "airlines" / "data.csv"};
    }
    return {};
}

} // namespace driftbench
