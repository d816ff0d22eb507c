#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftbench/data.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

enum class DatasetId { rotmnist, electricity, airlines, synth };
enum class SplitId { digits_pairs, time, meters, airline_group, synth_pairs, synth_drift };

const char* to_string(DatasetId d);
const char* to_string(SplitId s);
DatasetId dataset_from_string(const std::string& s);
SplitId split_from_string(const std::string& s);
bool split_compatible(DatasetId d, SplitId s);

// Which objective the stream trains. `automatic` resolves to the scenario's
// default (classification for rotmnist/airlines/synth, forecasting for
// electricity); rotmnist additionally supports reconstruction.
enum class TaskChoice { automatic, classification, reconstruction, forecasting };

const char* to_string(TaskChoice t);
TaskChoice task_choice_from_string(const std::string& s);

// Declarative description of one streaming scenario.
struct StreamSpec {
    DatasetId dataset = DatasetId::synth;
    SplitId split = SplitId::synth_pairs;
    TaskChoice task = TaskChoice::automatic;
    int num_phases = 5;
    double val_fraction = 0.2;
    int window_len = 96; // forecasting
    std::uint64_t seed = 42;
    // synthetic-stream shape
    int examples_per_phase = 640;
    int feature_dim = 16;
    double separation = 6.0; // minimum inter-class mean distance, in noise sigmas
    double drift_step = 0.5; // per-phase mean translation (synth_drift)
};

void validate(const StreamSpec& spec);
std::string scenario_name(const StreamSpec& spec); // dataset.split[.task]
std::string serialize(const StreamSpec& spec);     // "key = value" per line
StreamSpec parse_stream_spec(const std::string& text);
StreamSpec load_stream_spec(const std::filesystem::path& path);
void save_stream_spec(const std::filesystem::path& path, const StreamSpec& spec);

// Parses "dataset.split" or "dataset.split.task" into a StreamSpec seeded
// with defaults.
StreamSpec spec_from_scenario(const std::string& name);

// ---------------------------------------------------------------------------
// IDX binary images (big-endian, magic 0x00000803 images / 0x00000801 labels)
// ---------------------------------------------------------------------------

struct IdxImages {
    int rows = 0;
    int cols = 0;
    std::vector<std::vector<double>> images; // row-major grids, values in [0,1]
};

IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<int> load_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels);

struct LabelledImages {
    IdxImages images;
    std::vector<int> labels;
};

// Loads both files and enforces matching counts.
LabelledImages load_idx_pair(const std::filesystem::path& image_path,
                             const std::filesystem::path& label_path);

// ---------------------------------------------------------------------------
// Rotation
// ---------------------------------------------------------------------------

// Rotates one row-major grid about its center by `angle_rad` (bilinear
// interpolation, out-of-frame pixels 0).
std::vector<double> rotate_image(std::span<const double> image, int rows, int cols,
                                 double angle_rad);

// Per-image angle uniform in +-max_angle_deg, drawn from `rng`.
std::vector<std::vector<double>> rotate_dataset(std::span<const std::vector<double>> images,
                                                int rows, int cols, Rng& rng,
                                                double max_angle_deg = 45.0);

// ---------------------------------------------------------------------------
// Phase splits
// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> default_digit_pairs(); // {0,1} {2,3} {4,5} {6,7} {8,9}

// Phase t holds exactly the examples whose labels fall in pairs[t-1].
// Throws ConfigError on overlapping pairs or an empty bucket.
std::vector<PhaseDataset> split_label_pairs(std::span<const Example> examples,
                                            std::span<const std::pair<int, int>> pairs,
                                            const TaskKind& task, double val_fraction);

// T contiguous, nearly equal slices (sizes differ by at most one, remainder
// to the earliest phases); input order must already be temporal.
std::vector<PhaseDataset> split_time(std::span<const Example> examples, int num_phases,
                                     const TaskKind& task, double val_fraction);

// Phase t holds all examples with group id t (1-based), order preserved.
std::vector<PhaseDataset> split_group(std::span<const Example> examples,
                                      const std::function<int(const Example&)>& group_of,
                                      int num_phases, const TaskKind& task, double val_fraction);

// Deterministic entity-key hash onto groups 1..num_groups (FNV-1a).
int hash_group(const std::string& entity_key, int num_groups);

// ---------------------------------------------------------------------------
// Forecasting series
// ---------------------------------------------------------------------------

struct Series {
    std::string entity;
    std::vector<double> values;
};

// In-place per-entity z-score using statistics from the leading
// train_fraction of the series ("train span"). Zero-variance series are set
// to all zeros.
void zscore_normalize(Series& series, double train_fraction);

// Sliding windows over each entity: x = values[i, i+window_len),
// y = values[i+window_len]. A series of length L yields max(0, L-window_len)
// examples; entities are processed in order.
std::vector<Example> make_windows(std::span<const Series> series, int window_len);

// ---------------------------------------------------------------------------
// Synthetic streams
// ---------------------------------------------------------------------------

// Generative model behind the synthetic scenarios; exposed so tests can
// compute Bayes-optimal baselines against the exact means.
struct GaussianMixture {
    std::vector<std::vector<double>> means; // one per class
    double sigma = 1.0;
};

GaussianMixture synth_pairs_mixture(const StreamSpec& spec);

// synth_pairs: 10-class Gaussian clusters, phases over disjoint class pairs
// (interfering regime). synth_drift: one binary task whose class means
// translate by drift_step per phase (benign regime). Deterministic in seed.
std::vector<PhaseDataset> synth_stream(const StreamSpec& spec);

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

enum class ColumnRole { feature_numeric, feature_categorical, label, timestamp, entity_id };

const char* to_string(ColumnRole r);
ColumnRole column_role_from_string(const std::string& s);

struct CsvSchema {
    std::vector<std::pair<std::string, ColumnRole>> columns; // name -> role
    char delimiter = ',';
    int max_vocab = 64; // per categorical column, including the reserved slot
};

CsvSchema parse_schema(const std::string& text); // "column = role" per line
CsvSchema load_schema(const std::filesystem::path& path);

// Category -> one-hot index map. Index 0 is reserved for unknown values.
struct Vocabulary {
    std::map<std::string, int> index;
    int size = 1; // one-hot width, including the reserved slot
    int lookup(const std::string& token) const;
};

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

struct CsvTable {
    std::vector<Example> examples;                  // encoded features + label
    std::vector<std::string> entity;                // per row; empty if no entity column
    std::vector<double> timestamp;                  // per row; empty if no timestamp column
    std::map<std::string, Vocabulary> vocabularies; // per categorical column
    int feature_dim = 0;
};

// Parses the file against the schema. Numeric columns become reals,
// categorical columns one-hot via a vocabulary built from the data (most
// frequent first, capped at max_vocab; unknown -> index 0). When
// `fixed_vocabularies` is given it is used as-is (inference mode). Errors
// name the 1-based row and column.
CsvTable load_csv_table(const std::filesystem::path& path, const CsvSchema& schema,
                        const std::map<std::string, Vocabulary>* fixed_vocabularies = nullptr);

// Extracts per-entity value sequences (schema needs entity_id, timestamp and
// exactly one feature_numeric column); values sorted by timestamp within each
// entity, entities ordered by first appearance.
std::vector<Series> load_series_csv(const std::filesystem::path& path, const CsvSchema& schema);

// ---------------------------------------------------------------------------
// Top-level builder
// ---------------------------------------------------------------------------

// Materializes a stream description into phase datasets. Synthetic scenarios
// need no data_root; real scenarios resolve files under data_root and throw
// ConfigError naming the missing path.
std::vector<PhaseDataset> build_stream(const StreamSpec& spec,
                                       const std::filesystem::path& data_root = {});

// Files the scenario needs under data_root (empty for synthetic scenarios).
std::vector<std::filesystem::path> required_data_files(const StreamSpec& spec,
                                                       const std::filesystem::path& data_root);

} // namespace driftbench
