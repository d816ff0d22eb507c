#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <set>

#include "driftbench/errors.hpp"
#include "driftbench/streams.hpp"

using namespace driftbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("driftbench_streams_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

Example tagged(double tag, int label) {
    Example e;
    e.x = {tag, 0.0};
    e.label = label;
    return e;
}

} // namespace

TEST_CASE("idx: hand-built single all-white image loads as ones") {
    const fs::path dir = temp_dir();
    std::vector<unsigned char> bytes;
    push_be32(bytes, 0x00000803u);
    push_be32(bytes, 1); // one image
    push_be32(bytes, 2);
    push_be32(bytes, 2);
    for (int i = 0; i < 4; ++i) bytes.push_back(255);
    write_bytes(dir / "img", bytes);
    const IdxImages imgs = load_idx_images(dir / "img");
    CHECK(imgs.rows == 2);
    CHECK(imgs.cols == 2);
    REQUIRE(imgs.images.size() == 1);
    for (double v : imgs.images[0]) CHECK(v == 1.0);
}

TEST_CASE("idx: bad magic is rejected naming the offset") {
    const fs::path dir = temp_dir();
    std::vector<unsigned char> bytes;
    push_be32(bytes, 0x00000802u);
    push_be32(bytes, 0);
    push_be32(bytes, 2);
    push_be32(bytes, 2);
    write_bytes(dir / "img", bytes);
    CHECK_THROWS_WITH_AS((void)load_idx_images(dir / "img"),
                         doctest::Contains("offset 0"), DataFormatError);
}

TEST_CASE("idx: truncated image data is rejected") {
    const fs::path dir = temp_dir();
    std::vector<unsigned char> bytes;
    push_be32(bytes, 0x00000803u);
    push_be32(bytes, 1);
    push_be32(bytes, 2);
    push_be32(bytes, 2);
    bytes.push_back(0); // only 1 of 4 pixels
    write_bytes(dir / "img", bytes);
    CHECK_THROWS_AS((void)load_idx_images(dir / "img"), DataFormatError);
}

TEST_CASE("idx: image/label count mismatch is rejected") {
    const fs::path dir = temp_dir();
    IdxImages imgs;
    imgs.rows = 2;
    imgs.cols = 2;
    imgs.images = {std::vector<double>(4, 0.5), std::vector<double>(4, 0.25)};
    write_idx_images(dir / "img", imgs);
    const std::vector<int> labels{1, 2, 3};
    write_idx_labels(dir / "lab", labels);
    CHECK_THROWS_WITH_AS((void)load_idx_pair(dir / "img", dir / "lab"),
                         doctest::Contains("mismatch"), DataFormatError);
}

TEST_CASE("idx: ten images round-trip bit-exactly") {
    const fs::path dir = temp_dir();
    Rng rng(5);
    IdxImages imgs;
    imgs.rows = 4;
    imgs.cols = 3;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> img(12);
        // quantized values so the byte round trip is exact
        for (double& v : img) v = static_cast<double>(rng.below(256)) / 255.0;
        imgs.images.push_back(std::move(img));
        labels.push_back(static_cast<int>(rng.below(10)));
    }
    write_idx_images(dir / "img", imgs);
    write_idx_labels(dir / "lab", labels);
    const LabelledImages back = load_idx_pair(dir / "img", dir / "lab");
    REQUIRE(back.images.images.size() == 10);
    CHECK(back.labels == labels);
    for (int i = 0; i < 10; ++i) {
        for (int p = 0; p < 12; ++p) {
            CHECK(back.images.images[i][p] == imgs.images[i][p]);
        }
    }
}

TEST_CASE("rotate: zero angle is the identity") {
    Rng rng(9);
    std::vector<double> img(49);
    for (double& v : img) v = rng.uniform();
    const auto out = rotate_image(img, 7, 7, 0.0);
    for (int i = 0; i < 49; ++i) CHECK(out[i] == doctest::Approx(img[i]).epsilon(1e-12));
}

TEST_CASE("rotate: 180 degrees equals the index-reversed grid") {
    std::vector<double> img(25, 0.0);
    img[1] = 0.3;
    img[7] = 0.9;
    img[13] = 0.5; // asymmetric content
    const auto out = rotate_image(img, 5, 5, 3.14159265358979323846);
    for (int i = 0; i < 25; ++i) {
        CHECK(out[i] == doctest::Approx(img[24 - i]).epsilon(1e-6));
    }
}

TEST_CASE("rotate: interior blobs keep their mass within 2 percent") {
    // gaussian blob well inside the frame
    const int n = 21;
    std::vector<double> img(static_cast<std::size_t>(n) * n, 0.0);
    const double c = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r) {
        for (int col = 0; col < n; ++col) {
            const double d2 = (r - c) * (r - c) + (col - c) * (col - c);
            img[static_cast<std::size_t>(r) * n + col] = std::exp(-d2 / 8.0);
        }
    }
    double mass = 0.0;
    for (double v : img) mass += v;
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        const double angle = rng.uniform(-0.8, 0.8);
        const auto out = rotate_image(img, n, n, angle);
        double out_mass = 0.0;
        for (double v : out) out_mass += v;
        CHECK(std::abs(out_mass - mass) / mass <= 0.02);
    }
}

TEST_CASE("split_label_pairs: ten labels make five phases of two") {
    std::vector<Example> examples;
    for (int l = 0; l < 10; ++l) examples.push_back(tagged(double(l), l));
    const auto pairs = default_digit_pairs();
    const auto phases =
        split_label_pairs(examples, pairs, TaskKind::classification(10), 0.5);
    REQUIRE(phases.size() == 5);
    for (const PhaseDataset& p : phases) {
        CHECK(p.train.size() + p.val.size() == 2);
    }
    // phase 1 holds only labels {0,1}
    for (const Example& e : phases[0].train) CHECK((e.label == 0 || e.label == 1));
    for (const Example& e : phases[0].val) CHECK((e.label == 0 || e.label == 1));
}

TEST_CASE("split_label_pairs: overlapping pairs are rejected") {
    std::vector<Example> examples{tagged(0, 0), tagged(1, 1)};
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {1, 2}};
    CHECK_THROWS_AS(
        (void)split_label_pairs(examples, pairs, TaskKind::classification(10), 0.5),
        ConfigError);
}

TEST_CASE("split_label_pairs: an empty pair bucket is rejected") {
    std::vector<Example> examples{tagged(0, 0), tagged(1, 1), tagged(2, 2), tagged(3, 3)};
    const std::vector<std::pair<int, int>> pairs{{0, 1}, {2, 3}, {4, 5}};
    CHECK_THROWS_AS(
        (void)split_label_pairs(examples, pairs, TaskKind::classification(10), 0.5),
        ConfigError);
}

TEST_CASE("split_time: even and uneven slice sizes") {
    const TaskKind task = TaskKind::classification(2);
    std::vector<Example> examples;
    for (int i = 0; i < 100; ++i) examples.push_back(tagged(double(i), i % 2));
    auto phases = split_time(examples, 5, task, 0.2);
    REQUIRE(phases.size() == 5);
    for (const auto& p : phases) CHECK(p.train.size() + p.val.size() == 20);

    examples.push_back(tagged(100.0, 0));
    phases = split_time(examples, 5, task, 0.2);
    CHECK(phases[0].train.size() + phases[0].val.size() == 21);
    for (int t = 1; t < 5; ++t) {
        CHECK(phases[t].train.size() + phases[t].val.size() == 20);
    }
}

TEST_CASE("split_time: boundaries match a brute-force partition") {
    const TaskKind task = TaskKind::classification(2);
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 10 + static_cast<int>(rng.below(200));
        const int T = 2 + static_cast<int>(rng.below(6));
        if (n < 2 * T) continue;
        std::vector<Example> examples;
        for (int i = 0; i < n; ++i) examples.push_back(tagged(double(i), i % 2));
        const auto phases = split_time(examples, T, task, 0.3);

        // brute force: hand out ceil(remaining / remaining_phases) at a time
        std::vector<std::vector<double>> expected;
        int pos = 0, left = n;
        for (int t = 0; t < T; ++t) {
            const int take = (left + (T - t) - 1) / (T - t);
            std::vector<double> slice;
            for (int i = 0; i < take; ++i) slice.push_back(double(pos + i));
            expected.push_back(std::move(slice));
            pos += take;
            left -= take;
        }
        REQUIRE(phases.size() == static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            std::vector<double> got;
            for (const Example& e : phases[t].train) got.push_back(e.x[0]);
            for (const Example& e : phases[t].val) got.push_back(e.x[0]);
            std::sort(got.begin(), got.end());
            CHECK(got == expected[static_cast<std::size_t>(t)]);
        }
    }
}

TEST_CASE("split_time: fewer examples than phases is rejected") {
    std::vector<Example> examples{tagged(0, 0), tagged(1, 1)};
    CHECK_THROWS_AS((void)split_time(examples, 5, TaskKind::classification(2), 0.2),
                    ConfigError);
}

TEST_CASE("split_group: groups map to phases, order preserved") {
    const TaskKind task = TaskKind::classification(2);
    std::vector<Example> examples;
    for (int i = 0; i < 10; ++i) examples.push_back(tagged(double(i), i % 2));
    const auto phases = split_group(
        examples, [](const Example& e) { return static_cast<int>(e.x[0]) % 5 + 1; }, 5, task,
        0.5);
    REQUIRE(phases.size() == 5);
    for (int t = 0; t < 5; ++t) {
        CHECK(phases[t].train.size() + phases[t].val.size() == 2);
        CHECK(phases[t].train[0].x[0] == double(t)); // first member, order kept
    }
}

TEST_CASE("split_group: an empty group is rejected") {
    std::vector<Example> examples{tagged(0, 0), tagged(1, 1)};
    CHECK_THROWS_AS((void)split_group(
                        examples, [](const Example&) { return 1; }, 5,
                        TaskKind::classification(2), 0.5),
                    ConfigError);
}

TEST_CASE("split_group: out-of-range ids are rejected") {
    std::vector<Example> examples{tagged(0, 0)};
    CHECK_THROWS_AS((void)split_group(
                        examples, [](const Example&) { return 7; }, 5,
                        TaskKind::classification(2), 0.5),
                    ConfigError);
}

TEST_CASE("hash_group: pure function of the entity key") {
    for (const char* key : {"meter_001", "AA", "carrier-9", ""}) {
        const int g1 = hash_group(key, 5);
        const int g2 = hash_group(key, 5);
        CHECK(g1 == g2);
        CHECK(g1 >= 1);
        CHECK(g1 <= 5);
    }
}

TEST_CASE("make_windows: window and boundary counts") {
    Series s;
    s.entity = "e";
    for (int i = 0; i < 100; ++i) s.values.push_back(double(i));
    auto ws = make_windows(std::span<const Series>(&s, 1), 96);
    CHECK(ws.size() == 4);
    // exact content on the ramp
    CHECK(ws[0].x.front() == 0.0);
    CHECK(ws[0].x.back() == 95.0);
    CHECK(ws[0].target[0] == 96.0);
    CHECK(ws[3].target[0] == 99.0);

    s.values.resize(96);
    ws = make_windows(std::span<const Series>(&s, 1), 96);
    CHECK(ws.empty());
}

TEST_CASE("make_windows: total count follows the summation law") {
    Rng rng(8);
    std::vector<Series> all;
    std::size_t expected = 0;
    const int w = 10;
    for (int i = 0; i < 12; ++i) {
        Series s;
        s.entity = "e" + std::to_string(i);
        const std::size_t len = rng.below(30);
        for (std::size_t j = 0; j < len; ++j) s.values.push_back(rng.normal());
        expected += len > static_cast<std::size_t>(w) ? len - static_cast<std::size_t>(w) : 0;
        all.push_back(std::move(s));
    }
    CHECK(make_windows(all, w).size() == expected);
}

TEST_CASE("zscore: constant series collapse to zeros") {
    Series s;
    s.entity = "c";
    s.values.assign(50, 3.25);
    zscore_normalize(s, 0.8);
    for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("zscore: train-span statistics only") {
    Series s;
    s.entity = "e";
    // train span (first 8 of 10): mean 0, population sd 1 after scaling
    s.values = {-1, 1, -1, 1, -1, 1, -1, 1, 100, -100};
    zscore_normalize(s, 0.8);
    for (int i = 0; i < 8; ++i) CHECK(std::abs(s.values[static_cast<std::size_t>(i)]) ==
                                      doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.values[8] == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("synth_pairs: phase 1 holds only the first class pair") {
    StreamSpec spec; // defaults: synth_pairs, 5 phases
    const auto phases = synth_stream(spec);
    REQUIRE(phases.size() == 5);
    for (const Example& e : phases[0].train) CHECK((e.label == 0 || e.label == 1));
    for (const Example& e : phases[0].val) CHECK((e.label == 0 || e.label == 1));
    for (const Example& e : phases[4].train) CHECK((e.label == 8 || e.label == 9));
    CHECK(phases[0].task.num_classes == 10);
}

TEST_CASE("synth_pairs: identical specs give bit-identical streams") {
    StreamSpec spec;
    spec.seed = 321;
    const auto a = synth_stream(spec);
    const auto b = synth_stream(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        REQUIRE(a[t].train.size() == b[t].train.size());
        for (std::size_t i = 0; i < a[t].train.size(); ++i) {
            CHECK(a[t].train[i].label == b[t].train[i].label);
            CHECK(a[t].train[i].x == b[t].train[i].x);
        }
    }
}

TEST_CASE("synth_pairs: nearest-mean Bayes accuracy beats 0.99 at 6 sigma") {
    StreamSpec spec;
    spec.separation = 6.0;
    const GaussianMixture mix = synth_pairs_mixture(spec);
    REQUIRE(mix.means.size() == 10);
    // fresh Monte Carlo from the known generative model, phase-1 classes
    Rng rng(987654);
    int correct = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        const int cls = i % 2;
        std::vector<double> x(mix.means[0].size());
        for (std::size_t d = 0; d < x.size(); ++d) {
            x[d] = mix.means[static_cast<std::size_t>(cls)][d] + rng.normal();
        }
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) {
            d0 += (x[d] - mix.means[0][d]) * (x[d] - mix.means[0][d]);
            d1 += (x[d] - mix.means[1][d]) * (x[d] - mix.means[1][d]);
        }
        const int pred = d0 <= d1 ? 0 : 1;
        if (pred == cls) ++correct;
    }
    CHECK(static_cast<double>(correct) / trials >= 0.99);
}

TEST_CASE("synth_drift: zero drift keeps all phases identically distributed") {
    StreamSpec spec;
    spec.split = SplitId::synth_drift;
    spec.drift_step = 0.0;
    spec.examples_per_phase = 2000;
    const auto phases = synth_stream(spec);
    // class-0 sample means of first and last phase agree within MC noise
    std::vector<double> m1(16, 0.0), m5(16, 0.0);
    int n1 = 0, n5 = 0;
    for (const Example& e : phases[0].train) {
        if (e.label != 0) continue;
        for (int d = 0; d < 16; ++d) m1[static_cast<std::size_t>(d)] += e.x[static_cast<std::size_t>(d)];
        ++n1;
    }
    for (const Example& e : phases[4].train) {
        if (e.label != 0) continue;
        for (int d = 0; d < 16; ++d) m5[static_cast<std::size_t>(d)] += e.x[static_cast<std::size_t>(d)];
        ++n5;
    }
    for (int d = 0; d < 16; ++d) {
        CHECK(std::abs(m1[static_cast<std::size_t>(d)] / n1 - m5[static_cast<std::size_t>(d)] / n5) <
              0.2); // ~5 sigma of the mean difference
    }
    CHECK(phases[0].task.num_classes == 2);
}

TEST_CASE("splits: phases partition the input and respect the val fraction") {
    const TaskKind task = TaskKind::classification(2);
    std::vector<Example> examples;
    for (int i = 0; i < 137; ++i) examples.push_back(tagged(double(i), i % 2));
    const auto phases = split_time(examples, 5, task, 0.2);
    std::multiset<double> seen;
    for (const PhaseDataset& p : phases) {
        std::set<double> train_keys, val_keys;
        for (const Example& e : p.train) {
            seen.insert(e.x[0]);
            train_keys.insert(e.x[0]);
        }
        for (const Example& e : p.val) {
            seen.insert(e.x[0]);
            val_keys.insert(e.x[0]);
        }
        // train/val disjoint
        for (double k : val_keys) CHECK(train_keys.count(k) == 0);
        // val fraction within one example
        const double n = static_cast<double>(p.train.size() + p.val.size());
        CHECK(std::abs(static_cast<double>(p.val.size()) - 0.2 * n) <= 1.0);
        // examples are stamped with their phase
        for (const Example& e : p.train) CHECK(e.phase_origin == p.phase_id);
    }
    CHECK(seen.size() == 137); // no loss, no duplication
    std::multiset<double> expected;
    for (int i = 0; i < 137; ++i) expected.insert(double(i));
    CHECK(seen == expected);
}

TEST_CASE("stream spec: serialize/parse round trip") {
    StreamSpec spec;
    spec.dataset = DatasetId::synth;
    spec.split = SplitId::synth_drift;
    spec.num_phases = 7;
    spec.val_fraction = 0.25;
    spec.seed = 991;
    spec.examples_per_phase = 222;
    spec.separation = 4.5;
    spec.drift_step = 0.125;
    const StreamSpec back = parse_stream_spec(serialize(spec));
    CHECK(back.dataset == spec.dataset);
    CHECK(back.split == spec.split);
    CHECK(back.num_phases == spec.num_phases);
    CHECK(back.val_fraction == spec.val_fraction);
    CHECK(back.seed == spec.seed);
    CHECK(back.examples_per_phase == spec.examples_per_phase);
    CHECK(back.separation == spec.separation);
    CHECK(back.drift_step == spec.drift_step);
}

TEST_CASE("stream spec: unknown keys and bad scenarios are rejected") {
    CHECK_THROWS_AS((void)parse_stream_spec("nonsense = 1\n"), ConfigError);
    CHECK_THROWS_AS((void)spec_from_scenario("synth"), ConfigError);
    CHECK_THROWS_AS((void)spec_from_scenario("rotmnist.time"), ConfigError);
    const StreamSpec s = spec_from_scenario("synth.synth_pairs");
    CHECK(s.split == SplitId::synth_pairs);
    CHECK(scenario_name(s) == "synth.synth_pairs");
}

TEST_CASE("csv: two-row fixture parses to exact vectors") {
    const fs::path dir = temp_dir();
    {
        std::ofstream csv(dir / "data.csv");
        csv << "carrier,dow,duration,delayed\n";
        csv << "AA,3,120.5,1\n";
        csv << "UA,5,90.25,0\n";
    }
    {
        std::ofstream sc(dir / "schema.conf");
        sc << "carrier = feature_categorical\n";
        sc << "dow = feature_numeric\n";
        sc << "duration = feature_numeric\n";
        sc << "delayed = label\n";
    }
    const CsvSchema schema = load_schema(dir / "schema.conf");
    const CsvTable table = load_csv_table(dir / "data.csv", schema);
    REQUIRE(table.examples.size() == 2);
    // carrier vocab: AA and UA both appear once; ties by first occurrence
    const Vocabulary& vocab = table.vocabularies.at("carrier");
    CHECK(vocab.size == 3);
    CHECK(vocab.lookup("AA") == 1);
    CHECK(vocab.lookup("UA") == 2);
    // row 1: one-hot(AA)=(0,1,0) then dow=3, duration=120.5
    const std::vector<double> expect0{0, 1, 0, 3.0, 120.5};
    const std::vector<double> expect1{0, 0, 1, 5.0, 90.25};
    CHECK(table.examples[0].x == expect0);
    CHECK(table.examples[1].x == expect1);
    CHECK(table.examples[0].label == 1);
    CHECK(table.examples[1].label == 0);
}

TEST_CASE("csv: unknown categories map to the reserved index") {
    const fs::path dir = temp_dir();
    {
        std::ofstream csv(dir / "data.csv");
        csv << "carrier,delayed\nZZ,0\n";
    }
    CsvSchema schema;
    schema.columns = {{"carrier", ColumnRole::feature_categorical},
                      {"delayed", ColumnRole::label}};
    Vocabulary fixed;
    fixed.index = {{"AA", 1}, {"UA", 2}};
    fixed.size = 3;
    std::map<std::string, Vocabulary> vocabs{{"carrier", fixed}};
    const CsvTable table = load_csv_table(dir / "data.csv", schema, &vocabs);
    const std::vector<double> expect{1, 0, 0}; // unknown -> slot 0
    CHECK(table.examples[0].x == expect);
}

TEST_CASE("csv: vocabulary round-trips through persistence") {
    const fs::path dir = temp_dir();
    Vocabulary vocab;
    vocab.index = {{"AA", 1}, {"B6", 3}, {"UA", 2}};
    vocab.size = 4;
    save_vocabulary(dir / "vocab.tsv", vocab);
    const Vocabulary back = load_vocabulary(dir / "vocab.tsv");
    CHECK(back.size == vocab.size);
    CHECK(back.index == vocab.index);
}

TEST_CASE("csv: missing columns and unparsable cells name their position") {
    const fs::path dir = temp_dir();
    {
        std::ofstream csv(dir / "data.csv");
        csv << "a,b\n1,2\n";
    }
    CsvSchema schema;
    schema.columns = {{"missing", ColumnRole::feature_numeric}};
    CHECK_THROWS_WITH_AS((void)load_csv_table(dir / "data.csv", schema),
                         doctest::Contains("missing"), DataFormatError);

    {
        std::ofstream csv(dir / "data2.csv");
        csv << "a,b\n1,2\nx,4\n";
    }
    CsvSchema schema2;
    schema2.columns = {{"a", ColumnRole::feature_numeric}, {"b", ColumnRole::feature_numeric}};
    CHECK_THROWS_WITH_AS((void)load_csv_table(dir / "data2.csv", schema2),
                         doctest::Contains("row 3"), DataFormatError);
}

TEST_CASE("csv: series extraction sorts by timestamp within entity") {
    const fs::path dir = temp_dir();
    {
        std::ofstream csv(dir / "data.csv");
        csv << "meter,ts,load\n";
        csv << "m1,2,20\n";
        csv << "m2,1,5\n";
        csv << "m1,1,10\n";
        csv << "m1,3,30\n";
        csv << "m2,2,6\n";
    }
    CsvSchema schema;
    schema.columns = {{"meter", ColumnRole::entity_id},
                      {"ts", ColumnRole::timestamp},
                      {"load", ColumnRole::feature_numeric}};
    const auto series = load_series_csv(dir / "data.csv", schema);
    REQUIRE(series.size() == 2);
    CHECK(series[0].entity == "m1"); // first appearance order
    CHECK(series[0].values == std::vector<double>{10, 20, 30});
    CHECK(series[1].values == std::vector<double>{5, 6});
}

TEST_CASE("build_stream: synthetic scenarios need no data root") {
    StreamSpec spec;
    const auto phases = build_stream(spec);
    CHECK(phases.size() == 5);
}

TEST_CASE("build_stream: missing real data names the path") {
    StreamSpec spec;
    spec.dataset = DatasetId::rotmnist;
    spec.split = SplitId::digits_pairs;
    const fs::path root = temp_dir();
    CHECK_THROWS_WITH_AS((void)build_stream(spec, root),
                         doctest::Contains("train-images-idx3-ubyte"), ConfigError);
}

TEST_CASE("stream spec: incompatible dataset/split combinations are rejected") {
    StreamSpec spec;
    spec.dataset = DatasetId::rotmnist;
    spec.split = SplitId::time;
    CHECK_THROWS_AS(validate(spec), ConfigError);
}
