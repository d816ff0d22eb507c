#include "driftbench/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace driftbench {

const char* to_string(Method m) {
    return m == Method::seqft ? "seqft" : "replay";
}

Method method_from_string(const std::string& s) {
    if (s == "seqft") return Method::seqft;
    if (s == "replay") return Method::replay;
    throw ConfigError("unknown method: " + s);
}

double empirical_risk(const ModelState& model, std::span<const Example> examples,
                      const TaskKind& task) {
    if (examples.empty()) throw ConfigError("empirical_risk: empty dataset");
    return batch_loss(model, examples, task);
}

double evaluate(const ModelState& model, std::span<const Example> examples, const TaskKind& task,
                Metric metric) {
    if (examples.empty()) throw ConfigError("evaluate: empty dataset");
    if (metric == Metric::accuracy && task.type != TaskType::classification) {
        throw ConfigError("evaluate: accuracy requires a classification task");
    }
    if (metric == Metric::mse && task.type == TaskType::classification) {
        throw ConfigError("evaluate: mse is not defined for classification");
    }

    if (metric == Metric::accuracy) {
        std::size_t correct = 0;
        for (const Example& e : examples) {
            const std::vector<double> out = forward_one(model, e.x);
            // ties break to the lowest class index
            std::size_t best = 0;
            for (std::size_t j = 1; j < out.size(); ++j) {
                if (out[j] > out[best]) best = j;
            }
            if (static_cast<int>(best) == e.label) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(examples.size());
    }

    double sum = 0.0;
    std::size_t count = 0;
    for (const Example& e : examples) {
        const std::vector<double> out = forward_one(model, e.x);
        if (out.size() != e.target.size()) throw ConfigError("evaluate: target dimension mismatch");
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double r = out[j] - e.target[j];
            sum += r * r;
        }
        count += out.size();
    }
    return sum / static_cast<double>(count);
}

double forgetting(double init, double final, Metric metric) {
    if (!std::isfinite(init) || !std::isfinite(final)) {
        throw NumericError("forgetting: non-finite input");
    }
    return higher_is_better(metric) ? init - final : final - init;
}

ForgettingStats mean_stddev(std::span<const double> values) {
    ForgettingStats s;
    s.n = values.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n >= 2) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(s.n - 1));
    }
    return s;
}

std::vector<ForgettingGroup> aggregate_forgetting(std::span<const PhaseRecord> records) {
    if (records.empty()) throw ConfigError("aggregate_forgetting: no records");
    std::map<std::tuple<std::string, std::string, Method>, std::pair<Metric, std::vector<double>>>
        groups;
    for (const PhaseRecord& r : records) {
        auto key = std::make_tuple(r.dataset, r.split, r.method);
        auto it = groups.find(key);
        if (it == groups.end()) {
            groups.emplace(key, std::make_pair(r.metric, std::vector<double>{r.forgetting}));
        } else {
            if (it->second.first != r.metric) {
                throw ConfigError("aggregate_forgetting: mixed metrics within group " + r.dataset +
                                  "." + r.split);
            }
            it->second.second.push_back(r.forgetting);
        }
    }
    std::vector<ForgettingGroup> out;
    out.reserve(groups.size());
    for (const auto& [key, val] : groups) {
        ForgettingGroup g;
        g.dataset = std::get<0>(key);
        g.split = std::get<1>(key);
        g.method = std::get<2>(key);
        g.metric = val.first;
        g.stats = mean_stddev(val.second);
        out.push_back(std::move(g));
    }
    return out;
}

} // namespace driftbench
