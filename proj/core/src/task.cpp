#include "driftbench/task.hpp"

namespace driftbench {

void validate(const TaskKind& task) {
    if (task.output_dim < 1) {
        throw ConfigError("task: output_dim must be positive");
    }
    if (task.type == TaskType::classification) {
        if (task.num_classes < 2) {
            throw ConfigError("task: classification needs num_classes >= 2");
        }
        if (task.output_dim != task.num_classes) {
            throw ConfigError("task: classification needs output_dim == num_classes");
        }
    }
}

const char* to_string(TaskType t) {
    switch (t) {
        case TaskType::reconstruction: return "reconstruction";
        case TaskType::forecasting: return "forecasting";
        case TaskType::classification: return "classification";
    }
    return "?";
}

const char* to_string(Metric m) {
    return m == Metric::mse ? "mse" : "accuracy";
}

TaskType task_type_from_string(const std::string& s) {
    if (s == "reconstruction") return TaskType::reconstruction;
    if (s == "forecasting") return TaskType::forecasting;
    if (s == "classification") return TaskType::classification;
    throw ConfigError("unknown task type: " + s);
}

Metric metric_from_string(const std::string& s) {
    if (s == "mse") return Metric::mse;
    if (s == "accuracy") return Metric::accuracy;
    throw ConfigError("unknown metric: " + s);
}

} // namespace driftbench
