#pragma once

#include <string>

#include "driftbench/errors.hpp"

namespace driftbench {

enum class TaskType { reconstruction, forecasting, classification };

// Task descriptor shared by losses, metrics and stream builders.
// Classification trains with softmax cross-entropy over `num_classes` logits;
// reconstruction and forecasting train with a unit-variance Gaussian
// likelihood, i.e. half squared error per example.
struct TaskKind {
    TaskType type = TaskType::classification;
    int num_classes = 0; // classification only
    int output_dim = 0;

    static TaskKind classification(int classes) {
        return TaskKind{TaskType::classification, classes, classes};
    }
    static TaskKind reconstruction(int dim) {
        return TaskKind{TaskType::reconstruction, 0, dim};
    }
    static TaskKind forecasting(int dim = 1) {
        return TaskKind{TaskType::forecasting, 0, dim};
    }
};

// Throws ConfigError when the descriptor is inconsistent
// (classification needs num_classes >= 2 and output_dim == num_classes).
void validate(const TaskKind& task);

enum class Metric { mse, accuracy };

inline bool higher_is_better(Metric m) { return m == Metric::accuracy; }

// accuracy for classification, mse otherwise.
inline Metric default_metric(const TaskKind& task) {
    return task.type == TaskType::classification ? Metric::accuracy : Metric::mse;
}

const char* to_string(TaskType t);
const char* to_string(Metric m);
TaskType task_type_from_string(const std::string& s);
Metric metric_from_string(const std::string& s);

} // namespace driftbench
