#pragma once
// Online reassignment of interrupted training tasks to receiver users.
//
// Candidate assignments are real-coded genomes in [0,1]^T (one gene per
// queued task). A generation runs binary tournament -> SBX -> polynomial
// mutation -> merge with parents -> non-dominated sorting -> environmental
// selection, minimising (communication overhead, load-variance fairness loss).

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "fedcross/rng.hpp"

namespace fedcross::migration {

using TaskId = std::uint64_t;
using UserId = std::uint64_t;

struct Task {
    TaskId id = 0;
    UserId origin_user = 0;
    double required_capacity = 1.0;  // bits/s/Hz
    double data_size = 1.0;          // bits remaining
    double progress = 0.0;           // in [0, 1)
    std::uint64_t enqueued_round = 0;

    void validate() const;
};

// FIFO of interrupted tasks; task ids are unique.
class OnlineQueue {
public:
    void push(const Task& task);
    Task pop_front();
    void remove(std::span<const TaskId> ids);

    bool empty() const { return tasks_.empty(); }
    std::size_t size() const { return tasks_.size(); }
    const std::deque<Task>& tasks() const { return tasks_; }
    std::vector<Task> snapshot() const { return {tasks_.begin(), tasks_.end()}; }

private:
    std::deque<Task> tasks_;
};

struct Receiver {
    UserId id = 0;
    double capacity = 0.0;  // Q from the capacity formula, bits/s/Hz
};

using Objectives = std::vector<double>;

struct Individual {
    std::vector<double> genome;
    Objectives objectives;  // empty until evaluated
    std::size_t rank = 0;   // 1 = first front; 0 = unsorted
    double crowding = 0.0;

    bool evaluated() const { return !objectives.empty(); }
};

using Population = std::vector<Individual>;
using Front = std::vector<std::size_t>;

struct Assignment {
    TaskId task = 0;
    std::optional<UserId> receiver;
};

struct AssignmentPlan {
    std::vector<Assignment> mapping;  // queue order
    Objectives objectives;

    std::size_t assigned_count() const;
    std::size_t unassigned_count() const { return mapping.size() - assigned_count(); }
    std::optional<UserId> receiver_of(TaskId task) const;
};

enum class SelectionMode {
    crowding_truncation,  // fill exactly n by crowding distance within the overflowing front
    whole_fronts,         // admit only whole fronts (population may shrink, never below 2)
};

struct GaParams {
    std::size_t pop_size = 50;
    std::size_t t_max = 100;
    double eta_c = 15.0;
    double eta_m = 20.0;
    double p_c = 0.9;
    std::optional<double> p_m;  // default 1/T
    SelectionMode selection = SelectionMode::crowding_truncation;
    std::size_t threads = 1;  // objective evaluation workers

    void validate() const;
};

struct GenerationLog {
    std::size_t gen = 0;
    double best_f1 = 0.0;
    double best_f2 = 0.0;
    std::size_t front1_size = 0;
    std::size_t assigned = 0;
    std::size_t unassigned = 0;
    Objectives elite;  // knee point of the first front
};

struct MigrationResult {
    AssignmentPlan plan;
    Population population;
    std::vector<GenerationLog> log;
};

// Minimisation dominance. Throws std::invalid_argument on a size mismatch.
bool dominates(std::span<const double> a, std::span<const double> b);

// Pool of pop.size() tournament winners (by index into pop), each between two
// distinct contestants. Requires at least 2 individuals, ranks
// and crowding distances to be assigned.
std::vector<std::size_t> binary_tournament(const Population& pop, Rng& rng);

std::pair<std::vector<double>, std::vector<double>> sbx(std::span<const double> parent1,
                                                        std::span<const double> parent2,
                                                        double eta_c, double p_c, Rng& rng);

// Same as sbx() but returns the children before clamping to [0,1].
std::pair<std::vector<double>, std::vector<double>> sbx_unclamped(
    std::span<const double> parent1, std::span<const double> parent2, double eta_c, double p_c,
    Rng& rng);

std::vector<double> polynomial_mutation(std::span<const double> genome, double eta_m,
                                        double p_m, Rng& rng);

// Fronts F1, F2, ... of individual indices; also writes rank into pop.
std::vector<Front> fast_nondominated_sort(Population& pop);

// Front computation on bare objective vectors (row-major, one per point).
std::vector<Front> nondominated_fronts(const std::vector<Objectives>& points);

// Crowding distance of the members of one front (boundary members get +inf).
void assign_crowding(Population& pop, const Front& front);

Population environmental_selection(const Population& parents, const Population& offspring,
                                   std::size_t n,
                                   SelectionMode mode = SelectionMode::crowding_truncation);

// Decodes a genome into a capacity-feasible plan. Receivers are tried in
// ascending capacity order starting at the gene's index and wrapping around.
AssignmentPlan decode(std::span<const double> genome, std::span<const Task> tasks,
                      std::span<const Receiver> receivers);

// Penalty added to f1 for each unassigned task: 10x the slowest possible
// transmission (largest data size over smallest positive capacity).
double unassigned_penalty(std::span<const Task> tasks, std::span<const Receiver> receivers);

Objectives evaluate_objectives(const Individual& individual, std::span<const Task> tasks,
                               std::span<const Receiver> receivers);

// Index (into pop) of the knee point of the first front: minimum sum of
// front-normalised objectives, ties to lower f1 then lower index.
std::size_t knee_point(const Population& pop);

AssignmentPlan assign_tasks(const Population& pop, std::span<const Task> tasks,
                            std::span<const Receiver> receivers);

MigrationResult run_migration(const OnlineQueue& queue, std::span<const Receiver> receivers,
                              const GaParams& params, Rng& rng);

// Baseline: evaluate `budget` uniform random genomes and keep the best f1.
struct RandomSearchResult {
    AssignmentPlan best_plan;
    double best_f1 = 0.0;
};
RandomSearchResult random_search(std::span<const Task> tasks, std::span<const Receiver> receivers,
                                 std::size_t budget, Rng& rng);

}  // namespace fedcross::migration
