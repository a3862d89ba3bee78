#include "fedcross/migration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>

#include "fedcross/simd.hpp"

namespace fedcross::migration {

void Task::validate() const {
    if (!(required_capacity > 0.0) || !(data_size > 0.0) || !(progress >= 0.0 && progress < 1.0)) {
        throw std::invalid_argument("Task " + std::to_string(id) +
                                    ": required_capacity and data_size must be > 0, "
                                    "progress in [0,1)");
    }
}

void OnlineQueue::push(const Task& task) {
    task.validate();
    for (const Task& t : tasks_) {
        if (t.id == task.id) {
            throw std::invalid_argument("OnlineQueue: duplicate task id " + std::to_string(task.id));
        }
    }
    tasks_.push_back(task);
}

Task OnlineQueue::pop_front() {
    if (tasks_.empty()) throw std::out_of_range("OnlineQueue: pop from empty queue");
    Task t = tasks_.front();
    tasks_.pop_front();
    return t;
}

void OnlineQueue::remove(std::span<const TaskId> ids) {
    const std::unordered_set<TaskId> drop(ids.begin(), ids.end());
    std::erase_if(tasks_, [&](const Task& t) { return drop.contains(t.id); });
}

std::size_t AssignmentPlan::assigned_count() const {
    return static_cast<std::size_t>(std::count_if(
        mapping.begin(), mapping.end(), [](const Assignment& a) { return a.receiver.has_value(); }));
}

std::optional<UserId> AssignmentPlan::receiver_of(TaskId task) const {
    for (const Assignment& a : mapping) {
        if (a.task == task) return a.receiver;
    }
    return std::nullopt;
}

void GaParams::validate() const {
    if (pop_size < 2) throw std::invalid_argument("GaParams: pop_size must be >= 2");
    if (t_max < 1) throw std::invalid_argument("GaParams: t_max must be >= 1");
    if (!(eta_c > 0.0) || !(eta_m > 0.0)) throw std::invalid_argument("GaParams: eta must be > 0");
    if (!(p_c >= 0.0 && p_c <= 1.0)) throw std::invalid_argument("GaParams: p_c must be in [0,1]");
    if (p_m && !(*p_m >= 0.0 && *p_m <= 1.0)) {
        throw std::invalid_argument("GaParams: p_m must be in [0,1]");
    }
    if (threads < 1) throw std::invalid_argument("GaParams: threads must be >= 1");
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: dimension mismatch");
    bool strictly_better = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) strictly_better = true;
    }
    return strictly_better;
}

std::vector<std::size_t> binary_tournament(const Population& pop, Rng& rng) {
    if (pop.size() < 2) throw std::invalid_argument("binary_tournament: need at least 2 individuals");
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::uniform_int_distribution<std::size_t> other(0, pop.size() - 2);
    std::vector<std::size_t> pool;
    pool.reserve(pop.size());
    for (std::size_t slot = 0; slot < pop.size(); ++slot) {
        const std::size_t i1 = pick(rng);
        std::size_t i2 = other(rng);  // distinct contestant
        if (i2 >= i1) ++i2;
        const Individual& a = pop[i1];
        const Individual& b = pop[i2];
        std::size_t winner = i2;
        if (dominates(a.objectives, b.objectives)) {
            winner = i1;
        } else if (dominates(b.objectives, a.objectives)) {
            winner = i2;
        } else if (a.rank != b.rank) {
            winner = a.rank < b.rank ? i1 : i2;
        } else if (a.crowding != b.crowding) {
            winner = a.crowding > b.crowding ? i1 : i2;
        }
        pool.push_back(winner);
    }
    return pool;
}

std::pair<std::vector<double>, std::vector<double>> sbx_unclamped(
    std::span<const double> parent1, std::span<const double> parent2, double eta_c, double p_c,
    Rng& rng) {
    if (parent1.size() != parent2.size()) throw std::invalid_argument("sbx: genome size mismatch");
    std::vector<double> c1(parent1.begin(), parent1.end());
    std::vector<double> c2(parent2.begin(), parent2.end());
    const double exponent = 1.0 / (eta_c + 1.0);
    for (std::size_t g = 0; g < c1.size(); ++g) {
        const double gate = uniform01(rng);
        const double u = uniform01(rng);
        if (gate >= p_c || std::fabs(parent1[g] - parent2[g]) < 1e-14) continue;
        const double beta =
            u <= 0.5 ? std::pow(2.0 * u, exponent) : std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
        const double p1 = parent1[g];
        const double p2 = parent2[g];
        c1[g] = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2);
        c2[g] = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2);
    }
    return {std::move(c1), std::move(c2)};
}

std::pair<std::vector<double>, std::vector<double>> sbx(std::span<const double> parent1,
                                                        std::span<const double> parent2,
                                                        double eta_c, double p_c, Rng& rng) {
    auto children = sbx_unclamped(parent1, parent2, eta_c, p_c, rng);
    for (double& v : children.first) v = std::clamp(v, 0.0, 1.0);
    for (double& v : children.second) v = std::clamp(v, 0.0, 1.0);
    return children;
}

std::vector<double> polynomial_mutation(std::span<const double> genome, double eta_m,
                                        double p_m, Rng& rng) {
    std::vector<double> out(genome.begin(), genome.end());
    const double power = 1.0 / (eta_m + 1.0);
    for (double& y : out) {
        const double gate = uniform01(rng);
        const double u = uniform01(rng);
        if (gate >= p_m) continue;
        // Bounds are [0, 1], so the distances to them are y and 1 - y.
        const double delta1 = y;
        const double delta2 = 1.0 - y;
        double delta_q;
        if (u < 0.5) {
            const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - delta1, eta_m + 1.0);
            delta_q = std::pow(val, power) - 1.0;
        } else {
            const double val =
                2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - delta2, eta_m + 1.0);
            delta_q = 1.0 - std::pow(val, power);
        }
        y = std::clamp(y + delta_q, 0.0, 1.0);
    }
    return out;
}

std::vector<Front> fast_nondominated_sort(Population& pop) {
    const std::size_t n = pop.size();
    if (n == 0) return {};
    const std::size_t m = pop.front().objectives.size();
    for (const Individual& ind : pop) {
        if (!ind.evaluated()) throw std::invalid_argument("fast_nondominated_sort: unevaluated individual");
        if (ind.objectives.size() != m) throw std::invalid_argument("fast_nondominated_sort: objective size mismatch");
    }

    // Objective-major layout for the dominance kernel.
    std::vector<double> soa(n * m);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < m; ++k) soa[k * n + j] = pop[j].objectives[k];
    }

    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::uint8_t> beats(n), beaten_by(n);
    Front current;
    for (std::size_t i = 0; i < n; ++i) {
        simd::dominance_row(soa, n, m, i, beats, beaten_by);
        for (std::size_t j = 0; j < n; ++j) {
            if (beats[j]) dominated[i].push_back(j);
            domination_count[i] += beaten_by[j];
        }
        if (domination_count[i] == 0) current.push_back(i);
    }

    std::vector<Front> fronts;
    std::size_t rank = 1;
    while (!current.empty()) {
        Front next;
        for (std::size_t i : current) {
            pop[i].rank = rank;
            for (std::size_t j : dominated[i]) {
                if (--domination_count[j] == 0) next.push_back(j);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
        ++rank;
    }
    return fronts;
}

std::vector<Front> nondominated_fronts(const std::vector<Objectives>& points) {
    Population pop(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) pop[i].objectives = points[i];
    return fast_nondominated_sort(pop);
}

void assign_crowding(Population& pop, const Front& front) {
    for (std::size_t i : front) pop[i].crowding = 0.0;
    if (front.empty()) return;
    const std::size_t m = pop[front.front()].objectives.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(front);
    for (std::size_t k = 0; k < m; ++k) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pop[a].objectives[k] < pop[b].objectives[k];
        });
        const double lo = pop[order.front()].objectives[k];
        const double hi = pop[order.back()].objectives[k];
        pop[order.front()].crowding = inf;
        pop[order.back()].crowding = inf;
        if (!(hi > lo)) continue;
        for (std::size_t r = 1; r + 1 < order.size(); ++r) {
            double& c = pop[order[r]].crowding;
            if (std::isinf(c)) continue;
            c += (pop[order[r + 1]].objectives[k] - pop[order[r - 1]].objectives[k]) / (hi - lo);
        }
    }
}

namespace {

void rank_and_crowd(Population& pop) {
    for (const Front& f : fast_nondominated_sort(pop)) assign_crowding(pop, f);
}

}  // namespace

Population environmental_selection(const Population& parents, const Population& offspring,
                                   std::size_t n, SelectionMode mode) {
    if (n < 1) throw std::invalid_argument("environmental_selection: n must be >= 1");
    Population merged;
    merged.reserve(parents.size() + offspring.size());
    merged.insert(merged.end(), parents.begin(), parents.end());
    merged.insert(merged.end(), offspring.begin(), offspring.end());
    if (merged.size() < n) {
        throw std::invalid_argument("environmental_selection: merged population smaller than n");
    }

    const auto fronts = fast_nondominated_sort(merged);
    Population next;
    next.reserve(n);
    for (const Front& front : fronts) {
        const std::size_t room = n - next.size();
        if (front.size() <= room) {
            for (std::size_t i : front) next.push_back(merged[i]);
            if (next.size() == n) break;
            continue;
        }
        if (mode == SelectionMode::whole_fronts) continue;
        assign_crowding(merged, front);
        Front order(front);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return merged[a].crowding > merged[b].crowding;
        });
        for (std::size_t r = 0; r < room; ++r) next.push_back(merged[order[r]]);
        break;
    }
    // Whole-front admission can leave too few individuals for a tournament.
    if (mode == SelectionMode::whole_fronts && next.size() < std::min<std::size_t>(n, 2)) {
        return environmental_selection(parents, offspring, n, SelectionMode::crowding_truncation);
    }
    rank_and_crowd(next);
    return next;
}

double unassigned_penalty(std::span<const Task> tasks, std::span<const Receiver> receivers) {
    double max_size = 0.0;
    for (const Task& t : tasks) max_size = std::max(max_size, t.data_size);
    double min_capacity = std::numeric_limits<double>::infinity();
    for (const Receiver& r : receivers) {
        if (r.capacity > 0.0) min_capacity = std::min(min_capacity, r.capacity);
    }
    if (std::isinf(min_capacity)) min_capacity = 1.0;
    return 10.0 * max_size / min_capacity;
}

AssignmentPlan decode(std::span<const double> genome, std::span<const Task> tasks,
                      std::span<const Receiver> receivers) {
    if (genome.size() != tasks.size()) throw std::invalid_argument("decode: genome/task size mismatch");
    AssignmentPlan plan;
    plan.mapping.reserve(tasks.size());

    std::vector<std::size_t> order(receivers.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (receivers[a].capacity != receivers[b].capacity) {
            return receivers[a].capacity < receivers[b].capacity;
        }
        return receivers[a].id < receivers[b].id;
    });

    const std::size_t r_count = receivers.size();
    std::vector<double> remaining(r_count);
    std::vector<double> load(r_count, 0.0);
    for (std::size_t r = 0; r < r_count; ++r) remaining[r] = receivers[order[r]].capacity;

    const double penalty = unassigned_penalty(tasks, receivers);
    double overhead = 0.0;
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        const Task& task = tasks[j];
        Assignment a{task.id, std::nullopt};
        if (r_count > 0) {
            const double gene = std::clamp(genome[j], 0.0, 1.0);
            const auto start = std::min(static_cast<std::size_t>(gene * static_cast<double>(r_count)),
                                        r_count - 1);
            for (std::size_t step = 0; step < r_count; ++step) {
                const std::size_t r = (start + step) % r_count;
                if (remaining[r] >= task.required_capacity) {
                    const Receiver& recv = receivers[order[r]];
                    remaining[r] -= task.required_capacity;
                    const double time = task.data_size / recv.capacity;
                    load[r] += time;
                    overhead += time;
                    a.receiver = recv.id;
                    break;
                }
            }
        }
        if (!a.receiver) overhead += penalty;
        plan.mapping.push_back(a);
    }

    double fairness = 0.0;
    if (r_count > 0) {
        const double mean = std::accumulate(load.begin(), load.end(), 0.0) / static_cast<double>(r_count);
        for (double l : load) fairness += (l - mean) * (l - mean);
        fairness /= static_cast<double>(r_count);
    }
    plan.objectives = {overhead, fairness};
    return plan;
}

Objectives evaluate_objectives(const Individual& individual, std::span<const Task> tasks,
                               std::span<const Receiver> receivers) {
    if (tasks.empty()) return {0.0, 0.0};
    return decode(individual.genome, tasks, receivers).objectives;
}

std::size_t knee_point(const Population& pop) {
    Front first;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop[i].rank == 1) first.push_back(i);
    }
    if (first.empty()) throw std::invalid_argument("knee_point: population has no ranked first front");
    const std::size_t m = pop[first.front()].objectives.size();
    std::vector<double> lo(m, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
    for (std::size_t i : first) {
        for (std::size_t k = 0; k < m; ++k) {
            lo[k] = std::min(lo[k], pop[i].objectives[k]);
            hi[k] = std::max(hi[k], pop[i].objectives[k]);
        }
    }
    std::size_t best = first.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i : first) {
        double score = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (hi[k] > lo[k]) score += (pop[i].objectives[k] - lo[k]) / (hi[k] - lo[k]);
        }
        const bool better = score < best_score ||
                            (score == best_score && pop[i].objectives[0] < pop[best].objectives[0]);
        if (better) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

AssignmentPlan assign_tasks(const Population& pop, std::span<const Task> tasks,
                            std::span<const Receiver> receivers) {
    if (tasks.empty()) return AssignmentPlan{{}, {0.0, 0.0}};
    return decode(pop[knee_point(pop)].genome, tasks, receivers);
}

namespace {

void evaluate_all(Population& pop, std::size_t begin, std::span<const Task> tasks,
                  std::span<const Receiver> receivers, std::size_t threads) {
    const std::size_t count = pop.size() - begin;
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            pop[i].objectives = evaluate_objectives(pop[i], tasks, receivers);
        }
    };
    if (threads <= 1 || count < 2) {
        work(begin, pop.size());
        return;
    }
    const std::size_t workers = std::min(threads, count);
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(pop.size(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(work, lo, hi);
    }
    for (std::thread& t : pool) t.join();
}

GenerationLog summarize(std::size_t gen, const Population& pop, std::span<const Task> tasks,
                        std::span<const Receiver> receivers) {
    GenerationLog log;
    log.gen = gen;
    log.best_f1 = std::numeric_limits<double>::infinity();
    log.best_f2 = std::numeric_limits<double>::infinity();
    for (const Individual& ind : pop) {
        if (ind.rank != 1) continue;
        ++log.front1_size;
        log.best_f1 = std::min(log.best_f1, ind.objectives[0]);
        log.best_f2 = std::min(log.best_f2, ind.objectives[1]);
    }
    const std::size_t knee = knee_point(pop);
    const AssignmentPlan plan = decode(pop[knee].genome, tasks, receivers);
    log.assigned = plan.assigned_count();
    log.unassigned = plan.unassigned_count();
    log.elite = pop[knee].objectives;
    return log;
}

}  // namespace

MigrationResult run_migration(const OnlineQueue& queue, std::span<const Receiver> receivers,
                              const GaParams& params, Rng& rng) {
    params.validate();
    const std::vector<Task> tasks = queue.snapshot();
    MigrationResult result;
    if (tasks.empty()) {
        result.plan.objectives = {0.0, 0.0};
        return result;
    }
    const std::size_t genes = tasks.size();
    const std::size_t n = params.pop_size;
    const double p_m = params.p_m.value_or(1.0 / static_cast<double>(genes));

    Population pop(n);
    for (Individual& ind : pop) {
        ind.genome.resize(genes);
        for (double& g : ind.genome) g = uniform01(rng);
    }
    evaluate_all(pop, 0, tasks, receivers, params.threads);
    rank_and_crowd(pop);
    result.log.push_back(summarize(0, pop, tasks, receivers));

    for (std::size_t gen = 1; gen <= params.t_max; ++gen) {
        const auto pool = binary_tournament(pop, rng);
        Population offspring;
        offspring.reserve(n);
        for (std::size_t k = 0; offspring.size() < n; k += 2) {
            const Individual& a = pop[pool[k % pool.size()]];
            const Individual& b = pop[pool[(k + 1) % pool.size()]];
            auto [c1, c2] = sbx(a.genome, b.genome, params.eta_c, params.p_c, rng);
            offspring.push_back(Individual{polynomial_mutation(c1, params.eta_m, p_m, rng), {}, 0, 0.0});
            if (offspring.size() < n) {
                offspring.push_back(Individual{polynomial_mutation(c2, params.eta_m, p_m, rng), {}, 0, 0.0});
            }
        }
        evaluate_all(offspring, 0, tasks, receivers, params.threads);
        pop = environmental_selection(pop, offspring, n, params.selection);
        result.log.push_back(summarize(gen, pop, tasks, receivers));
    }

    result.plan = assign_tasks(pop, tasks, receivers);
    result.population = std::move(pop);
    return result;
}

RandomSearchResult random_search(std::span<const Task> tasks, std::span<const Receiver> receivers,
                                 std::size_t budget, Rng& rng) {
    if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
    RandomSearchResult best;
    best.best_f1 = std::numeric_limits<double>::infinity();
    std::vector<double> genome(tasks.size());
    for (std::size_t s = 0; s < budget; ++s) {
        for (double& g : genome) g = uniform01(rng);
        AssignmentPlan plan = decode(genome, tasks, receivers);
        if (plan.objectives[0] < best.best_f1) {
            best.best_f1 = plan.objectives[0];
            best.best_plan = std::move(plan);
        }
    }
    return best;
}

}  // namespace fedcross::migration
