// Embeds the engine: searches for a two-function merge_sort with the
// scripted actor and checks the result on held-out inputs.
#include <cstdio>

#include "pacr/pacr.hpp"

int main() {
    using namespace pacr;
    auto task = harness::merge_sort_task();
    auto actor = harness::merge_sort_actor();
    const auto budget = stats::make_budget(stats::BudgetMode::TopDown, 3, 0.1, 0.05, 2);

    auto run = topdown::run_top_down(task.top_down_problem(), actor, budget, 42);
    if (const auto* acc = std::get_if<topdown::Accepted>(&run.outcome)) {
        std::printf("accepted: k=%llu m=%llu\n", static_cast<unsigned long long>(acc->certificate.k),
                    static_cast<unsigned long long>(acc->certificate.m));
        std::printf("%s", dsl::print_program(acc->program).c_str());
        std::printf("held-out error: %g\n", harness::estimate_error(acc->program, acc->entry, task, 1000, 42));
        return 0;
    }
    std::printf("I don't know: %s\n", std::get<topdown::IDontKnow>(run.outcome).reason.c_str());
    return 2;
}
