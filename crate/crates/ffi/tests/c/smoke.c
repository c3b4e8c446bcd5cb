#include <stdio.h>
#include <string.h>
#include "nsw.h"

int main(void) {
    /* two agents like goods 0 and 1; three light goods */
    const uint8_t heavy[] = {1, 1, 0, 0, 0, 1, 1, 0, 0, 0};
    NswInstance *inst = NULL;
    if (nsw_instance_new(3, 2, 5, heavy, &inst) != NSW_STATUS_OK) {
        fprintf(stderr, "new: %s\n", nsw_last_error_message());
        return 1;
    }
    NswSolution *sol = NULL;
    if (nsw_solve(inst, 1, &sol) != NSW_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", nsw_last_error_message());
        return 1;
    }
    uint64_t values[2];
    if (nsw_solution_values_x2(sol, values, 2) != NSW_STATUS_OK) return 1;
    printf("%s %llu %llu\n", nsw_solution_product(sol), (unsigned long long)values[0], (unsigned long long)values[1]);
    int ok = strcmp(nsw_solution_product(sol), "36") == 0;
    nsw_solution_free(sol);
    nsw_instance_free(inst);

    if (nsw_instance_new(4, 1, 0, NULL, &inst) != NSW_STATUS_INVALID_INSTANCE) return 1;
    return ok ? 0 : 2;
}
