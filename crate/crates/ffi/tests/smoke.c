#include <stdio.h>
#include <string.h>

#include "qpaug.h"

int main(void) {
    QpaugInstance *inst = NULL;
    QpaugSolution *sol = NULL;
    if (qpaug_generate(1, 30, 12, 0.2, 0.2, 5, &inst) != QPAUG_STATUS_OK) return 1;
    if (qpaug_solve(inst, 0.0, 0, &sol) != QPAUG_STATUS_OK) return 2;
    double r = 1.0;
    if (qpaug_kkt_max_residual(inst, sol, 1, &r) != QPAUG_STATUS_OK || r > 1e-6) return 3;
    double x[12];
    if (qpaug_solution_x(sol, x, 12) != QPAUG_STATUS_OK) return 4;
    if (qpaug_solution_x(sol, x, 3) != QPAUG_STATUS_BUFFER_TOO_SMALL) return 5;
    if (strstr(qpaug_last_error(), "need 12") == NULL) return 6;
    qpaug_solution_free(sol);
    qpaug_instance_free(inst);
    printf("ok %.3e\n", r);
    return 0;
}
