#include <math.h>
#include <stdio.h>

#include "curvest.h"

#define CHECK(cond)                                         \
    do {                                                    \
        if (!(cond)) {                                      \
            fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); \
            return 1;                                       \
        }                                                   \
    } while (0)

int main(void) {
    double kappa[4] = {1.0, 2.0, 3.0, 4.0};
    double s = 0.0;
    CHECK(curvest_sigma(kappa, 4, 2, &s) == CURVEST_STATUS_OK);
    CHECK(fabs(s - 35.0) < 1e-12);

    double r = 0.0;
    int32_t degenerate = -1;
    CHECK(curvest_sphere_solve(3.0, -3.0, 0.5, 2.0, 3, 2, &r, &degenerate) == CURVEST_STATUS_OK);
    CHECK(fabs(r - 1.0) < 1e-10 && degenerate == 0);
    CHECK(curvest_sphere_solve(100.0, 0.0, 0.5, 0.6, 3, 2, &r, &degenerate) == CURVEST_STATUS_NO_ROOT);
    char msg[256];
    CHECK(curvest_last_error(msg, sizeof msg) > 0);

    size_t dims[1] = {4};
    CurvestSweep *sweep = NULL;
    CHECK(curvest_sweep_run("schur", 3, 20, dims, 1, &sweep) == CURVEST_STATUS_OK);
    size_t rows = 0, violations = 1;
    CHECK(curvest_sweep_counts(sweep, &rows, &violations) == CURVEST_STATUS_OK);
    CHECK(rows == 160 && violations == 0);
    curvest_sweep_free(sweep);

    CurvestSolver *solver = NULL;
    const char *problem = "{\"n\": 2, \"h\": 0.25, \"boundary\": {\"preset\": \"quadratic\"},"
                          " \"f\": {\"preset\": \"constant\", \"value\": 2}}";
    CHECK(curvest_solver_new(problem, &solver) == CURVEST_STATUS_OK);
    size_t len = 0;
    CHECK(curvest_solver_len(solver, &len) == CURVEST_STATUS_OK && len == 25);
    double residual = 1.0;
    CHECK(curvest_solver_solve(solver, 0, 0.0, &residual) == CURVEST_STATUS_OK && residual < 1e-10);
    double values[25], points[50];
    CHECK(curvest_solver_values(solver, values, points, len) == CURVEST_STATUS_OK);
    for (size_t i = 0; i < len; i++) {
        double x = points[2 * i], y = points[2 * i + 1];
        CHECK(fabs(values[i] - 0.5 * (x * x + y * y)) < 1e-8);
    }
    curvest_solver_free(solver);
    puts("ok");
    return 0;
}
