#include <math.h>
#include <stdio.h>
#include <string.h>

#include "influence.h"

#define CHECK(cond)                                                      \
    do {                                                                 \
        if (!(cond)) {                                                   \
            const char *e = infl_last_error();                           \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,      \
                    #cond, e ? e : "no error");                          \
            return 1;                                                    \
        }                                                                \
    } while (0)

static const char *SCENARIO =
    "{\"w0\": [0.4, 0.3, 0.35], \"w1\": [0.42, 0.31, 0.37],"
    " \"r1\": [[1, 0.5, 0.2], [0.1, 1, 0.4], [0.3, 0.3, 1]],"
    " \"u\": \"calibrate\", \"horizon\": 3}";

int main(void) {
    struct InflScenario *s = NULL;
    struct InflTrace *t = NULL;
    char *text = NULL;
    int64_t ts = 0;
    double w[3], r[9];

    CHECK(infl_scenario_parse(SCENARIO, &s) == INFL_STATUS_OK);
    CHECK(infl_scenario_size(s) == 3);
    CHECK(infl_simulate(s, 0, &t) == INFL_STATUS_OK);
    CHECK(infl_trace_len(t) == 3);
    CHECK(infl_trace_step(t, 2, &ts, w, r) == INFL_STATUS_OK);
    CHECK(ts == 4 && r[0] == 1.0 && r[4] == 1.0 && r[8] == 1.0);
    CHECK(infl_trace_write(t, INFL_TRACE_FORMAT_STRUCTURED, &text) == INFL_STATUS_OK);
    CHECK(text != NULL && text[0] == '{');
    infl_string_free(text);
    infl_trace_free(t);
    infl_scenario_free(s);

    CHECK(infl_scenario_parse("{", &s) == INFL_STATUS_INVALID_INPUT);
    CHECK(infl_last_error() != NULL);

    double value = 0.0;
    enum InflBranch branch;
    CHECK(infl_update_relationship(0.1, 0.0, 0.5, true, 1e-9, &value, &branch) == INFL_STATUS_OK);
    CHECK(value == 0.0 && branch == INFL_BRANCH_ONE_ZERO);

    double qc = 0.0, flat[2] = {0.72, 0.72};
    CHECK(infl_quality_coefficient(flat, 2, 0.8, &qc) == INFL_STATUS_OK);
    CHECK(fabs(qc - 0.9) <= 1e-12);

    puts("ok");
    return 0;
}
