#include <stdio.h>
#include <string.h>

#include "mssc.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        MsscStatus s_ = (call);                                              \
        if (s_ != MSSC_STATUS_OK) {                                          \
            const char *m_ = mssc_last_error_message();                      \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, m_ ? m_ : ""); \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    const double pts[] = {0, 0, 1, 0, 50, 50, 50, 51};
    MsscDataset *ds = NULL;
    MsscResult *res = NULL;
    double f = -1;
    char *json = NULL;

    CHECK(mssc_dataset_new(pts, 4, 2, &ds));
    CHECK(mssc_run(ds, "{\"algorithm\": \"big-means\", \"s\": 4, \"max_samples\": 5}", 2, 1, &res));
    CHECK(mssc_result_objective(res, &f));
    CHECK(mssc_result_to_json(res, true, &json));
    printf("%s %.3f %s\n", mssc_version(), f, json);

    if (mssc_run(ds, "{\"algorithm\": \"kmeanspp\"}", 9, 1, &res) != MSSC_STATUS_INVALID_ARGUMENT) {
        fprintf(stderr, "expected MSSC_STATUS_INVALID_ARGUMENT\n");
        return 1;
    }
    if (strlen(mssc_last_error_message()) == 0) return 1;

    mssc_string_free(json);
    mssc_result_free(res);
    mssc_dataset_free(ds);
    return f == 1.0 ? 0 : 2;
}
