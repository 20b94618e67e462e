#include <stdio.h>
#include "bruhat_control.h"

int main(void) {
    const char *spec =
        "{\"p\":5,\"precision\":1,\"group\":\"SL2\","
        "\"generators\":[[[\"5\",\"0\"],[\"0\",\"1/5\"]]]}";
    BcAnalysis *a = NULL;
    if (bc_analysis_new(spec, 0, &a) != BC_STATUS_OK) {
        fprintf(stderr, "error: %s\n", bc_last_error_message());
        return 1;
    }
    size_t count = 0, order = 0;
    bc_analysis_control_set_count(a, &count);
    bc_analysis_weyl_subgroup_order(a, &order);
    printf("control sets: %zu, |W(S)|: %zu\n", count, order);
    char *dot = NULL;
    bc_analysis_dot(a, &dot);
    fputs(dot, stdout);
    bc_string_free(dot);
    bc_analysis_free(a);
    return 0;
}
