#include <stdio.h>
#include "cellpower.h"

int main(void) {
    LpLibrary *lib = NULL;
    LpNetlist *nl = NULL;
    LpConditions cond;
    LpEstimate est;
    const char *text = "input a\noutput y\ngate g1 NOT a -> y\n";

    if (lp_library_builtin(&lib) != LP_STATUS_OK) return 1;
    if (lp_netlist_parse(lib, text, &nl) != LP_STATUS_OK) {
        fprintf(stderr, "%s\n", lp_last_error_message());
        return 1;
    }
    lp_conditions_reference(lib, &cond);
    cond.vdd = 0.9;
    if (lp_estimate(lib, nl, &cond, NULL, &est) != LP_STATUS_OK) {
        fprintf(stderr, "%s\n", lp_last_error_message());
        return 1;
    }
    printf("leakage %g W, delay %g ns\n", est.p_leakage_w, est.critical_delay_ns);
    lp_netlist_free(nl);
    lp_library_free(lib);
    return 0;
}
